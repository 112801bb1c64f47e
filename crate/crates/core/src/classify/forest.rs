//! Bagged Gini trees with `floor(sqrt(d))` candidate features per split.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{AddAssign, Sub};

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tree::{grow, Criterion, Presorted, Tree};
use crate::math::sqrt;
use crate::seed::{rng, splitmix64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, max_depth: 16, min_leaf: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct ClassWeights {
    w0: f64,
    w1: f64,
}

impl AddAssign for ClassWeights {
    fn add_assign(&mut self, o: Self) {
        self.w0 += o.w0;
        self.w1 += o.w1;
    }
}

impl Sub for ClassWeights {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        ClassWeights { w0: self.w0 - o.w0, w1: self.w1 - o.w1 }
    }
}

pub(crate) struct Gini {
    min_leaf: f64,
}

impl Criterion for Gini {
    type Stat = ClassWeights;

    // -(w * gini) = (w0^2 + w1^2) / w - w
    fn score(&self, s: &ClassWeights) -> f64 {
        let w = s.w0 + s.w1;
        if w <= 0.0 {
            return 0.0;
        }
        (s.w0 * s.w0 + s.w1 * s.w1) / w - w
    }

    fn admissible(&self, s: &ClassWeights) -> bool {
        s.w0 + s.w1 >= self.min_leaf
    }

    fn splittable(&self, s: &ClassWeights) -> bool {
        s.w0 > 0.0 && s.w1 > 0.0 && s.w0 + s.w1 >= 2.0 * self.min_leaf
    }

    fn leaf_value(&self, s: &ClassWeights) -> f64 {
        let w = s.w0 + s.w1;
        if w > 0.0 {
            s.w1 / w
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
}

impl RandomForest {
    /// Fraction of trees voting for class 1 (leaf class-1 share >= 0.5).
    pub fn score(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.5;
        }
        let votes = self.trees.iter().filter(|t| t.predict(x) >= 0.5).count();
        votes as f64 / self.trees.len() as f64
    }
}

pub(crate) fn fit(rows: &[Vec<f64>], labels: &[u8], params: &ForestParams, seed: u64) -> RandomForest {
    let data = Presorted::new(rows);
    let n = data.len();
    let d = data.dim();
    let mtry = ((sqrt(d as f64)) as usize).clamp(1, d.max(1));
    let crit = Gini { min_leaf: params.min_leaf };
    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let mut r = rng(splitmix64(seed ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        let mut counts = vec![0u32; n];
        for _ in 0..n {
            counts[r.random_range(0..n)] += 1;
        }
        let stats: Vec<ClassWeights> = counts
            .iter()
            .zip(labels)
            .map(|(&c, &y)| if y == 1 { ClassWeights { w0: 0.0, w1: c as f64 } } else { ClassWeights { w0: c as f64, w1: 0.0 } })
            .collect();
        let active: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
        let tree = grow(&data, &stats, &active, &crit, params.max_depth, || {
            let mut f = sample(&mut r, d, mtry).into_vec();
            f.sort_unstable();
            f
        });
        trees.push(tree);
    }
    RandomForest { trees }
}
