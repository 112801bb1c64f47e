//! Gradient-boosted regression trees on the logistic loss with Newton leaf
//! weights `-G / (H + lambda)`, shrinkage, and a minimum child hessian.

use alloc::vec::Vec;
use core::ops::{AddAssign, Sub};

use serde::{Deserialize, Serialize};

use super::tree::{grow, Criterion, Presorted, Tree};
use crate::math::{sigmoid, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub shrinkage: f64,
    pub lambda: f64,
    pub min_child_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams { rounds: 100, max_depth: 6, shrinkage: 0.3, lambda: 1.0, min_child_weight: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct GradHess {
    g: f64,
    h: f64,
}

impl AddAssign for GradHess {
    fn add_assign(&mut self, o: Self) {
        self.g += o.g;
        self.h += o.h;
    }
}

impl Sub for GradHess {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        GradHess { g: self.g - o.g, h: self.h - o.h }
    }
}

pub(crate) struct NewtonGain {
    lambda: f64,
    min_child_weight: f64,
    shrinkage: f64,
}

impl Criterion for NewtonGain {
    type Stat = GradHess;

    fn score(&self, s: &GradHess) -> f64 {
        s.g * s.g / (s.h + self.lambda)
    }

    fn admissible(&self, s: &GradHess) -> bool {
        s.h >= self.min_child_weight
    }

    fn splittable(&self, s: &GradHess) -> bool {
        s.h >= 2.0 * self.min_child_weight
    }

    fn leaf_value(&self, s: &GradHess) -> f64 {
        -s.g / (s.h + self.lambda) * self.shrinkage
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    /// Initial margin (log-odds); 0 corresponds to a base probability of 0.5.
    pub base_margin: f64,
    pub trees: Vec<Tree>,
}

impl BoostedTrees {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.base_margin + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}

/// Mean logistic loss of margins against 0/1 labels.
pub fn logistic_loss(margins: &[f64], labels: &[u8]) -> f64 {
    let n = margins.len() as f64;
    margins
        .iter()
        .zip(labels)
        .map(|(&m, &y)| if y == 1 { softplus(-m) } else { softplus(m) })
        .sum::<f64>()
        / n
}

/// Trains and returns the model with the training loss before the first
/// round and after each round.
pub fn fit_traced(rows: &[Vec<f64>], labels: &[u8], params: &GbtParams) -> (BoostedTrees, Vec<f64>) {
    let data = Presorted::new(rows);
    let n = data.len();
    let d = data.dim();
    let crit = NewtonGain { lambda: params.lambda, min_child_weight: params.min_child_weight, shrinkage: params.shrinkage };
    let active = alloc::vec![true; n];
    let mut margins = alloc::vec![0.0; n];
    let mut trees = Vec::with_capacity(params.rounds);
    let mut losses = Vec::with_capacity(params.rounds + 1);
    losses.push(logistic_loss(&margins, labels));
    let all: Vec<usize> = (0..d).collect();
    for _ in 0..params.rounds {
        let stats: Vec<GradHess> = margins
            .iter()
            .zip(labels)
            .map(|(&m, &y)| {
                let p = sigmoid(m);
                GradHess { g: p - f64::from(y), h: (p * (1.0 - p)).max(1e-16) }
            })
            .collect();
        let tree = grow(&data, &stats, &active, &crit, params.max_depth, || all.clone());
        for (m, row) in margins.iter_mut().zip(rows) {
            *m += tree.predict(row);
        }
        trees.push(tree);
        losses.push(logistic_loss(&margins, labels));
    }
    (BoostedTrees { base_margin: 0.0, trees }, losses)
}

pub(crate) fn fit(rows: &[Vec<f64>], labels: &[u8], params: &GbtParams) -> BoostedTrees {
    fit_traced(rows, labels, params).0
}
