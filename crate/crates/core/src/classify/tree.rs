//! Level-wise exact-greedy tree builder shared by the random forest (Gini)
//! and the boosted trees (second-order gain).
//!
//! Every feature column is sorted once per training run. Each tree level is
//! grown with one sweep per feature over the presorted indices, evaluating
//! all frontier nodes at once. Thresholds are training values (`x <= t`
//! goes left), so splits depend on the order of feature values only.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{AddAssign, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature as usize] <= *threshold { *left as usize } else { *right as usize };
                }
            }
        }
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Column-major copy of the training matrix with per-feature sort orders.
pub(crate) struct Presorted {
    pub cols: Vec<Vec<f64>>,
    pub order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let cols: Vec<Vec<f64>> = (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        let order = cols
            .iter()
            .map(|c| {
                let mut idx: Vec<u32> = (0..c.len() as u32).collect();
                idx.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]));
                idx
            })
            .collect();
        Presorted { cols, order }
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn len(&self) -> usize {
        self.cols.first().map_or(0, Vec::len)
    }
}

pub(crate) trait Criterion {
    type Stat: Copy + Default + AddAssign + Sub<Output = Self::Stat>;

    /// Node quality; a split's gain is `score(l) + score(r) - score(parent)`.
    fn score(&self, s: &Self::Stat) -> f64;
    fn admissible(&self, s: &Self::Stat) -> bool;
    fn splittable(&self, s: &Self::Stat) -> bool;
    fn leaf_value(&self, s: &Self::Stat) -> f64;
}

const INACTIVE: u32 = u32::MAX;

struct Frontier<S> {
    node: usize,
    total: S,
    depth: usize,
}

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Grows one tree. `stats[i]` is the contribution of sample `i`; samples
/// with `active[i] == false` are ignored. `features_for` picks the candidate
/// features of each node (called once per splittable node, in BFS order).
pub(crate) fn grow<C, F>(
    data: &Presorted,
    stats: &[C::Stat],
    active: &[bool],
    crit: &C,
    max_depth: usize,
    mut features_for: F,
) -> Tree
where
    C: Criterion,
    F: FnMut() -> Vec<usize>,
{
    let n = data.len();
    let d = data.dim();
    let mut nodes: Vec<Node> = Vec::new();
    let mut node_of: Vec<u32> = (0..n).map(|i| if active[i] { 0 } else { INACTIVE }).collect();

    let mut root = C::Stat::default();
    for i in 0..n {
        if active[i] {
            root += stats[i];
        }
    }
    nodes.push(Node::Leaf { value: crit.leaf_value(&root) });
    let mut frontier = vec![Frontier { node: 0, total: root, depth: 0 }];

    let mut users: Vec<Vec<u32>> = vec![Vec::new(); d];
    while !frontier.is_empty() {
        let m = frontier.len();
        let mut best: Vec<Option<Best>> = vec![None; m];
        users.iter_mut().for_each(Vec::clear);
        let mut any = false;
        for (s, f) in frontier.iter().enumerate() {
            if f.depth < max_depth && crit.splittable(&f.total) {
                for j in features_for() {
                    users[j].push(s as u32);
                    any = true;
                }
            }
        }
        if !any {
            break;
        }

        let mut wants = vec![false; m];
        let mut left = vec![C::Stat::default(); m];
        let mut last = vec![0.0f64; m];
        let mut seen = vec![false; m];
        for j in 0..d {
            if users[j].is_empty() {
                continue;
            }
            for &s in &users[j] {
                let s = s as usize;
                wants[s] = true;
                left[s] = C::Stat::default();
                seen[s] = false;
            }
            let col = &data.cols[j];
            for &i in &data.order[j] {
                let i = i as usize;
                let s = node_of[i];
                if s == INACTIVE || !wants[s as usize] {
                    continue;
                }
                let s = s as usize;
                let v = col[i];
                if seen[s] && v > last[s] {
                    let l = left[s];
                    let r = frontier[s].total - l;
                    if crit.admissible(&l) && crit.admissible(&r) {
                        let gain = crit.score(&l) + crit.score(&r) - crit.score(&frontier[s].total);
                        if best[s].is_none_or(|b| gain > b.gain) {
                            best[s] = Some(Best { gain, feature: j, threshold: last[s] });
                        }
                    }
                }
                left[s] += stats[i];
                last[s] = v;
                seen[s] = true;
            }
            for &s in &users[j] {
                wants[s as usize] = false;
            }
        }

        // Materialize children in BFS order.
        let mut next: Vec<Frontier<C::Stat>> = Vec::new();
        let mut child_slot: Vec<Option<(u32, u32, usize, f64)>> = vec![None; m];
        for (s, f) in frontier.iter().enumerate() {
            let Some(b) = best[s] else { continue };
            let scale = 1.0f64.max(crit.score(&f.total).abs());
            if b.gain <= 1e-12 * scale {
                continue;
            }
            let l_idx = nodes.len();
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[f.node] =
                Node::Split { feature: b.feature as u32, threshold: b.threshold, left: l_idx as u32, right: l_idx as u32 + 1 };
            let ls = next.len() as u32;
            next.push(Frontier { node: l_idx, total: C::Stat::default(), depth: f.depth + 1 });
            next.push(Frontier { node: l_idx + 1, total: C::Stat::default(), depth: f.depth + 1 });
            child_slot[s] = Some((ls, ls + 1, b.feature, b.threshold));
        }
        for i in 0..n {
            let s = node_of[i];
            if s == INACTIVE {
                continue;
            }
            node_of[i] = match child_slot[s as usize] {
                None => INACTIVE,
                Some((l, r, j, t)) => {
                    let c = if data.cols[j][i] <= t { l } else { r };
                    next[c as usize].total += stats[i];
                    c
                }
            };
        }
        for f in &next {
            nodes[f.node] = Node::Leaf { value: crit.leaf_value(&f.total) };
        }
        frontier = next;
    }
    Tree { nodes }
}
