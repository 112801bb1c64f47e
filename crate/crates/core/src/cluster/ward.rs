//! Ward agglomerative clustering by the nearest-neighbor chain algorithm
//! over a condensed matrix of squared Euclidean distances, updated with the
//! Lance-Williams formula.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{sq_dist, sqrt};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Smallest point index of each merged cluster, `a < b`.
    pub a: usize,
    pub b: usize,
    /// `sqrt` of the Lance-Williams Ward distance.
    pub height: f64,
    pub size: usize,
}

pub(crate) struct Condensed {
    n: usize,
    d: Vec<f64>,
}

impl Condensed {
    pub fn new(vectors: &[Vec<f64>]) -> Self {
        let n = vectors.len();
        let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                d.push(sq_dist(&vectors[i], &vectors[j]));
            }
        }
        Condensed { n, d }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[self.idx(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.d[k] = v;
    }
}

/// Ward update of the distance from `k` to the union of `i` and `j`.
#[inline]
pub fn lance_williams_ward(d_ki: f64, d_kj: f64, d_ij: f64, n_i: f64, n_j: f64, n_k: f64) -> f64 {
    ((n_i + n_k) * d_ki + (n_j + n_k) * d_kj - n_k * d_ij) / (n_i + n_j + n_k)
}

/// Full merge sequence, sorted by height (stable, so equal heights keep
/// discovery order). Clusters are identified by their smallest point index.
pub fn ward_linkage(vectors: &[Vec<f64>]) -> Vec<Merge> {
    let n = vectors.len();
    let mut dm = Condensed::new(vectors);
    let mut size = vec![1usize; n];
    let mut alive = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();
    let mut remaining = n;
    while remaining > 1 {
        if chain.is_empty() {
            chain.push(alive.iter().position(|&a| a).unwrap_or(0));
        }
        loop {
            let top = *chain.last().unwrap_or(&0);
            let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };
            let mut best = prev;
            let mut best_d = prev.map_or(f64::INFINITY, |p| dm.get(top, p));
            for c in 0..n {
                if !alive[c] || c == top {
                    continue;
                }
                let dc = dm.get(top, c);
                if dc < best_d {
                    best = Some(c);
                    best_d = dc;
                }
            }
            let Some(nn) = best else { break };
            if Some(nn) == prev {
                chain.pop();
                chain.pop();
                let (i, j) = if top < nn { (top, nn) } else { (nn, top) };
                let d_ij = dm.get(i, j);
                let (ni, nj) = (size[i] as f64, size[j] as f64);
                for k in 0..n {
                    if alive[k] && k != i && k != j {
                        let v = lance_williams_ward(dm.get(k, i), dm.get(k, j), d_ij, ni, nj, size[k] as f64);
                        dm.set(k, i, v);
                    }
                }
                alive[j] = false;
                size[i] += size[j];
                merges.push(Merge { a: i, b: j, height: sqrt(d_ij.max(0.0)), size: size[i] });
                remaining -= 1;
                break;
            }
            chain.push(nn);
        }
    }
    merges.sort_by(|x, y| x.height.total_cmp(&y.height));
    merges
}

/// Labels after applying the first `n - k` merges, ids by first appearance.
pub fn cut(n: usize, merges: &[Merge], k: usize) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for m in merges.iter().take(n.saturating_sub(k)) {
        let (ra, rb) = (find(&mut parent, m.a), find(&mut parent, m.b));
        parent[ra.max(rb)] = ra.min(rb);
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    super::relabel(&roots)
}
