use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::math::sq_dist;
use crate::seed::{rng, splitmix64, Rng};

pub const MAX_ITER: usize = 300;

/// k-means++ seeding: the first center uniformly, then each next one with
/// probability proportional to the squared distance to the nearest chosen
/// center.
pub fn kmeans_pp_init(vectors: &[Vec<f64>], k: usize, r: &mut Rng) -> Result<Vec<Vec<f64>>> {
    let n = vectors.len();
    let mut centers = vec![vectors[r.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = vectors.iter().map(|v| sq_dist(v, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            return Err(Error::Undefined("fewer distinct points than clusters"));
        }
        let target = r.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = n - 1;
        for (i, &d) in d2.iter().enumerate() {
            acc += d;
            if acc > target && d > 0.0 {
                pick = i;
                break;
            }
        }
        if d2[pick] <= 0.0 {
            pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
        }
        let c = vectors[pick].clone();
        for (di, v) in d2.iter_mut().zip(vectors) {
            *di = di.min(sq_dist(v, &c));
        }
        centers.push(c);
    }
    Ok(centers)
}

/// Nearest center, ties to the lower index.
pub fn nearest(v: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(v, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each assignment step.
    pub wcss: Vec<f64>,
}

/// Alternates assignment and mean updates until assignments repeat or
/// `max_iter` assignment steps ran. An emptied cluster keeps its center.
pub fn lloyd(vectors: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> LloydRun {
    let d = vectors.first().map_or(0, Vec::len);
    let k = centers.len();
    let mut assignments: Vec<usize> = Vec::new();
    let mut wcss = Vec::new();
    for _ in 0..max_iter {
        let mut total = 0.0;
        let next: Vec<usize> = vectors
            .iter()
            .map(|v| {
                let (c, dd) = nearest(v, &centers);
                total += dd;
                c
            })
            .collect();
        wcss.push(total);
        if next == assignments {
            break;
        }
        assignments = next;
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (v, &c) in vectors.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(v) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    LloydRun { assignments, centers, wcss }
}

/// Best of `n_init` seeded restarts by final WCSS (first wins ties).
pub fn kmeans_assign(vectors: &[Vec<f64>], k: usize, seed: u64, n_init: usize) -> Result<LloydRun> {
    if k == 0 {
        return Err(crate::error::invalid("k must be positive"));
    }
    if vectors.len() < k {
        return Err(crate::error::invalid("fewer points than clusters"));
    }
    let mut best: Option<LloydRun> = None;
    for run in 0..n_init.max(1) {
        let mut r = rng(splitmix64(seed.wrapping_add(run as u64)));
        let init = kmeans_pp_init(vectors, k, &mut r)?;
        let out = lloyd(vectors, init, MAX_ITER);
        let better = match &best {
            None => true,
            Some(b) => out.wcss.last() < b.wcss.last(),
        };
        if better {
            best = Some(out);
        }
    }
    best.ok_or(Error::Empty("k-means restarts"))
}
