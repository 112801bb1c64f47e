use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;

use crate::math::{sq_dist, sqrt};
use crate::seed::rng;

pub const NOISE: i64 = -1;
pub const DEFAULT_MIN_PTS: usize = 5;

fn neighbors(vectors: &[Vec<f64>], i: usize, eps2: f64) -> Vec<usize> {
    (0..vectors.len()).filter(|&j| sq_dist(&vectors[i], &vectors[j]) <= eps2).collect()
}

/// Core points have at least `min_pts` neighbors within `eps`, counting
/// themselves. Clusters are numbered in scan order; a border point joins the
/// first cluster that reaches it.
pub fn dbscan_labels(vectors: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<i64> {
    let n = vectors.len();
    let eps2 = eps * eps;
    let nbrs: Vec<Vec<usize>> = (0..n).map(|i| neighbors(vectors, i, eps2)).collect();
    let core: Vec<bool> = nbrs.iter().map(|v| v.len() >= min_pts).collect();
    let mut label = vec![NOISE; n];
    let mut next = 0i64;
    let mut queue = VecDeque::new();
    for p in 0..n {
        if label[p] != NOISE || !core[p] {
            continue;
        }
        label[p] = next;
        queue.push_back(p);
        while let Some(q) = queue.pop_front() {
            for &r in &nbrs[q] {
                if label[r] == NOISE {
                    label[r] = next;
                    if core[r] {
                        queue.push_back(r);
                    }
                }
            }
        }
        next += 1;
    }
    label
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        (v[m / 2 - 1] + v[m / 2]) / 2.0
    }
}

/// Median distance to the 5th nearest other point over a seeded sample of
/// at most 1000 points (distances taken within the sample).
///
/// Heavily duplicated data can make that median 0. The median is then taken
/// over the positive 5th-neighbor distances, and failing those over each
/// point's nearest positive distance. Returns 0 only when every sampled
/// point is identical.
pub fn default_eps(vectors: &[Vec<f64>], seed: u64) -> f64 {
    const SAMPLE: usize = 1000;
    const KTH: usize = 5;
    let n = vectors.len();
    let idx: Vec<usize> = if n > SAMPLE {
        let mut v = sample(&mut rng(seed), n, SAMPLE).into_vec();
        v.sort_unstable();
        v
    } else {
        (0..n).collect()
    };
    if idx.len() < 2 {
        return 0.0;
    }
    let kth = KTH.min(idx.len() - 1);
    let dists: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            let mut d: Vec<f64> = idx.iter().filter(|&&j| j != i).map(|&j| sq_dist(&vectors[i], &vectors[j])).collect();
            d.sort_unstable_by(f64::total_cmp);
            d
        })
        .collect();
    let kd: Vec<f64> = dists.iter().map(|d| sqrt(d[kth - 1])).collect();
    let eps = median(kd.clone());
    if eps > 0.0 {
        return eps;
    }
    let positive: Vec<f64> = kd.into_iter().filter(|&d| d > 0.0).collect();
    if !positive.is_empty() {
        return median(positive);
    }
    let nearest: Vec<f64> = dists.iter().filter_map(|d| d.iter().find(|&&x| x > 0.0).map(|&x| sqrt(x))).collect();
    if nearest.is_empty() {
        0.0
    } else {
        median(nearest)
    }
}
