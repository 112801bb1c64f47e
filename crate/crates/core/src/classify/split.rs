//! Index-based stratified splitting. Labels are 0/1; returned index lists
//! are sorted ascending.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{invalid, Result};
use crate::math::{floor_f, round_half_up};
use crate::seed::rng;

fn by_class(labels: &[u8]) -> Result<[Vec<usize>; 2]> {
    let mut classes = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        match y {
            0 | 1 => classes[y as usize].push(i),
            _ => return Err(invalid("labels must be 0 or 1")),
        }
    }
    Ok(classes)
}

/// Per-class quotas summing to `round(fraction * n)`, distributed by
/// largest remainder (ties to the lower class).
pub fn largest_remainder(sizes: [usize; 2], fraction: f64) -> [usize; 2] {
    let n: usize = sizes.iter().sum();
    let total = round_half_up(fraction * n as f64) as usize;
    let exact = sizes.map(|s| fraction * s as f64);
    let mut q = exact.map(|e| floor_f(e) as usize);
    let mut left = total.saturating_sub(q[0] + q[1]);
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| (exact[b] - q[b] as f64).total_cmp(&(exact[a] - q[a] as f64)).then(a.cmp(&b)));
    for &c in order.iter().cycle().take(4) {
        if left == 0 {
            break;
        }
        if q[c] < sizes[c] {
            q[c] += 1;
            left -= 1;
        }
    }
    q
}

/// Returns `(train, test)` indices.
pub fn stratified_split(labels: &[u8], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(invalid("test fraction must be in [0, 1)"));
    }
    let mut classes = by_class(labels)?;
    if classes.iter().any(|c| c.len() < 2) {
        return Err(invalid("each class needs at least 2 examples to split"));
    }
    let quota = largest_remainder([classes[0].len(), classes[1].len()], test_fraction);
    let mut r = rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, idx) in classes.iter_mut().enumerate() {
        idx.shuffle(&mut r);
        test.extend_from_slice(&idx[..quota[c]]);
        train.extend_from_slice(&idx[quota[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// `k` disjoint folds covering every index. Each class is shuffled and dealt
/// round-robin, continuing the deal position across classes, so fold sizes
/// and per-fold class counts differ by at most one. A class smaller than `k`
/// leaves some folds without it.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(invalid("k-fold needs k >= 2"));
    }
    let mut classes = by_class(labels)?;
    if labels.len() < k || classes.iter().any(Vec::is_empty) {
        return Err(invalid("k-fold needs at least k examples and both classes"));
    }
    let mut r = rng(seed);
    let mut folds = vec![Vec::new(); k];
    let mut deal = 0usize;
    for idx in classes.iter_mut() {
        idx.shuffle(&mut r);
        for &i in idx.iter() {
            folds[deal % k].push(i);
            deal += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}
