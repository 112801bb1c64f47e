use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{ln, sigmoid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnbParams {
    /// Added variance, as a fraction of the largest per-feature variance.
    pub var_smoothing: f64,
}

impl Default for GnbParams {
    fn default() -> Self {
        GnbParams { var_smoothing: 1e-9 }
    }
}

/// Per-class priors, means and (smoothed) variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub vars: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn joint_log_likelihood(&self, x: &[f64], class: usize) -> f64 {
        let mut ll = ln(self.priors[class]);
        for ((v, m), s2) in x.iter().zip(&self.means[class]).zip(&self.vars[class]) {
            ll -= 0.5 * (ln(2.0 * core::f64::consts::PI * s2) + (v - m) * (v - m) / s2);
        }
        ll
    }

    /// Posterior probability of class 1.
    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.joint_log_likelihood(x, 1) - self.joint_log_likelihood(x, 0))
    }
}

fn moments<'a>(rows: impl Iterator<Item = &'a Vec<f64>> + Clone, d: usize) -> (Vec<f64>, Vec<f64>, usize) {
    let mut mean = vec![0.0; d];
    let mut n = 0usize;
    for r in rows.clone() {
        n += 1;
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for r in rows {
        for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    var.iter_mut().for_each(|v| *v /= n as f64);
    (mean, var, n)
}

pub(crate) fn fit(rows: &[Vec<f64>], labels: &[u8], params: &GnbParams) -> GaussianNb {
    let d = rows.first().map_or(0, Vec::len);
    let (_, all_var, n) = moments(rows.iter(), d);
    let eps = params.var_smoothing * all_var.iter().copied().fold(0.0, f64::max);
    let class = |c: u8| {
        let (m, mut v, k) = moments(rows.iter().zip(labels).filter(move |(_, &y)| y == c).map(|(r, _)| r), d);
        v.iter_mut().for_each(|x| *x += eps);
        (m, v, k)
    };
    let (m0, v0, n0) = class(0);
    let (m1, v1, n1) = class(1);
    GaussianNb { priors: [n0 as f64 / n as f64, n1 as f64 / n as f64], means: [m0, m1], vars: [v0, v1] }
}
