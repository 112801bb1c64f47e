//! L2-regularized logistic regression (full-batch gradient descent with
//! backtracking) and a linear SVM trained with Pegasos subgradient steps.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::math::{sigmoid, softplus, sqrt};
use crate::seed::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams { lambda: 1e-4, max_iter: 2000, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}

/// `(1/n) sum log(1 + exp(-s_i z_i)) + (lambda/2) |w|^2` with `s_i = +-1`,
/// `z_i = w.x_i + b`. The bias is not regularized.
pub fn logistic_objective(model: &LinearModel, rows: &[Vec<f64>], labels: &[u8], lambda: f64) -> f64 {
    let n = rows.len() as f64;
    let data: f64 = rows
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let z = model.margin(x);
            if y == 1 {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum::<f64>()
        / n;
    data + 0.5 * lambda * model.weights.iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of [`logistic_objective`]: `(dw, db)`.
pub fn logistic_gradient(model: &LinearModel, rows: &[Vec<f64>], labels: &[u8], lambda: f64) -> (Vec<f64>, f64) {
    let n = rows.len() as f64;
    let mut gw = vec![0.0; model.weights.len()];
    let mut gb = 0.0;
    for (x, &y) in rows.iter().zip(labels) {
        let r = sigmoid(model.margin(x)) - f64::from(y);
        for (g, v) in gw.iter_mut().zip(x) {
            *g += r * v;
        }
        gb += r;
    }
    for (g, w) in gw.iter_mut().zip(&model.weights) {
        *g = *g / n + lambda * w;
    }
    (gw, gb / n)
}

pub(crate) fn fit_logreg(rows: &[Vec<f64>], labels: &[u8], params: &LogRegParams) -> LinearModel {
    let d = rows.first().map_or(0, Vec::len);
    let mut model = LinearModel { weights: vec![0.0; d], bias: 0.0 };
    let mut f = logistic_objective(&model, rows, labels, params.lambda);
    let mut step = 1.0;
    for _ in 0..params.max_iter {
        let (gw, gb) = logistic_gradient(&model, rows, labels, params.lambda);
        let gnorm2 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if sqrt(gnorm2) < params.tol {
            break;
        }
        // Armijo backtracking from a step that grows after each success.
        step *= 2.0;
        loop {
            let trial = LinearModel {
                weights: model.weights.iter().zip(&gw).map(|(w, g)| w - step * g).collect(),
                bias: model.bias - step * gb,
            };
            let ft = logistic_objective(&trial, rows, labels, params.lambda);
            if ft <= f - 1e-4 * step * gnorm2 {
                model = trial;
                f = ft;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return model;
            }
        }
    }
    model
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, epochs: 200 }
    }
}

/// Pegasos on the hinge loss with `lambda = 1 / (C n)`, step `1 / (lambda t)`
/// and projection onto the `1/sqrt(lambda)` ball. The bias is carried as a
/// constant input feature. Example order per epoch is a seeded permutation.
pub(crate) fn fit_svm(rows: &[Vec<f64>], labels: &[u8], params: &SvmParams, seed: u64) -> LinearModel {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let lambda = 1.0 / (params.c * n as f64);
    let radius = 1.0 / sqrt(lambda);
    let mut w = vec![0.0; d + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut r = rng(seed);
    let mut t = 0u64;
    for _ in 0..params.epochs {
        order.shuffle(&mut r);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = &rows[i];
            let y = if labels[i] == 1 { 1.0 } else { -1.0 };
            let margin = y * (w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (v, xv) in w[..d].iter_mut().zip(x) {
                    *v += eta * y * xv;
                }
                w[d] += eta * y;
            }
            let norm = sqrt(w.iter().map(|v| v * v).sum::<f64>());
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
    let bias = w[d];
    w.truncate(d);
    LinearModel { weights: w, bias }
}
