use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `matrix[actual][predicted]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub matrix: [[u64; 2]; 2],
}

impl Confusion {
    pub fn from_predictions(actual: &[u8], predicted: &[u8]) -> Self {
        let mut c = Confusion::default();
        for (&a, &p) in actual.iter().zip(predicted) {
            c.matrix[a as usize][p as usize] += 1;
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.matrix.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        self.matrix[0][0] + self.matrix[1][1]
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }
}

/// ROC-AUC via the Mann-Whitney statistic with midranks for ties. The
/// numerator is accumulated as the integer `2U`, so the result is exactly
/// `(2 * concordant + tied) / (2 * n1 * n0)`.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(invalid("scores and labels differ in length"));
    }
    let n1 = labels.iter().filter(|&&y| y == 1).count() as u128;
    let n0 = labels.len() as u128 - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::Undefined("ROC-AUC needs both classes"));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum over positives of twice their 1-based midrank.
    let mut twice_rank_sum: u128 = 0;
    let mut start = 0usize;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && scores[idx[end + 1]].total_cmp(&scores[idx[start]]).is_eq() {
            end += 1;
        }
        let twice_mid = (start + 1 + end + 1) as u128;
        let pos = idx[start..=end].iter().filter(|&&i| labels[i] == 1).count() as u128;
        twice_rank_sum += pos * twice_mid;
        start = end + 1;
    }
    let twice_u = twice_rank_sum - n1 * (n1 + 1);
    Ok(twice_u as f64 / (2 * n1 * n0) as f64)
}
