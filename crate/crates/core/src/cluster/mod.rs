//! Unsupervised grouping (k-means, Ward agglomerative, DBSCAN) scored by
//! the Euclidean silhouette coefficient.

mod dbscan;
mod kmeans;
mod ward;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use dbscan::{dbscan_labels, default_eps, DEFAULT_MIN_PTS, NOISE};
pub use kmeans::{kmeans_assign, kmeans_pp_init, lloyd, nearest, LloydRun, MAX_ITER};
pub use ward::{cut, lance_williams_ward, ward_linkage, Merge};

use crate::error::{invalid, Error, Result};
use crate::features::{ablation_sets, fields_name, fit_scaler, FeatureVector, MetaFeature};
use crate::math::dist;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// Cluster id per input vector; `-1` marks DBSCAN noise.
    pub assignments: Vec<i64>,
    pub k_found: usize,
    /// `None` when the silhouette is undefined (fewer than two clusters).
    pub silhouette: Option<f64>,
    pub silhouette_pct: Option<f64>,
    /// Share of points labelled noise; these are left out of the silhouette.
    pub noise_fraction: f64,
}

impl ClusterResult {
    fn new(vectors: &[Vec<f64>], assignments: Vec<i64>) -> Result<Self> {
        let k_found = assignments.iter().filter(|&&a| a >= 0).map(|&a| a as usize + 1).max().unwrap_or(0);
        let noise = assignments.iter().filter(|&&a| a < 0).count();
        let (silhouette, silhouette_pct) = match silhouette(vectors, &assignments) {
            Ok(s) => (Some(s), Some(s * 100.0)),
            Err(Error::Undefined(_)) => (None, None),
            Err(e) => return Err(e),
        };
        let noise_fraction = if assignments.is_empty() { 0.0 } else { noise as f64 / assignments.len() as f64 };
        Ok(ClusterResult { assignments, k_found, silhouette, silhouette_pct, noise_fraction })
    }
}

/// Renumbers arbitrary ids to `0..` in order of first appearance.
pub fn relabel<T: PartialEq + Copy>(ids: &[T]) -> Vec<usize> {
    let mut seen: Vec<T> = Vec::new();
    ids.iter()
        .map(|id| match seen.iter().position(|s| s == id) {
            Some(p) => p,
            None => {
                seen.push(*id);
                seen.len() - 1
            }
        })
        .collect()
}

fn check(vectors: &[Vec<f64>], k: usize) -> Result<()> {
    if vectors.is_empty() {
        return Err(Error::Empty("vectors"));
    }
    let d = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: v.len() });
    }
    if k == 0 || vectors.len() < k {
        return Err(invalid("need 1 <= k <= number of points"));
    }
    Ok(())
}

pub fn kmeans(vectors: &[Vec<f64>], k: usize, seed: u64, n_init: usize) -> Result<ClusterResult> {
    check(vectors, k)?;
    let run = kmeans_assign(vectors, k, seed, n_init)?;
    let labels = relabel(&run.assignments).into_iter().map(|c| c as i64).collect();
    ClusterResult::new(vectors, labels)
}

/// Ward linkage cut at `k` clusters.
pub fn agglomerative(vectors: &[Vec<f64>], k: usize) -> Result<ClusterResult> {
    check(vectors, k)?;
    let merges = ward_linkage(vectors);
    let labels = cut(vectors.len(), &merges, k).into_iter().map(|c| c as i64).collect();
    ClusterResult::new(vectors, labels)
}

pub fn dbscan(vectors: &[Vec<f64>], eps: f64, min_pts: usize) -> Result<ClusterResult> {
    check(vectors, 1)?;
    if !(eps > 0.0) || min_pts == 0 {
        return Err(invalid("DBSCAN needs eps > 0 and min_pts >= 1"));
    }
    ClusterResult::new(vectors, dbscan_labels(vectors, eps, min_pts))
}

/// Mean silhouette over non-noise points. Points in singleton clusters
/// score 0. Errors with [`Error::Undefined`] when fewer than two clusters
/// remain.
pub fn silhouette(vectors: &[Vec<f64>], assignments: &[i64]) -> Result<f64> {
    if vectors.len() != assignments.len() {
        return Err(invalid("vectors and assignments differ in length"));
    }
    let k = assignments.iter().filter(|&&a| a >= 0).map(|&a| a as usize + 1).max().unwrap_or(0);
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter().filter(|&&a| a >= 0) {
        sizes[a as usize] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::Undefined("silhouette needs at least two clusters"));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    let mut sums = vec![0.0; k];
    for (i, &ai) in assignments.iter().enumerate() {
        if ai < 0 {
            continue;
        }
        count += 1;
        let own = ai as usize;
        if sizes[own] < 2 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (j, &aj) in assignments.iter().enumerate() {
            if aj >= 0 && j != i {
                sums[aj as usize] += dist(&vectors[i], &vectors[j]);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum Algorithm {
    Kmeans { k: usize, n_init: usize },
    Agglomerative { k: usize },
    /// `eps = None` picks [`default_eps`].
    Dbscan { eps: Option<f64>, min_pts: usize },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Kmeans { .. } => "kmeans",
            Algorithm::Agglomerative { .. } => "agglomerative",
            Algorithm::Dbscan { .. } => "dbscan",
        }
    }

    pub fn kmeans() -> Self {
        Algorithm::Kmeans { k: 2, n_init: 10 }
    }

    pub fn agglomerative() -> Self {
        Algorithm::Agglomerative { k: 2 }
    }

    pub fn dbscan() -> Self {
        Algorithm::Dbscan { eps: None, min_pts: DEFAULT_MIN_PTS }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "kmeans" | "k-means" => Ok(Self::kmeans()),
            "agglomerative" | "ward" => Ok(Self::agglomerative()),
            "dbscan" => Ok(Self::dbscan()),
            _ => Err(invalid(alloc::format!("unknown clustering algorithm `{name}`"))),
        }
    }
}

pub fn run(vectors: &[Vec<f64>], algorithm: &Algorithm, seed: u64) -> Result<ClusterResult> {
    match *algorithm {
        Algorithm::Kmeans { k, n_init } => kmeans(vectors, k, seed, n_init),
        Algorithm::Agglomerative { k } => agglomerative(vectors, k),
        Algorithm::Dbscan { eps, min_pts } => {
            let eps = eps.unwrap_or_else(|| default_eps(vectors, seed));
            dbscan(vectors, eps, min_pts)
        }
    }
}

/// Standardizes (population std, constant columns left centered) when asked,
/// then clusters. Identical vectors are rejected as degenerate.
pub fn run_standardized(vectors: &[Vec<f64>], algorithm: &Algorithm, standardize: bool, seed: u64) -> Result<ClusterResult> {
    if vectors.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::Undefined("all vectors are identical"));
    }
    if standardize {
        let s = fit_scaler(vectors)?;
        let z = vectors.iter().map(|v| s.transform(v)).collect::<Result<Vec<_>>>()?;
        run(&z, algorithm, seed)
    } else {
        run(vectors, algorithm, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAblationRow {
    pub fields: String,
    pub k_found: usize,
    pub silhouette_pct: Option<f64>,
    pub noise_fraction: f64,
}

/// One unlabeled fit per metadata ablation set. `vectors` carry all five
/// metadata columns in A..E order.
pub fn run_cluster_ablation(
    vectors: &[FeatureVector],
    algorithm: &Algorithm,
    standardize: bool,
    seed: u64,
) -> Result<Vec<ClusterAblationRow>> {
    let width = MetaFeature::ALL.len();
    if let Some(v) = vectors.iter().find(|v| v.values.len() != width) {
        return Err(Error::DimensionMismatch { expected: width, found: v.values.len() });
    }
    ablation_sets()
        .into_iter()
        .map(|fields| {
            let cols: Vec<usize> =
                fields.iter().filter_map(|f| MetaFeature::ALL.iter().position(|g| g == f)).collect();
            let rows: Vec<Vec<f64>> = vectors.iter().map(|v| cols.iter().map(|&c| v.values[c]).collect()).collect();
            let r = run_standardized(&rows, algorithm, standardize, seed)?;
            Ok(ClusterAblationRow {
                fields: fields_name(&fields),
                k_found: r.k_found,
                silhouette_pct: r.silhouette_pct,
                noise_fraction: r.noise_fraction,
            })
        })
        .collect()
}
