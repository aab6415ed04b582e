//! DBSCAN on a precomputed distance matrix.

use rayon::prelude::*;

use crate::{DistanceKind, DistanceMatrix, Error, Result, Scalar};

/// Cluster label per sample; `None` is noise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    labels: Vec<Option<usize>>,
    n_clusters: usize,
}

impl ClusterAssignment {
    pub const NOISE: i64 = -1;

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn n_noise(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    /// Labels with noise written as [`Self::NOISE`].
    pub fn to_signed(&self) -> Vec<i64> {
        self.labels
            .iter()
            .map(|l| l.map_or(Self::NOISE, |c| c as i64))
            .collect()
    }

    /// Labels where every noise sample gets its own fresh id, so that noise
    /// counts as singleton clusters.
    pub fn with_singleton_noise(&self) -> Vec<usize> {
        let mut next = self.n_clusters;
        self.labels
            .iter()
            .map(|l| {
                l.unwrap_or_else(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    pub eps: f64,
    pub min_samples: usize,
}

impl Default for DbscanParams {
    fn default() -> Self {
        Self {
            eps: 0.6,
            min_samples: 4,
        }
    }
}

/// Density-based clustering over a precomputed matrix.
///
/// A point is core when at least `min_samples` points (itself included) lie
/// within `eps`. Clusters are connected components of core points, numbered
/// in order of their lowest-index member. A non-core point joins the cluster
/// of its nearest core point within `eps` (lowest index on ties) or stays
/// noise.
pub fn dbscan<T: Scalar>(
    dist: &DistanceMatrix<T>,
    params: &DbscanParams,
) -> Result<ClusterAssignment> {
    if dist.kind() == DistanceKind::Original {
        return Err(Error::WrongKind { found: dist.kind() });
    }
    dist.require_square()?;
    if !(params.eps > 0.0) || params.min_samples == 0 {
        return Err(Error::InvalidParams(format!(
            "dbscan needs eps > 0 and min_samples >= 1, got {params:?}"
        )));
    }
    let n = dist.nrows();
    let eps = T::of(params.eps);
    let neighborhoods: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            dist.row(i)
                .iter()
                .enumerate()
                .filter(|&(j, &d)| j == i || d <= eps)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighborhoods
        .iter()
        .map(|nb| nb.len() >= params.min_samples)
        .collect();

    let mut labels = vec![None; n];
    let mut n_clusters = 0;
    let mut stack = Vec::new();
    for seed in 0..n {
        if !core[seed] || labels[seed].is_some() {
            continue;
        }
        labels[seed] = Some(n_clusters);
        stack.push(seed);
        while let Some(p) = stack.pop() {
            for &q in &neighborhoods[p] {
                if core[q] && labels[q].is_none() {
                    labels[q] = Some(n_clusters);
                    stack.push(q);
                }
            }
        }
        n_clusters += 1;
    }

    for p in 0..n {
        if core[p] {
            continue;
        }
        let nearest_core = neighborhoods[p]
            .iter()
            .copied()
            .filter(|&q| core[q])
            .min_by(|&a, &b| {
                dist.get(p, a)
                    .partial_cmp(&dist.get(p, b))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
        labels[p] = nearest_core.and_then(|q| labels[q]);
    }

    Ok(ClusterAssignment { labels, n_clusters })
}
