//! Original (feature-space) distances.

use ndarray::{Array2, ArrayView1, Axis, Zip};
use rayon::prelude::*;

use crate::{DistanceKind, DistanceMatrix, Error, FeatureMatrix, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// `1 - cos(a, b)`, range [0, 2].
    #[default]
    Cosine,
    Euclidean,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(Self::Cosine),
            "euclidean" => Ok(Self::Euclidean),
            other => Err(format!("unknown metric `{other}` (expected cosine or euclidean)")),
        }
    }
}

/// Scale every row to unit Euclidean norm.
pub fn l2_normalize<T: Scalar>(features: &FeatureMatrix<T>) -> Result<FeatureMatrix<T>> {
    let mut data = features.view().to_owned();
    for (row, mut values) in data.axis_iter_mut(Axis(0)).enumerate() {
        let norm = values.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
        if norm == T::zero() {
            return Err(Error::ZeroNorm { row });
        }
        values.mapv_inplace(|v| v / norm);
    }
    FeatureMatrix::new(data)
}

#[inline]
fn dot<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    Zip::from(a).and(b).fold(T::zero(), |acc, &x, &y| acc + x * y)
}

#[inline]
fn euclidean<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    Zip::from(a)
        .and(b)
        .fold(T::zero(), |acc, &x, &y| {
            let d = x - y;
            acc + d * d
        })
        .sqrt()
}

/// Distances between every row of `a` and every row of `b`.
///
/// Rows of the output are filled independently in parallel. Each entry is a
/// function of its two feature rows only, so `d(i, j)` and `d(j, i)` are
/// bitwise equal and the result does not depend on sample order.
pub fn original_distance<T: Scalar>(
    a: &FeatureMatrix<T>,
    b: &FeatureMatrix<T>,
    metric: Metric,
) -> Result<DistanceMatrix<T>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let (a, b) = match metric {
        Metric::Cosine => (l2_normalize(a)?, l2_normalize(b)?),
        Metric::Euclidean => (a.clone(), b.clone()),
    };
    let two = T::one() + T::one();
    let mut out = Array2::zeros((a.n_samples(), b.n_samples()));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let ai = a.row(i);
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = match metric {
                    Metric::Cosine => (T::one() - dot(ai, b.row(j))).max(T::zero()).min(two),
                    Metric::Euclidean => euclidean(ai, b.row(j)),
                };
            }
        });
    Ok(DistanceMatrix::from_trusted(out, DistanceKind::Original))
}

/// All-pairs distances of one sample set, with an exactly zero diagonal.
pub fn pairwise_distance<T: Scalar>(
    features: &FeatureMatrix<T>,
    metric: Metric,
) -> Result<DistanceMatrix<T>> {
    let mut data = original_distance(features, features, metric)?.into_inner();
    data.diag_mut().fill(T::zero());
    Ok(DistanceMatrix::from_trusted(data, DistanceKind::Original))
}
