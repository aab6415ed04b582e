//! Domain types shared by every stage of the pipeline.

use std::collections::BTreeSet;

use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};

use crate::sum::ExactSum;
use crate::{Error, Result, Scalar};

/// N×D matrix of sample embeddings, one row per sample. All entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    data: Array2<T>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn new(data: Array2<T>) -> Result<Self> {
        let (rows, cols) = data.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        for ((row, col), v) in data.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
        Ok(Self { data })
    }

    pub fn from_shape_vec(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch {
                what: "feature payload",
                expected: rows * cols,
                found: values.len(),
            });
        }
        let data = Array2::from_shape_vec((rows, cols), values)
            .expect("length checked against shape");
        Self::new(data)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::LengthMismatch {
                    what: "feature row",
                    expected: cols,
                    found: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_shape_vec(rows.len(), cols, flat)
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.data.row(i)
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.data.view()
    }

    pub fn into_inner(self) -> Array2<T> {
        self.data
    }

    pub fn cast<U: Scalar>(&self) -> FeatureMatrix<U> {
        FeatureMatrix {
            data: self.data.mapv(|v| U::of(v.as_f64())),
        }
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let data = ndarray::concatenate(Axis(0), &[self.data.view(), other.data.view()])
            .expect("column counts checked");
        Ok(Self { data })
    }

    /// Rows in the given order. Indices may repeat.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            data: self.data.select(Axis(0), indices),
        }
    }
}

/// Per-sample camera labels plus optional ground-truth identities.
///
/// Identity `-1` marks junk/distractor samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMeta {
    cameras: Vec<u32>,
    identities: Option<Vec<i64>>,
}

impl SampleMeta {
    pub const JUNK_IDENTITY: i64 = -1;

    pub fn new(cameras: Vec<u32>, identities: Option<Vec<i64>>) -> Result<Self> {
        if cameras.is_empty() {
            return Err(Error::EmptyCameraSet);
        }
        if let Some(ids) = &identities {
            if ids.len() != cameras.len() {
                return Err(Error::LengthMismatch {
                    what: "identity labels",
                    expected: cameras.len(),
                    found: ids.len(),
                });
            }
        }
        Ok(Self {
            cameras,
            identities,
        })
    }

    /// Every sample under camera 0, no identities.
    pub fn single_camera(n: usize) -> Result<Self> {
        Self::new(vec![0; n], None)
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn cameras(&self) -> &[u32] {
        &self.cameras
    }

    pub fn camera(&self, i: usize) -> u32 {
        self.cameras[i]
    }

    pub fn identities(&self) -> Option<&[i64]> {
        self.identities.as_deref()
    }

    pub fn identity(&self, i: usize) -> Option<i64> {
        self.identities.as_ref().map(|ids| ids[i])
    }

    pub fn has_identities(&self) -> bool {
        self.identities.is_some()
    }

    pub fn distinct_cameras(&self) -> usize {
        self.cameras.iter().collect::<BTreeSet<_>>().len()
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut cameras = self.cameras.clone();
        cameras.extend_from_slice(&other.cameras);
        let identities = match (&self.identities, &other.identities) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        Self {
            cameras,
            identities,
        }
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            cameras: indices.iter().map(|&i| self.cameras[i]).collect(),
            identities: self
                .identities
                .as_ref()
                .map(|ids| indices.iter().map(|&i| ids[i]).collect()),
        }
    }
}

/// Check that a raw feature matrix and its metadata form a valid pair.
pub fn validate_inputs<T: Scalar>(
    features: Array2<T>,
    meta: SampleMeta,
) -> Result<(FeatureMatrix<T>, SampleMeta)> {
    let features = FeatureMatrix::new(features)?;
    if meta.len() != features.n_samples() {
        return Err(Error::LengthMismatch {
            what: "sample metadata",
            expected: features.n_samples(),
            found: meta.len(),
        });
    }
    Ok((features, meta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    Original,
    Jaccard,
    CaJaccard,
    Blended,
}

impl DistanceKind {
    /// Kinds whose entries are overlap distances bounded by one.
    pub fn is_jaccard_like(self) -> bool {
        matches!(self, Self::Jaccard | Self::CaJaccard)
    }
}

/// Dense pairwise distances with a tag recording how they were produced.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    data: Array2<T>,
    kind: DistanceKind,
}

impl<T: Scalar> DistanceMatrix<T> {
    pub fn new(data: Array2<T>, kind: DistanceKind) -> Result<Self> {
        let upper = if kind.is_jaccard_like() {
            T::one()
        } else {
            T::infinity()
        };
        for ((row, col), &v) in data.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            if v < T::zero() || v > upper {
                return Err(Error::DistanceOutOfRange {
                    row,
                    col,
                    value: v.as_f64(),
                    kind,
                });
            }
        }
        Ok(Self { data, kind })
    }

    pub(crate) fn from_trusted(data: Array2<T>, kind: DistanceKind) -> Self {
        debug_assert!(data.iter().all(|v| v.is_finite() && *v >= T::zero()));
        Self { data, kind }
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[[row, col]]
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.data.row(i)
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.data.view()
    }

    pub fn into_inner(self) -> Array2<T> {
        self.data
    }

    pub fn cast<U: Scalar>(&self) -> DistanceMatrix<U> {
        DistanceMatrix {
            data: self.data.mapv(|v| U::of(v.as_f64())),
            kind: self.kind,
        }
    }

    pub fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NotSquare {
                rows: self.nrows(),
                cols: self.ncols(),
            })
        }
    }

    /// Largest |d(i,j) - d(j,i)|, or `None` if the matrix is not square.
    pub fn max_asymmetry(&self) -> Option<f64> {
        if !self.is_square() {
            return None;
        }
        let n = self.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.data[[i, j]] - self.data[[j, i]]).abs().as_f64());
            }
        }
        Some(worst)
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        self.data
            .diag()
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs().as_f64()))
    }

    /// Block of rows `rows` and columns `cols`.
    pub fn block(
        &self,
        rows: std::ops::Range<usize>,
        cols: std::ops::Range<usize>,
    ) -> DistanceMatrix<T> {
        DistanceMatrix {
            data: self.data.slice(s![rows, cols]).to_owned(),
            kind: self.kind,
        }
    }
}

/// L1-normalized sparse vector of neighbor weights.
///
/// Entries are sorted by index, weights strictly positive. `dim` is the size
/// of the index space (the number of samples the vector was built over).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseWeightVector<T> {
    indices: Vec<usize>,
    weights: Vec<T>,
    dim: usize,
}

impl<T: Scalar> SparseWeightVector<T> {
    pub fn from_entries(mut entries: Vec<(usize, T)>, dim: usize) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidWeights("no entries".into()));
        }
        entries.sort_by_key(|e| e.0);
        let mut mass = ExactSum::default();
        for (pos, &(index, w)) in entries.iter().enumerate() {
            if index >= dim {
                return Err(Error::IndexOutOfRange { index, len: dim });
            }
            if pos > 0 && entries[pos - 1].0 == index {
                return Err(Error::DuplicateIndex { index });
            }
            if !(w.is_finite() && w > T::zero()) {
                return Err(Error::InvalidWeights(format!(
                    "weight {w} at index {index} is not strictly positive"
                )));
            }
            mass.add(w);
        }
        if (mass.value() - 1.0).abs() > T::MASS_TOLERANCE {
            return Err(Error::InvalidWeights(format!(
                "L1 mass {} differs from 1",
                mass.value()
            )));
        }
        let (indices, weights) = entries.into_iter().unzip();
        Ok(Self {
            indices,
            weights,
            dim,
        })
    }

    /// Caller guarantees sorted unique in-range indices and positive weights.
    pub(crate) fn from_sorted_parts(indices: Vec<usize>, weights: Vec<T>, dim: usize) -> Self {
        debug_assert_eq!(indices.len(), weights.len());
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(indices.last().map_or(true, |&i| i < dim));
        Self {
            indices,
            weights,
            dim,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.indices.iter().copied().zip(self.weights.iter().copied())
    }

    /// Weight at `index`, zero outside the support.
    pub fn get(&self, index: usize) -> T {
        self.indices
            .binary_search(&index)
            .map_or(T::zero(), |pos| self.weights[pos])
    }

    pub fn mass(&self) -> f64 {
        let mut sum = ExactSum::default();
        self.weights.iter().for_each(|&w| sum.add(w));
        sum.value()
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut dense = vec![T::zero(); self.dim];
        for (i, w) in self.iter() {
            dense[i] = w;
        }
        dense
    }
}

/// Set of sample indices, kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NeighborSet {
    indices: Vec<usize>,
}

impl NeighborSet {
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        for (pos, &index) in indices.iter().enumerate() {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, len: n });
            }
            if pos > 0 && indices[pos - 1] == index {
                return Err(Error::DuplicateIndex { index });
            }
        }
        Ok(Self { indices })
    }

    /// Sorts and deduplicates; indices must already be in range.
    pub(crate) fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn intersection_len(&self, other: &Self) -> usize {
        let (mut a, mut b, mut count) = (0, 0, 0);
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    a += 1;
                    b += 1;
                }
            }
        }
        count
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut merged = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (0, 0);
        while a < self.indices.len() || b < other.indices.len() {
            let next = match (self.indices.get(a), other.indices.get(b)) {
                (Some(&x), Some(&y)) if x == y => {
                    a += 1;
                    b += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    a += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    b += 1;
                    y
                }
                (Some(&x), None) => {
                    a += 1;
                    x
                }
                (None, Some(&y)) => {
                    b += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            merged.push(next);
        }
        Self { indices: merged }
    }
}

impl FromIterator<usize> for NeighborSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_unsorted(iter.into_iter().collect())
    }
}

/// Neighborhood sizes for the camera-aware distance.
///
/// `k1_*` bound the reciprocal search on the intra- and inter-camera ranking
/// lists, `k2_*` the number of intra/inter neighbors averaged during
/// expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaJaccardParams {
    pub k1_intra: usize,
    pub k1_inter: usize,
    pub k2_intra: usize,
    pub k2_inter: usize,
}

impl Default for CaJaccardParams {
    fn default() -> Self {
        Self {
            k1_intra: 5,
            k1_inter: 20,
            k2_intra: 2,
            k2_inter: 4,
        }
    }
}

impl CaJaccardParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.k1_intra, self.k1_inter, self.k2_intra, self.k2_inter];
        if all.contains(&0) {
            return Err(Error::InvalidParams(format!(
                "all neighborhood sizes must be positive: {self:?}"
            )));
        }
        if self.k2_intra > self.k1_intra || self.k2_inter > self.k1_inter {
            return Err(Error::InvalidParams(format!(
                "expansion sizes must not exceed reciprocal sizes: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Neighborhood sizes for the baseline k-reciprocal Jaccard distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JaccardParams {
    pub k1: usize,
    pub k2: usize,
}

impl Default for JaccardParams {
    fn default() -> Self {
        Self { k1: 20, k2: 6 }
    }
}

impl JaccardParams {
    pub fn validate(&self) -> Result<()> {
        if self.k2 == 0 || self.k2 >= self.k1 {
            return Err(Error::InvalidParams(format!(
                "need 1 <= k2 < k1, got k1={} k2={}",
                self.k1, self.k2
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn validate_accepts_well_formed_pair() {
        let meta = SampleMeta::new(vec![0, 1, 1], None).unwrap();
        let (f, m) = validate_inputs(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], meta).unwrap();
        assert_eq!(f.n_samples(), 3);
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn validate_rejects_length_mismatch() {
        let meta = SampleMeta::new(vec![0, 1], None).unwrap();
        let err = validate_inputs(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], meta).unwrap_err();
        assert!(matches!(
            err,
            Error::LengthMismatch {
                expected: 3,
                found: 2,
                ..
            }
        ));
    }

    #[test]
    fn validate_names_non_finite_row() {
        let meta = SampleMeta::new(vec![0, 0, 0], None).unwrap();
        let err =
            validate_inputs(array![[1.0, 2.0], [f64::NAN, 4.0], [5.0, 6.0]], meta).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn empty_camera_set_is_rejected() {
        assert!(matches!(
            SampleMeta::new(vec![], None),
            Err(Error::EmptyCameraSet)
        ));
    }

    #[test]
    fn params_defaults_and_validation() {
        let p = CaJaccardParams::default();
        assert_eq!((p.k1_intra, p.k1_inter, p.k2_intra, p.k2_inter), (5, 20, 2, 4));
        p.validate().unwrap();
        let bad = CaJaccardParams {
            k2_intra: 6,
            ..p
        };
        assert!(bad.validate().is_err());
        let zero = CaJaccardParams { k2_inter: 0, ..p };
        assert!(zero.validate().is_err());

        let j = JaccardParams::default();
        assert_eq!((j.k1, j.k2), (20, 6));
        j.validate().unwrap();
        assert!(JaccardParams { k1: 6, k2: 6 }.validate().is_err());
    }

    #[test]
    fn weight_vector_validation() {
        let v = SparseWeightVector::from_entries(vec![(2, 0.25), (0, 0.75)], 3).unwrap();
        assert_eq!(v.indices(), &[0, 2]);
        assert_eq!(v.get(1), 0.0);
        assert!(SparseWeightVector::from_entries(vec![(0, 0.5)], 3).is_err());
        assert!(SparseWeightVector::from_entries(vec![(0, 0.5), (0, 0.5)], 3).is_err());
        assert!(SparseWeightVector::from_entries(vec![(3, 1.0)], 3).is_err());
        assert!(SparseWeightVector::from_entries(vec![(0, 1.5), (1, -0.5)], 3).is_err());
    }

    #[test]
    fn jaccard_distance_range_enforced() {
        assert!(DistanceMatrix::new(array![[0.0, 1.2], [1.2, 0.0]], DistanceKind::Jaccard).is_err());
        assert!(DistanceMatrix::new(array![[0.0, 1.2], [1.2, 0.0]], DistanceKind::Original).is_ok());
        assert!(DistanceMatrix::new(array![[0.0, -0.1]], DistanceKind::Original).is_err());
    }

    #[test]
    fn neighbor_set_ops() {
        let a = NeighborSet::new(vec![4, 1, 2], 5).unwrap();
        let b: NeighborSet = [2, 3, 4].into_iter().collect();
        assert_eq!(a.intersection_len(&b), 2);
        assert_eq!(a.union(&b).as_slice(), &[1, 2, 3, 4]);
        assert!(NeighborSet::new(vec![1, 1], 5).is_err());
        assert!(NeighborSet::new(vec![5], 5).is_err());
    }
}
