//! Weighted neighbor vectors, query expansion, and the overlap kernel.
//!
//! All sums over weights go through the fixed-point accumulator in
//! [`crate::sum`], which makes every result independent of summation order.

use ndarray::{Array2, ArrayView1, Axis, Zip};
use rayon::prelude::*;

use crate::neighbors::RankingLists;
use crate::sum::{from_fixed, to_fixed, ExactSum};
use crate::{
    CaJaccardParams, DistanceKind, DistanceMatrix, Error, NeighborSet, Result, Scalar,
    SparseWeightVector,
};

/// Encode a neighbor set as `exp(-d)` weights normalized to unit L1 mass.
///
/// `dist_row` holds the original distances from the owning sample. The
/// exponent is shifted by the smallest distance in the set, which leaves the
/// normalized weights unchanged and keeps large Euclidean distances from
/// underflowing.
pub fn vectorize<T: Scalar>(
    sample: usize,
    neighbors: &NeighborSet,
    dist_row: ArrayView1<'_, T>,
) -> Result<SparseWeightVector<T>> {
    if neighbors.is_empty() {
        return Err(Error::EmptyNeighborSet { sample });
    }
    let shift = neighbors
        .iter()
        .map(|j| dist_row[j])
        .fold(T::infinity(), T::min);
    let raw: Vec<T> = neighbors
        .iter()
        .map(|j| (shift - dist_row[j]).exp())
        .collect();
    let mut total = ExactSum::default();
    raw.iter().for_each(|&w| total.add(w));
    let total = T::of(total.value());
    let weights = raw.into_iter().map(|w| w / total).collect();
    Ok(SparseWeightVector::from_sorted_parts(
        neighbors.as_slice().to_vec(),
        weights,
        dist_row.len(),
    ))
}

/// Mean of the vectors at `members`.
pub fn average<T: Scalar>(
    vectors: &[SparseWeightVector<T>],
    members: impl IntoIterator<Item = usize>,
) -> SparseWeightVector<T> {
    let mut entries: Vec<(usize, i128)> = Vec::new();
    let mut count = 0usize;
    let mut dim = 0;
    for m in members {
        let v = &vectors[m];
        dim = v.dim();
        entries.extend(v.iter().map(|(idx, w)| (idx, to_fixed(w))));
        count += 1;
    }
    assert!(count > 0, "cannot average an empty set of vectors");
    entries.sort_unstable_by_key(|e| e.0);

    let mut indices = Vec::new();
    let mut weights = Vec::new();
    let scale = count as f64;
    for group in entries.chunk_by(|a, b| a.0 == b.0) {
        let sum: i128 = group.iter().map(|e| e.1).sum();
        if sum > 0 {
            indices.push(group[0].0);
            weights.push(T::of(from_fixed(sum) / scale));
        }
    }
    SparseWeightVector::from_sorted_parts(indices, weights, dim)
}

/// Local query expansion: mean of the vectors of `i`'s `k2` nearest samples.
pub fn lqe<T: Scalar>(
    vectors: &[SparseWeightVector<T>],
    lists: &RankingLists,
    i: usize,
    k2: usize,
) -> SparseWeightVector<T> {
    average(vectors, lists.top(i, k2).iter().copied())
}

/// Camera-aware expansion: mean over `i`'s `k2_intra` nearest same-camera
/// samples and `k2_inter` nearest other-camera samples.
pub fn clqe<T: Scalar>(
    vectors: &[SparseWeightVector<T>],
    lists: &RankingLists,
    i: usize,
    params: &CaJaccardParams,
) -> SparseWeightVector<T> {
    let intra = lists.top_intra(i, params.k2_intra);
    let inter = lists.top_inter(i, params.k2_inter);
    average(vectors, intra.iter().chain(inter).copied())
}

fn ratio_distance<T: Scalar>(min_sum: i128, max_sum: i128) -> T {
    if max_sum <= 0 {
        return T::one();
    }
    let d = 1.0 - from_fixed(min_sum) / from_fixed(max_sum);
    T::of(d.clamp(0.0, 1.0))
}

/// `1 - Σ min(a, b) / Σ max(a, b)` over the union of both supports.
pub fn overlap_distance<T: Scalar>(a: &SparseWeightVector<T>, b: &SparseWeightVector<T>) -> T {
    let (ai, aw) = (a.indices(), a.weights());
    let (bi, bw) = (b.indices(), b.weights());
    let (mut p, mut q) = (0, 0);
    let mut min_sum = 0i128;
    let mut max_sum = 0i128;
    while p < ai.len() || q < bi.len() {
        let ordering = match (ai.get(p), bi.get(q)) {
            (Some(x), Some(y)) => x.cmp(y),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        match ordering {
            std::cmp::Ordering::Less => {
                max_sum += to_fixed(aw[p]);
                p += 1;
            }
            std::cmp::Ordering::Greater => {
                max_sum += to_fixed(bw[q]);
                q += 1;
            }
            std::cmp::Ordering::Equal => {
                let (x, y) = (to_fixed(aw[p]), to_fixed(bw[q]));
                min_sum += x.min(y);
                max_sum += x.max(y);
                p += 1;
                q += 1;
            }
        }
    }
    ratio_distance(min_sum, max_sum)
}

/// Pairwise overlap distances between two vector collections.
///
/// Uses an inverted index over the gallery: only pairs sharing a support
/// index accumulate a min-sum, and the max-sum follows from
/// `Σ max = |a| + |b| - Σ min`. Pairs with disjoint supports are exactly 1.
pub fn overlap_matrix<T: Scalar>(
    query: &[SparseWeightVector<T>],
    gallery: &[SparseWeightVector<T>],
    kind: DistanceKind,
) -> Result<DistanceMatrix<T>> {
    let dim = gallery.first().map_or(0, SparseWeightVector::dim);
    if let Some(bad) = query.iter().chain(gallery).find(|v| v.dim() != dim) {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: bad.dim(),
        });
    }
    let mut postings: Vec<Vec<(u32, i128)>> = vec![Vec::new(); dim];
    let mut gallery_mass = Vec::with_capacity(gallery.len());
    for (j, v) in gallery.iter().enumerate() {
        let mut mass = 0i128;
        for (l, w) in v.iter() {
            let fx = to_fixed(w);
            postings[l].push((j as u32, fx));
            mass += fx;
        }
        gallery_mass.push(mass);
    }

    let mut out = Array2::zeros((query.len(), gallery.len()));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(query.par_iter())
        .for_each(|(mut row, v)| {
            let mut min_sums = vec![0i128; gallery.len()];
            let mut mass = 0i128;
            for (l, w) in v.iter() {
                let fx = to_fixed(w);
                mass += fx;
                for &(j, gw) in &postings[l] {
                    min_sums[j as usize] += fx.min(gw);
                }
            }
            for ((slot, &m), &gm) in row.iter_mut().zip(&min_sums).zip(&gallery_mass) {
                *slot = ratio_distance(m, mass + gm - m);
            }
        });
    Ok(DistanceMatrix::from_trusted(out, kind))
}

/// `lambda * original + (1 - lambda) * jaccard_like`, elementwise.
pub fn blend<T: Scalar>(
    original: &DistanceMatrix<T>,
    jaccard_like: &DistanceMatrix<T>,
    lambda: f64,
) -> Result<DistanceMatrix<T>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidLambda(lambda));
    }
    if original.shape() != jaccard_like.shape() {
        return Err(Error::ShapeMismatch {
            left: original.shape(),
            right: jaccard_like.shape(),
        });
    }
    let a = T::of(lambda);
    let b = T::of(1.0 - lambda);
    let data = Zip::from(original.view())
        .and(jaccard_like.view())
        .map_collect(|&o, &j| a * o + b * j);
    Ok(DistanceMatrix::from_trusted(data, DistanceKind::Blended))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    fn swv(entries: &[(usize, f64)], dim: usize) -> SparseWeightVector<f64> {
        SparseWeightVector::from_entries(entries.to_vec(), dim).unwrap()
    }

    #[test]
    fn vectorize_singleton_and_ties() {
        let row = Array1::from(vec![0.0, 0.3, 0.3]);
        let v = vectorize(0, &NeighborSet::new(vec![0], 3).unwrap(), row.view()).unwrap();
        assert_eq!(v.iter().collect::<Vec<_>>(), vec![(0, 1.0)]);
        let v = vectorize(0, &NeighborSet::new(vec![1, 2], 3).unwrap(), row.view()).unwrap();
        assert_eq!(v.weights(), &[0.5, 0.5]);
        assert!(matches!(
            vectorize(4, &NeighborSet::default(), row.view()),
            Err(Error::EmptyNeighborSet { sample: 4 })
        ));
    }

    #[test]
    fn vectorize_line_fixture() {
        // x1 at 0.0 and x2 at 0.1: weights e^0 and e^-0.1 normalized.
        let row = Array1::from(vec![0.0, 0.1, 0.25, 1.0, 1.1]);
        let v = vectorize(0, &NeighborSet::new(vec![0, 1], 5).unwrap(), row.view()).unwrap();
        let expected0 = 1.0 / (1.0 + (-0.1f64).exp());
        assert!((v.get(0) - expected0).abs() < 1e-12);
        assert!((v.get(0) - 0.5250).abs() < 5e-5);
        assert!((v.get(1) - 0.4750).abs() < 5e-5);
        assert!((v.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_examples() {
        let a = swv(&[(0, 0.5), (1, 0.5)], 3);
        let b = swv(&[(1, 0.5), (2, 0.5)], 3);
        let c = swv(&[(2, 1.0)], 3);
        assert_eq!(overlap_distance(&a, &a), 0.0);
        assert_eq!(overlap_distance(&a, &c), 1.0);
        assert!((overlap_distance(&a, &b) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(overlap_distance(&a, &b), overlap_distance(&b, &a));
    }

    #[test]
    fn overlap_matrix_matches_pairwise_kernel() {
        let vs = vec![
            swv(&[(0, 0.5), (1, 0.5)], 4),
            swv(&[(1, 0.25), (2, 0.75)], 4),
            swv(&[(3, 1.0)], 4),
            swv(&[(0, 0.1), (1, 0.2), (2, 0.3), (3, 0.4)], 4),
        ];
        let m = overlap_matrix(&vs, &vs, DistanceKind::Jaccard).unwrap();
        for i in 0..4 {
            assert_eq!(m.get(i, i), 0.0);
            for j in 0..4 {
                assert_eq!(m.get(i, j), overlap_distance(&vs[i], &vs[j]));
            }
        }
    }

    #[test]
    fn averaging_identical_vectors_is_identity() {
        let v = swv(&[(0, 0.3), (2, 0.7)], 3);
        let avg = average(&[v.clone(), v.clone()], [0, 1]);
        assert_eq!(avg, v);
    }

    #[test]
    fn blend_identities_and_errors() {
        let zeros = DistanceMatrix::new(Array2::<f64>::zeros((2, 2)), DistanceKind::Original)
            .unwrap();
        let ones = DistanceMatrix::new(Array2::<f64>::ones((2, 2)), DistanceKind::Jaccard).unwrap();
        assert_eq!(blend(&zeros, &ones, 0.0).unwrap().view(), ones.view());
        assert_eq!(blend(&zeros, &ones, 1.0).unwrap().view(), zeros.view());
        assert!(blend(&zeros, &ones, 0.5)
            .unwrap()
            .view()
            .iter()
            .all(|&v| v == 0.5));
        assert!(matches!(
            blend(&zeros, &ones, 1.5),
            Err(Error::InvalidLambda(_))
        ));
        let small = DistanceMatrix::new(array![[0.0]], DistanceKind::Jaccard).unwrap();
        assert!(matches!(
            blend(&zeros, &small, 0.5),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
