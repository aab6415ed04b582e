//! Ranking lists and neighbor sets.
//!
//! Every sample gets three ranking lists over the original distances: the
//! global list, the list restricted to its own camera (intra) and the list of
//! all other cameras (inter). Each list is ordered by ascending distance with
//! ties broken by ascending sample index; a sample always sits at rank 1 of
//! its own global and intra lists.
//!
//! Lists may be stored truncated. Pipelines only ever look at the first few
//! entries, so building them to depth `k` is O(N) per sample instead of
//! O(N log N).

use std::cmp::Ordering;

use ndarray::ArrayView1;
use rayon::prelude::*;

use crate::{CaJaccardParams, DistanceMatrix, Error, NeighborSet, Result, SampleMeta, Scalar};

/// How many leading entries of each list to keep. `0` skips a list entirely,
/// `usize::MAX` keeps it whole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ListDepths {
    pub global: usize,
    pub intra: usize,
    pub inter: usize,
}

impl ListDepths {
    pub const FULL: Self = Self {
        global: usize::MAX,
        intra: usize::MAX,
        inter: usize::MAX,
    };
}

#[derive(Debug, Clone, Default)]
struct Lists {
    prefixes: Vec<Vec<usize>>,
    full_lens: Vec<usize>,
}

impl Lists {
    fn top(&self, i: usize, k: usize, which: &str) -> &[usize] {
        let k = k.min(self.full_lens[i]);
        let stored = &self.prefixes[i];
        assert!(
            k <= stored.len(),
            "{which} ranking list of sample {i} holds {} entries, {k} requested",
            stored.len()
        );
        &stored[..k]
    }
}

#[derive(Debug, Clone)]
pub struct RankingLists {
    global: Lists,
    intra: Lists,
    inter: Lists,
    depths: ListDepths,
}

fn by_distance<T: Scalar>(a: &(T, usize), b: &(T, usize)) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

/// The `take` nearest candidates, fully ordered.
fn nearest<T: Scalar>(candidates: &mut [(T, usize)], take: usize) -> Vec<usize> {
    let take = take.min(candidates.len());
    if take == 0 {
        return Vec::new();
    }
    if take < candidates.len() {
        candidates.select_nth_unstable_by(take - 1, by_distance);
    }
    let head = &mut candidates[..take];
    head.sort_unstable_by(by_distance);
    head.iter().map(|c| c.1).collect()
}

struct RowLists {
    global: Vec<usize>,
    intra: Vec<usize>,
    inter: Vec<usize>,
}

fn rank_row<T: Scalar>(
    i: usize,
    row: ArrayView1<'_, T>,
    cameras: &[u32],
    depths: ListDepths,
) -> RowLists {
    let own = cameras[i];
    let mut global = Vec::new();
    let mut intra = Vec::new();
    let mut inter = Vec::new();

    if depths.global > 0 {
        let mut others: Vec<(T, usize)> = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, &d)| (d, j))
            .collect();
        global.push(i);
        global.extend(nearest(&mut others, depths.global - 1));
    }
    if depths.intra > 0 || depths.inter > 0 {
        let mut same = Vec::new();
        let mut other = Vec::new();
        for (j, &d) in row.iter().enumerate() {
            if j == i {
                continue;
            }
            if cameras[j] == own {
                if depths.intra > 0 {
                    same.push((d, j));
                }
            } else if depths.inter > 0 {
                other.push((d, j));
            }
        }
        if depths.intra > 0 {
            intra.push(i);
            intra.extend(nearest(&mut same, depths.intra - 1));
        }
        inter = nearest(&mut other, depths.inter);
    }
    RowLists {
        global,
        intra,
        inter,
    }
}

impl RankingLists {
    /// Build lists truncated to `depths`.
    pub fn build<T: Scalar>(
        dist: &DistanceMatrix<T>,
        meta: &SampleMeta,
        depths: ListDepths,
    ) -> Result<Self> {
        dist.require_square()?;
        let n = dist.nrows();
        if meta.len() != n {
            return Err(Error::LengthMismatch {
                what: "sample metadata",
                expected: n,
                found: meta.len(),
            });
        }
        let cameras = meta.cameras();
        let rows: Vec<RowLists> = (0..n)
            .into_par_iter()
            .map(|i| rank_row(i, dist.row(i), cameras, depths))
            .collect();

        let mut camera_sizes = std::collections::HashMap::new();
        for &c in cameras {
            *camera_sizes.entry(c).or_insert(0usize) += 1;
        }

        let mut global = Lists::default();
        let mut intra = Lists::default();
        let mut inter = Lists::default();
        for (i, row) in rows.into_iter().enumerate() {
            let same = camera_sizes[&cameras[i]];
            global.prefixes.push(row.global);
            global.full_lens.push(if depths.global > 0 { n } else { 0 });
            intra.prefixes.push(row.intra);
            intra.full_lens.push(if depths.intra > 0 { same } else { 0 });
            inter.prefixes.push(row.inter);
            inter.full_lens.push(if depths.inter > 0 { n - same } else { 0 });
        }
        Ok(Self {
            global,
            intra,
            inter,
            depths,
        })
    }

    pub fn len(&self) -> usize {
        self.global.prefixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn depths(&self) -> ListDepths {
        self.depths
    }

    /// Stored prefix of sample `i`'s global list.
    pub fn global(&self, i: usize) -> &[usize] {
        &self.global.prefixes[i]
    }

    pub fn intra(&self, i: usize) -> &[usize] {
        &self.intra.prefixes[i]
    }

    pub fn inter(&self, i: usize) -> &[usize] {
        &self.inter.prefixes[i]
    }

    /// First `min(k, N)` entries of the global list, in rank order.
    ///
    /// Panics if the lists were built too shallow for `k`.
    pub fn top(&self, i: usize, k: usize) -> &[usize] {
        self.global.top(i, k, "global")
    }

    pub fn top_intra(&self, i: usize, k: usize) -> &[usize] {
        self.intra.top(i, k, "intra-camera")
    }

    pub fn top_inter(&self, i: usize, k: usize) -> &[usize] {
        self.inter.top(i, k, "inter-camera")
    }
}

/// Full-length ranking lists for every sample.
pub fn build_ranking_lists<T: Scalar>(
    dist: &DistanceMatrix<T>,
    meta: &SampleMeta,
) -> Result<RankingLists> {
    RankingLists::build(dist, meta, ListDepths::FULL)
}

pub fn knn(lists: &RankingLists, i: usize, k: usize) -> NeighborSet {
    lists.top(i, k).iter().copied().collect()
}

fn reciprocal<'a>(i: usize, k: usize, top: impl Fn(usize, usize) -> &'a [usize]) -> NeighborSet {
    top(i, k)
        .iter()
        .copied()
        .filter(|&j| top(j, k).contains(&i))
        .collect()
}

/// k-reciprocal neighbors: `j` is in `i`'s top-k and `i` is in `j`'s.
pub fn krnn(lists: &RankingLists, i: usize, k1: usize) -> NeighborSet {
    reciprocal(i, k1, |s, k| lists.top(s, k))
}

/// k-reciprocal neighbors enlarged by the half-k recall step.
///
/// For every `j` in `R(i, k1)`, the set `R(j, k1/2)` is merged in when at
/// least two thirds of it already lies in `R(i, k1)`.
pub fn robust_krnn(lists: &RankingLists, i: usize, k1: usize) -> NeighborSet {
    let base = krnn(lists, i, k1);
    let half = k1 / 2;
    if half == 0 {
        return base;
    }
    let mut robust = base.clone();
    for j in base.iter() {
        let candidate = krnn(lists, j, half);
        // |R ∩ C| >= 2/3 |C|, kept in integers.
        if 3 * base.intersection_len(&candidate) >= 2 * candidate.len() {
            robust = robust.union(&candidate);
        }
    }
    robust
}

/// Nearest `k_intra` of the intra-camera list and `k_inter` of the inter list.
pub fn camera_knn(
    lists: &RankingLists,
    i: usize,
    k_intra: usize,
    k_inter: usize,
) -> (NeighborSet, NeighborSet) {
    (
        lists.top_intra(i, k_intra).iter().copied().collect(),
        lists.top_inter(i, k_inter).iter().copied().collect(),
    )
}

/// Reciprocal neighbors within `i`'s own camera at `k`.
pub fn intra_krnn(lists: &RankingLists, i: usize, k: usize) -> NeighborSet {
    reciprocal(i, k, |s, k| lists.top_intra(s, k))
}

/// Reciprocal neighbors across cameras at `k`; each side is judged on its
/// own inter-camera list.
pub fn inter_krnn(lists: &RankingLists, i: usize, k: usize) -> NeighborSet {
    reciprocal(i, k, |s, k| lists.top_inter(s, k))
}

/// Camera-aware k-reciprocal neighbors: union of the intra-camera reciprocal
/// set at `k1_intra` and the inter-camera reciprocal set at `k1_inter`.
/// There is no recall step.
pub fn ckrnn(lists: &RankingLists, i: usize, params: &CaJaccardParams) -> NeighborSet {
    intra_krnn(lists, i, params.k1_intra).union(&inter_krnn(lists, i, params.k1_inter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{pairwise_distance, Metric};
    use crate::FeatureMatrix;
    use ndarray::Array2;

    // Five points on a line, cameras A A A B B.
    fn f5() -> (RankingLists, SampleMeta) {
        let p = [0.0, 0.1, 0.25, 1.0, 1.1];
        let f = FeatureMatrix::new(Array2::from_shape_vec((5, 1), p.to_vec()).unwrap()).unwrap();
        let d = pairwise_distance(&f, Metric::Euclidean).unwrap();
        let meta = SampleMeta::new(vec![0, 0, 0, 1, 1], None).unwrap();
        (build_ranking_lists(&d, &meta).unwrap(), meta)
    }

    fn set(v: &[usize]) -> NeighborSet {
        v.iter().copied().collect()
    }

    #[test]
    fn f5_ranking_lists() {
        let (lists, _) = f5();
        assert_eq!(lists.global(0), &[0, 1, 2, 3, 4]);
        assert_eq!(lists.intra(0), &[0, 1, 2]);
        assert_eq!(lists.inter(0), &[3, 4]);
        assert_eq!(lists.inter(3), &[2, 1, 0]);
    }

    #[test]
    fn single_member_camera() {
        let d = crate::DistanceMatrix::new(
            ndarray::array![[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]],
            crate::DistanceKind::Original,
        )
        .unwrap();
        let meta = SampleMeta::new(vec![0, 0, 7], None).unwrap();
        let lists = build_ranking_lists(&d, &meta).unwrap();
        assert_eq!(lists.intra(2), &[2]);
        assert_eq!(lists.inter(2), &[1, 0]);
    }

    #[test]
    fn f5_knn_and_krnn() {
        let (lists, _) = f5();
        assert_eq!(knn(&lists, 0, 2), set(&[0, 1]));
        assert_eq!(knn(&lists, 0, 1), set(&[0]));
        assert_eq!(knn(&lists, 0, 5), set(&[0, 1, 2, 3, 4]));
        assert_eq!(knn(&lists, 0, 50), set(&[0, 1, 2, 3, 4]));
        assert_eq!(krnn(&lists, 0, 2), set(&[0, 1]));
        assert_eq!(krnn(&lists, 2, 2), set(&[2]));
        for i in 0..5 {
            assert_eq!(krnn(&lists, i, 1), set(&[i]));
        }
        assert_eq!(robust_krnn(&lists, 0, 2), set(&[0, 1]));
        assert_eq!(robust_krnn(&lists, 2, 2), set(&[2]));
    }

    #[test]
    fn f5_camera_neighbors() {
        let (lists, _) = f5();
        assert_eq!(camera_knn(&lists, 0, 2, 1), (set(&[0, 1]), set(&[3])));
        assert_eq!(camera_knn(&lists, 0, 1, 3).0, set(&[0]));
        let params = CaJaccardParams {
            k1_intra: 2,
            k1_inter: 1,
            k2_intra: 1,
            k2_inter: 1,
        };
        assert_eq!(ckrnn(&lists, 2, &params), set(&[2, 3]));
        assert_eq!(ckrnn(&lists, 0, &params), set(&[0, 1]));
    }

    #[test]
    fn truncated_lists_agree_with_full() {
        let (full, meta) = f5();
        let p = [0.0, 0.1, 0.25, 1.0, 1.1];
        let f = FeatureMatrix::new(Array2::from_shape_vec((5, 1), p.to_vec()).unwrap()).unwrap();
        let d = pairwise_distance(&f, Metric::Euclidean).unwrap();
        let short = RankingLists::build(
            &d,
            &meta,
            ListDepths {
                global: 2,
                intra: 2,
                inter: 1,
            },
        )
        .unwrap();
        for i in 0..5 {
            assert_eq!(short.top(i, 2), full.top(i, 2));
            assert_eq!(short.top_intra(i, 2), full.top_intra(i, 2));
            assert_eq!(short.top_inter(i, 1), full.top_inter(i, 1));
        }
    }

    #[test]
    #[should_panic(expected = "ranking list")]
    fn reading_past_depth_panics() {
        let meta = SampleMeta::single_camera(4).unwrap();
        let d = crate::DistanceMatrix::<f64>::new(Array2::zeros((4, 4)), crate::DistanceKind::Original)
            .unwrap();
        let lists = RankingLists::build(
            &d,
            &meta,
            ListDepths {
                global: 2,
                intra: 0,
                inter: 0,
            },
        )
        .unwrap();
        lists.top(0, 3);
    }

    #[test]
    fn ties_break_by_index_with_self_first() {
        let meta = SampleMeta::single_camera(4).unwrap();
        let d = crate::DistanceMatrix::<f64>::new(Array2::zeros((4, 4)), crate::DistanceKind::Original)
            .unwrap();
        let lists = build_ranking_lists(&d, &meta).unwrap();
        assert_eq!(lists.global(2), &[2, 0, 1, 3]);
    }
}
