//! End-to-end distance pipelines.
//!
//! A pipeline is original distance → ranking lists → neighbor sets →
//! weighted vectors → expansion → overlap, optionally blended with the
//! original distance. [`EncodingPlan`] names the neighbor rule and the
//! expansion rule; the baseline Jaccard distance and the camera-aware
//! distance are two fixed plans, and mixing them gives the ablation variants.

use rayon::prelude::*;

use crate::distance::{original_distance, pairwise_distance, Metric};
use crate::encoding::{blend, clqe, lqe, overlap_matrix, vectorize};
use crate::neighbors::{ckrnn, krnn, robust_krnn, ListDepths, RankingLists};
use crate::{
    CaJaccardParams, DistanceKind, DistanceMatrix, Error, FeatureMatrix, JaccardParams,
    NeighborSet, Result, SampleMeta, Scalar, SparseWeightVector,
};

/// Which neighbors populate each sample's weighted vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborRule {
    /// k-reciprocal neighbors with the two-thirds recall step.
    RobustKrnn { k1: usize },
    /// Plain k-reciprocal neighbors.
    Krnn { k1: usize },
    /// Union of intra-camera and inter-camera reciprocal neighbors.
    CameraAware { k1_intra: usize, k1_inter: usize },
}

/// Which samples' vectors are averaged into the expanded vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    Global { k2: usize },
    CameraAware { k2_intra: usize, k2_inter: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodingPlan {
    pub neighbors: NeighborRule,
    pub expansion: Expansion,
}

impl EncodingPlan {
    pub fn jaccard(p: &JaccardParams) -> Self {
        Self {
            neighbors: NeighborRule::RobustKrnn { k1: p.k1 },
            expansion: Expansion::Global { k2: p.k2 },
        }
    }

    pub fn ca_jaccard(p: &CaJaccardParams) -> Self {
        Self {
            neighbors: NeighborRule::CameraAware {
                k1_intra: p.k1_intra,
                k1_inter: p.k1_inter,
            },
            expansion: Expansion::CameraAware {
                k2_intra: p.k2_intra,
                k2_inter: p.k2_inter,
            },
        }
    }

    /// Baseline encoding without the recall step.
    pub fn krnn_without_recall(p: &JaccardParams) -> Self {
        Self {
            neighbors: NeighborRule::Krnn { k1: p.k1 },
            expansion: Expansion::Global { k2: p.k2 },
        }
    }

    /// Camera-aware neighbors, baseline expansion.
    pub fn ckrnn_only(ca: &CaJaccardParams, baseline: &JaccardParams) -> Self {
        Self {
            neighbors: Self::ca_jaccard(ca).neighbors,
            expansion: Expansion::Global { k2: baseline.k2 },
        }
    }

    /// Baseline neighbors, camera-aware expansion.
    pub fn clqe_only(ca: &CaJaccardParams, baseline: &JaccardParams) -> Self {
        Self {
            neighbors: NeighborRule::RobustKrnn { k1: baseline.k1 },
            expansion: Self::ca_jaccard(ca).expansion,
        }
    }

    /// Shallowest ranking lists that still answer every query of this plan.
    pub fn depths(&self) -> ListDepths {
        let mut d = ListDepths {
            global: 0,
            intra: 0,
            inter: 0,
        };
        match self.neighbors {
            NeighborRule::RobustKrnn { k1 } | NeighborRule::Krnn { k1 } => d.global = k1,
            NeighborRule::CameraAware { k1_intra, k1_inter } => {
                d.intra = k1_intra;
                d.inter = k1_inter;
            }
        }
        match self.expansion {
            Expansion::Global { k2 } => d.global = d.global.max(k2),
            Expansion::CameraAware { k2_intra, k2_inter } => {
                d.intra = d.intra.max(k2_intra);
                d.inter = d.inter.max(k2_inter);
            }
        }
        d
    }

    fn validate(&self) -> Result<()> {
        let sizes = match (self.neighbors, self.expansion) {
            (NeighborRule::RobustKrnn { k1 } | NeighborRule::Krnn { k1 }, e) => {
                let mut v = vec![k1];
                v.extend(expansion_sizes(e));
                v
            }
            (NeighborRule::CameraAware { k1_intra, k1_inter }, e) => {
                let mut v = vec![k1_intra, k1_inter];
                v.extend(expansion_sizes(e));
                v
            }
        };
        if sizes.contains(&0) {
            return Err(Error::InvalidParams(format!(
                "neighborhood sizes must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    fn kind(&self) -> DistanceKind {
        match (self.neighbors, self.expansion) {
            (NeighborRule::CameraAware { .. }, Expansion::CameraAware { .. }) => {
                DistanceKind::CaJaccard
            }
            _ => DistanceKind::Jaccard,
        }
    }
}

fn expansion_sizes(e: Expansion) -> Vec<usize> {
    match e {
        Expansion::Global { k2 } => vec![k2],
        Expansion::CameraAware { k2_intra, k2_inter } => vec![k2_intra, k2_inter],
    }
}

/// Neighbor set of every sample under `rule`.
pub fn neighbor_sets(lists: &RankingLists, rule: NeighborRule) -> Vec<NeighborSet> {
    (0..lists.len())
        .into_par_iter()
        .map(|i| match rule {
            NeighborRule::RobustKrnn { k1 } => robust_krnn(lists, i, k1),
            NeighborRule::Krnn { k1 } => krnn(lists, i, k1),
            NeighborRule::CameraAware { k1_intra, k1_inter } => ckrnn(
                lists,
                i,
                &CaJaccardParams {
                    k1_intra,
                    k1_inter,
                    k2_intra: 1,
                    k2_inter: 1,
                },
            ),
        })
        .collect()
}

/// Expanded weighted neighbor vectors for every sample of a square original
/// distance matrix.
pub fn expanded_vectors<T: Scalar>(
    dist: &DistanceMatrix<T>,
    meta: &SampleMeta,
    plan: &EncodingPlan,
) -> Result<Vec<SparseWeightVector<T>>> {
    plan.validate()?;
    let lists = RankingLists::build(dist, meta, plan.depths())?;
    let sets = neighbor_sets(&lists, plan.neighbors);
    let vectors = sets
        .par_iter()
        .enumerate()
        .map(|(i, set)| vectorize(i, set, dist.row(i)))
        .collect::<Result<Vec<_>>>()?;
    let expanded = (0..lists.len())
        .into_par_iter()
        .map(|i| match plan.expansion {
            Expansion::Global { k2 } => lqe(&vectors, &lists, i, k2),
            Expansion::CameraAware { k2_intra, k2_inter } => clqe(
                &vectors,
                &lists,
                i,
                &CaJaccardParams {
                    k1_intra: k2_intra,
                    k1_inter: k2_inter,
                    k2_intra,
                    k2_inter,
                },
            ),
        })
        .collect();
    Ok(expanded)
}

/// Overlap distances among all samples of `dist` under `plan`.
pub fn encoded_distance<T: Scalar>(
    dist: &DistanceMatrix<T>,
    meta: &SampleMeta,
    plan: &EncodingPlan,
) -> Result<DistanceMatrix<T>> {
    let vectors = expanded_vectors(dist, meta, plan)?;
    overlap_matrix(&vectors, &vectors, plan.kind())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Jaccard(JaccardParams),
    CaJaccard(CaJaccardParams),
}

impl Method {
    pub fn plan(&self) -> Result<EncodingPlan> {
        match self {
            Method::Jaccard(p) => {
                p.validate()?;
                Ok(EncodingPlan::jaccard(p))
            }
            Method::CaJaccard(p) => {
                p.validate()?;
                Ok(EncodingPlan::ca_jaccard(p))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Mode<T> {
    AllPairs,
    /// Rows of the output are these query samples, columns the main samples.
    QueryGallery {
        query: FeatureMatrix<T>,
        query_meta: SampleMeta,
    },
}

#[derive(Debug, Clone)]
pub struct PipelineRequest<T> {
    pub features: FeatureMatrix<T>,
    pub meta: SampleMeta,
    pub metric: Metric,
    pub method: Method,
    /// Weight on the original distance; 0 keeps the pure overlap distance.
    pub lambda: f64,
    pub mode: Mode<T>,
}

impl<T: Scalar> PipelineRequest<T> {
    pub fn all_pairs(features: FeatureMatrix<T>, meta: SampleMeta, method: Method) -> Self {
        Self {
            features,
            meta,
            metric: Metric::Cosine,
            method,
            lambda: 0.0,
            mode: Mode::AllPairs,
        }
    }
}

/// Run whichever pipeline `req.method` names.
pub fn run<T: Scalar>(req: &PipelineRequest<T>) -> Result<DistanceMatrix<T>> {
    if req.meta.len() != req.features.n_samples() {
        return Err(Error::LengthMismatch {
            what: "sample metadata",
            expected: req.features.n_samples(),
            found: req.meta.len(),
        });
    }
    let plan = req.method.plan()?;
    if !(0.0..=1.0).contains(&req.lambda) {
        return Err(Error::InvalidLambda(req.lambda));
    }
    match &req.mode {
        Mode::AllPairs => {
            let original = pairwise_distance(&req.features, req.metric)?;
            let encoded = encoded_distance(&original, &req.meta, &plan)?;
            finish(&original, encoded, req.lambda)
        }
        Mode::QueryGallery { query, query_meta } => rerank_with_plan(
            query,
            query_meta,
            &req.features,
            &req.meta,
            req.metric,
            &plan,
            req.lambda,
        ),
    }
}

fn finish<T: Scalar>(
    original: &DistanceMatrix<T>,
    encoded: DistanceMatrix<T>,
    lambda: f64,
) -> Result<DistanceMatrix<T>> {
    if lambda == 0.0 {
        Ok(encoded)
    } else {
        blend(original, &encoded, lambda)
    }
}

/// Baseline k-reciprocal Jaccard distance.
pub fn jaccard_pipeline<T: Scalar>(req: &PipelineRequest<T>) -> Result<DistanceMatrix<T>> {
    match req.method {
        Method::Jaccard(_) => run(req),
        Method::CaJaccard(_) => Err(Error::InvalidParams(
            "jaccard pipeline called with camera-aware parameters".into(),
        )),
    }
}

/// Camera-aware Jaccard distance.
pub fn ca_jaccard_pipeline<T: Scalar>(req: &PipelineRequest<T>) -> Result<DistanceMatrix<T>> {
    match req.method {
        Method::CaJaccard(_) => run(req),
        Method::Jaccard(_) => Err(Error::InvalidParams(
            "camera-aware pipeline called with baseline parameters".into(),
        )),
    }
}

/// Re-rank gallery samples for each query.
///
/// Neighbor structures are built over queries and gallery together; the
/// result is the query × gallery block of the joint overlap distance,
/// blended with the original query × gallery distance when `lambda > 0`.
pub fn rerank<T: Scalar>(
    query: &FeatureMatrix<T>,
    query_meta: &SampleMeta,
    gallery: &FeatureMatrix<T>,
    gallery_meta: &SampleMeta,
    metric: Metric,
    method: &Method,
    lambda: f64,
) -> Result<DistanceMatrix<T>> {
    rerank_with_plan(
        query,
        query_meta,
        gallery,
        gallery_meta,
        metric,
        &method.plan()?,
        lambda,
    )
}

fn rerank_with_plan<T: Scalar>(
    query: &FeatureMatrix<T>,
    query_meta: &SampleMeta,
    gallery: &FeatureMatrix<T>,
    gallery_meta: &SampleMeta,
    metric: Metric,
    plan: &EncodingPlan,
    lambda: f64,
) -> Result<DistanceMatrix<T>> {
    for (f, m) in [(query, query_meta), (gallery, gallery_meta)] {
        if f.n_samples() != m.len() {
            return Err(Error::LengthMismatch {
                what: "sample metadata",
                expected: f.n_samples(),
                found: m.len(),
            });
        }
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidLambda(lambda));
    }
    let nq = query.n_samples();
    let joint = query.concat(gallery)?;
    let joint_meta = query_meta.concat(gallery_meta);
    let original = pairwise_distance(&joint, metric)?;
    let vectors = expanded_vectors(&original, &joint_meta, plan)?;
    let (q, g) = vectors.split_at(nq);
    let encoded = overlap_matrix(q, g, plan.kind())?;
    if lambda == 0.0 {
        return Ok(encoded);
    }
    let qg = original_distance(query, gallery, metric)?;
    blend(&qg, &encoded, lambda)
}
