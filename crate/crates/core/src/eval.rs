//! Retrieval metrics, clustering agreement, and neighbor-reliability
//! statistics.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::clustering::ClusterAssignment;
use crate::{DistanceMatrix, Error, Result, SampleMeta, Scalar, SparseWeightVector};

/// Average precision of one ranked relevance list, or `None` when nothing
/// is relevant.
pub fn average_precision(relevant: &[bool]) -> Option<f64> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, _) in relevant.iter().enumerate().filter(|(_, &r)| r) {
        hits += 1;
        sum += hits as f64 / (rank + 1) as f64;
    }
    (hits > 0).then(|| sum / hits as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalReport {
    pub map: f64,
    /// Fraction of valid queries with a true match in the top `k`.
    pub cmc: BTreeMap<usize, f64>,
    pub valid_queries: usize,
    /// Queries without any true match after filtering.
    pub skipped_queries: Vec<usize>,
}

/// Gallery order for query `q`: ascending distance, ties by gallery index.
fn ranked_gallery<T: Scalar>(dist: &DistanceMatrix<T>, q: usize) -> Vec<usize> {
    let row = dist.row(q);
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| {
        row[a]
            .partial_cmp(&row[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Relevance flags of query `q`'s filtered ranking. Gallery samples with the
/// query's identity under the query's camera, and junk samples, are removed.
fn filtered_relevance<T: Scalar>(
    dist: &DistanceMatrix<T>,
    q: usize,
    query_meta: &SampleMeta,
    gallery_meta: &SampleMeta,
    query_ids: &[i64],
    gallery_ids: &[i64],
) -> Vec<bool> {
    let qid = query_ids[q];
    let qcam = query_meta.camera(q);
    ranked_gallery(dist, q)
        .into_iter()
        .filter(|&g| {
            let gid = gallery_ids[g];
            gid != SampleMeta::JUNK_IDENTITY && !(gid == qid && gallery_meta.camera(g) == qcam)
        })
        .map(|g| gallery_ids[g] == qid)
        .collect()
}

/// mAP and CMC under the cross-camera protocol.
pub fn evaluate<T: Scalar>(
    dist: &DistanceMatrix<T>,
    query_meta: &SampleMeta,
    gallery_meta: &SampleMeta,
    cmc_ranks: &[usize],
) -> Result<RetrievalReport> {
    if dist.nrows() != query_meta.len() {
        return Err(Error::LengthMismatch {
            what: "query metadata",
            expected: dist.nrows(),
            found: query_meta.len(),
        });
    }
    if dist.ncols() != gallery_meta.len() {
        return Err(Error::LengthMismatch {
            what: "gallery metadata",
            expected: dist.ncols(),
            found: gallery_meta.len(),
        });
    }
    let qids = query_meta.identities().ok_or(Error::MissingIdentities)?;
    let gids = gallery_meta.identities().ok_or(Error::MissingIdentities)?;

    let per_query: Vec<Option<(f64, usize)>> = (0..dist.nrows())
        .into_par_iter()
        .map(|q| {
            if qids[q] == SampleMeta::JUNK_IDENTITY {
                return None;
            }
            let flags = filtered_relevance(dist, q, query_meta, gallery_meta, qids, gids);
            let ap = average_precision(&flags)?;
            let first_hit = flags.iter().position(|&r| r).expect("ap implies a hit");
            Some((ap, first_hit + 1))
        })
        .collect();

    let mut skipped = Vec::new();
    let mut aps = Vec::new();
    let mut first_hits = Vec::new();
    for (q, r) in per_query.into_iter().enumerate() {
        match r {
            Some((ap, hit)) => {
                aps.push(ap);
                first_hits.push(hit);
            }
            None => skipped.push(q),
        }
    }
    if aps.is_empty() {
        return Err(Error::NoValidQuery);
    }
    let valid = aps.len();
    let cmc = cmc_ranks
        .iter()
        .map(|&k| {
            let hits = first_hits.iter().filter(|&&h| h <= k).count();
            (k, hits as f64 / valid as f64)
        })
        .collect();
    Ok(RetrievalReport {
        map: aps.iter().sum::<f64>() / valid as f64,
        cmc,
        valid_queries: valid,
        skipped_queries: skipped,
    })
}

/// Averages over the expanded neighbor vectors, self excluded.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NeighborStats {
    /// Fraction of support indices under a different camera.
    pub mean_inter_proportion: f64,
    /// Share of the non-self weight mass on other cameras.
    pub mean_inter_weight: f64,
    /// Fraction of support indices with the sample's identity.
    pub neighbor_accuracy_support: f64,
    /// Share of the non-self weight mass on the sample's identity.
    pub neighbor_accuracy_weighted: f64,
    /// Samples that contributed (valid identity and non-empty non-self support).
    pub samples: usize,
}

pub fn neighbor_stats<T: Scalar>(
    vectors: &[SparseWeightVector<T>],
    meta: &SampleMeta,
) -> Result<NeighborStats> {
    let ids = meta.identities().ok_or(Error::MissingIdentities)?;
    if vectors.len() != meta.len() {
        return Err(Error::LengthMismatch {
            what: "neighbor vectors",
            expected: meta.len(),
            found: vectors.len(),
        });
    }
    let cams = meta.cameras();
    let per_sample: Vec<Option<[f64; 4]>> = vectors
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            if ids[i] == SampleMeta::JUNK_IDENTITY {
                return None;
            }
            let (mut count, mut inter, mut correct) = (0usize, 0usize, 0usize);
            let (mut mass, mut inter_mass, mut correct_mass) = (0.0, 0.0, 0.0);
            for (j, w) in v.iter().filter(|&(j, _)| j != i) {
                let w = w.as_f64();
                count += 1;
                mass += w;
                if cams[j] != cams[i] {
                    inter += 1;
                    inter_mass += w;
                }
                if ids[j] == ids[i] {
                    correct += 1;
                    correct_mass += w;
                }
            }
            (count > 0 && mass > 0.0).then(|| {
                [
                    inter as f64 / count as f64,
                    inter_mass / mass,
                    correct as f64 / count as f64,
                    correct_mass / mass,
                ]
            })
        })
        .collect();
    let rows: Vec<[f64; 4]> = per_sample.into_iter().flatten().collect();
    if rows.is_empty() {
        return Ok(NeighborStats::default());
    }
    let n = rows.len() as f64;
    let mean = |k: usize| rows.iter().map(|r| r[k]).sum::<f64>() / n;
    Ok(NeighborStats {
        mean_inter_proportion: mean(0),
        mean_inter_weight: mean(1),
        neighbor_accuracy_support: mean(2),
        neighbor_accuracy_weighted: mean(3),
        samples: rows.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterAgreement {
    pub pairwise_precision: f64,
    pub pairwise_recall: f64,
    pub pairwise_f: f64,
    pub ari: f64,
}

fn choose2(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Pairwise F-score and adjusted Rand index of a clustering against ground
/// truth. Noise samples count as singleton clusters.
pub fn cluster_agreement(pred: &ClusterAssignment, truth: &[i64]) -> Result<ClusterAgreement> {
    if pred.labels().len() != truth.len() {
        return Err(Error::LengthMismatch {
            what: "ground-truth identities",
            expected: pred.labels().len(),
            found: truth.len(),
        });
    }
    let pred = pred.with_singleton_noise();
    let n = truth.len() as u64;

    let mut contingency: HashMap<(usize, i64), u64> = HashMap::new();
    let mut pred_sizes: HashMap<usize, u64> = HashMap::new();
    let mut truth_sizes: HashMap<i64, u64> = HashMap::new();
    for (&p, &t) in pred.iter().zip(truth) {
        *contingency.entry((p, t)).or_default() += 1;
        *pred_sizes.entry(p).or_default() += 1;
        *truth_sizes.entry(t).or_default() += 1;
    }
    let both: f64 = contingency.values().map(|&c| choose2(c)).sum();
    let pred_pairs: f64 = pred_sizes.values().map(|&c| choose2(c)).sum();
    let truth_pairs: f64 = truth_sizes.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);

    let precision = if pred_pairs > 0.0 { both / pred_pairs } else { 1.0 };
    let recall = if truth_pairs > 0.0 { both / truth_pairs } else { 1.0 };
    let pairwise_f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };

    let expected = if total > 0.0 {
        pred_pairs * truth_pairs / total
    } else {
        0.0
    };
    let max_index = 0.5 * (pred_pairs + truth_pairs);
    let ari = if max_index == expected {
        1.0
    } else {
        (both - expected) / (max_index - expected)
    };
    Ok(ClusterAgreement {
        pairwise_precision: precision,
        pairwise_recall: recall,
        pairwise_f,
        ari,
    })
}
