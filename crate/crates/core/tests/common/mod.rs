//! Straight-line reference implementations used as test oracles.
//!
//! Everything here works on dense `Vec<f64>` data with full sorts and
//! `BTreeSet`s, written directly from the definitions and sharing no code
//! with the library's sparse, truncated, fixed-point paths.

#![allow(dead_code)]

use std::collections::BTreeSet;

use cajaccard::{DistanceMatrix, FeatureMatrix, SampleMeta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Set = BTreeSet<usize>;

/// Dense view of an original distance matrix plus camera labels, with full
/// ranking lists precomputed.
pub struct Dense {
    pub d: Vec<Vec<f64>>,
    pub cams: Vec<u32>,
    global: Vec<Vec<usize>>,
    intra: Vec<Vec<usize>>,
    inter: Vec<Vec<usize>>,
}

impl Dense {
    pub fn new(d: Vec<Vec<f64>>, cams: Vec<u32>) -> Self {
        let n = d.len();
        let rank = |i: usize, keep: &dyn Fn(usize) -> bool| {
            let mut c: Vec<usize> = (0..n).filter(|&j| keep(j)).collect();
            // Self first, then ascending distance, then ascending index.
            c.sort_by(|&a, &b| {
                (a != i)
                    .cmp(&(b != i))
                    .then(d[i][a].partial_cmp(&d[i][b]).unwrap())
                    .then(a.cmp(&b))
            });
            c
        };
        let global = (0..n).map(|i| rank(i, &|_| true)).collect();
        let intra = (0..n).map(|i| rank(i, &|j| cams[j] == cams[i])).collect();
        let inter = (0..n).map(|i| rank(i, &|j| cams[j] != cams[i])).collect();
        Self {
            d,
            cams,
            global,
            intra,
            inter,
        }
    }

    pub fn from_matrix(dist: &DistanceMatrix<f64>, meta: &SampleMeta) -> Self {
        let d = dist.view().rows().into_iter().map(|r| r.to_vec()).collect();
        Self::new(d, meta.cameras().to_vec())
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn global(&self, i: usize) -> &[usize] {
        &self.global[i]
    }

    pub fn intra(&self, i: usize) -> &[usize] {
        &self.intra[i]
    }

    pub fn inter(&self, i: usize) -> &[usize] {
        &self.inter[i]
    }

    pub fn knn(&self, i: usize, k: usize) -> Set {
        self.global[i].iter().take(k).copied().collect()
    }

    pub fn intra_knn(&self, i: usize, k: usize) -> Set {
        self.intra[i].iter().take(k).copied().collect()
    }

    pub fn inter_knn(&self, i: usize, k: usize) -> Set {
        self.inter[i].iter().take(k).copied().collect()
    }

    pub fn krnn(&self, i: usize, k: usize) -> Set {
        self.knn(i, k)
            .into_iter()
            .filter(|&j| self.knn(j, k).contains(&i))
            .collect()
    }

    /// R*(i, k1) = R(i, k1) ∪ { R(j, ⌊k1/2⌋) : j ∈ R(i, k1),
    ///             |R(i, k1) ∩ R(j, ⌊k1/2⌋)| ≥ 2/3 |R(j, ⌊k1/2⌋)| }
    pub fn robust_krnn(&self, i: usize, k1: usize) -> Set {
        let r = self.krnn(i, k1);
        let mut out = r.clone();
        if k1 / 2 == 0 {
            return out;
        }
        for &j in &r {
            let c = self.krnn(j, k1 / 2);
            let common = r.intersection(&c).count() as f64;
            if common >= 2.0 / 3.0 * c.len() as f64 {
                out.extend(c);
            }
        }
        out
    }

    pub fn ckrnn(&self, i: usize, k1_intra: usize, k1_inter: usize) -> Set {
        let intra: Set = self
            .intra_knn(i, k1_intra)
            .into_iter()
            .filter(|&j| self.intra_knn(j, k1_intra).contains(&i))
            .collect();
        let inter: Set = self
            .inter_knn(i, k1_inter)
            .into_iter()
            .filter(|&j| self.inter_knn(j, k1_inter).contains(&i))
            .collect();
        intra.union(&inter).copied().collect()
    }

    /// Dense weighted vector: exp(-d) on the set, normalized to sum 1.
    pub fn vector(&self, i: usize, set: &Set) -> Vec<f64> {
        let mut v = vec![0.0; self.n()];
        let total: f64 = set.iter().map(|&j| (-self.d[i][j]).exp()).sum();
        for &j in set {
            v[j] = (-self.d[i][j]).exp() / total;
        }
        v
    }

    pub fn mean(vectors: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; vectors[0].len()];
        for &m in members {
            for (o, x) in out.iter_mut().zip(&vectors[m]) {
                *o += x;
            }
        }
        out.iter_mut().for_each(|o| *o /= members.len() as f64);
        out
    }

    pub fn lqe(&self, vectors: &[Vec<f64>], i: usize, k2: usize) -> Vec<f64> {
        let members: Vec<usize> = self.knn(i, k2).into_iter().collect();
        Self::mean(vectors, &members)
    }

    pub fn clqe(&self, vectors: &[Vec<f64>], i: usize, k2_intra: usize, k2_inter: usize) -> Vec<f64> {
        let mut members: Vec<usize> = self.intra_knn(i, k2_intra).into_iter().collect();
        members.extend(self.inter_knn(i, k2_inter));
        Self::mean(vectors, &members)
    }

    /// Baseline Jaccard: robust KRNN, weighting, LQE, overlap.
    pub fn jaccard(&self, k1: usize, k2: usize) -> Vec<Vec<f64>> {
        let v: Vec<Vec<f64>> = (0..self.n())
            .map(|i| self.vector(i, &self.robust_krnn(i, k1)))
            .collect();
        let e: Vec<Vec<f64>> = (0..self.n()).map(|i| self.lqe(&v, i, k2)).collect();
        overlap_all(&e)
    }

    /// Baseline without the recall step.
    pub fn jaccard_no_recall(&self, k1: usize, k2: usize) -> Vec<Vec<f64>> {
        let v: Vec<Vec<f64>> = (0..self.n())
            .map(|i| self.vector(i, &self.krnn(i, k1)))
            .collect();
        let e: Vec<Vec<f64>> = (0..self.n()).map(|i| self.lqe(&v, i, k2)).collect();
        overlap_all(&e)
    }

    pub fn ca_vectors(&self, k1i: usize, k1e: usize, k2i: usize, k2e: usize) -> Vec<Vec<f64>> {
        let v: Vec<Vec<f64>> = (0..self.n())
            .map(|i| self.vector(i, &self.ckrnn(i, k1i, k1e)))
            .collect();
        (0..self.n()).map(|i| self.clqe(&v, i, k2i, k2e)).collect()
    }

    pub fn ca_jaccard(&self, k1i: usize, k1e: usize, k2i: usize, k2e: usize) -> Vec<Vec<f64>> {
        overlap_all(&self.ca_vectors(k1i, k1e, k2i, k2e))
    }
}

/// 1 - Σ min / Σ max over every coordinate.
pub fn overlap(a: &[f64], b: &[f64]) -> f64 {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (x, y) in a.iter().zip(b) {
        lo += x.min(*y);
        hi += x.max(*y);
    }
    if hi == 0.0 {
        1.0
    } else {
        1.0 - lo / hi
    }
}

pub fn overlap_all(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    vectors
        .iter()
        .map(|a| vectors.iter().map(|b| overlap(a, b)).collect())
        .collect()
}

pub fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn cosine(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    1.0 - dot / (nx * ny)
}

/// Largest entrywise absolute difference between a library matrix and a
/// dense reference.
pub fn max_abs_diff(m: &DistanceMatrix<f64>, dense: &[Vec<f64>]) -> f64 {
    assert_eq!(m.shape(), (dense.len(), dense.first().map_or(0, Vec::len)));
    let mut worst: f64 = 0.0;
    for (i, row) in dense.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            worst = worst.max((m.get(i, j) - x).abs());
        }
    }
    worst
}

pub fn set_of(ns: &cajaccard::NeighborSet) -> Set {
    ns.iter().collect()
}

/// Random camera-biased instance: `n` samples in `dim` dimensions over
/// `cams` cameras, with a handful of latent identities.
#[derive(Debug, Clone)]
pub struct Instance {
    pub features: FeatureMatrix<f64>,
    pub meta: SampleMeta,
}

pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, dim: usize, cams: u32) -> Instance {
    let ids = (n / 4).max(1);
    let centers: Vec<Vec<f64>> = (0..ids)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let offsets: Vec<Vec<f64>> = (0..cams)
        .map(|_| (0..dim).map(|_| 0.7 * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let mut rows = Vec::with_capacity(n);
    let mut cameras = Vec::with_capacity(n);
    let mut identities = Vec::with_capacity(n);
    for s in 0..n {
        let id = rng.random_range(0..ids);
        let cam = if s < cams as usize { s as u32 } else { rng.random_range(0..cams) };
        let row: Vec<f64> = (0..dim)
            .map(|k| {
                centers[id][k]
                    + offsets[cam as usize][k]
                    + 0.4 * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        rows.push(row);
        cameras.push(cam);
        identities.push(id as i64);
    }
    Instance {
        features: FeatureMatrix::from_rows(&rows).unwrap(),
        meta: SampleMeta::new(cameras, Some(identities)).unwrap(),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Reference DBSCAN: union-find over core points, border points to the
/// nearest core within `eps` (lowest index on ties), clusters numbered by
/// their lowest-index member.
pub fn reference_dbscan(d: &[Vec<f64>], eps: f64, min_samples: usize) -> Vec<i64> {
    let n = d.len();
    let within = |i: usize, j: usize| i == j || d[i][j] <= eps;
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| within(i, j)).count() >= min_samples)
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for i in 0..n {
        for j in 0..n {
            if core[i] && core[j] && within(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut root_label = std::collections::HashMap::new();
    let mut labels = vec![-1i64; n];
    for i in 0..n {
        if core[i] {
            let r = find(&mut parent, i);
            let next = root_label.len() as i64;
            labels[i] = *root_label.entry(r).or_insert(next);
        }
    }
    for i in 0..n {
        if core[i] {
            continue;
        }
        let mut best: Option<usize> = None;
        for j in 0..n {
            if core[j] && within(i, j) && best.is_none_or(|b| d[i][j] < d[i][b]) {
                best = Some(j);
            }
        }
        if let Some(b) = best {
            labels[i] = labels[b];
        }
    }
    labels
}

/// Pair-counting oracle: (precision, recall, F, ARI). Noise (-1) samples are
/// singletons.
pub fn reference_agreement(pred: &[i64], truth: &[i64]) -> (f64, f64, f64, f64) {
    let n = pred.len();
    let same_pred = |i: usize, j: usize| pred[i] == pred[j] && pred[i] != -1;
    let (mut n11, mut n10, mut n01, mut n00) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        for j in i + 1..n {
            match (same_pred(i, j), truth[i] == truth[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    let p = n11 / (n11 + n10);
    let r = n11 / (n11 + n01);
    let f = 2.0 * p * r / (p + r);
    let ari = 2.0 * (n00 * n11 - n01 * n10)
        / ((n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11));
    (p, r, f, ari)
}

/// AP straight from the definition over the protocol-filtered ranking.
pub fn reference_map(d: &[Vec<f64>], qmeta: &SampleMeta, gmeta: &SampleMeta) -> Option<f64> {
    let qids = qmeta.identities().unwrap();
    let gids = gmeta.identities().unwrap();
    let mut aps = Vec::new();
    for (q, row) in d.iter().enumerate() {
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap().then(a.cmp(&b)));
        let kept: Vec<usize> = order
            .into_iter()
            .filter(|&g| {
                gids[g] != -1 && !(gids[g] == qids[q] && gmeta.camera(g) == qmeta.camera(q))
            })
            .collect();
        let positives: Vec<usize> = (0..kept.len()).filter(|&r| gids[kept[r]] == qids[q]).collect();
        if positives.is_empty() || qids[q] == -1 {
            continue;
        }
        let ap: f64 = positives
            .iter()
            .enumerate()
            .map(|(h, &r)| (h + 1) as f64 / (r + 1) as f64)
            .sum::<f64>()
            / positives.len() as f64;
        aps.push(ap);
    }
    (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Fixture F5: 1-D points with two cameras.
pub fn f5() -> (FeatureMatrix<f64>, SampleMeta) {
    (
        FeatureMatrix::from_rows(&[vec![0.0], vec![0.1], vec![0.25], vec![1.0], vec![1.1]]).unwrap(),
        SampleMeta::new(vec![0, 0, 0, 1, 1], None).unwrap(),
    )
}
