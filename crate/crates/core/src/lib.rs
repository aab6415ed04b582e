//! Camera-aware Jaccard distance for re-identification.
//!
//! The crate computes k-reciprocal Jaccard distances over embedding matrices,
//! in both the classic form (robust k-reciprocal neighbors plus local query
//! expansion) and the camera-aware form, where reciprocity and expansion are
//! evaluated separately on same-camera and cross-camera ranking lists. Around
//! that core sit DBSCAN clustering on precomputed distances, mAP/CMC
//! evaluation, neighbor-reliability statistics, a synthetic data generator,
//! and file formats.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the common choice of `f64`.

pub mod clustering;
pub mod distance;
pub mod encoding;
mod error;
pub mod eval;
pub mod io;
pub mod neighbors;
pub mod pipeline;
mod scalar;
mod sum;
pub mod synth;
mod types;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use types::{
    validate_inputs, CaJaccardParams, DistanceKind, DistanceMatrix, FeatureMatrix,
    JaccardParams, NeighborSet, SampleMeta, SparseWeightVector,
};

pub use clustering::{dbscan, ClusterAssignment, DbscanParams};
pub use distance::Metric;
pub use pipeline::{EncodingPlan, Method, PipelineRequest};

pub type Features = FeatureMatrix<f64>;
pub type Distances = DistanceMatrix<f64>;
pub type WeightVector = SparseWeightVector<f64>;

pub type Features32 = FeatureMatrix<f32>;
pub type Distances32 = DistanceMatrix<f32>;
pub type WeightVector32 = SparseWeightVector<f32>;
