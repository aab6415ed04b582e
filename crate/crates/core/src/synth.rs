//! Synthetic camera-biased embeddings.
//!
//! Sample = identity mean + camera offset + noise. All three spreads are
//! expressed as expected vector norms: the identity mean and the noise are
//! isotropic Gaussians with per-coordinate deviation `sigma / sqrt(dim)`, and
//! each camera offset is a uniformly random direction scaled to exactly
//! `camera_bias`.
//!
//! Draw order is fixed (identity means, then camera offsets, then per-sample
//! noise in sample order) with a ChaCha8 stream, so a seed pins the output
//! bit for bit.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, FeatureMatrix, Result, SampleMeta};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub num_identities: usize,
    pub samples_per_identity: usize,
    pub num_cameras: usize,
    pub feature_dim: usize,
    pub identity_spread: f64,
    pub camera_bias: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Reference fixture: 50 identities × 8 samples × 4 cameras in 64-D.
    pub const S1: Self = Self {
        num_identities: 50,
        samples_per_identity: 8,
        num_cameras: 4,
        feature_dim: 64,
        identity_spread: 1.0,
        camera_bias: 1.5,
        noise_sigma: 0.3,
        seed: 42,
    };

    pub fn n_samples(&self) -> usize {
        self.num_identities * self.samples_per_identity
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_identities == 0
            || self.samples_per_identity == 0
            || self.num_cameras == 0
            || self.feature_dim == 0
        {
            return Err(Error::InvalidParams(format!(
                "synthetic counts must be positive: {self:?}"
            )));
        }
        let spreads = [self.identity_spread, self.camera_bias, self.noise_sigma];
        if spreads.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidParams(format!(
                "synthetic spreads must be finite and nonnegative: {self:?}"
            )));
        }
        Ok(())
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::S1
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, sigma: f64) -> Vec<f64> {
    let scale = sigma / (dim as f64).sqrt();
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
        .collect()
}

/// Samples are identity-major. Sample `s` of identity `p` is seen by camera
/// `(p + s) mod num_cameras`, so every identity visits
/// `min(samples_per_identity, num_cameras)` cameras.
pub fn generate(config: &SynthConfig) -> Result<(FeatureMatrix<f64>, SampleMeta)> {
    config.validate()?;
    let dim = config.feature_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let means: Vec<Vec<f64>> = (0..config.num_identities)
        .map(|_| gaussian(&mut rng, dim, config.identity_spread))
        .collect();
    let offsets: Vec<Vec<f64>> = (0..config.num_cameras)
        .map(|_| {
            let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return vec![0.0; dim];
            }
            dir.into_iter()
                .map(|v| v / norm * config.camera_bias)
                .collect()
        })
        .collect();

    let n = config.n_samples();
    let mut data = Array2::zeros((n, dim));
    let mut cameras = Vec::with_capacity(n);
    let mut identities = Vec::with_capacity(n);
    for p in 0..config.num_identities {
        for s in 0..config.samples_per_identity {
            let row = p * config.samples_per_identity + s;
            let cam = (p + s) % config.num_cameras;
            let noise = gaussian(&mut rng, dim, config.noise_sigma);
            for k in 0..dim {
                data[[row, k]] = means[p][k] + offsets[cam][k] + noise[k];
            }
            cameras.push(cam as u32);
            identities.push(p as i64);
        }
    }
    Ok((
        FeatureMatrix::new(data)?,
        SampleMeta::new(cameras, Some(identities))?,
    ))
}
