//! Seeded synthetic embeddings: identity centers on the unit sphere, noisy
//! instances around them, and a drifted second view of every instance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embedding::{dot, normalize_in_place, EmbeddingSet};
use crate::error::{Result, UcfError};

/// Angle between the two centers of a confusable pair, in units of
/// `noise_scale`.
pub const CONFUSABLE_SEPARATION: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub identities: usize,
    pub per_id: usize,
    pub dim: usize,
    /// Typical angular spread of an identity's instances around its center.
    pub noise_scale: f64,
    /// Identity pairs `(2p, 2p + 1)` whose centers are placed
    /// `CONFUSABLE_SEPARATION * noise_scale` radians apart.
    pub confusable_pairs: usize,
    /// Typical angular perturbation between the main and mean views.
    pub view_drift: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Ten identities of forty instances in four dimensions with two
    /// confusable pairs. At `eps = 0.6`, `k1 = 30` each pair ends up in one
    /// coarse cluster on 19 of seeds 0..20.
    pub fn fixture(seed: u64) -> Self {
        Self {
            identities: 10,
            per_id: 40,
            dim: 4,
            noise_scale: 0.15,
            confusable_pairs: 2,
            view_drift: 0.05,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(UcfError::BadConfig(msg.to_string()));
        if self.identities == 0 || self.per_id == 0 || self.dim < 2 {
            return bad("identities, per_id must be positive and dim at least 2");
        }
        if self.confusable_pairs > 0 && self.identities < 2 {
            return bad("confusable pairs need at least two identities");
        }
        if 2 * self.confusable_pairs > self.identities {
            return bad("more confusable pairs than identity pairs");
        }
        if !(self.noise_scale > 0.0) || !self.noise_scale.is_finite() {
            return bad("noise_scale must be positive");
        }
        if !(self.view_drift >= 0.0) || !self.view_drift.is_finite() {
            return bad("view_drift must be non-negative");
        }
        Ok(())
    }
}

/// Two views of the same instances plus their identity labels.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub main: EmbeddingSet,
    pub mean: EmbeddingSet,
    pub truth: Vec<i32>,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let mut v = gaussian(rng, dim, 1.0);
        if v.iter().any(|&x| x != 0.0) {
            normalize_in_place(&mut v);
            return v;
        }
    }
}

/// Unit vector at `angle` radians from the unit vector `from`, in a random
/// direction.
fn rotate_away(rng: &mut ChaCha8Rng, from: &[f64], angle: f64) -> Vec<f64> {
    let mut dir = random_unit(rng, from.len());
    let along = dot(&dir, from);
    dir.iter_mut().zip(from).for_each(|(d, f)| *d -= along * f);
    normalize_in_place(&mut dir);
    let mut out: Vec<f64> = from
        .iter()
        .zip(&dir)
        .map(|(f, d)| angle.cos() * f + angle.sin() * d)
        .collect();
    normalize_in_place(&mut out);
    out
}

/// Instances are laid out identity-major: instance `i` belongs to identity
/// `i / per_id`. Per-coordinate noise is `scale / sqrt(dim)`, so `scale` is
/// roughly the angular displacement.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut drift_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    drift_rng.set_stream(1);

    let mut centers: Vec<Vec<f64>> = (0..cfg.identities)
        .map(|_| random_unit(&mut rng, cfg.dim))
        .collect();
    for p in 0..cfg.confusable_pairs {
        centers[2 * p + 1] = rotate_away(
            &mut rng,
            &centers[2 * p],
            CONFUSABLE_SEPARATION * cfg.noise_scale,
        );
    }

    let n = cfg.identities * cfg.per_id;
    let per_coord = cfg.noise_scale / (cfg.dim as f64).sqrt();
    let drift_coord = cfg.view_drift / (cfg.dim as f64).sqrt();
    let mut main = Vec::with_capacity(n * cfg.dim);
    let mut mean = Vec::with_capacity(n * cfg.dim);
    let mut truth = Vec::with_capacity(n);
    for (id, center) in centers.iter().enumerate() {
        for _ in 0..cfg.per_id {
            let mut x: Vec<f64> = center
                .iter()
                .zip(gaussian(&mut rng, cfg.dim, per_coord))
                .map(|(c, e)| c + e)
                .collect();
            normalize_in_place(&mut x);
            if cfg.view_drift > 0.0 {
                let mut y: Vec<f64> = x
                    .iter()
                    .zip(gaussian(&mut drift_rng, cfg.dim, drift_coord))
                    .map(|(a, e)| a + e)
                    .collect();
                normalize_in_place(&mut y);
                mean.extend(y);
            } else {
                mean.extend_from_slice(&x);
            }
            main.extend(x);
            truth.push(id as i32);
        }
    }
    Ok(SynthData {
        main: EmbeddingSet::from_unit_rows(n, cfg.dim, main)?,
        mean: EmbeddingSet::from_unit_rows(n, cfg.dim, mean)?,
        truth,
    })
}
