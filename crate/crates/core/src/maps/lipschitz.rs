use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MapDefinition;
use crate::error::{Error, Result};
use crate::point::l2_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaMethod {
    /// Spectral norm of the companion matrix; an upper bound.
    Analytic,
    /// Largest observed difference quotient; a lower bound.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub gamma: f64,
    pub method: GammaMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<usize>,
}

impl LipschitzEstimate {
    pub fn is_upper_bound(&self) -> bool {
        self.method == GammaMethod::Analytic
    }
}

/// Pairs closer than this are discarded by the sampler.
const MIN_PAIR_DISTANCE: f64 = 1e-6;

/// Companion matrix of `z(t) = Σ p_ℓ z(t - ℓ)`: first row `p`, ones on the
/// subdiagonal.
pub fn companion_matrix(coeffs: &[f64]) -> DMatrix<f64> {
    let d = coeffs.len();
    DMatrix::from_fn(d, d, |i, j| {
        if i == 0 {
            coeffs[j]
        } else if j + 1 == i {
            1.0
        } else {
            0.0
        }
    })
}

pub fn estimate_lipschitz(
    map: &MapDefinition,
    method: GammaMethod,
    samples: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    match method {
        GammaMethod::Analytic => {
            let coeffs = map.ar_coeffs().ok_or(Error::AnalyticUnavailable)?;
            let gamma = companion_matrix(coeffs)
                .singular_values()
                .iter()
                .copied()
                .fold(0.0, f64::max);
            Ok(LipschitzEstimate {
                gamma,
                method,
                sample_count: None,
            })
        }
        GammaMethod::Sampled => Ok(LipschitzEstimate {
            gamma: sampled_gamma(map, samples, seed),
            method,
            sample_count: Some(samples),
        }),
    }
}

/// Half the pairs are independent uniform points, the other half a uniform
/// point and a nearby perturbation at a log-uniform scale in `[1e-5, 1e-1]`.
fn sampled_gamma(map: &MapDefinition, samples: usize, seed: u64) -> f64 {
    let d = map.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for i in 0..samples {
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let w2: Vec<f64> = if i % 2 == 0 {
            (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect()
        } else {
            let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let norm = dir
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
                .max(f64::MIN_POSITIVE);
            let scale = 10f64.powf(rng.gen_range(-5.0..=-1.0));
            w.iter()
                .zip(&dir)
                .map(|(a, u)| (a + scale * u / norm).clamp(-1.0, 1.0))
                .collect()
        };
        let dist = l2_distance(&w, &w2);
        if dist < MIN_PAIR_DISTANCE {
            continue;
        }
        if let (Ok(a), Ok(b)) = (map.evaluate_raw(&w), map.evaluate_raw(&w2)) {
            let ratio = l2_distance(&a, &b) / dist;
            if ratio.is_finite() {
                best = best.max(ratio);
            }
        }
    }
    best
}
