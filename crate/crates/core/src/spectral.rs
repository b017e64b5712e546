//! Sinusoid form of the periodic tail of a chain,
//!
//! ```text
//! y*(t) = Σ_{m=0}^{M} a_m sin(2π m t / L) + b_m cos(2π m t / L),   t ≥ T,
//! ```
//!
//! with `M = ⌊L/2⌋`. Coefficients come from a real discrete Fourier analysis
//! of one period; the offset `T` is folded into `(a_m, b_m)` so the formula
//! holds in `t` itself.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::ChainResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigForm {
    #[serde(rename = "L")]
    pub period: u64,
    #[serde(rename = "T")]
    pub origin: u64,
    #[serde(rename = "M")]
    pub harmonics: u64,
    /// Sine coefficients, `a[m][i]` for harmonic `m` and coordinate `i`.
    pub a: Vec<Vec<f64>>,
    /// Cosine coefficients.
    pub b: Vec<Vec<f64>>,
}

/// `(x · m) mod L` without overflow, for exact phase reduction.
fn phase_index(m: u64, t: u64, period: u64) -> u64 {
    ((u128::from(m) * u128::from(t)) % u128::from(period)) as u64
}

/// Fits the form to one period `values[s] = y*(origin + s)`, each a vector
/// of `d` coordinates.
pub fn fit_trig_values(values: &[Vec<f64>], origin: u64) -> Result<TrigForm> {
    let period = values.len();
    if period == 0 {
        return Err(Error::NotPeriodic("no period samples".into()));
    }
    let d = values[0].len();
    if values.iter().any(|v| v.len() != d) {
        return Err(Error::InvalidInput(
            "period samples differ in dimension".into(),
        ));
    }
    let l = period as u64;
    let harmonics = l / 2;
    let cos_table: Vec<f64> = (0..period)
        .map(|k| (TAU * k as f64 / period as f64).cos())
        .collect();
    let sin_table: Vec<f64> = (0..period)
        .map(|k| (TAU * k as f64 / period as f64).sin())
        .collect();

    let mut a = vec![vec![0.0; d]; harmonics as usize + 1];
    let mut b = vec![vec![0.0; d]; harmonics as usize + 1];
    for m in 0..=harmonics {
        let nyquist = m > 0 && 2 * m == l;
        let weight = if m == 0 || nyquist { 1.0 } else { 2.0 } / period as f64;
        for i in 0..d {
            // Coefficients in the shifted variable s = t - T.
            let mut alpha = 0.0;
            let mut beta = 0.0;
            for (s, v) in values.iter().enumerate() {
                let k = phase_index(m, s as u64, l) as usize;
                alpha += v[i] * cos_table[k];
                beta += v[i] * sin_table[k];
            }
            alpha *= weight;
            beta *= weight;
            let mu = m as usize;
            if m == 0 {
                b[0][i] = alpha;
            } else if nyquist {
                // sin(π t) vanishes on integers; cos(π (t - T)) = (-1)^T cos(π t).
                b[mu][i] = if origin.is_multiple_of(2) { alpha } else { -alpha };
            } else {
                // cos(θ(t - T)) = cos θt cos θT + sin θt sin θT
                // sin(θ(t - T)) = sin θt cos θT - cos θt sin θT
                let k = phase_index(m, origin, l) as usize;
                let (c, s) = (cos_table[k], sin_table[k]);
                b[mu][i] = alpha * c - beta * s;
                a[mu][i] = alpha * s + beta * c;
            }
        }
    }
    Ok(TrigForm {
        period: l,
        origin,
        harmonics,
        a,
        b,
    })
}

/// Fits the form to the certified cycle of a chain.
pub fn fit_trig(chain: &ChainResult) -> Result<TrigForm> {
    if chain.period == 0 || chain.path().len() != chain.pre_period + chain.period {
        return Err(Error::NotPeriodic(
            "chain carries no cycle certificate".into(),
        ));
    }
    let values: Vec<Vec<f64>> = (chain.pre_period..chain.pre_period + chain.period)
        .map(|t| chain.decoded_at(t))
        .collect();
    fit_trig_values(&values, chain.pre_period as u64)
}

impl TrigForm {
    pub fn dim(&self) -> usize {
        self.b.first().map_or(0, Vec::len)
    }

    /// Evaluates the finite sum at integer `t ≥ T`.
    pub fn eval(&self, t: u64) -> Result<Vec<f64>> {
        if t < self.origin {
            return Err(Error::BeforePhaseOrigin {
                t,
                origin: self.origin,
            });
        }
        let mut out = vec![0.0; self.dim()];
        for m in 0..=self.harmonics {
            let theta = TAU * phase_index(m, t, self.period) as f64 / self.period as f64;
            let (s, c) = theta.sin_cos();
            let mu = m as usize;
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.a[mu][i] * s + self.b[mu][i] * c;
            }
        }
        Ok(out)
    }

    /// Mean square of coordinate `i` over one period from the coefficients:
    /// `b_0² + Σ (a_m² + b_m²)/2`, with the Nyquist term counted once.
    pub fn mean_square(&self, i: usize) -> f64 {
        (0..=self.harmonics)
            .map(|m| {
                let mu = m as usize;
                let energy = self.a[mu][i].powi(2) + self.b[mu][i].powi(2);
                if m == 0 || 2 * m == self.period {
                    energy
                } else {
                    energy / 2.0
                }
            })
            .sum()
    }
}

/// Free-function form of [`TrigForm::eval`].
pub fn eval_trig(form: &TrigForm, t: u64) -> Result<Vec<f64>> {
    form.eval(t)
}
