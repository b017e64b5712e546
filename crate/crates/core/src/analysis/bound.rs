use serde::Serialize;

use crate::error::Result;
use crate::grid::GridSpec;
use crate::maps::{GammaMethod, LipschitzEstimate, MapDefinition};
use crate::orbit::{default_horizon, run_pipeline};
use crate::point::{l2_distance, Point};

/// Relative slack allowed when comparing a computed error with the bound,
/// covering rounding in the distance and the bound itself.
pub const BOUND_SLACK: f64 = 1e-12;

/// `(2 Σ_{s=1}^{t} γ^s + 1) √d / K`, summed term by term (valid at `γ = 1`).
pub fn theorem1_bound(t: u64, gamma: f64, d: usize, k: u32) -> f64 {
    let mut power = 1.0;
    let mut sum = 0.0;
    for _ in 0..t {
        power *= gamma;
        sum += power;
    }
    (2.0 * sum + 1.0) * base_error(d, k)
}

/// `C(t) γ^t √d / K` with `C(t) = 2(γ - γ^{1-t})/(γ - 1) + γ^{-t}`; `None`
/// at `γ = 1` where the closed form is singular.
pub fn theorem1_bound_closed(t: u64, gamma: f64, d: usize, k: u32) -> Option<f64> {
    if gamma == 1.0 {
        return None;
    }
    let t = t as f64;
    let c = 2.0 * (gamma - gamma.powf(1.0 - t)) / (gamma - 1.0) + gamma.powf(-t);
    Some(c * gamma.powf(t) * base_error(d, k))
}

fn base_error(d: usize, k: u32) -> f64 {
    (d as f64).sqrt() / f64::from(k)
}

/// Per-time comparison of `|y*_K(t) - y(t)|` with the bound.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    #[serde(rename = "K")]
    pub k: u32,
    pub d: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub gamma_method: GammaMethod,
    /// Present when `gamma` is only a sampled lower bound.
    pub caveat: Option<String>,
    #[serde(rename = "T")]
    pub pre_period: usize,
    #[serde(rename = "L")]
    pub period: usize,
    pub conflicts: usize,
    pub conflict_free: bool,
    pub actual: Vec<f64>,
    pub bound: Vec<f64>,
    pub violations: Vec<usize>,
    pub worst_ratio: f64,
    pub worst_t: usize,
    pub pass: bool,
}

impl BoundReport {
    /// Closed-form bound at `t` for `γ ≠ 1`.
    pub fn closed_form(&self, t: usize) -> Option<f64> {
        theorem1_bound_closed(t as u64, self.gamma, self.d, self.k)
    }
}

/// Picks the analytic constant for AR maps and a sampled one otherwise.
pub fn default_gamma(map: &MapDefinition, samples: usize, seed: u64) -> Result<LipschitzEstimate> {
    let method = if map.ar_coeffs().is_some() {
        GammaMethod::Analytic
    } else {
        GammaMethod::Sampled
    };
    crate::maps::estimate_lipschitz(map, method, samples, seed)
}

/// Runs the pipeline at resolution `k` and checks the error bound for every
/// `t ≤ horizon`.
pub fn verify_theorem1(
    map: &MapDefinition,
    y0: &Point,
    k: u32,
    horizon: usize,
    gamma: &LipschitzEstimate,
) -> Result<BoundReport> {
    let grid = GridSpec::new(k, map.dim())?;
    let run = run_pipeline(map, y0, &grid, horizon, horizon.max(default_horizon(&grid)))?;
    let base = grid.error_bound();

    let mut actual = Vec::with_capacity(horizon + 1);
    let mut bound = Vec::with_capacity(horizon + 1);
    let mut violations = Vec::new();
    let (mut worst_ratio, mut worst_t) = (0.0f64, 0);
    let (mut power, mut sum) = (1.0f64, 0.0f64);
    for t in 0..=horizon {
        if t > 0 {
            power *= gamma.gamma;
            sum += power;
        }
        let b = (2.0 * sum + 1.0) * base;
        let e = l2_distance(&run.chain.decoded_at(t), run.orbit.samples()[t].coords());
        if e > b * (1.0 + BOUND_SLACK) {
            violations.push(t);
        }
        let ratio = e / b;
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_t = t;
        }
        actual.push(e);
        bound.push(b);
    }
    let caveat = (!gamma.is_upper_bound()).then(|| {
        "gamma is a sampled lower bound of the Lipschitz constant; violations may be artefacts of underestimating it"
            .to_string()
    });
    Ok(BoundReport {
        k,
        d: map.dim(),
        horizon,
        gamma: gamma.gamma,
        gamma_method: gamma.method,
        caveat,
        pre_period: run.chain.pre_period,
        period: run.chain.period,
        conflicts: run.table.conflicts().len(),
        conflict_free: run.table.is_conflict_free(),
        pass: violations.is_empty(),
        actual,
        bound,
        violations,
        worst_ratio,
        worst_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{estimate_lipschitz, Builtin};

    #[test]
    fn bound_examples() {
        assert_eq!(theorem1_bound(0, 3.7, 1, 4), 0.25);
        assert_eq!(theorem1_bound(3, 2.0, 1, 1), 29.0);
        assert!((theorem1_bound_closed(3, 2.0, 1, 1).unwrap() - 29.0).abs() < 1e-12);
        assert!((theorem1_bound(5, 1.0, 4, 10) - 2.2).abs() < 1e-15);
        assert_eq!(theorem1_bound_closed(5, 1.0, 4, 10), None);
    }

    #[test]
    fn verify_contracting_ar() {
        let m = MapDefinition::ar(vec![0.5]).unwrap();
        let g = estimate_lipschitz(&m, GammaMethod::Analytic, 0, 0).unwrap();
        let r = verify_theorem1(&m, &Point::new(vec![0.8]).unwrap(), 8, 50, &g).unwrap();
        assert!(r.pass);
        assert!(r.caveat.is_none());
        assert_eq!(r.actual.len(), 51);
    }

    #[test]
    fn verify_rotation_on_even_grid_is_exact() {
        let m = MapDefinition::ar(vec![0.0, -1.0]).unwrap();
        let g = estimate_lipschitz(&m, GammaMethod::Analytic, 0, 0).unwrap();
        let r = verify_theorem1(&m, &Point::new(vec![1.0, 0.0]).unwrap(), 2, 40, &g).unwrap();
        assert!(r.pass && r.conflict_free);
        assert!(r.actual.iter().all(|&e| e == 0.0));
        // At K = 1 the zero coordinates tie upward and merge states; the
        // bound still holds.
        let r = verify_theorem1(&m, &Point::new(vec![1.0, 0.0]).unwrap(), 1, 40, &g).unwrap();
        assert!(r.pass);
        assert!(!r.conflict_free);
    }

    #[test]
    fn verify_identity() {
        let m = MapDefinition::builtin(Builtin::Identity, 2).unwrap();
        let g = estimate_lipschitz(&m, GammaMethod::Sampled, 200, 1).unwrap();
        let y0 = Point::new(vec![0.3, -0.7]).unwrap();
        let r = verify_theorem1(&m, &y0, 5, 30, &g).unwrap();
        assert!(r.pass);
        assert!(r.caveat.is_some());
        assert_eq!((r.pre_period, r.period), (0, 1));
        let q = GridSpec::new(5, 2).unwrap().error_bound();
        assert!(r.actual.iter().all(|&e| e <= q));
    }
}
