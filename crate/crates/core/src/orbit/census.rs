//! Period statistics of approximating chains over random ensembles.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_chain, build_transition_table, default_horizon, run_pipeline};
use crate::armodel::coefficients_from_roots;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, GridState};
use crate::maps::MapDefinition;
use crate::point::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensusGenerator {
    /// Uniformly random delay-coordinate map on the grid states.
    RandomMap,
    /// Random stable AR map, run through the full quantization pipeline.
    RandomAr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CensusSample {
    pub sample_id: usize,
    #[serde(rename = "T")]
    pub pre_period: usize,
    #[serde(rename = "L")]
    pub period: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusReport {
    #[serde(rename = "K")]
    pub k: u32,
    pub d: usize,
    pub ensemble: usize,
    pub seed: u64,
    pub generator: CensusGenerator,
    /// `(K + 1)^d`, the largest possible period.
    pub state_count: Option<u64>,
    pub samples: Vec<CensusSample>,
    pub histogram: BTreeMap<usize, usize>,
    pub mean_period: f64,
    pub median_period: f64,
    pub max_period: usize,
}

/// Draws `ensemble` independent samples and collects their `(T, L)`.
///
/// Sample `i` uses its own ChaCha stream, so the report does not depend on
/// how samples are scheduled across threads.
pub fn period_census(
    d: usize,
    k: u32,
    ensemble: usize,
    seed: u64,
    generator: CensusGenerator,
) -> Result<CensusReport> {
    if ensemble == 0 {
        return Err(Error::InvalidInput(
            "ensemble size must be at least 1".into(),
        ));
    }
    let grid = GridSpec::new(k, d)?;
    let samples = (0..ensemble)
        .into_par_iter()
        .map(|id| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id as u64);
            let (pre_period, period) = match generator {
                CensusGenerator::RandomMap => random_map_sample(&grid, &mut rng)?,
                CensusGenerator::RandomAr => random_ar_sample(&grid, &mut rng)?,
            };
            Ok(CensusSample {
                sample_id: id,
                pre_period,
                period,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut histogram = BTreeMap::new();
    for s in &samples {
        *histogram.entry(s.period).or_insert(0) += 1;
    }
    let mut periods: Vec<usize> = samples.iter().map(|s| s.period).collect();
    periods.sort_unstable();
    let n = periods.len();
    let median_period = if n % 2 == 1 {
        periods[n / 2] as f64
    } else {
        (periods[n / 2 - 1] + periods[n / 2]) as f64 / 2.0
    };
    Ok(CensusReport {
        k,
        d,
        ensemble,
        seed,
        generator,
        state_count: grid.state_count(),
        mean_period: periods.iter().sum::<usize>() as f64 / n as f64,
        median_period,
        max_period: *periods.last().expect("ensemble is nonempty"),
        histogram,
        samples,
    })
}

/// Iterates a map on grid states from `initial` until the shadow revisits a
/// state, then runs table and chain construction on that shadow.
pub fn run_grid_map<F>(grid: &GridSpec, initial: GridState, mut next: F) -> Result<(usize, usize)>
where
    F: FnMut(&GridState) -> GridState,
{
    let mut shadow = vec![initial];
    let mut seen: HashMap<GridState, usize> = HashMap::new();
    seen.insert(shadow[0].clone(), 0);
    loop {
        let s = next(shadow.last().expect("shadow is nonempty"));
        let repeat = seen.contains_key(&s);
        seen.entry(s.clone()).or_insert(shadow.len());
        shadow.push(s);
        if repeat {
            break;
        }
    }
    let table = build_transition_table(&shadow);
    let chain = build_chain(&table, &shadow[0], shadow.len() - 1, grid)?;
    Ok((chain.pre_period, chain.period))
}

fn random_map_sample(grid: &GridSpec, rng: &mut ChaCha8Rng) -> Result<(usize, usize)> {
    let k = grid.resolution();
    let initial = GridState::new((0..grid.dim()).map(|_| rng.gen_range(0..=k)).collect());
    // The successor's first coordinate is drawn the first time a state is
    // left; the remaining coordinates follow the shift.
    let mut heads: HashMap<GridState, u32> = HashMap::new();
    run_grid_map(grid, initial, |s| {
        let head = *heads
            .entry(s.clone())
            .or_insert_with(|| rng.gen_range(0..=k));
        let mut indices = Vec::with_capacity(s.dim());
        indices.push(head);
        indices.extend_from_slice(&s.indices()[..s.dim() - 1]);
        GridState::new(indices)
    })
}

/// Largest root modulus used for random stable AR maps.
const MAX_AR_ROOT_MODULUS: f64 = 0.98;

fn random_ar_sample(grid: &GridSpec, rng: &mut ChaCha8Rng) -> Result<(usize, usize)> {
    let d = grid.dim();
    let mut roots: Vec<Complex64> = Vec::with_capacity(d);
    while roots.len() < d {
        let r = MAX_AR_ROOT_MODULUS * rng.gen::<f64>().sqrt();
        if d - roots.len() >= 2 && rng.gen_bool(0.5) {
            let theta = rng.gen_range(0.0..std::f64::consts::PI);
            let mu = Complex64::from_polar(r, theta);
            roots.push(mu);
            roots.push(mu.conj());
        } else {
            roots.push(Complex64::new(if rng.gen_bool(0.5) { r } else { -r }, 0.0));
        }
    }
    let coeffs = coefficients_from_roots(&roots);
    let map = MapDefinition::ar(coeffs.clone())?;

    // The shadow closes within (K + 1)^d + 1 samples, well inside this.
    let horizon = default_horizon(grid);
    let mut y0: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    // A stable recursion may still overshoot transiently; scale the initial
    // data so the whole simulated stretch stays in the box.
    let peak = ar_peak(&coeffs, &y0, horizon);
    if peak > 1.0 {
        let scale = 1.0 / (peak * (1.0 + 1e-9));
        y0.iter_mut().for_each(|v| *v *= scale);
    }
    let run = run_pipeline(&map, &Point::new(y0)?, grid, horizon, horizon)?;
    Ok((run.chain.pre_period, run.chain.period))
}

fn ar_peak(coeffs: &[f64], y0: &[f64], steps: usize) -> f64 {
    let mut window = y0.to_vec();
    let mut peak = window.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for _ in 0..steps {
        let head: f64 = coeffs.iter().zip(&window).map(|(p, z)| p * z).sum();
        window.rotate_right(1);
        window[0] = head;
        peak = peak.max(head.abs());
        if window.iter().all(|v| v.abs() < 1e-300) {
            break;
        }
    }
    peak
}
