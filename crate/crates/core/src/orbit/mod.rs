//! Orbits, their quantized shadows, the transition table over visited grid
//! states and the eventually periodic chain it generates.

mod census;
mod chain;
mod table;

use std::collections::HashSet;

use serde::Serialize;

pub use census::{period_census, run_grid_map, CensusGenerator, CensusReport, CensusSample};
pub use chain::{build_chain, detect_cycle, ChainResult};
pub use table::{Conflict, TransitionTable};

use crate::error::Result;
use crate::grid::{GridSpec, GridState};
use crate::maps::{image_point, MapDefinition};
use crate::point::{check_dim, OrbitSeries, Point};

/// Largest default horizon.
pub const MAX_DEFAULT_HORIZON: usize = 10_000_000;

/// `10 (K + 1)^d`, capped at [`MAX_DEFAULT_HORIZON`].
pub fn default_horizon(grid: &GridSpec) -> usize {
    grid.state_count()
        .and_then(|n| n.checked_mul(10))
        .map_or(MAX_DEFAULT_HORIZON, |n| {
            n.min(MAX_DEFAULT_HORIZON as u64) as usize
        })
}

/// `y(0) = y0`, `y(t + 1) = Φ(y(t))` for `t < horizon`.
pub fn generate_orbit(map: &MapDefinition, y0: &Point, horizon: usize) -> Result<OrbitSeries> {
    let mut orbit = OrbitSeries::from_samples(map.dim(), vec![y0.clone()])?;
    let mut current = y0.clone();
    for t in 1..=horizon {
        current = step(map, &current, t)?;
        orbit.push(current.clone());
    }
    Ok(orbit)
}

fn step(map: &MapDefinition, p: &Point, t: usize) -> Result<Point> {
    image_point(map.evaluate_raw(p.coords())?, Some(t))
}

/// Quantizes every sample of an orbit.
pub fn discretize_orbit(samples: &[Point], grid: &GridSpec) -> Result<Vec<GridState>> {
    samples.iter().map(|p| grid.quantize(p)).collect()
}

pub fn build_transition_table(shadow: &[GridState]) -> TransitionTable {
    TransitionTable::from_shadow(shadow)
}

/// All stages of one approximation run at a fixed resolution.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub grid: GridSpec,
    pub horizon: usize,
    /// `y(0), ...`; at least `horizon + 1` samples, more when the shadow
    /// had to be extended to close.
    pub orbit: OrbitSeries,
    pub shadow: Vec<GridState>,
    pub table: TransitionTable,
    pub chain: ChainResult,
    /// Whether the last shadow sample revisits an earlier state, so that the
    /// table has no dangling pattern.
    pub shadow_closed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainSummary {
    #[serde(rename = "K")]
    pub k: u32,
    pub d: usize,
    #[serde(rename = "T")]
    pub pre_period: usize,
    #[serde(rename = "L")]
    pub period: usize,
    #[serde(rename = "N")]
    pub pattern_count: usize,
    pub conflicts: usize,
    pub horizon: usize,
    pub shadow_length: usize,
    pub shadow_closed: bool,
}

impl PipelineRun {
    pub fn summary(&self) -> ChainSummary {
        ChainSummary {
            k: self.grid.resolution(),
            d: self.grid.dim(),
            pre_period: self.chain.pre_period,
            period: self.chain.period,
            pattern_count: self.table.pattern_count(),
            conflicts: self.table.conflicts().len(),
            horizon: self.horizon,
            shadow_length: self.shadow.len(),
            shadow_closed: self.shadow_closed,
        }
    }

    pub fn is_conflict_free(&self) -> bool {
        self.table.is_conflict_free()
    }
}

/// Runs orbit → shadow → table → chain.
///
/// The orbit is generated to `horizon`; if its shadow has not revisited a
/// state by then, it is extended until it does or until `closure_limit`
/// samples past zero have been taken.
pub fn run_pipeline(
    map: &MapDefinition,
    y0: &Point,
    grid: &GridSpec,
    horizon: usize,
    closure_limit: usize,
) -> Result<PipelineRun> {
    check_dim(map.dim(), y0.dim())?;
    check_dim(grid.dim(), y0.dim())?;
    let mut orbit = OrbitSeries::from_samples(map.dim(), vec![y0.clone()])?;
    let mut shadow = vec![grid.quantize(y0)?];
    let mut seen: HashSet<GridState> = HashSet::new();
    seen.insert(shadow[0].clone());
    let mut closed = false;
    let mut current = y0.clone();
    let mut t = 0;
    loop {
        if t >= horizon && (closed || t >= closure_limit) {
            break;
        }
        t += 1;
        current = step(map, &current, t)?;
        let q = grid.quantize(&current)?;
        closed = !seen.insert(q.clone());
        orbit.push(current.clone());
        shadow.push(q);
    }
    let table = build_transition_table(&shadow);
    let chain = build_chain(&table, &shadow[0], horizon, grid)?;
    Ok(PipelineRun {
        grid: *grid,
        horizon,
        orbit,
        shadow,
        table,
        chain,
        shadow_closed: closed,
    })
}
