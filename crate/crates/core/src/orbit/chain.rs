use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;

use super::table::TransitionTable;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, GridState};

/// Minimal pre-period `T` and period `L` of a finite, eventually periodic
/// window: `seq[t + L] == seq[t]` for every `T ≤ t < len - L`.
///
/// The first repeated value fixes the candidate; this is exact for
/// sequences produced by iterating a function. Other sequences fall back to
/// an exhaustive search. A certificate needs at least one repeated sample,
/// i.e. `T + L < len`.
pub fn detect_cycle<S: Eq + Hash>(seq: &[S]) -> Result<(usize, usize)> {
    let mut first: HashMap<&S, usize> = HashMap::with_capacity(seq.len());
    for (t, s) in seq.iter().enumerate() {
        if let Some(&t0) = first.get(s) {
            if is_periodic_from(seq, t0, t - t0) {
                return Ok((t0, t - t0));
            }
            break;
        }
        first.insert(s, t);
    }
    // Not a functional iteration: search all (T, L) in lexicographic order.
    for pre in 0..seq.len() {
        for period in 1..seq.len() - pre {
            if is_periodic_from(seq, pre, period) {
                return Ok((pre, period));
            }
        }
    }
    Err(Error::NoCycleWithinHorizon { len: seq.len() })
}

fn is_periodic_from<S: Eq>(seq: &[S], pre: usize, period: usize) -> bool {
    pre + period < seq.len() && (pre..seq.len() - period).all(|t| seq[t + period] == seq[t])
}

/// The approximating chain `y*_K` and its eventual cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainResult {
    pub grid: GridSpec,
    pub horizon: usize,
    /// `y*(0), ..., y*(T + L - 1)`; later values repeat the cycle.
    path: Vec<GridState>,
    pub pre_period: usize,
    pub period: usize,
    /// Number of distinct visited patterns `N` in the table.
    pub pattern_count: usize,
    pub conflict_count: usize,
}

impl ChainResult {
    /// `y*(t)` for any `t`, extended by periodicity.
    pub fn state_at(&self, t: usize) -> &GridState {
        if t < self.path.len() {
            &self.path[t]
        } else {
            &self.path[self.pre_period + (t - self.pre_period) % self.period]
        }
    }

    /// Node coordinates of `y*(t)`.
    pub fn decoded_at(&self, t: usize) -> Vec<f64> {
        self.grid
            .decode_coords(self.state_at(t))
            .expect("chain states belong to the grid")
    }

    /// `y*(0), ..., y*(H)`.
    pub fn y_star(&self) -> Vec<GridState> {
        (0..=self.horizon)
            .map(|t| self.state_at(t).clone())
            .collect()
    }

    /// The transient followed by one full cycle.
    pub fn path(&self) -> &[GridState] {
        &self.path
    }

    /// One period `y*(T), ..., y*(T + L - 1)`.
    pub fn cycle(&self) -> &[GridState] {
        &self.path[self.pre_period..]
    }
}

/// Iterates the table from `initial`. The walk continues past the horizon
/// until the first revisit, which always happens within `N + 1` steps.
pub fn build_chain(
    table: &TransitionTable,
    initial: &GridState,
    horizon: usize,
    grid: &GridSpec,
) -> Result<ChainResult> {
    if initial.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: initial.dim(),
        });
    }
    let mut current = table.pattern_id(initial).ok_or_else(|| {
        Error::InvalidInput("initial state was never visited by the shadow".into())
    })?;
    let mut visited_at: Vec<Option<usize>> = vec![None; table.pattern_count()];
    let mut ids: Vec<usize> = Vec::new();
    let (pre_period, period) = loop {
        let t = ids.len();
        if let Some(t0) = visited_at[current] {
            break (t0, t - t0);
        }
        visited_at[current] = Some(t);
        ids.push(current);
        current = table.next_id(current).ok_or(Error::DanglingState { t })?;
    };
    Ok(ChainResult {
        grid: *grid,
        horizon,
        path: ids.into_iter().map(|i| table.pattern(i).clone()).collect(),
        pre_period,
        period,
        pattern_count: table.pattern_count(),
        conflict_count: table.conflicts().len(),
    })
}
