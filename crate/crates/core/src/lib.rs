//! Finite-state periodic approximation of orbits of Lipschitz self-maps of
//! `[-1, 1]^d`.
//!
//! An orbit `y(t + 1) = Φ(y(t))` is snapped to the uniform grid with nodes
//! `2k/K - 1`, the visited grid states are linked by their first observed
//! successor, and iterating that table from the initial state gives an
//! eventually periodic chain `y*_K` whose distance to the orbit is bounded
//! by `(2 Σ_{s≤t} γ^s + 1) √d / K`. The periodic tail is a finite sum of
//! sinusoids. Ladders of resolutions give diagnostics for convergence of the
//! chains to an almost periodic limit, and for autoregressive recursions the
//! [`armodel`] module computes that limit in closed form.
//!
//! ```
//! use aporbit::{run_pipeline, GridSpec, MapDefinition, Point};
//!
//! let rotation = MapDefinition::ar(vec![0.0, -1.0]).unwrap();
//! let grid = GridSpec::new(2, 2).unwrap();
//! let y0 = Point::new(vec![1.0, 0.0]).unwrap();
//! let run = run_pipeline(&rotation, &y0, &grid, 40, 400).unwrap();
//! assert_eq!((run.chain.pre_period, run.chain.period), (0, 4));
//! ```

pub mod analysis;
pub mod armodel;
pub mod cli;
pub mod error;
pub mod grid;
pub mod maps;
pub mod orbit;
pub mod point;
pub mod report;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{GridSpec, GridState};
pub use maps::{validate_range, Builtin, MapDefinition, MapFile};
pub use orbit::{
    build_chain, build_transition_table, default_horizon, detect_cycle, discretize_orbit,
    generate_orbit, run_pipeline, ChainResult, PipelineRun, TransitionTable,
};
pub use point::{OrbitSeries, Point};
pub use spectral::{fit_trig, TrigForm};
