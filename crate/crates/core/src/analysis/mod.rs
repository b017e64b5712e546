//! Error bounds for single chains and diagnostics across resolution ladders.

mod bound;
mod ladder;

pub use bound::{
    default_gamma, theorem1_bound, theorem1_bound_closed, verify_theorem1, BoundReport, BOUND_SLACK,
};
pub use ladder::{
    chain_gap_sup, check_convergence_condition, condition_term, lcm_periods, reselect_t,
    sup_difference, tail_convergence, ConditionReport, LadderLevel, LadderPlan, TailReport,
    TermTrend, CONDITION_VERDICT, MAX_WINDOW,
};
