//! Application problems, their independent oracles, baselines, complete runs
//! and trace diagnostics.

pub mod baselines;
pub mod problems;
pub mod runners;
pub mod trace;

pub use baselines::{dkm_baseline_step, dkm_stepsize, km_centralized, AlphaSchedule, KmTrajectory};
pub use problems::{
    estimate_monotonicity, make_block_game, make_sum_quadratic, nash_oracle, ne_residual,
    optimizer_oracle_sum_quadratic, BlockQuadraticGame, MonotonicityEstimate, NashOracle,
    QuadraticOptimum, QuadraticScheme, SumQuadraticProblem,
};
pub use runners::{run_dkm, run_dop, run_dot, run_full_info, run_km, RunOptions, RunOutcome};
pub use trace::{
    fit_linear_rate, verify_residual_recursion, write_trace_csv, RateFit, RecursionCheck,
    TraceField, TraceRecord,
};
