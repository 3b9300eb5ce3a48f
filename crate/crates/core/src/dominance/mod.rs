//! Stochastic dominance experiments and reports.

mod collective;
mod empirical;
mod penalty;
mod report;
mod truncated;

pub use collective::{collective_risk_experiment, CollectiveReport, CountLaw, WeightLaw, MAX_POISSON_MEAN, ROW_WINDOW};
pub use empirical::{
    empirical_fsd, one_sided_dominance_test, DominanceTest, EmpiricalFsd, DEFAULT_BOOTSTRAP, MIN_BOOTSTRAP,
};
pub use penalty::{
    default_grid, penalty_experiment, validate_simplex, ConcentratedArm, DEFAULT_GRID_POINTS, DEFAULT_N_MC,
};
pub use report::{
    spaced_grid, wilson_interval, DominanceReport, DominanceRow, Estimate, Summary, Verdict, REPORT_CSV_HEADER,
    Z_99,
};
pub use truncated::{sample_quantile, truncated_penalty_experiment, QuantileEstimate, TruncatedReport, VarComparison};
