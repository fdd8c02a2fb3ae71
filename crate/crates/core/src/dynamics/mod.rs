mod candidates;
mod evolve;
mod generator;
mod model;
mod phase;
mod polynomial;
mod report;
mod residual;
mod trajectory;

pub use candidates::{build_candidate, build_candidate_with, Candidate, CandidateOptions, PrefactorConvention};
pub use evolve::{
    cfl_limit, evolve_grid, evolve_grid_observed, evolve_points, GridRunOptions, GridRunStats, BLOWUP_FACTOR, HERMITICITY_TOL,
    MASS_DRIFT_PER_STEP,
};
pub use generator::{hybrid_generator, point_rates, GridGenerator, GridTerms, HybridDerivative, TermRates};
pub use model::MeasurementModel;
pub use phase::{phase_ode, CoherencePhase};
pub use polynomial::{monomial_order, Polynomial, MAX_DEGREE};
pub use report::{decoherence_report, DiagnosticsRow};
pub use residual::{
    branch_points, earliest_separation, residual_norm, residual_norm_with, BlockResidual, ResidualOptions, ResidualReport, DEFAULT_FD_STEP,
    FD_GUARD_FLOOR, FD_GUARD_RELATIVE,
};
pub use trajectory::{hamilton_trajectory, step_count, BranchLabel, BranchTrajectory, TrajectorySample};
