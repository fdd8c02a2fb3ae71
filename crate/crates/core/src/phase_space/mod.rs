//! Discretized classical phase space in the operator formulation.
//!
//! Classical observables and mixtures are functions of the commuting
//! operators `q̂ ⊗ Î` and `Î ⊗ p̂`. On a [`PhaseSpaceGrid`] such an operator
//! is stored through its diagonal kernel ([`ClassicalKernel`]); sharp states
//! are kept symbolically as [`PointState`]s, and the off-diagonal dyads
//! `|q_i⟩⟨q_j|` that are not functions of `q̂, p̂` as [`CrossDyad`]s.

mod grid;
mod kernel;
mod points;

pub use grid::{PhaseSpaceGrid, MIN_CELLS};
pub use kernel::{
    classical_mean, liouville_rhs, partial_p, partial_q, poisson_bracket, smooth_delta, ClassicalKernel, Gradient,
    KernelKind, BOUNDARY_MASS_LIMIT, GUARD_FRAME_CELLS,
};
pub use points::{
    operator_derivative, Axis, ClassicalEntry, CrossDyad, OperatorDerivative, PhasePoint, PointState,
    COINCIDENCE_TOL,
};
