//! Block-structured hybrid density operators on `H_qm ⊗ H^q_cm ⊗ H^p_cm`,
//! their finite-basis assembly and spectral diagnostics.

mod assembly;
mod snapshot;
mod state;

pub use assembly::{
    assemble, idempotency_residual, linear_entropy, min_eigenvalue, purity, quantum_marginal, von_neumann_entropy,
    AssembledOperator, QuantumMarginal, VonNeumann, ASSEMBLY_CAP,
};
pub use snapshot::{fmt_real, Snapshot};
pub use state::{hybrid_trace, HybridState, Representation};
