use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("point ({q}, {p}) lies outside the domain ({what})")]
    OutOfDomain { q: f64, p: f64, what: String },
    #[error("width must be positive, got sigma_q={sigma_q}, sigma_p={sigma_p}")]
    NonPositiveWidth { sigma_q: f64, sigma_p: f64 },
    #[error("boundary mass fraction {fraction:.3e} exceeds {limit:.1e}")]
    BoundaryMass { fraction: f64, limit: f64 },
    #[error("kernels live on different grids")]
    GridMismatch,
    #[error("state mass {0:.3e} is too small to normalize")]
    ZeroMass(f64),
    #[error("operator trace {0:.3e} is too small to normalize")]
    ZeroTrace(f64),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("time step {dt} violates the transport limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("numerical blowup: {0}")]
    NumericalBlowup(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("branch points share bins at t={t}; {suggestion}")]
    SeparationFailure { t: f64, suggestion: String },
    #[error("finite-difference step not converged: r(dt)={coarse:.3e}, r(dt/2)={fine:.3e}")]
    FdGuard { coarse: f64, fine: f64 },
    #[error("assembled dimension {dim} exceeds the dense eigensolver cap {cap}")]
    AssemblyTooLarge { dim: usize, cap: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("snapshot parse error at line {line}: {msg}")]
    Snapshot { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
    #[error("rejected by {guard}: {reason}")]
    Rejected { guard: &'static str, reason: String },
}

impl Error {
    /// Short machine-readable name of the violated guard.
    pub fn guard_name(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "grid",
            Error::OutOfDomain { .. } => "out-of-domain",
            Error::NonPositiveWidth { .. } => "non-positive-width",
            Error::BoundaryMass { .. } => "boundary-mass",
            Error::GridMismatch => "grid-mismatch",
            Error::ZeroMass(_) => "zero-mass",
            Error::ZeroTrace(_) => "zero-trace",
            Error::DimMismatch(_) => "dim-mismatch",
            Error::CflViolation { .. } => "cfl",
            Error::NumericalBlowup(_) => "numerical-blowup",
            Error::InvariantViolation(_) => "invariant",
            Error::SeparationFailure { .. } => "separation",
            Error::FdGuard { .. } => "fd-guard",
            Error::AssemblyTooLarge { .. } => "assembly-cap",
            Error::InvalidModel(_) => "model",
            Error::Config(_) => "config",
            Error::Snapshot { .. } => "snapshot",
            Error::Io(_) => "io",
            Error::Rejected { guard, .. } => guard,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BoundaryMass { .. }
            | Error::NumericalBlowup(_)
            | Error::InvariantViolation(_)
            | Error::FdGuard { .. } => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
