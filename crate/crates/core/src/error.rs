use thiserror::Error;

/// Every failure the library can report. Each variant carries a stable
/// upper-case name (see [`SolverError::code`]) used by the CLI and in traces.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolverError {
    #[error("nonlinearity contains the excluded quadratic u*u_xx")]
    PresenceOfUuxx,
    #[error("monomial {alpha:?} has total degree {degree} (constant and linear terms are not allowed)")]
    Degenerate { alpha: [u32; 3], degree: u32 },
    #[error("nonlinearity has no monomials")]
    Empty,
    #[error("monomial {alpha:?} matches no regularity threshold")]
    Unclassified { alpha: [u32; 3] },
    #[error("gamma = min(1, s - lambda - 1/2) is not positive (s = {s}, lambda = {lambda})")]
    NonpositiveGamma { s: f64, lambda: f64 },
    #[error("sigma = {sigma} must exceed 7/2")]
    SigmaTooSmall { sigma: f64 },
    #[error("regularity s = {s} does not exceed the threshold s0 = {s0}")]
    RegularityTooLow { s: f64, s0: f64 },
    #[error("band {j} is not resolved on this grid (j_max = {j_max})")]
    UnresolvedBand { j: u32, j_max: u32 },
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("derivative order {0} is not supported")]
    UnsupportedOrder(u32),
    #[error("no admissible rescaling found up to k_max = {k_max} (last high-frequency norm {high_norm:.3e}, admission passed: {admitted})")]
    KSearchExhausted { k_max: u32, high_norm: f64, admitted: bool },
    #[error("band {band} correction series stalled at relative residual {residual:.3e}")]
    NoContraction { band: i64, residual: f64 },
    #[error("admission failed: |d_x a| = {dxa:.3e}, operator surrogate = {para:.3e}, threshold = {threshold:.3e}")]
    AdmissionFailed { dxa: f64, para: f64, threshold: f64 },
    #[error("outer iteration diverged at step {iteration} (ratio {ratio:.3e})")]
    OuterDivergence { iteration: usize, ratio: f64 },
    #[error("unknown probe tag '{0}'")]
    UnknownTag(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl SolverError {
    pub fn code(&self) -> &'static str {
        match self {
            SolverError::PresenceOfUuxx => "PRESENCE_OF_UUXX",
            SolverError::Degenerate { .. } => "DEGENERATE",
            SolverError::Empty => "EMPTY",
            SolverError::Unclassified { .. } => "UNCLASSIFIED",
            SolverError::NonpositiveGamma { .. } => "NONPOSITIVE_GAMMA",
            SolverError::SigmaTooSmall { .. } => "SIGMA_TOO_SMALL",
            SolverError::RegularityTooLow { .. } => "REGULARITY_TOO_LOW",
            SolverError::UnresolvedBand { .. } => "UNRESOLVED_BAND",
            SolverError::GridMismatch => "GRID_MISMATCH",
            SolverError::UnsupportedOrder(_) => "UNSUPPORTED_ORDER",
            SolverError::KSearchExhausted { .. } => "K_SEARCH_EXHAUSTED",
            SolverError::NoContraction { .. } => "NO_CONTRACTION",
            SolverError::AdmissionFailed { .. } => "ADMISSION_FAILED",
            SolverError::OuterDivergence { .. } => "OUTER_DIVERGENCE",
            SolverError::UnknownTag(_) => "UNKNOWN_TAG",
            SolverError::InvalidInput(_) => "INVALID_INPUT",
        }
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;
