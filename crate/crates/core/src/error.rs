use thiserror::Error;

/// Every failure the pipelines can report.
///
/// `ParityObstruction` is the one variant that is not a numerical failure: it
/// is returned when the requested splitting or equivalence is forbidden by the
/// Z2 invariant itself.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("inverse square root factor is singular (smallest eigenvalue {min_eigenvalue:e})")]
    SingularFactor { min_eigenvalue: f64 },

    #[error("no branch cut with spectral margin >= {required:e} (best {best:e})")]
    BranchCutFailure { required: f64, best: f64 },

    #[error(
        "loop is under-resolved: phase increment {increment:.4} exceeds pi/2 at sample {index}"
    )]
    RefinementNeeded { index: usize, increment: f64 },

    #[error("loop is not contractible: determinant winding {winding}")]
    ObstructedLoop { winding: i64 },

    #[error("loop contraction failed: {0}")]
    ContractionFailure(String),

    #[error("quaternionic subspace has odd dimension {0}")]
    OddQuaternionicDimension(usize),

    #[error("subspace is not invariant under time reversal (residual {residual:e})")]
    NotInvariant { residual: f64 },

    #[error("spectral gap closes near k = ({k1:.6}, {k2:.6}): gap {gap:e}")]
    GapClosed { k1: f64, k2: f64, gap: f64 },

    #[error("generation failed: {0}")]
    GenerationFailed(String),

    #[error("model self-check failed: {0}")]
    ModelConstructionError(String),

    #[error("projectors too far apart for the Kato-Nagy intertwiner (distance {distance:.12})")]
    TooFar { distance: f64 },

    #[error("unresolved after refinement: {0}")]
    Unresolved(String),

    #[error("time-reversal constraint broken: {what} residual {residual:e}")]
    SymmetryBroken { what: String, residual: f64 },

    #[error("delta integrality violated: residual {residual:e}")]
    IntegralityViolation { residual: f64 },

    #[error("parity obstruction: delta = {delta:+} is incompatible with Chern parity of {h}")]
    ParityObstruction { delta: i8, h: i64 },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for outcomes that are topological statements rather than failures.
    pub fn is_obstruction(&self) -> bool {
        matches!(self, Error::ParityObstruction { .. })
    }

    pub fn is_unresolved(&self) -> bool {
        matches!(
            self,
            Error::Unresolved(_)
                | Error::RefinementNeeded { .. }
                | Error::IntegralityViolation { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
