use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("grid mismatch")]
    GridMismatch,
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("singular matrix (|det| = {0:e})")]
    Singular(f64),
    #[error("lattice not commensurate with grid: {0}")]
    OffGrid(String),
    #[error("not a stable sampling set: {0}")]
    NotStableSampling(String),
    #[error("not a frame on working band: A = {0:e}")]
    NotAFrame(f64),
    #[error("no good F-support overlap on working band: {} uncovered bins, first {:?}", .0.len(), .0.first())]
    CoverGap(Vec<Vec<i64>>),
    #[error("F not contained in M[-1/2,1/2]^d: worst bin {bin:?} at coordinate {value}")]
    NotContained { bin: Vec<i64>, value: f64 },
    #[error("sub-critical dilation s = {s} on axis {axis}")]
    SubCritical { axis: usize, s: f64 },
    #[error("lattice is not sign-blind for F: {0}")]
    NotSignBlind(String),
    #[error("empty frequency support")]
    EmptySupport,
    #[error("insufficient grid resolution: {0}")]
    Resolution(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("oracle infeasible: {0} nonzero samples (limit 22)")]
    OracleInfeasible(usize),
    #[error("inconsistent magnitudes: best residual {0:e}")]
    InconsistentMagnitudes(f64),
    #[error("recovery failed for band {label}: best residual {best:e}")]
    RecoveryFailed { label: String, best: f64 },
    #[error("no informative overlap between {0} and {1}")]
    NoInformativeOverlap(String, String),
    #[error("sign propagation incomplete: components {0:?}")]
    PropagationIncomplete(Vec<Vec<String>>),
    #[error("sign conflict on accepted edge {0} - {1}")]
    SignConflict(String, String),
    #[error("re-measured magnitudes differ from the input: relative {0:e}")]
    Verification(f64),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Innermost error, looking through stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for errors that mean "the inverse problem could not be solved",
    /// as opposed to malformed input.
    pub fn is_recovery_failure(&self) -> bool {
        matches!(
            self.root(),
            Error::RecoveryFailed { .. }
                | Error::InconsistentMagnitudes(_)
                | Error::NoInformativeOverlap(..)
                | Error::PropagationIncomplete(_)
                | Error::SignConflict(..)
                | Error::Verification(_)
        )
    }
}
