use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid Schmidt spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("message has no Kraus operators")]
    EmptyKraus,

    #[error("invalid message: {0}")]
    InvalidMessage(String),

    #[error("total Kraus rank {total} exceeds d^2 = {bound} (at most d^2 linearly independent states)")]
    RankBound { total: usize, bound: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("retraction failed: projected point is rank deficient (smallest singular value {0:e})")]
    RankDeficient(f64),

    #[error("no transition on path: both endpoints are {0}")]
    NoTransition(&'static str),

    #[error("u family does not exist for x = {0} (1-3x <= 0)")]
    FamilyDoesNotExist(f64),

    #[error("dressing matrix {name} is not unitary (defect {defect:e})")]
    NonUnitaryDressing { name: &'static str, defect: f64 },

    #[error("trace relation violated: {0}")]
    TraceRelation(String),

    #[error("ninth unitary impossible at x = {x}: certificate slack {slack} < 0")]
    CertificateInfeasible { x: f64, slack: f64 },

    #[error("not a paired form: {0}")]
    NotPaired(String),

    #[error("no obstruction: state is maximally entangled (lambda0 = 1/2)")]
    NoObstruction,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
