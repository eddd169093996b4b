use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical engines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown algebra `{label}`; known labels: {known}")]
    UnknownAlgebra { label: String, known: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("structure constants fail validation (antisymmetry {antisymmetry:e}, jacobi {jacobi:e})")]
    NotALieAlgebra { antisymmetry: f64, jacobi: f64 },

    #[error("linear map does not preserve brackets (residual {0:e})")]
    NotAHomomorphism(f64),

    #[error("matrices do not realize the algebra (residual {0:e})")]
    NotARealization(f64),

    #[error("numerical blow-up at step {step}")]
    Blowup { step: usize },

    #[error("singular matrix at grid node {node}")]
    Singular { node: usize },

    #[error("({h}, {l}) is not a regular value: {reason}")]
    NotRegular { h: f64, l: f64, reason: &'static str },

    #[error("no first return within {0} time units")]
    NoReturn(f64),

    #[error("loop too coarse: lattice matching defect {defect:.3} at step {step}")]
    LoopTooCoarse { step: usize, defect: f64 },

    #[error("hbar too large: cell matching defect {defect:.3} at loop step {step}")]
    HbarTooLarge { step: usize, defect: f64 },

    #[error("compact-support identities violated, residuals {0:?}")]
    SupportIdentities(Vec<f64>),

    #[error("t = 0 has no localization sum; use the total volume instead")]
    ZeroParameter,

    #[error("direction is not generic: two vertices share the value {0}")]
    NonGeneric(f64),

    #[error("{what} = {value} exceeds the available range {limit}")]
    OutOfRange { what: &'static str, value: f64, limit: f64 },

    #[error("enumeration would produce {count} vectors, cap is {cap}")]
    TooMany { count: u64, cap: u64 },

    #[error("found {found} peaks, {wanted} requested")]
    TooFewPeaks { found: usize, wanted: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
