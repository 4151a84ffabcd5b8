use thiserror::Error;

use crate::decompose::DecompositionReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("pauli string has {found} letters but the system has {expected} spins")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid pauli string {0:?}")]
    InvalidPauli(String),

    #[error("generator is the identity on every spin")]
    IdentityGenerator,

    #[error("generator coefficient must be +1 or -1, got {0}")]
    GeneratorCoefficient(f64),

    #[error("cannot compose an empty operator list")]
    EmptyComposition,

    #[error("reference operator is the zero matrix")]
    ZeroOperator,

    #[error("operator is not hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("spin {spin} out of range for a {n}-spin system")]
    SpinOutOfRange { spin: usize, n: usize },

    #[error("spins must be distinct, got {0:?}")]
    DuplicateSpins(Vec<usize>),

    #[error("missing field `{0}`")]
    MissingField(&'static str),

    #[error("invalid molecule document: {0}")]
    InvalidDocument(String),

    #[error("asymmetric coupling: J_{k}{l} = {first} but J_{l}{k} = {second}")]
    AsymmetricCoupling {
        k: usize,
        l: usize,
        first: f64,
        second: f64,
    },

    #[error("coupling J_{k}{l} declared more than once")]
    DuplicateCoupling { k: usize, l: usize },

    #[error("coupling index out of range: ({k}, {l}) for {n} spins")]
    CouplingOutOfRange { k: usize, l: usize, n: usize },

    #[error("unknown molecule preset {0:?}")]
    UnknownPreset(String),

    #[error("non-unitary sequence; simulate on a state instead")]
    NonUnitary,

    #[error("line {line}: {message}")]
    SequenceParse { line: usize, message: String },

    #[error("invalid angle expression {0:?}")]
    InvalidAngle(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("a chain needs at least two spins, got {0}")]
    ChainTooShort(usize),

    #[error("coupling J_{k}{l} is zero; the block cannot be realized")]
    ZeroCoupling { k: usize, l: usize },

    #[error("negative core duration {tau:e} s; choose variant A or negate J_eff")]
    NegativeCoreDuration { tau: f64 },

    #[error("negative duration {tau:e} s for coupling block ({k}, {l})")]
    NegativeDuration { k: usize, l: usize, tau: f64 },

    #[error("insufficient orthogonal rows: {needed} needed, {available} available at {segments} segments")]
    InsufficientRows {
        needed: usize,
        available: usize,
        segments: usize,
    },

    #[error("segment count {0} must be a power of two >= 2")]
    InvalidSegments(usize),

    #[error("verification failed: deviation {:e} exceeds tolerance", .0.deviation)]
    VerificationFailed(Box<DecompositionReport>),

    #[error("fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("abscissa values are all equal")]
    DegenerateAbscissa,

    #[error("amplitude unidentifiable")]
    AmplitudeUnidentifiable,

    #[error("integration window [{low}, {high}] Hz lies outside the spectrum axis")]
    WindowOutOfRange { low: f64, high: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable code used in diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } | Error::NotPowerOfTwo(_) => "dimension",
            Error::LengthMismatch { .. } | Error::InvalidPauli(_) => "pauli",
            Error::IdentityGenerator | Error::GeneratorCoefficient(_) => "generator",
            Error::EmptyComposition => "empty-composition",
            Error::ZeroOperator => "zero-operator",
            Error::NotHermitian(_) => "not-hermitian",
            Error::SpinOutOfRange { .. } | Error::DuplicateSpins(_) => "spin-index",
            Error::MissingField(_) => "missing-field",
            Error::InvalidDocument(_) => "invalid-document",
            Error::AsymmetricCoupling { .. } => "asymmetric-coupling",
            Error::DuplicateCoupling { .. } => "duplicate-coupling",
            Error::CouplingOutOfRange { .. } => "coupling-range",
            Error::UnknownPreset(_) => "unknown-preset",
            Error::NonUnitary => "non-unitary",
            Error::SequenceParse { .. } => "sequence-parse",
            Error::InvalidAngle(_) => "invalid-angle",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::ChainTooShort(_) => "chain-too-short",
            Error::ZeroCoupling { .. } => "zero-coupling",
            Error::NegativeCoreDuration { .. } | Error::NegativeDuration { .. } => {
                "negative-duration"
            }
            Error::InsufficientRows { .. } => "insufficient-rows",
            Error::InvalidSegments(_) => "invalid-segments",
            Error::VerificationFailed(_) => "verification-failed",
            Error::TooFewPoints(_) | Error::DegenerateAbscissa => "degenerate-data",
            Error::AmplitudeUnidentifiable => "amplitude-unidentifiable",
            Error::WindowOutOfRange { .. } => "window-range",
            Error::Io(_) => "io",
        }
    }
}
