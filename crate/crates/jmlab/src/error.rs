use thiserror::Error;

/// Errors produced by validation and construction across the crate.
///
/// Validity *reports* (POVM completeness, process unitarity, ...) are not
/// errors: inspecting invalid data is a supported operation and returns a
/// report object instead. Errors are reserved for preconditions that make an
/// operation meaningless (dimension mismatches, non-Hermitian inputs where
/// Hermiticity is required, zero-probability conditioning, ...).
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("operator is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("state vector is not normalized (norm {norm})")]
    InvalidStateNorm { norm: f64 },

    #[error("invalid density matrix: {reason}")]
    InvalidDensity { reason: String },

    #[error("eigenvalue {value:.3e} below the positive-semidefinite floor")]
    NegativeEigenvalue { value: f64 },

    #[error("variance {value:.3e} below the negative round-off floor")]
    NegativeVariance { value: f64 },

    #[error("operator is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("operators do not commute (defect {defect:.3e})")]
    CommutationDefect { defect: f64 },

    #[error("independent computation routes disagree in {context} (defect {defect:.3e})")]
    RouteDisagreement { defect: f64, context: &'static str },

    #[error("outcome ({x}, {y}) is not on the grid")]
    OutcomeNotOnGrid { x: f64, y: f64 },

    #[error("outcome ({x}, {y}) has probability {p:.3e}; conditional state undefined")]
    ZeroProbabilityOutcome { x: f64, y: f64, p: f64 },

    #[error("outcome grid must be nonempty")]
    EmptyGrid,

    #[error("{axis} outcome values must be finite and strictly increasing")]
    GridNotIncreasing { axis: &'static str },

    #[error("invalid POVM: {reason}")]
    InvalidPovm { reason: String },

    #[error("rank defect while orthonormalizing in {context}")]
    RankDefect { context: &'static str },

    #[error("eigensolver failed in {context}")]
    SpectralFailure { context: &'static str },

    #[error("simultaneous diagonalization failed (residual {defect:.3e})")]
    SimultaneousDiagonalization { defect: f64 },

    #[error("state support violates the low-index precondition: {reason}")]
    StateSupport { reason: String },

    #[error("objective evaluated to a non-finite value")]
    NonFiniteObjective,

    #[error("candidate violated the {relation} relation (slack {slack:.3e}); this indicates an implementation bug, not a counterexample")]
    RelationViolation { relation: &'static str, slack: f64 },

    #[error("scenario has no measurement model attached")]
    MissingModel,

    #[error("unknown gallery model `{name}`")]
    UnknownGalleryModel { name: String },
}

pub type Result<T> = std::result::Result<T, Error>;
