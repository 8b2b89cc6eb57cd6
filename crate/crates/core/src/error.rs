use thiserror::Error;

/// Errors raised by state construction, correlation computations and the
/// statistical witness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("party {party}: Bloch vector has norm {norm}, expected 1")]
    NonUnitVector { party: usize, norm: f64 },

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("amplitude vector has length {found}, local dimensions require {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {0})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    TraceNotOne(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0})")]
    NotPositive(f64),

    #[error("party {party}: matrix is not unitary (max deviation {deviation})")]
    NonUnitary { party: usize, deviation: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("expected {expected} parties, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("operation requires qubits; party {party} has dimension {dim}")]
    NotQubits { party: usize, dim: usize },

    #[error("correlation entry {index} has imaginary residue {residue}")]
    ImaginaryResidue { index: String, residue: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("invalid confidence level {0}, must lie in (0, 1)")]
    InvalidConfidence(f64),

    #[error("unsupported size: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
