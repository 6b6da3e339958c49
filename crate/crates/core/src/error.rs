use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("state vector norm {0} differs from 1")]
    NotNormalized(f64),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("Kraus operators are not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("duplicate target qubit {0}")]
    DuplicateTarget(usize),

    #[error("invalid qubit subset: {0}")]
    InvalidSubset(String),

    #[error("eigensolver failed to converge")]
    EigenNonConvergence,

    #[error("parameter vector has length {actual}, ansatz expects {expected}")]
    ParameterCount { expected: usize, actual: usize },

    #[error("parameter index {index} out of range ({len} parameters)")]
    ParameterIndex { index: usize, len: usize },

    #[error("bitstring has {actual} bits, expected {expected}")]
    BitstringLength { expected: usize, actual: usize },

    #[error("invalid bitstring {0:?}")]
    BitstringParse(String),

    #[error("invalid Hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("energy levels {0} and {1} are degenerate among the lowest levels")]
    DegenerateLevels(usize, usize),

    #[error("shot count must be positive")]
    InvalidShots,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schedule interval {s} does not divide iteration budget {n_max}")]
    ScheduleDivisibility { n_max: usize, s: usize },

    #[error("cost became NaN at iteration {0}")]
    NanCost(usize),

    #[error("{0}")]
    Experiment(String),
}

pub type Result<T> = std::result::Result<T, Error>;
