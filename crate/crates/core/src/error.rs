use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("register size mismatch: {0} vs {1}")]
    RegisterMismatch(usize, usize),
    #[error("dense cap exceeded: {qubits} qubits > cap {cap}")]
    CapExceeded { qubits: usize, cap: usize },
    #[error("qubit {qubit} outside register of size {size}")]
    QubitOutOfRange { qubit: usize, size: usize },
    #[error("qubit {0} appears twice in one Pauli string")]
    DuplicateQubit(usize),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no Heisenberg rule for gate `{0}`")]
    NoHeisenbergRule(String),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("invalid site {0}")]
    InvalidSite(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("not gauge invariant: fails to commute with the Gauss operator at site {0}")]
    GaugeViolation(String),
    #[error("operator is not block diagonal in the matter sigma^z at site {0}")]
    NotBlockDiagonal(usize),
    #[error("operator is not hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("operator maps sector states outside the sector")]
    LeavesSector,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("term spec rejected: {0}")]
    TermSpecRejected(String),
}

pub type Result<T> = std::result::Result<T, Error>;
