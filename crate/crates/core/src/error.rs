use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed arguments: bad bit strings, duplicate qubits, length mismatches.
    #[error("invalid input: {0}")]
    Input(String),
    /// Operation on a qubit that is unknown or already consumed.
    #[error("invalid state: {0}")]
    State(String),
    /// An adversary hook tried to act on qubits its party does not hold.
    #[error("simulation fault: {0}")]
    SimulationFault(String),
    /// Reconstruction asked for an announcement the transcript does not contain.
    #[error("incomplete transcript: {0}")]
    IncompleteTranscript(String),
}

pub type Result<T> = std::result::Result<T, Error>;
