use thiserror::Error;

pub type Result<T, E = QsimError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QsimError {
    #[error("state of {num_qubits} qubits needs {required_bytes} bytes, above the configured bound of {limit_bytes} bytes")]
    Capacity {
        num_qubits: usize,
        required_bytes: u128,
        limit_bytes: u128,
    },

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitIndex { index: usize, num_qubits: usize },

    #[error("mode index {index} out of range for {num_modes} modes")]
    ModeIndex { index: usize, num_modes: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("size mismatch: expected {expected} qubits, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("invalid noise scenario: {0}")]
    InvalidScenario(String),

    #[error("probability {0} is not below 1; standard deviation diverges")]
    Divergence(f64),

    #[error("no crossing in bracket: {0}")]
    Bracket(String),

    #[error("transport failure on rank {rank} at gate {gate_seq}: {message}")]
    Transport {
        rank: usize,
        gate_seq: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl QsimError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        QsimError::Parse {
            line,
            message: message.into(),
        }
    }
}
