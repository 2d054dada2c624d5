use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("depth p={p} exceeds the configured budget of {max}")]
    DepthBudget { p: usize, max: usize },

    #[error("light cone needs {qubits} qubits, limit is {max}")]
    LightConeTooLarge { qubits: usize, max: usize },

    #[error("decoder is not unitary: {0}")]
    NonUnitary(String),

    #[error("matrix B must have full column rank (rank {rank}, columns {cols})")]
    RankDeficient { rank: usize, cols: usize },

    #[error(transparent)]
    Core(#[from] xorsat_core::Error),
}
