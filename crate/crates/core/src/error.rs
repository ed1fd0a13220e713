use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin `{name}`: {reason}")]
    InvalidSpin { name: String, reason: String },

    #[error("invalid molecule: {0}")]
    InvalidMolecule(String),

    #[error("duplicate spin name `{0}`")]
    DuplicateSpin(String),

    #[error("unknown spin `{0}`")]
    UnknownSpin(String),

    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),

    #[error("bias {bias} of spin {spin} is out of range: |bias * bias_unit| must be < 1")]
    BiasOutOfRange { spin: usize, bias: f64 },

    #[error("absolute bias {0} outside [-1, 1]")]
    AbsoluteBiasOutOfRange(f64),

    #[error("observed bias must be positive, got {0}")]
    NonPositiveBias(f64),

    #[error("duration must be non-negative, got {0}")]
    InvalidDuration(f64),

    #[error("transfer efficiency must lie in [0, 1], got {0}")]
    InvalidEfficiency(f64),

    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),

    #[error(
        "{0} requires the joint representation (lift the state to a joint distribution first)"
    )]
    RequiresJoint(&'static str),

    #[error("permutation table is not a bijection on {0} entries")]
    InvalidPermutation(usize),

    #[error("gate operands must be distinct, got {0:?}")]
    RepeatedOperand(Vec<String>),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("delay parameter `{0}` is not bound")]
    UnboundDelay(String),

    #[error("schedule has delay parameters {found:?}, expected exactly {expected:?}")]
    UnexpectedParameters {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid is empty: {0}")]
    EmptyGrid(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv parse error at line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
