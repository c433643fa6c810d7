use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("matrix is singular: no pivot in column {column}")]
    Singular { column: usize },

    #[error("duplicate position {0} in erasure pattern")]
    DuplicatePosition(usize),

    /// A construction produced an object that failed its own validation.
    #[error("construction failed: {0}")]
    Construction(String),

    /// A counting identity or structural invariant did not hold. Signals a bug
    /// in this crate, never bad user input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("missing answer slot: {0}")]
    MissingSlot(String),

    #[error("malformed message: {0}")]
    Malformed(String),

    #[error("truncated message: need {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },

    #[error("value {value} is not reduced modulo {modulus}")]
    ValueOutOfRange { value: u64, modulus: u64 },

    #[error("unsupported message version {0}")]
    UnknownVersion(u32),

    #[error("exhaustive enumeration infeasible: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
