use thiserror::Error;

/// Error taxonomy shared by all modules.
///
/// The CLI maps these onto exit codes: argument-class errors exit 2,
/// capacity/range-class errors exit 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument: {0}")]
    Argument(String),

    #[error("domain: {0}")]
    Domain(String),

    #[error("capacity: {0}")]
    Capacity(String),

    #[error("range: {0}")]
    Range(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("consistency: {0}")]
    Consistency(String),

    #[error("unsupported order k={0}; only k <= 4 is supported")]
    UnsupportedOrder(u32),

    #[error("empty resonator: no qualifying integers in [{lo:.3}, {hi:.3}]")]
    EmptyResonator { lo: f64, hi: f64 },

    #[error("quadrature step too coarse: h={h:.3e} exceeds {max:.3e}")]
    StepTooCoarse { h: f64, max: f64 },

    #[error("cache: {0}")]
    Cache(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code the CLI should use for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Domain(_) | Error::UnsupportedOrder(_) => 2,
            _ => 3,
        }
    }
}
