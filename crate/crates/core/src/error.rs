use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix size must be at least 1")]
    InvalidSize,

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("subcarrier {index} out of range for {count} subcarriers")]
    SubcarrierOutOfRange { index: usize, count: usize },

    #[error("frame size {0} leaves no room for two pilots and an information symbol")]
    FrameTooSmall(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("channel entry {0} is (numerically) zero")]
    DegenerateChannel(usize),

    #[error("channel vector is zero")]
    ZeroChannel,

    #[error("stacked channel matrix is rank deficient")]
    SingularChannel,

    #[error("noise variance must be positive")]
    ZeroNoiseVariance,

    #[error("pilot symbol must be nonzero")]
    InvalidPilot,

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("complexity count overflows u64")]
    Overflow,

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("baseline `{0}` is not available in this build")]
    UnavailableBaseline(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}
