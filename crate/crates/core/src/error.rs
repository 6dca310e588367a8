use std::path::PathBuf;

/// Errors produced anywhere in the color counting pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("{path}: unsupported image format (expected PNG or JPEG)")]
    UnsupportedFormat { path: PathBuf },
    #[error("{path}: unsupported bit depth {bits} (expected 8 bits per channel)")]
    UnsupportedBitDepth { path: PathBuf, bits: u16 },
    #[error("{path}: unsupported colorspace with {channels} channel(s) (expected RGB or RGBA)")]
    UnsupportedColorspace { path: PathBuf, channels: u8 },
    #[error("cannot encode image: {0}")]
    Encode(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("invalid samples: {0}")]
    InvalidSamples(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cannot fit {k} components to {n} samples")]
    TooFewSamples { k: usize, n: usize },
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("non-finite density encountered")]
    NonFiniteDensity,
    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 1 usage, 2 I/O, 3 computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::UnknownMethod(_) => 1,
            Error::Io { .. }
            | Error::Decode { .. }
            | Error::UnsupportedFormat { .. }
            | Error::UnsupportedBitDepth { .. }
            | Error::UnsupportedColorspace { .. }
            | Error::Encode(_)
            | Error::Manifest { .. } => 2,
            Error::InvalidSamples(_)
            | Error::TooFewSamples { .. }
            | Error::FitFailed(_)
            | Error::NonFiniteDensity
            | Error::InfeasibleSpec(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
