use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error class; decides the process exit status of the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input: files, flags, parameters.
    Input,
    /// The data are valid but the requested statistic is undefined on them.
    Degenerate,
    /// Something that should not happen did.
    Internal,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Input => 2,
            ErrorClass::Degenerate => 3,
            ErrorClass::Internal => 4,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sample contains no informative subjects")]
    EmptySample,
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("zero variance in {0}")]
    ZeroVariance(String),
    #[error("group {group} has no observed values")]
    EmptyGroup { group: u8 },
    #[error("weight w{group} = {weight} puts mass on an empty block")]
    WeightBlockMismatch { group: u8, weight: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("asymptotic variance is singular: {0}")]
    SingularVariance(String),
    #[error("interior stationary point is undefined (singular system)")]
    SingularSystem,
    #[error("bootstrap failed: {degenerate} of {replicates} resamples were degenerate")]
    BootstrapFailure {
        degenerate: usize,
        replicates: usize,
    },
    #[error("Bhoj weight undefined: {0}")]
    DegenerateBhoj(String),
    #[error("fewer than two complete pairs")]
    TooFewPairs,
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("input file contains no data rows")]
    EmptyFile,
    #[error("i/o error: {0}")]
    Io(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptySample => "empty_sample",
            Error::DegenerateSample(_) => "degenerate_sample",
            Error::ZeroVariance(_) => "zero_variance",
            Error::EmptyGroup { .. } => "empty_group",
            Error::WeightBlockMismatch { .. } => "weight_block_mismatch",
            Error::InvalidParams(_) => "invalid_params",
            Error::SingularVariance(_) => "singular_variance",
            Error::SingularSystem => "singular_system",
            Error::BootstrapFailure { .. } => "bootstrap_failure",
            Error::DegenerateBhoj(_) => "degenerate_bhoj",
            Error::TooFewPairs => "too_few_pairs",
            Error::AllZeroDifferences => "all_zero_differences",
            Error::Parse { .. } => "parse_error",
            Error::EmptyFile => "empty_file",
            Error::Io(_) => "io_error",
            Error::Internal(_) => "internal_error",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParams(_)
            | Error::WeightBlockMismatch { .. }
            | Error::Parse { .. }
            | Error::EmptyFile
            | Error::Io(_) => ErrorClass::Input,
            Error::Internal(_) => ErrorClass::Internal,
            _ => ErrorClass::Degenerate,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
