use serde_json::json;
use ske_core::dataset::DatasetError;
use ske_core::experiments::ExperimentError;
use ske_core::field::FieldError;
use ske_core::ske::SkeError;
use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RETRIEVAL: i32 = 3;
pub const EXIT_DATA: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// Rejected configuration, detected before any hashing.
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed or unusable input data.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
        };
        json!({ "error": kind, "message": self.to_string() })
    }
}

impl From<SkeError> for CliError {
    fn from(e: SkeError) -> Self {
        match &e {
            SkeError::InvalidParams(_)
            | SkeError::IdenticalNonces
            | SkeError::Field(FieldError::SecretTooLarge { .. }) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Domain(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Ske(e) => e.into(),
            ExperimentError::Dataset(e) => e.into(),
            ExperimentError::Config(_) | ExperimentError::Analysis(_) => CliError::Usage(e.to_string()),
            ExperimentError::DimensionMismatch { .. } => CliError::Data(e.to_string()),
        }
    }
}

impl From<ske_core::analysis::AnalysisError> for CliError {
    fn from(e: ske_core::analysis::AnalysisError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
