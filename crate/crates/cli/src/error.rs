//! One error type for every front-end operation, with stable codes.

use autobir_core::catalog::CatalogError;
use autobir_core::engine::{EngineError, GuardError};
use autobir_core::index::{IndexError, SearchError};
use autobir_core::ontology::{DerivationError, FormatError, PolicyParseError, PolicySequenceError};
use autobir_core::physical::DdlError;
use autobir_core::pipeline::{GenerateError, ProviderError};
use autobir_core::reporting::{ChartError, ExecuteError, ReplayError, StorageError};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Ddl(#[from] DdlError),
    #[error(transparent)]
    Derivation(#[from] DerivationError),
    #[error(transparent)]
    PolicyParse(#[from] PolicyParseError),
    #[error(transparent)]
    Policy(#[from] PolicySequenceError),
    #[error("annotations {0}")]
    Annotation(FormatError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Execute(#[from] ExecuteError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("conversation {0} not found")]
    ConversationNotFound(String),
    #[error("conversation {0} is busy with another request")]
    Busy(String),
    #[error("{0}")]
    NoAnswer(String),
    #[error("{0}")]
    NoConnection(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
}

/// Wire form of an error.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub details: Value,
}

impl AppError {
    pub fn code(&self) -> &'static str {
        match self {
            AppError::Config(_) => "config_error",
            AppError::Catalog(CatalogError::NotFound(_)) => "not_found",
            AppError::Catalog(CatalogError::DuplicateName { .. }) => "duplicate_name",
            AppError::Catalog(CatalogError::Storage(_)) => "storage_error",
            AppError::Catalog(CatalogError::Corrupt { .. }) => "corrupt_artifact",
            AppError::Ddl(DdlError::Syntax { .. }) => "ddl_syntax",
            AppError::Ddl(DdlError::Reference { .. }) => "ddl_reference",
            AppError::Derivation(_) => "derivation_error",
            AppError::PolicyParse(_) => "policy_syntax",
            AppError::Policy(_) => "policy_error",
            AppError::Annotation(_) => "annotation_error",
            AppError::Index(IndexError::EmptyIndex) => "empty_index",
            AppError::Index(_) => "index_error",
            AppError::Generate(GenerateError::Search(SearchError::NoSeed { .. })) => "no_seed",
            AppError::Generate(GenerateError::Search(SearchError::Index(_))) => "index_error",
            AppError::Generate(GenerateError::Provider(_)) | AppError::Provider(_) => "provider_error",
            AppError::Generate(GenerateError::Unbound(_)) => "unbound_entity",
            AppError::Generate(GenerateError::Engine(_)) => "connection_error",
            AppError::Execute(ExecuteError::Guard(GuardError::Syntax(_))) => "query_syntax",
            AppError::Execute(ExecuteError::Guard(_)) => "read_only_violation",
            AppError::Execute(ExecuteError::Engine(EngineError::Connection(_)))
            | AppError::Engine(EngineError::Connection(_)) => "connection_error",
            AppError::Execute(ExecuteError::Engine(_)) | AppError::Engine(_) => "engine_error",
            AppError::Chart(ChartError::Exhausted { .. }) => "chart_generation_exhausted",
            AppError::Chart(ChartError::Provider(_)) => "provider_error",
            AppError::Storage(StorageError::NotFound(_)) => "testcase_not_found",
            AppError::Storage(StorageError::Incomplete) => "bad_request",
            AppError::Storage(_) => "storage_error",
            AppError::Replay(ReplayError::NoSnapshot(_)) => "no_snapshot",
            AppError::Replay(ReplayError::Engine(_)) => "connection_error",
            AppError::ConversationNotFound(_) => "conversation_not_found",
            AppError::Busy(_) => "conversation_busy",
            AppError::NoAnswer(_) => "no_accepted_query",
            AppError::NoConnection(_) => "no_connection",
            AppError::BadRequest(_) => "bad_request",
            AppError::NotFound(_) => "not_found",
        }
    }

    pub fn http_status(&self) -> u16 {
        match self.code() {
            "not_found" | "conversation_not_found" | "testcase_not_found" => 404,
            "duplicate_name" | "conversation_busy" | "no_accepted_query" => 409,
            "ddl_syntax" | "ddl_reference" | "policy_syntax" | "annotation_error" | "query_syntax"
            | "read_only_violation" | "bad_request" => 400,
            "derivation_error" | "policy_error" | "no_seed" | "empty_index" | "engine_error" | "no_connection"
            | "chart_generation_exhausted" | "no_snapshot" | "unbound_entity" => 422,
            "provider_error" => 502,
            "connection_error" => 503,
            _ => 500,
        }
    }

    pub fn details(&self) -> Value {
        match self {
            AppError::Ddl(DdlError::Syntax { line, column, .. }) => json!({ "line": line, "column": column }),
            AppError::PolicyParse(e) => json!({ "line": e.line }),
            AppError::Policy(e) => json!({ "index": e.index }),
            AppError::Derivation(e) => json!(e.0),
            AppError::Generate(GenerateError::Search(SearchError::NoSeed { terms })) => json!({ "terms": terms }),
            AppError::Chart(ChartError::Exhausted { attempts }) => json!({ "attempts": attempts }),
            _ => Value::Null,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody { code: self.code().into(), message: self.to_string(), details: self.details() }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Ddl(_) => 2,
            _ => 1,
        }
    }
}
