//! Pipeline stages, configuration and the HTTP server behind the `taxolint` binary.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod server;

pub use config::{PipelineConfig, ProviderKind};
pub use error::{CliError, CliResult, Exit};
