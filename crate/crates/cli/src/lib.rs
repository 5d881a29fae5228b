//! Command line and HTTP front end: configuration, the shared workbench that
//! both surfaces call, and the route table.

pub mod commands;
pub mod config;
pub mod error;
pub mod http;
pub mod workbench;

pub use config::Config;
pub use error::{AppError, ErrorBody};
pub use workbench::{OntologyView, SetupOutcome, SetupRequest, Workbench};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/service.md")]
mod service_chapter {}
