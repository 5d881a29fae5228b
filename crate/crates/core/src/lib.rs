//! Ontology-grounded natural-language-to-SQL engine.
//!
//! The crate is organized along the pipeline a data source travels through:
//!
//! * [`physical`] ingests relational schemas from DDL or a live database.
//! * [`ontology`] derives a logical model with bindings back to tables and
//!   columns, applies refinement policies, and grounds entity sets.
//! * [`catalog`] versions sources and their artifacts per tenant.
//! * [`index`] embeds ontology entities and extracts question-relevant
//!   sub-ontologies.
//! * [`pipeline`] builds prompts, runs the checkers, and drives the repair loop.
//! * [`reporting`] executes accepted queries, builds chart specifications, and
//!   archives replayable test cases.

pub mod catalog;
pub mod diagnostics;
pub mod engine;
pub mod fixtures;
pub mod index;
pub mod ontology;
pub mod physical;
pub mod pipeline;
pub mod reporting;
pub mod sql;

pub use diagnostics::{Diagnostic, Diagnostics};

/// Guide chapters, compiled so their snippets stay current.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/physical-model.md")]
    mod physical_model {}
    #[doc = include_str!("../../../book/src/ontology.md")]
    mod ontology {}
    #[doc = include_str!("../../../book/src/catalog.md")]
    mod catalog {}
    #[doc = include_str!("../../../book/src/semantic-search.md")]
    mod semantic_search {}
    #[doc = include_str!("../../../book/src/query-generation.md")]
    mod query_generation {}
    #[doc = include_str!("../../../book/src/reporting.md")]
    mod reporting {}
}
