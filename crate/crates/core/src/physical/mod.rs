//! Physical relational schemas: DDL ingestion, engine introspection, validation.

mod ddl;
mod introspect;
mod model;
mod validate;

pub use ddl::{parse_ddl, DdlError};
pub use introspect::{introspect, Introspection, TypeWarning};
pub use model::{ColumnDef, ForeignKey, PhysicalModel, SqlType, TableDef};
pub use validate::validate_physical;
