//! Bundled sample schemas used by tests, the guide, and demos.

use std::path::Path;

use crate::engine::{create_database, ConnectionDescriptor, EngineError};

/// Eight-table sales slice (products, orders, currency rates, offers).
pub const ADVENTURE_MINI_DDL: &str = include_str!("../fixtures/adventure_mini.sql");
/// Rows for [`ADVENTURE_MINI_DDL`].
pub const ADVENTURE_MINI_DATA: &str = include_str!("../fixtures/adventure_mini_data.sql");
/// Descriptions attached to the sales ontology to steer semantic search.
pub const ADVENTURE_MINI_ANNOTATIONS: &str = include_str!("../fixtures/adventure_mini.annotations");
/// Two-table product/inventory schema.
pub const INVENTORY_DDL: &str = include_str!("../fixtures/inventory.sql");
/// File / FileProperties / AccessLog schema used by refinement policies.
pub const FILES_DDL: &str = include_str!("../fixtures/files.sql");

/// The earnings-per-product query in Euro over the sales slice.
pub const EURO_EARNINGS_QUERY: &str = "SELECT Product.ProductNumber, SUM(SalesOrderDetail.LineTotal*CurrencyRate.AverageRate) AS TotalEarnings
FROM Product
JOIN SalesOrderDetail ON SalesOrderDetail.ProductID = Product.ProductID
JOIN SalesOrderHeader ON SalesOrderDetail.SalesOrderID = SalesOrderHeader.SalesOrderID
JOIN CurrencyRate ON SalesOrderHeader.CurrencyRateID = CurrencyRate.CurrencyRateID
JOIN Currency ON CurrencyRate.ToCurrencyCode = Currency.CurrencyCode
WHERE CurrencyRate.ToCurrencyCode = \"Euro\"
GROUP BY Product.ProductNumber";

pub const EURO_EARNINGS_QUESTION: &str = "Please provide the total amount of earnings per product sold in Euro";

/// Builds `adventure_mini.db` with data inside `dir`.
pub fn adventure_database(dir: &Path) -> Result<ConnectionDescriptor, EngineError> {
    create_database(&dir.join("adventure_mini.db"), ADVENTURE_MINI_DDL, Some(ADVENTURE_MINI_DATA))
}

/// The sales slice as ingested and derived, with descriptions applied.
#[derive(Debug, Clone)]
pub struct FixtureSource {
    pub physical: crate::physical::PhysicalModel,
    pub ontology: crate::ontology::Ontology,
    pub bindings: crate::ontology::BindingSet,
}

pub fn adventure_source() -> FixtureSource {
    let physical = crate::physical::parse_ddl(ADVENTURE_MINI_DDL).expect("bundled DDL parses");
    let (mut ontology, bindings) = crate::ontology::derive_ontology(&physical).expect("bundled schema derives");
    crate::ontology::apply_annotation_text(&mut ontology, ADVENTURE_MINI_ANNOTATIONS).expect("bundled annotations apply");
    FixtureSource { physical, ontology, bindings }
}
