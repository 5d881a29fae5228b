use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::model::{BindingSet, EntityRef, JoinPath, Ontology};
use crate::physical::{ForeignKey, PhysicalModel, TableDef};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("entity {0} has no binding")]
pub struct UnboundEntityError(pub String);

/// Table fragments needed to talk about a set of ontology entities.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroundedSchema {
    pub tables: Vec<TableDef>,
}

impl GroundedSchema {
    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn table(&self, name: &str) -> Option<&TableDef> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    /// `CREATE TABLE` statements separated by blank lines.
    pub fn to_text(&self) -> String {
        self.tables.iter().map(TableDef::to_create_statement).collect::<Vec<_>>().join("\n\n")
    }

    pub fn as_model(&self) -> PhysicalModel {
        PhysicalModel::new("grounded", self.tables.clone())
    }
}

#[derive(Default)]
struct Selection {
    tables: BTreeSet<String>,
    columns: BTreeSet<(String, String)>,
    joins: Vec<JoinPath>,
}

impl Selection {
    fn table(&mut self, t: &str) {
        self.tables.insert(t.to_ascii_lowercase());
    }

    fn column(&mut self, t: &str, c: &str) {
        self.table(t);
        self.columns.insert((t.to_ascii_lowercase(), c.to_ascii_lowercase()));
    }

    fn join(&mut self, j: &JoinPath) {
        for (t, c) in j.columns() {
            self.column(t, c);
        }
        self.joins.push(j.clone());
    }
}

/// Minimal set of table fragments reachable from `refs`: bound columns, the
/// join columns of object properties and auxiliary joins, the primary key of
/// each class table, and the foreign keys whose both ends are included.
/// Table and column order follow the physical model.
pub fn ground(
    refs: &[EntityRef],
    onto: &Ontology,
    bind: &BindingSet,
    model: &PhysicalModel,
) -> Result<GroundedSchema, UnboundEntityError> {
    let mut sel = Selection::default();
    for r in refs {
        let unbound = || UnboundEntityError(r.id());
        if onto.class(r.class_id()).is_none() {
            return Err(unbound());
        }
        let cb = bind.class(r.class_id()).ok_or_else(unbound)?;
        model.table(&cb.table).ok_or_else(unbound)?;
        match r {
            EntityRef::Class { .. } => {
                let t = model.table(&cb.table).expect("checked");
                sel.table(&t.name);
                for pk in &t.primary_key {
                    sel.column(&t.name, pk);
                }
            }
            EntityRef::DataProperty { property, .. } => {
                let pb = cb.property(property).ok_or_else(unbound)?;
                let t = model.table(&pb.table).ok_or_else(unbound)?;
                t.column(&pb.column).ok_or_else(unbound)?;
                sel.column(&pb.table, &pb.column);
                // Columns living in an auxiliary table also need the joins that reach it.
                if !pb.table.eq_ignore_ascii_case(&cb.table) {
                    for j in &cb.joins {
                        sel.join(j);
                    }
                }
            }
            EntityRef::ObjectProperty { property, .. } => {
                let ob = cb.object(property).ok_or_else(unbound)?;
                if model.table(&ob.join.from_table).is_none() || model.table(&ob.join.to_table).is_none() {
                    return Err(unbound());
                }
                sel.join(&ob.join);
            }
        }
    }

    let mut tables = Vec::new();
    for t in &model.tables {
        let key = t.name.to_ascii_lowercase();
        if !sel.tables.contains(&key) {
            continue;
        }
        let mut frag = TableDef::new(&t.name);
        frag.columns = t
            .columns
            .iter()
            .filter(|c| sel.columns.contains(&(key.clone(), c.name.to_ascii_lowercase())))
            .cloned()
            .collect();
        if !t.primary_key.is_empty() && t.primary_key.iter().all(|pk| frag.column(pk).is_some()) {
            frag.primary_key = t.primary_key.clone();
        }
        frag.foreign_keys = t
            .foreign_keys
            .iter()
            .filter(|fk| sel.tables.contains(&fk.target_table.to_ascii_lowercase()))
            .filter(|fk| sel.joins.iter().any(|j| join_is_fk(j, &t.name, fk)))
            .filter(|fk| fk.columns.iter().all(|c| frag.column(c).is_some()))
            .cloned()
            .collect();
        tables.push(frag);
    }
    Ok(GroundedSchema { tables })
}

fn join_is_fk(j: &JoinPath, table: &str, fk: &ForeignKey) -> bool {
    let same = |a: &[String], b: &[String]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.eq_ignore_ascii_case(y));
    let forward = j.from_table.eq_ignore_ascii_case(table)
        && j.to_table.eq_ignore_ascii_case(&fk.target_table)
        && same(&j.from_columns, &fk.columns)
        && same(&j.to_columns, &fk.target_columns);
    let backward = j.to_table.eq_ignore_ascii_case(table)
        && j.from_table.eq_ignore_ascii_case(&fk.target_table)
        && same(&j.to_columns, &fk.columns)
        && same(&j.from_columns, &fk.target_columns);
    forward || backward
}

/// Refs for every class in `ids` together with all of its properties.
pub fn refs_for_classes<'a>(onto: &Ontology, ids: impl IntoIterator<Item = &'a str>) -> Vec<EntityRef> {
    ids.into_iter().filter_map(|id| onto.class(id)).flat_map(EntityRef::class_with_properties).collect()
}

/// Table name -> ids of the classes bound to it.
pub fn classes_by_table(bind: &BindingSet) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (id, b) in &bind.classes {
        out.entry(b.table.to_ascii_lowercase()).or_default().push(id.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ontology::derive_ontology;
    use crate::physical::parse_ddl;

    #[test]
    fn inventory_pair_renders_the_prompt_schema() {
        let model = parse_ddl(fixtures::INVENTORY_DDL).unwrap();
        let (onto, bind) = derive_ontology(&model).unwrap();
        let refs = refs_for_classes(&onto, ["product", "productinventory"]);
        let g = ground(&refs, &onto, &bind, &model).unwrap();
        assert_eq!(g.to_text(), fixtures::INVENTORY_DDL.trim());
    }

    #[test]
    fn empty_refs() {
        let model = parse_ddl(fixtures::INVENTORY_DDL).unwrap();
        let (onto, bind) = derive_ontology(&model).unwrap();
        assert!(ground(&[], &onto, &bind, &model).unwrap().is_empty());
    }

    #[test]
    fn all_classes_cover_all_tables() {
        let model = parse_ddl(fixtures::ADVENTURE_MINI_DDL).unwrap();
        let (onto, bind) = derive_ontology(&model).unwrap();
        let ids: Vec<&str> = onto.classes.keys().map(String::as_str).collect();
        let g = ground(&refs_for_classes(&onto, ids), &onto, &bind, &model).unwrap();
        let got: BTreeSet<_> = g.tables.iter().map(|t| t.name.clone()).collect();
        let want: BTreeSet<_> = model.tables.iter().map(|t| t.name.clone()).collect();
        assert_eq!(got, want);
        assert_eq!(g.as_model(), PhysicalModel::new("grounded", model.tables.clone()));
    }

    #[test]
    fn unbound_ref_is_named() {
        let model = parse_ddl(fixtures::INVENTORY_DDL).unwrap();
        let (onto, bind) = derive_ontology(&model).unwrap();
        let refs = vec![
            EntityRef::class("product"),
            EntityRef::DataProperty { class: "product".into(), property: "Nope".into() },
            EntityRef::class("ghost"),
        ];
        assert_eq!(ground(&refs, &onto, &bind, &model).unwrap_err(), UnboundEntityError("product.Nope".into()));
    }

    #[test]
    fn single_property_pulls_key_and_column_only() {
        let model = parse_ddl(fixtures::INVENTORY_DDL).unwrap();
        let (onto, bind) = derive_ontology(&model).unwrap();
        let refs = vec![
            EntityRef::class("product"),
            EntityRef::DataProperty { class: "product".into(), property: "Name".into() },
        ];
        let g = ground(&refs, &onto, &bind, &model).unwrap();
        assert_eq!(g.to_text(), "CREATE TABLE Product (\n  ProductID int,\n  Name varchar,\n  PRIMARY KEY (ProductID)\n);");
    }
}
