//! Logical model derived from a physical schema, with bindings back to tables
//! and columns, refinement policies, and grounding into table fragments.

mod derive;
mod ground;
mod model;
mod policy;
mod serialize;

pub use derive::{class_id, derive_ontology, DerivationError};
pub use ground::{classes_by_table, ground, refs_for_classes, GroundedSchema, UnboundEntityError};
pub use model::{
    Annotations, BindingSet, ClassBinding, DataProperty, EntityRef, JoinPath, ObjectBinding, ObjectProperty,
    Ontology, OntologyClass, PropertyBinding,
};
pub use policy::{
    apply_policies, apply_policy, apply_policy_traced, parse_action, parse_condition, parse_policies, Action,
    Condition, PolicyError, PolicyParseError, PolicySequenceError, RefinementPolicy, Refinement, TrailEntry,
};
pub use serialize::{
    apply_annotation, apply_annotation_text, deserialize_bindings, deserialize_ontology, serialize_bindings,
    serialize_ontology, FormatError,
};

use crate::diagnostics::{Diagnostic, Diagnostics};
use crate::physical::PhysicalModel;

/// Checks the ontology invariants and that every binding resolves against
/// `model`. Empty when consistent.
pub fn validate_bindings(onto: &Ontology, bind: &BindingSet, model: &PhysicalModel) -> Diagnostics {
    let mut out = Vec::new();
    let col = |loc: String, table: &str, column: &str, out: &mut Diagnostics| match model.table(table) {
        None => out.push(Diagnostic::new(loc, format!("Table {table} does not exist"))),
        Some(t) if t.column(column).is_none() => {
            out.push(Diagnostic::new(loc, format!("Column {column} does not exist in table {}", t.name)))
        }
        _ => {}
    };
    for class in onto.classes.values() {
        let Some(cb) = bind.class(&class.id) else {
            out.push(Diagnostic::new(&class.id, "class has no binding"));
            continue;
        };
        if model.table(&cb.table).is_none() {
            out.push(Diagnostic::new(&class.id, format!("Table {} does not exist", cb.table)));
        }
        for j in &cb.joins {
            for (t, c) in j.columns() {
                col(format!("{} join", class.id), t, c, &mut out);
            }
        }
        for p in &class.data_properties {
            let loc = format!("{}.{}", class.id, p.name);
            match cb.property(&p.name) {
                None => out.push(Diagnostic::new(loc, "property has no binding")),
                Some(pb) => col(loc, &pb.table, &pb.column, &mut out),
            }
        }
        for p in &class.object_properties {
            let loc = format!("{}.{}", class.id, p.name);
            if !onto.classes.contains_key(&p.target) {
                out.push(Diagnostic::new(&loc, format!("target class {} does not exist", p.target)));
            }
            match cb.object(&p.name) {
                None => out.push(Diagnostic::new(loc, "property has no binding")),
                Some(ob) => {
                    for (t, c) in ob.join.columns() {
                        col(loc.clone(), t, c, &mut out);
                    }
                }
            }
        }
        for pb in &cb.properties {
            if class.data_property(&pb.property).is_none() {
                out.push(Diagnostic::new(format!("{}.{}", class.id, pb.property), "binding for unknown property"));
            }
        }
        for ob in &cb.objects {
            if class.object_property(&ob.property).is_none() {
                out.push(Diagnostic::new(format!("{}.{}", class.id, ob.property), "binding for unknown property"));
            }
        }
    }
    for id in bind.classes.keys() {
        if !onto.classes.contains_key(id) {
            out.push(Diagnostic::new(id, "binding for unknown class"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::physical::parse_ddl;

    #[test]
    fn derived_bindings_are_valid() {
        for ddl in [fixtures::ADVENTURE_MINI_DDL, fixtures::INVENTORY_DDL, fixtures::FILES_DDL] {
            let model = parse_ddl(ddl).unwrap();
            let (onto, bind) = derive_ontology(&model).unwrap();
            assert_eq!(validate_bindings(&onto, &bind, &model), vec![]);
        }
    }

    #[test]
    fn missing_column_is_reported() {
        let model = parse_ddl(fixtures::INVENTORY_DDL).unwrap();
        let (onto, mut bind) = derive_ontology(&model).unwrap();
        bind.classes.get_mut("product").unwrap().properties[1].column = "Nom".into();
        let d = validate_bindings(&onto, &bind, &model);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].message, "Column Nom does not exist in table Product");
    }
}
