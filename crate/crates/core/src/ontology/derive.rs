use super::model::{
    BindingSet, ClassBinding, DataProperty, JoinPath, ObjectBinding, ObjectProperty, Ontology, OntologyClass,
    PropertyBinding,
};
use crate::diagnostics::Diagnostics;
use crate::physical::{validate_physical, PhysicalModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("cannot derive an ontology from an invalid physical model ({} problem(s), first: {})", .0.len(), .0.first().map(|d| d.to_string()).unwrap_or_default())]
pub struct DerivationError(pub Diagnostics);

/// One class per table, one data property per column, one object property per
/// foreign key. The FK columns stay as data properties next to `has_<target>`.
pub fn derive_ontology(model: &PhysicalModel) -> Result<(Ontology, BindingSet), DerivationError> {
    let diagnostics = validate_physical(model);
    if !diagnostics.is_empty() {
        return Err(DerivationError(diagnostics));
    }

    let mut onto = Ontology::default();
    let mut bind = BindingSet::default();
    for table in &model.tables {
        let id = class_id(&table.name);
        let mut class = OntologyClass::new(&id, &table.name);
        let mut binding = ClassBinding::new(&table.name);
        for col in &table.columns {
            class.data_properties.push(DataProperty {
                name: col.name.clone(),
                sql_type: col.sql_type,
                annotations: Default::default(),
            });
            binding.properties.push(PropertyBinding {
                property: col.name.clone(),
                table: table.name.clone(),
                column: col.name.clone(),
            });
        }
        for fk in &table.foreign_keys {
            let target = model.table(&fk.target_table).expect("validated");
            let target_id = class_id(&target.name);
            let mut name = format!("has_{target_id}");
            if class.has_property(&name) {
                name = format!("has_{target_id}_via_{}", fk.columns.join("_").to_ascii_lowercase());
            }
            let base = name.clone();
            let mut n = 2;
            while class.has_property(&name) {
                name = format!("{base}_{n}");
                n += 1;
            }
            class.object_properties.push(ObjectProperty {
                name: name.clone(),
                target: target_id,
                annotations: Default::default(),
            });
            binding.objects.push(ObjectBinding {
                property: name,
                join: JoinPath {
                    from_table: table.name.clone(),
                    from_columns: fk.columns.clone(),
                    to_table: target.name.clone(),
                    to_columns: fk.target_columns.clone(),
                },
            });
        }
        onto.insert(class);
        bind.classes.insert(id, binding);
    }
    Ok((onto, bind))
}

pub fn class_id(table: &str) -> String {
    table.to_ascii_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::physical::{parse_ddl, ColumnDef, ForeignKey, SqlType, TableDef};

    #[test]
    fn special_offer_product_class() {
        let model = parse_ddl(fixtures::ADVENTURE_MINI_DDL).unwrap();
        let (onto, bind) = derive_ontology(&model).unwrap();
        let c = onto.class("specialofferproduct").unwrap();
        assert_eq!(c.label, "SpecialOfferProduct");
        let names: Vec<_> = c.data_properties.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["rowguid", "ModifiedDate", "SpecialOfferID", "ProductID"]);
        assert_eq!(c.object_properties.len(), 1);
        assert_eq!(c.object_properties[0].name, "has_product");
        assert_eq!(c.object_properties[0].target, "product");
        let b = bind.class("specialofferproduct").unwrap();
        assert_eq!(b.table, "SpecialOfferProduct");
        assert_eq!(b.object("has_product").unwrap().join.to_table, "Product");
    }

    #[test]
    fn counts_follow_the_physical_model() {
        let model = parse_ddl(fixtures::ADVENTURE_MINI_DDL).unwrap();
        let (onto, bind) = derive_ontology(&model).unwrap();
        assert_eq!(onto.classes.len(), model.tables.len());
        assert_eq!(onto.object_property_count(), model.foreign_key_count());
        assert_eq!(bind.classes.len(), 8);
    }

    #[test]
    fn empty_model() {
        let (onto, bind) = derive_ontology(&PhysicalModel::default()).unwrap();
        assert!(onto.is_empty() && bind.is_empty());
    }

    #[test]
    fn invalid_model_is_rejected() {
        let mut t = TableDef::new("T");
        t.columns.push(ColumnDef::new("a", SqlType::Int));
        t.columns.push(ColumnDef::new("A", SqlType::Int));
        assert!(derive_ontology(&PhysicalModel::new("x", vec![t])).is_err());
    }

    #[test]
    fn two_references_to_one_target_get_distinct_names() {
        let mut person = TableDef::new("Person");
        person.columns.push(ColumnDef::new("PersonID", SqlType::Int));
        person.primary_key.push("PersonID".into());
        let mut msg = TableDef::new("Message");
        for c in ["SenderID", "RecipientID"] {
            msg.columns.push(ColumnDef::new(c, SqlType::Int));
            msg.foreign_keys.push(ForeignKey {
                columns: vec![c.into()],
                target_table: "Person".into(),
                target_columns: vec!["PersonID".into()],
            });
        }
        let (onto, _) = derive_ontology(&PhysicalModel::new("x", vec![person, msg])).unwrap();
        let names: Vec<_> = onto.class("message").unwrap().object_properties.iter().map(|p| p.name.clone()).collect();
        assert_eq!(names, ["has_person", "has_person_via_recipientid"]);
    }
}
