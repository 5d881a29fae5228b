mod support;

use std::collections::BTreeSet;

use autobir_core::fixtures;
use autobir_core::ontology::*;
use autobir_core::physical::{parse_ddl, PhysicalModel};
use proptest::prelude::*;

fn all_columns(m: &PhysicalModel) -> BTreeSet<(String, String)> {
    m.tables
        .iter()
        .flat_map(|t| t.columns.iter().map(move |c| (t.name.to_lowercase(), c.name.to_lowercase())))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivation_mirrors_the_schema(seed in any::<u64>()) {
        let model = parse_ddl(&support::random_ddl(seed, 6)).unwrap();
        let (onto, bind) = derive_ontology(&model).unwrap();
        prop_assert_eq!(onto.classes.len(), model.tables.len());
        prop_assert_eq!(onto.object_property_count(), model.foreign_key_count());
        let props: usize = onto.classes.values().map(|c| c.data_properties.len()).sum();
        let cols: usize = model.tables.iter().map(|t| t.columns.len()).sum();
        prop_assert_eq!(props, cols);
        prop_assert_eq!(bind.reachable_columns(), all_columns(&model));
        prop_assert!(validate_bindings(&onto, &bind, &model).is_empty());

        let text = serialize_ontology(&onto);
        prop_assert_eq!(&deserialize_ontology(&text).unwrap(), &onto);
        prop_assert_eq!(&deserialize_bindings(&serialize_bindings(&bind)).unwrap(), &bind);
    }

    #[test]
    fn renames_keep_every_column_bound(seed in any::<u64>(), prefix in "[a-z]{1,3}") {
        let model = parse_ddl(&support::random_ddl(seed, 5)).unwrap();
        let (onto, bind) = derive_ontology(&model).unwrap();
        let text = format!(
            "name: classes\ncondition: regex-match(^order0$)\naction: rename_class({prefix}_order)\n---\nname: props\ncondition: rename-map(Name0 => title)\naction: rename_property\n"
        );
        let out = apply_policies(&onto, &bind, &parse_policies(&text).unwrap()).unwrap();
        prop_assert_eq!(out.bindings.reachable_columns(), all_columns(&model));
        prop_assert!(validate_bindings(&out.ontology, &out.bindings, &model).is_empty());
        prop_assert_eq!(out.ontology.classes.len(), onto.classes.len());
    }
}

#[test]
fn collapse_keeps_columns_reachable_through_the_referencing_class() {
    let model = parse_ddl(fixtures::FILES_DDL).unwrap();
    let (onto, bind) = derive_ontology(&model).unwrap();
    let policy = "name: collapse\ncondition: suffix-match(Properties, linked)\naction: collapse_to_referencing\n";
    let out = apply_policies(&onto, &bind, &parse_policies(policy).unwrap()).unwrap();
    assert_eq!(out.ontology.classes.len(), 2);
    assert_eq!(out.bindings.reachable_columns(), all_columns(&model));
    assert!(validate_bindings(&out.ontology, &out.bindings, &model).is_empty());
    assert_eq!(out.trail.len(), 1);
}

#[test]
fn malformed_policy_reports_its_line() {
    let e = parse_policies("name: p\ncondition: regex-match(^a)\naction: explode\n").unwrap_err();
    assert_eq!(e.line, 3);
}

#[test]
fn annotations_survive_serialization() {
    let src = fixtures::adventure_source();
    let text = serialize_ontology(&src.ontology);
    assert_eq!(deserialize_ontology(&text).unwrap(), src.ontology);
}
