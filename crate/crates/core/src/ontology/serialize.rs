//! Text forms of the ontology (`.onto`) and bindings (`.bind`).
//!
//! Ontology blocks look like
//!
//! ```text
//! @Class@ specialofferproduct {
//!     @Data Property@: rowguid VARCHAR,
//!     @Object Property@: has_product REFERENCES product
//! }
//! ```
//!
//! preceded by `@Annotation@ <entity> <key> = "<json string>"` lines for labels
//! and descriptions. Binding blocks use the `c.<prop> => t.<col>` arrow form;
//! object properties and auxiliary joins are written as equi-join predicates.

use std::collections::BTreeMap;

use super::model::{
    Annotations, BindingSet, ClassBinding, DataProperty, JoinPath, ObjectBinding, ObjectProperty, Ontology,
    OntologyClass, PropertyBinding,
};
use crate::physical::SqlType;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError { line, message: message.into() }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn serialize_ontology(onto: &Ontology) -> String {
    let mut blocks = Vec::new();
    for class in onto.classes.values() {
        let mut out = String::new();
        if class.label != class.id {
            out.push_str(&format!("@Annotation@ {} label = {}\n", class.id, quote(&class.label)));
        }
        for (k, v) in class.annotations.iter().filter(|(k, _)| k.as_str() != "label") {
            out.push_str(&format!("@Annotation@ {} {k} = {}\n", class.id, quote(v)));
        }
        let props = class
            .data_properties
            .iter()
            .map(|p| (&p.name, &p.annotations))
            .chain(class.object_properties.iter().map(|p| (&p.name, &p.annotations)));
        for (name, ann) in props {
            for (k, v) in ann {
                out.push_str(&format!("@Annotation@ {}.{name} {k} = {}\n", class.id, quote(v)));
            }
        }
        let mut lines: Vec<String> = class
            .data_properties
            .iter()
            .map(|p| format!("    @Data Property@: {} {}", p.name, p.sql_type))
            .collect();
        lines.extend(
            class
                .object_properties
                .iter()
                .map(|p| format!("    @Object Property@: {} REFERENCES {}", p.name, p.target)),
        );
        out.push_str(&format!("@Class@ {} {{\n", class.id));
        if !lines.is_empty() {
            out.push_str(&lines.join(",\n"));
            out.push('\n');
        }
        out.push('}');
        blocks.push(out);
    }
    if blocks.is_empty() {
        return String::new();
    }
    let mut text = blocks.join("\n\n");
    text.push('\n');
    text
}

struct PendingAnnotation {
    line: usize,
    entity: String,
    key: String,
    value: String,
}

pub fn deserialize_ontology(text: &str) -> Result<Ontology, FormatError> {
    let mut onto = Ontology::default();
    let mut pending = Vec::new();
    let mut current: Option<OntologyClass> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(class) = current.as_mut() {
            if line == "}" {
                let class = current.take().expect("in block");
                if onto.classes.contains_key(&class.id) {
                    return Err(err(line_no, format!("duplicate class {}", class.id)));
                }
                onto.insert(class);
                continue;
            }
            let body = line.trim_end_matches(',').trim_end();
            if let Some(rest) = body.strip_prefix("@Data Property@:") {
                let mut parts = rest.split_whitespace();
                let (Some(name), Some(ty), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(err(line_no, "expected `@Data Property@: <name> <TYPE>`"));
                };
                let sql_type: SqlType = ty.parse().map_err(|e: String| err(line_no, e))?;
                if class.has_property(name) {
                    return Err(err(line_no, format!("duplicate property {name} in class {}", class.id)));
                }
                class.data_properties.push(DataProperty {
                    name: name.to_string(),
                    sql_type,
                    annotations: Annotations::new(),
                });
            } else if let Some(rest) = body.strip_prefix("@Object Property@:") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [name, kw, target] = parts.as_slice() else {
                    return Err(err(line_no, "expected `@Object Property@: <name> REFERENCES <class>`"));
                };
                if !kw.eq_ignore_ascii_case("REFERENCES") {
                    return Err(err(line_no, format!("expected REFERENCES, found {kw}")));
                }
                if class.has_property(name) {
                    return Err(err(line_no, format!("duplicate property {name} in class {}", class.id)));
                }
                class.object_properties.push(ObjectProperty {
                    name: name.to_string(),
                    target: target.to_string(),
                    annotations: Annotations::new(),
                });
            } else {
                return Err(err(line_no, format!("unexpected line in class block: {line}")));
            }
            continue;
        }

        if let Some(rest) = line.strip_prefix("@Class@") {
            let rest = rest.trim();
            let Some(id) = rest.strip_suffix('{').map(str::trim).filter(|s| !s.is_empty() && !s.contains(' ')) else {
                return Err(err(line_no, "expected `@Class@ <id> {`"));
            };
            current = Some(OntologyClass::new(id, id));
        } else if let Some(rest) = line.strip_prefix("@Annotation@") {
            let rest = rest.trim_start();
            let (entity, rest) = rest.split_once(' ').ok_or_else(|| err(line_no, "annotation needs an entity"))?;
            let (key, value) = rest.split_once('=').ok_or_else(|| err(line_no, "annotation needs `key = value`"))?;
            let value: String = serde_json::from_str(value.trim())
                .map_err(|e| err(line_no, format!("annotation value is not a quoted string: {e}")))?;
            pending.push(PendingAnnotation {
                line: line_no,
                entity: entity.to_string(),
                key: key.trim().to_string(),
                value,
            });
        } else {
            return Err(err(line_no, format!("unexpected line: {line}")));
        }
    }
    if let Some(class) = current {
        return Err(err(text.lines().count(), format!("class {} is not closed", class.id)));
    }

    for ann in pending {
        apply_annotation(&mut onto, &ann.entity, &ann.key, ann.value).map_err(|m| err(ann.line, m))?;
    }
    for class in onto.classes.values() {
        for op in &class.object_properties {
            if !onto.classes.contains_key(&op.target) {
                return Err(err(0, format!("{}.{} references unknown class {}", class.id, op.name, op.target)));
            }
        }
    }
    Ok(onto)
}

/// Sets one annotation on a class (`id`) or property (`id.prop`). The class
/// key `label` updates the display label.
pub fn apply_annotation(onto: &mut Ontology, entity: &str, key: &str, value: String) -> Result<(), String> {
    let (class_id, prop) = match entity.split_once('.') {
        Some((c, p)) => (c, Some(p)),
        None => (entity, None),
    };
    let class = onto.classes.get_mut(class_id).ok_or_else(|| format!("annotation on unknown class {class_id}"))?;
    match prop {
        None if key == "label" => class.label = value,
        None => {
            class.annotations.insert(key.to_string(), value);
        }
        Some(p) => {
            let target = if let Some(dp) = class.data_properties.iter_mut().find(|d| d.name == p) {
                &mut dp.annotations
            } else if let Some(op) = class.object_properties.iter_mut().find(|o| o.name == p) {
                &mut op.annotations
            } else {
                return Err(format!("annotation on unknown property {class_id}.{p}"));
            };
            target.insert(key.to_string(), value);
        }
    }
    Ok(())
}

/// Applies a file of `@Annotation@` lines to an existing ontology.
pub fn apply_annotation_text(onto: &mut Ontology, text: &str) -> Result<(), FormatError> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let rest = line.strip_prefix("@Annotation@").ok_or_else(|| err(i + 1, "expected @Annotation@"))?;
        let (entity, rest) = rest.trim_start().split_once(' ').ok_or_else(|| err(i + 1, "annotation needs an entity"))?;
        let (key, value) = rest.split_once('=').ok_or_else(|| err(i + 1, "annotation needs `key = value`"))?;
        let value: String = serde_json::from_str(value.trim()).map_err(|e| err(i + 1, e.to_string()))?;
        apply_annotation(onto, entity, key.trim(), value).map_err(|m| err(i + 1, m))?;
    }
    Ok(())
}

fn aliases(binding: &ClassBinding) -> Vec<(String, &str)> {
    binding
        .tables()
        .into_iter()
        .enumerate()
        .map(|(i, t)| (if i == 0 { "t".to_string() } else { format!("t{}", i + 1) }, t))
        .collect()
}

fn alias_of<'a>(aliases: &'a [(String, &str)], table: &str) -> &'a str {
    &aliases.iter().find(|(_, t)| t.eq_ignore_ascii_case(table)).expect("every table has an alias").0
}

fn join_text(aliases: &[(String, &str)], j: &JoinPath) -> String {
    let a = alias_of(aliases, &j.from_table);
    let b = alias_of(aliases, &j.to_table);
    j.from_columns
        .iter()
        .zip(&j.to_columns)
        .map(|(x, y)| format!("{a}.{x} = {b}.{y}"))
        .collect::<Vec<_>>()
        .join(" AND ")
}

pub fn serialize_bindings(bind: &BindingSet) -> String {
    let mut blocks = Vec::new();
    for (id, b) in &bind.classes {
        let aliases = aliases(b);
        let tables: Vec<String> = aliases.iter().map(|(a, t)| format!("@Table@ {a}: {t}")).collect();
        let mut lines = Vec::new();
        for j in &b.joins {
            lines.push(format!("    @Join@ {}", join_text(&aliases, j)));
        }
        for p in &b.properties {
            lines.push(format!("    c.{} => {}.{}", p.property, alias_of(&aliases, &p.table), p.column));
        }
        for o in &b.objects {
            lines.push(format!("    c.{} => {}", o.property, join_text(&aliases, &o.join)));
        }
        let mut block = format!("@Class@ c: {id} => {}", tables.join(", "));
        if !lines.is_empty() {
            block.push('\n');
            block.push_str(&lines.join(",\n"));
        }
        blocks.push(block);
    }
    if blocks.is_empty() {
        return String::new();
    }
    let mut text = blocks.join("\n\n");
    text.push('\n');
    text
}

fn parse_qualified(s: &str, line: usize) -> Result<(&str, &str), FormatError> {
    s.trim()
        .split_once('.')
        .map(|(a, b)| (a.trim(), b.trim()))
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .ok_or_else(|| err(line, format!("expected <alias>.<column>, found {s:?}")))
}

fn parse_join(expr: &str, tables: &BTreeMap<String, String>, line: usize) -> Result<JoinPath, FormatError> {
    let lookup = |alias: &str| {
        tables.get(alias).cloned().ok_or_else(|| err(line, format!("unknown table alias {alias}")))
    };
    let mut join: Option<JoinPath> = None;
    for pred in expr.split(" AND ") {
        let (l, r) = pred.split_once('=').ok_or_else(|| err(line, format!("expected a join predicate, found {pred:?}")))?;
        let (la, lc) = parse_qualified(l, line)?;
        let (ra, rc) = parse_qualified(r, line)?;
        let (lt, rt) = (lookup(la)?, lookup(ra)?);
        let j = join.get_or_insert_with(|| JoinPath {
            from_table: lt.clone(),
            from_columns: Vec::new(),
            to_table: rt.clone(),
            to_columns: Vec::new(),
        });
        if j.from_table != lt || j.to_table != rt {
            return Err(err(line, "all predicates of one join must use the same two tables"));
        }
        j.from_columns.push(lc.to_string());
        j.to_columns.push(rc.to_string());
    }
    join.ok_or_else(|| err(line, "empty join"))
}

pub fn deserialize_bindings(text: &str) -> Result<BindingSet, FormatError> {
    let mut bind = BindingSet::default();
    let mut current: Option<(String, BTreeMap<String, String>, ClassBinding)> = None;

    let finish = |bind: &mut BindingSet, cur: Option<(String, BTreeMap<String, String>, ClassBinding)>, line: usize| {
        if let Some((id, _, b)) = cur {
            if bind.classes.insert(id.clone(), b).is_some() {
                return Err(err(line, format!("duplicate class binding {id}")));
            }
        }
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim().trim_end_matches(',').trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("@Class@") {
            finish(&mut bind, current.take(), line_no)?;
            let (lhs, rhs) = rest.split_once("=>").ok_or_else(|| err(line_no, "expected `=>` in class header"))?;
            let id = lhs
                .trim()
                .strip_prefix("c:")
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| err(line_no, "expected `c: <class>`"))?;
            let mut tables = BTreeMap::new();
            let mut own = None;
            for part in rhs.split(',') {
                let t = part
                    .trim()
                    .strip_prefix("@Table@")
                    .ok_or_else(|| err(line_no, format!("expected @Table@, found {:?}", part.trim())))?;
                let (alias, table) = t.split_once(':').ok_or_else(|| err(line_no, "expected `<alias>: <table>`"))?;
                let (alias, table) = (alias.trim().to_string(), table.trim().to_string());
                own.get_or_insert_with(|| table.clone());
                tables.insert(alias, table);
            }
            let own = own.ok_or_else(|| err(line_no, "class header names no table"))?;
            current = Some((id.to_string(), tables, ClassBinding::new(own)));
            continue;
        }
        let Some((_, tables, b)) = current.as_mut() else {
            return Err(err(line_no, "binding line outside a class block"));
        };
        if let Some(rest) = line.strip_prefix("@Join@") {
            b.joins.push(parse_join(rest.trim(), tables, line_no)?);
            continue;
        }
        let (lhs, rhs) = line.split_once("=>").ok_or_else(|| err(line_no, "expected `c.<property> => ...`"))?;
        let (c, prop) = parse_qualified(lhs, line_no)?;
        if c != "c" {
            return Err(err(line_no, format!("expected the class alias c, found {c}")));
        }
        if b.property(prop).is_some() || b.object(prop).is_some() {
            return Err(err(line_no, format!("duplicate binding for {prop}")));
        }
        if rhs.contains('=') {
            let join = parse_join(rhs.trim(), tables, line_no)?;
            b.objects.push(ObjectBinding { property: prop.to_string(), join });
        } else {
            let (alias, col) = parse_qualified(rhs, line_no)?;
            let table = tables.get(alias).ok_or_else(|| err(line_no, format!("unknown table alias {alias}")))?;
            b.properties.push(PropertyBinding { property: prop.to_string(), table: table.clone(), column: col.to_string() });
        }
    }
    finish(&mut bind, current, text.lines().count())?;
    Ok(bind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ontology::derive_ontology;
    use crate::physical::parse_ddl;

    fn fixture() -> (Ontology, BindingSet) {
        derive_ontology(&parse_ddl(fixtures::ADVENTURE_MINI_DDL).unwrap()).unwrap()
    }

    fn squash(s: &str) -> String {
        s.chars().filter(|c| !c.is_whitespace()).collect()
    }

    #[test]
    fn special_offer_product_block_matches_the_reference_text() {
        let published = "@Class@ specialofferproduct {
     @Data Property@: rowguid VARCHAR,
     @Data Property@: ModifiedDate VARCHAR,
     @Data Property@: SpecialOfferID INT,
     @Data Property@: ProductID INT,
     @Object Property@: has_product REFERENCES product
}";
        let text = serialize_ontology(&fixture().0);
        let start = text.find("@Class@ specialofferproduct {").unwrap();
        let end = start + text[start..].find('}').unwrap() + 1;
        assert_eq!(squash(&text[start..end]), squash(published));
    }

    #[test]
    fn empty_inputs_give_empty_text() {
        assert_eq!(serialize_ontology(&Ontology::default()), "");
        assert_eq!(serialize_bindings(&BindingSet::default()), "");
        assert!(deserialize_ontology("").unwrap().is_empty());
        assert!(deserialize_bindings("").unwrap().is_empty());
    }

    #[test]
    fn round_trips_are_stable() {
        let (mut onto, bind) = fixture();
        apply_annotation_text(&mut onto, fixtures::ADVENTURE_MINI_ANNOTATIONS).unwrap();
        let text = serialize_ontology(&onto);
        let back = deserialize_ontology(&text).unwrap();
        assert_eq!(back, onto);
        assert_eq!(serialize_ontology(&back), text);

        let btext = serialize_bindings(&bind);
        let bback = deserialize_bindings(&btext).unwrap();
        assert_eq!(bback, bind);
        assert_eq!(serialize_bindings(&bback), btext);
    }

    #[test]
    fn binding_block_shape() {
        let text = serialize_bindings(&fixture().1);
        let start = text.find("@Class@ c: specialofferproduct").unwrap();
        let block = text[start..].split("\n\n").next().unwrap();
        let mut lines = block.lines();
        assert_eq!(
            lines.next().unwrap().to_ascii_lowercase(),
            "@class@ c: specialofferproduct => @table@ t: specialofferproduct, @table@ t2: product"
        );
        let rest: Vec<_> = lines.map(str::trim).collect();
        assert_eq!(
            rest,
            [
                "c.rowguid => t.rowguid,",
                "c.ModifiedDate => t.ModifiedDate,",
                "c.SpecialOfferID => t.SpecialOfferID,",
                "c.ProductID => t.ProductID,",
                "c.has_product => t.ProductID = t2.ProductID",
            ]
        );
    }

    #[test]
    fn malformed_text_reports_a_line() {
        let e = deserialize_ontology("@Class@ a {\n  @Data Property@: x WIDGET\n}").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(deserialize_ontology("@Class@ a {\n").is_err());
        assert!(deserialize_ontology("@Class@ a {\n @Object Property@: has_b REFERENCES b\n}").is_err());
        let e = deserialize_bindings("@Class@ c: a => @Table@ t: A\n    c.x => q.x").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
