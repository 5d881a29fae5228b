use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::physical::SqlType;

pub type Annotations = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataProperty {
    pub name: String,
    pub sql_type: SqlType,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub annotations: Annotations,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectProperty {
    pub name: String,
    /// Id of the referenced class.
    pub target: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub annotations: Annotations,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyClass {
    pub id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub annotations: Annotations,
    pub data_properties: Vec<DataProperty>,
    pub object_properties: Vec<ObjectProperty>,
}

impl OntologyClass {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            annotations: Annotations::new(),
            data_properties: Vec::new(),
            object_properties: Vec::new(),
        }
    }

    pub fn data_property(&self, name: &str) -> Option<&DataProperty> {
        self.data_properties.iter().find(|p| p.name.eq_ignore_ascii_case(name))
    }

    pub fn object_property(&self, name: &str) -> Option<&ObjectProperty> {
        self.object_properties.iter().find(|p| p.name.eq_ignore_ascii_case(name))
    }

    pub fn has_property(&self, name: &str) -> bool {
        self.data_property(name).is_some() || self.object_property(name).is_some()
    }

    pub fn property_names(&self) -> impl Iterator<Item = &str> {
        self.data_properties
            .iter()
            .map(|p| p.name.as_str())
            .chain(self.object_properties.iter().map(|p| p.name.as_str()))
    }
}

/// Logical model: classes keyed (and therefore ordered) by id.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Ontology {
    pub classes: BTreeMap<String, OntologyClass>,
}

impl Ontology {
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class(&self, id: &str) -> Option<&OntologyClass> {
        self.classes.get(id).or_else(|| self.classes.values().find(|c| c.id.eq_ignore_ascii_case(id)))
    }

    pub fn insert(&mut self, class: OntologyClass) {
        self.classes.insert(class.id.clone(), class);
    }

    pub fn object_property_count(&self) -> usize {
        self.classes.values().map(|c| c.object_properties.len()).sum()
    }

    /// Undirected adjacency over object-property edges, neighbors sorted by id.
    pub fn adjacency(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut adj: BTreeMap<&str, Vec<&str>> = self.classes.keys().map(|k| (k.as_str(), Vec::new())).collect();
        for class in self.classes.values() {
            for op in &class.object_properties {
                let Some(target) = self.classes.get(&op.target) else { continue };
                if target.id == class.id {
                    continue;
                }
                adj.get_mut(class.id.as_str()).expect("own id").push(target.id.as_str());
                adj.get_mut(target.id.as_str()).expect("target id").push(class.id.as_str());
            }
        }
        for list in adj.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Classes linked to `id` by an object property in either direction.
    pub fn linked_classes(&self, id: &str) -> Vec<&str> {
        self.adjacency().get(id).cloned().unwrap_or_default()
    }

    /// Sub-ontology over `ids`, keeping only object properties whose target is kept.
    pub fn restrict<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Ontology {
        let keep: Vec<&str> = ids.into_iter().collect();
        let mut out = Ontology::default();
        for id in &keep {
            if let Some(class) = self.classes.get(*id) {
                let mut c = class.clone();
                c.object_properties.retain(|op| keep.contains(&op.target.as_str()));
                out.insert(c);
            }
        }
        out
    }
}

/// Reference to one ontology entity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntityRef {
    Class { class: String },
    DataProperty { class: String, property: String },
    ObjectProperty { class: String, property: String },
}

impl EntityRef {
    pub fn class(id: impl Into<String>) -> Self {
        EntityRef::Class { class: id.into() }
    }

    pub fn class_id(&self) -> &str {
        match self {
            EntityRef::Class { class }
            | EntityRef::DataProperty { class, .. }
            | EntityRef::ObjectProperty { class, .. } => class,
        }
    }

    /// `class` or `class.property`.
    pub fn id(&self) -> String {
        match self {
            EntityRef::Class { class } => class.clone(),
            EntityRef::DataProperty { class, property } | EntityRef::ObjectProperty { class, property } => {
                format!("{class}.{property}")
            }
        }
    }

    /// The class ref followed by every property ref of that class.
    pub fn class_with_properties(class: &OntologyClass) -> Vec<EntityRef> {
        let mut refs = vec![EntityRef::class(&class.id)];
        refs.extend(class.data_properties.iter().map(|p| EntityRef::DataProperty {
            class: class.id.clone(),
            property: p.name.clone(),
        }));
        refs.extend(class.object_properties.iter().map(|p| EntityRef::ObjectProperty {
            class: class.id.clone(),
            property: p.name.clone(),
        }));
        refs
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Equi-join between two physical tables, oriented `from -> to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinPath {
    pub from_table: String,
    pub from_columns: Vec<String>,
    pub to_table: String,
    pub to_columns: Vec<String>,
}

impl JoinPath {
    pub fn reversed(&self) -> JoinPath {
        JoinPath {
            from_table: self.to_table.clone(),
            from_columns: self.to_columns.clone(),
            to_table: self.from_table.clone(),
            to_columns: self.from_columns.clone(),
        }
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &str)> {
        let from = self.from_columns.iter().map(|c| (self.from_table.as_str(), c.as_str()));
        let to = self.to_columns.iter().map(|c| (self.to_table.as_str(), c.as_str()));
        from.chain(to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyBinding {
    pub property: String,
    pub table: String,
    pub column: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectBinding {
    pub property: String,
    pub join: JoinPath,
}

/// Physical mapping of one class: its own table, extra tables reachable by
/// joins (after collapses), and one entry per property.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassBinding {
    pub table: String,
    pub joins: Vec<JoinPath>,
    pub properties: Vec<PropertyBinding>,
    pub objects: Vec<ObjectBinding>,
}

impl ClassBinding {
    pub fn new(table: impl Into<String>) -> Self {
        Self { table: table.into(), joins: Vec::new(), properties: Vec::new(), objects: Vec::new() }
    }

    pub fn property(&self, name: &str) -> Option<&PropertyBinding> {
        self.properties.iter().find(|p| p.property.eq_ignore_ascii_case(name))
    }

    pub fn object(&self, name: &str) -> Option<&ObjectBinding> {
        self.objects.iter().find(|p| p.property.eq_ignore_ascii_case(name))
    }

    /// Every table this binding touches, own table first.
    pub fn tables(&self) -> Vec<&str> {
        let joins = self.joins.iter().flat_map(|j| [j.from_table.as_str(), j.to_table.as_str()]);
        let props = self.properties.iter().map(|p| p.table.as_str());
        let objects = self.objects.iter().flat_map(|o| [o.join.from_table.as_str(), o.join.to_table.as_str()]);
        let mut out: Vec<&str> = Vec::new();
        for t in std::iter::once(self.table.as_str()).chain(joins).chain(props).chain(objects) {
            if !out.iter().any(|x| x.eq_ignore_ascii_case(t)) {
                out.push(t);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BindingSet {
    pub classes: BTreeMap<String, ClassBinding>,
}

impl BindingSet {
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class(&self, id: &str) -> Option<&ClassBinding> {
        self.classes.get(id)
    }

    /// Class id -> table name.
    pub fn class_bindings(&self) -> impl Iterator<Item = (&str, &str)> {
        self.classes.iter().map(|(k, v)| (k.as_str(), v.table.as_str()))
    }

    /// (class, property) -> (table, column).
    pub fn property_bindings(&self) -> impl Iterator<Item = ((&str, &str), (&str, &str))> {
        self.classes.iter().flat_map(|(k, v)| {
            v.properties
                .iter()
                .map(move |p| ((k.as_str(), p.property.as_str()), (p.table.as_str(), p.column.as_str())))
        })
    }

    /// (class, object property) -> join.
    pub fn object_bindings(&self) -> impl Iterator<Item = ((&str, &str), &JoinPath)> {
        self.classes
            .iter()
            .flat_map(|(k, v)| v.objects.iter().map(move |o| ((k.as_str(), o.property.as_str()), &o.join)))
    }

    /// Every (table, column) pair reachable through any binding entry.
    pub fn reachable_columns(&self) -> std::collections::BTreeSet<(String, String)> {
        let mut out = std::collections::BTreeSet::new();
        for b in self.classes.values() {
            for p in &b.properties {
                out.insert((p.table.to_ascii_lowercase(), p.column.to_ascii_lowercase()));
            }
            let joins = b.joins.iter().chain(b.objects.iter().map(|o| &o.join));
            for j in joins {
                for (t, c) in j.columns() {
                    out.insert((t.to_ascii_lowercase(), c.to_ascii_lowercase()));
                }
            }
        }
        out
    }
}
