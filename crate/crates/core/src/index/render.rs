use serde::{Deserialize, Serialize};

use crate::ontology::{EntityRef, Ontology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Class,
    DataProperty,
    ObjectProperty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Append property names to class renderings.
    pub include_properties: bool,
    /// Annotation keys to append, in this order, when present.
    pub annotation_keys: Vec<String>,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { include_properties: false, annotation_keys: vec!["description".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRendering {
    pub entity_id: String,
    pub kind: EntityKind,
    pub text: String,
}

impl EntityRendering {
    /// Owning class of the entity.
    pub fn class_id(&self) -> &str {
        self.entity_id.split_once('.').map(|(c, _)| c).unwrap_or(&self.entity_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown entity {0}")]
pub struct UnknownEntityError(pub String);

/// `<name>; <annotation>...; <property>...` where `<name>` is the class id or
/// the property name.
pub fn render_entity(onto: &Ontology, entity: &EntityRef, cfg: &RenderConfig) -> Result<EntityRendering, UnknownEntityError> {
    let unknown = || UnknownEntityError(entity.id());
    let class = onto.classes.get(entity.class_id()).ok_or_else(unknown)?;
    let mut parts: Vec<&str> = Vec::new();
    let (kind, annotations) = match entity {
        EntityRef::Class { .. } => {
            parts.push(&class.id);
            (EntityKind::Class, &class.annotations)
        }
        EntityRef::DataProperty { property, .. } => {
            let p = class.data_properties.iter().find(|p| &p.name == property).ok_or_else(unknown)?;
            parts.push(&p.name);
            (EntityKind::DataProperty, &p.annotations)
        }
        EntityRef::ObjectProperty { property, .. } => {
            let p = class.object_properties.iter().find(|p| &p.name == property).ok_or_else(unknown)?;
            parts.push(&p.name);
            (EntityKind::ObjectProperty, &p.annotations)
        }
    };
    for key in &cfg.annotation_keys {
        if let Some(v) = annotations.get(key).filter(|v| !v.trim().is_empty()) {
            parts.push(v);
        }
    }
    if cfg.include_properties && kind == EntityKind::Class {
        parts.extend(class.property_names());
    }
    Ok(EntityRendering { entity_id: entity.id(), kind, text: parts.join("; ") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ontology::derive_ontology;
    use crate::physical::parse_ddl;

    fn product_only() -> Ontology {
        let ddl = "CREATE TABLE Product (Name varchar, ProductNumber varchar);";
        derive_ontology(&parse_ddl(ddl).unwrap()).unwrap().0
    }

    #[test]
    fn join_rule() {
        let mut onto = product_only();
        let bare = RenderConfig { include_properties: false, annotation_keys: vec![] };
        let r = render_entity(&onto, &EntityRef::class("product"), &bare).unwrap();
        assert_eq!((r.text.as_str(), r.kind), ("product", EntityKind::Class));

        let with_props = RenderConfig { include_properties: true, annotation_keys: vec![] };
        assert_eq!(render_entity(&onto, &EntityRef::class("product"), &with_props).unwrap().text, "product; Name; ProductNumber");

        onto.classes.get_mut("product").unwrap().annotations.insert("description".into(), "bicycle merchandise".into());
        let desc = RenderConfig { include_properties: false, annotation_keys: vec!["description".into()] };
        assert_eq!(render_entity(&onto, &EntityRef::class("product"), &desc).unwrap().text, "product; bicycle merchandise");
    }

    #[test]
    fn unknown_entities() {
        let onto = product_only();
        let cfg = RenderConfig::default();
        assert!(render_entity(&onto, &EntityRef::class("ghost"), &cfg).is_err());
        let r = EntityRef::DataProperty { class: "product".into(), property: "Nope".into() };
        assert_eq!(render_entity(&onto, &r, &cfg).unwrap_err(), UnknownEntityError("product.Nope".into()));
    }

    #[test]
    fn property_rendering_carries_its_class() {
        let (mut onto, _) = derive_ontology(&parse_ddl(fixtures::INVENTORY_DDL).unwrap()).unwrap();
        crate::ontology::apply_annotation(&mut onto, "product.Name", "description", "Product name".into()).unwrap();
        let r = EntityRef::DataProperty { class: "product".into(), property: "Name".into() };
        let got = render_entity(&onto, &r, &RenderConfig::default()).unwrap();
        assert_eq!(got.text, "Name; Product name");
        assert_eq!(got.class_id(), "product");
        assert_eq!(got.kind, EntityKind::DataProperty);
    }
}
