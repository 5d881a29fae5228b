use serde::{Deserialize, Serialize};

use super::conversation::Conversation;
use crate::index::SubOntology;
use crate::ontology::{ground, BindingSet, GroundedSchema, Ontology, UnboundEntityError};
use crate::physical::PhysicalModel;

pub const TASK_INSTRUCTIONS: &str =
    "Task: Given a data schema, and a free-text question, produce an SQL query that matches it.";

pub const SCHEMA_HEADER: &str = "Your query must refer to the following schemas:";

pub const HISTORY_HEADER: &str = "Conversation so far:";

/// The published artifacts of one source version, borrowed.
#[derive(Debug, Clone, Copy)]
pub struct SourceView<'a> {
    pub ontology: &'a Ontology,
    pub bindings: &'a BindingSet,
    pub physical: &'a PhysicalModel,
}

impl<'a> From<&'a crate::catalog::Resolved> for SourceView<'a> {
    fn from(r: &'a crate::catalog::Resolved) -> Self {
        Self { ontology: &r.ontology, bindings: &r.bindings, physical: &r.physical }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShot {
    pub question: String,
    pub query: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub guidelines: Vec<String>,
    /// Question/query pairs supplied at activation time.
    pub examples: Vec<FewShot>,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            guidelines: vec![
                "Use only the tables and columns listed in the schemas below.".into(),
                "Join tables through the foreign keys shown in the schemas.".into(),
                "Produce a single read-only SELECT statement.".into(),
                "Answer with the query only, after a line reading \"Query:\".".into(),
            ],
            examples: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub task_instructions: String,
    pub guidelines: Vec<String>,
    pub examples: Vec<FewShot>,
    pub grounded_schema_text: String,
    pub history_text: String,
    pub question: String,
    pub repair_notes: Option<String>,
}

impl PromptBundle {
    /// Sections in fixed order: task with guidelines, schema, history,
    /// question, repair notes. Empty history and absent notes are omitted.
    pub fn render(&self) -> String {
        let mut head = self.task_instructions.clone();
        for g in &self.guidelines {
            head.push_str("\n- Guideline: ");
            head.push_str(g);
        }
        for ex in &self.examples {
            head.push_str(&format!("\n- Example question: {}\n  Example query: {}", ex.question, fold(&ex.query)));
        }
        let mut sections = vec![head, format!("{SCHEMA_HEADER}\n\n{}", self.grounded_schema_text)];
        if !self.history_text.is_empty() {
            sections.push(format!("{HISTORY_HEADER}\n{}", self.history_text));
        }
        sections.push(format!("Question: {}", self.question));
        if let Some(notes) = &self.repair_notes {
            sections.push(notes.clone());
        }
        let mut out = sections.join("\n\n");
        out.push('\n');
        out
    }
}

fn fold(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Table fragments behind the selected classes.
pub fn grounded_schema(src: SourceView<'_>, sub: &SubOntology) -> Result<GroundedSchema, UnboundEntityError> {
    ground(&sub.entity_refs(src.ontology), src.ontology, src.bindings, src.physical)
}

pub fn assemble_prompt(
    src: SourceView<'_>,
    sub: &SubOntology,
    conv: &Conversation,
    question: &str,
    repair_notes: Option<&str>,
    cfg: &PromptConfig,
) -> Result<PromptBundle, UnboundEntityError> {
    let schema = grounded_schema(src, sub)?;
    Ok(PromptBundle {
        task_instructions: TASK_INSTRUCTIONS.into(),
        guidelines: cfg.guidelines.clone(),
        examples: cfg.examples.clone(),
        grounded_schema_text: schema.to_text(),
        history_text: conv.history_text(),
        question: question.trim().to_string(),
        repair_notes: repair_notes.map(str::to_string),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ontology::derive_ontology;
    use crate::physical::parse_ddl;
    use crate::pipeline::conversation::{Role, SourceRef};

    fn inventory() -> (Ontology, BindingSet, PhysicalModel) {
        let model = parse_ddl(fixtures::INVENTORY_DDL).unwrap();
        let (o, b) = derive_ontology(&model).unwrap();
        (o, b, model)
    }

    fn sub(classes: &[&str]) -> SubOntology {
        SubOntology { classes: classes.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    #[test]
    fn helmets_prompt_has_both_tables_and_the_question() {
        let (o, b, m) = inventory();
        let src = SourceView { ontology: &o, bindings: &b, physical: &m };
        let conv = Conversation::new(SourceRef { source_id: "s".into(), version: 1 }, 10);
        let q = "what kinds of helmets are in stock?";
        let text = assemble_prompt(src, &sub(&["product", "productinventory"]), &conv, q, None, &PromptConfig::default())
            .unwrap()
            .render();
        assert!(text.starts_with(TASK_INSTRUCTIONS));
        assert!(text.contains("CREATE TABLE Product ("));
        assert!(text.contains("CREATE TABLE ProductInventory ("));
        assert!(text.contains("FOREIGN KEY (ProductID) REFERENCES Product(ProductID)"));
        assert!(text.trim_end().ends_with("Question: what kinds of helmets are in stock?"));
        assert!(!text.contains(HISTORY_HEADER));
        let again = assemble_prompt(src, &sub(&["product", "productinventory"]), &conv, q, None, &PromptConfig::default())
            .unwrap()
            .render();
        assert_eq!(text, again);
    }

    #[test]
    fn history_and_notes_come_after_schema() {
        let (o, b, m) = inventory();
        let src = SourceView { ontology: &o, bindings: &b, physical: &m };
        let mut conv = Conversation::new(SourceRef { source_id: "s".into(), version: 1 }, 10);
        conv.push(Role::User, "first");
        conv.push(Role::System, "SELECT 1");
        let text = assemble_prompt(src, &sub(&["product"]), &conv, "second", Some("NOTES"), &PromptConfig::default())
            .unwrap()
            .render();
        let at = |s: &str| text.find(s).unwrap();
        assert!(at(SCHEMA_HEADER) < at(HISTORY_HEADER));
        assert!(at(HISTORY_HEADER) < at("Question: second"));
        assert!(text.trim_end().ends_with("NOTES"));
        assert!(!text.contains("ProductInventory"));
    }

    #[test]
    fn unknown_class_is_unbound() {
        let (o, b, m) = inventory();
        let src = SourceView { ontology: &o, bindings: &b, physical: &m };
        let conv = Conversation::new(SourceRef { source_id: "s".into(), version: 1 }, 10);
        // restrict() ignores unknown ids, so an unknown class yields an empty grounding
        let p = assemble_prompt(src, &sub(&["nope"]), &conv, "q", None, &PromptConfig::default()).unwrap();
        assert!(p.grounded_schema_text.is_empty());
    }
}
