use serde::{Deserialize, Serialize};

use super::checkers::{repair_instruction, CheckerReport, Checkers};
use super::conversation::{Conversation, Role};
use super::prompt::{assemble_prompt, grounded_schema, PromptConfig, SourceView};
use super::provider::{LlmProvider, ProviderError};
use crate::engine::EngineError;
use crate::index::{select_sub_ontology, Budget, Embedder, SearchError, SemanticIndex, SubOntology};
use crate::ontology::UnboundEntityError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub max_iterations: usize,
    pub budget: Budget,
    pub prompt: PromptConfig,
    /// Ask the provider whether the accepted query answers the question.
    /// Advisory only; never affects acceptance.
    pub alignment_advisory: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self { max_iterations: 3, budget: Budget::default(), prompt: PromptConfig::default(), alignment_advisory: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerationStatus {
    Accepted,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub query: String,
    pub reports: Vec<CheckerReport>,
}

impl Attempt {
    pub fn is_valid(&self) -> bool {
        self.reports.iter().all(CheckerReport::is_valid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    /// The accepted query; absent when exhausted.
    pub query: Option<String>,
    pub sub_ontology: SubOntology,
    pub attempts: Vec<Attempt>,
    pub explanation: Option<String>,
    pub advisory: Option<String>,
    pub status: GenerationStatus,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerateError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Unbound(#[from] UnboundEntityError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Reply recorded in the history when no query survived the checkers.
pub const EXHAUSTED_REPLY: &str = "No valid query could be generated.";

/// Everything the loop reads besides the conversation.
#[derive(Clone, Copy)]
pub struct GenerationDeps<'a> {
    pub source: SourceView<'a>,
    pub index: &'a SemanticIndex,
    pub embedder: &'a dyn Embedder,
    pub provider: &'a dyn LlmProvider,
    pub checkers: &'a Checkers,
    pub config: &'a GenerationConfig,
}

/// Pulls the query out of a model response: the first fenced block, else
/// the block after a `Query:` line, else the whole text.
pub fn extract_sql(response: &str) -> String {
    let lines: Vec<&str> = response.lines().collect();
    if let Some(open) = lines.iter().position(|l| l.trim_start().starts_with("```")) {
        let body: Vec<&str> = lines[open + 1..].iter().take_while(|l| !l.trim_start().starts_with("```")).copied().collect();
        return body.join("\n").trim().to_string();
    }
    if let Some(at) = lines.iter().position(|l| l.trim_start().to_ascii_lowercase().starts_with("query:")) {
        let first = lines[at].trim_start()["query:".len()..].trim();
        let mut body: Vec<&str> = Vec::new();
        if !first.is_empty() {
            body.push(first);
        }
        for l in &lines[at + 1..] {
            if l.trim().is_empty() && !body.is_empty() {
                break;
            }
            if !l.trim().is_empty() {
                body.push(l);
            }
        }
        return body.join("\n").trim().to_string();
    }
    response.trim().to_string()
}

/// The self-repair loop: ground the question, prompt, check, and feed the
/// failures back until a query passes or the iteration budget runs out.
/// The question and the outcome are appended to the conversation history.
pub fn generate_query(
    conv: &mut Conversation,
    question: &str,
    deps: GenerationDeps<'_>,
) -> Result<GenerationResult, GenerateError> {
    let cfg = deps.config;
    let sub = select_sub_ontology(deps.index, deps.embedder, deps.source.ontology, question, &cfg.budget)?;
    let grounded = grounded_schema(deps.source, &sub)?;

    let mut attempts: Vec<Attempt> = Vec::new();
    let mut notes: Option<String> = None;
    let mut accepted = None;
    for _ in 0..cfg.max_iterations.max(1) {
        let prompt = assemble_prompt(deps.source, &sub, conv, question, notes.as_deref(), &cfg.prompt)?.render();
        let response = deps.provider.complete(&prompt)?;
        let query = extract_sql(&response);
        let reports = deps.checkers.run(&query, &grounded)?;
        let attempt = Attempt { query, reports };
        let ok = attempt.is_valid();
        if !ok {
            notes = Some(repair_instruction(&attempt.reports));
        }
        attempts.push(attempt);
        if ok {
            accepted = attempts.last().map(|a| a.query.clone());
            break;
        }
    }

    let advisory = match (&accepted, cfg.alignment_advisory) {
        (Some(q), true) => deps.provider.complete(&alignment_prompt(question, q)).ok(),
        _ => None,
    };
    conv.push(Role::User, question);
    conv.push(Role::System, accepted.as_deref().unwrap_or(EXHAUSTED_REPLY));
    let status = if accepted.is_some() { GenerationStatus::Accepted } else { GenerationStatus::Exhausted };
    Ok(GenerationResult { query: accepted, sub_ontology: sub, attempts, explanation: None, advisory, status })
}

fn alignment_prompt(question: &str, query: &str) -> String {
    format!(
        "Task: Judge whether the SQL query answers the question. Reply with \"Aligned\" or \"Not aligned\" and one sentence of justification.\n\nQuestion: {question}\n\nQuery:\n{query}\n"
    )
}
