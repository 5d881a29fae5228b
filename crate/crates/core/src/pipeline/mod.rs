//! Prompt assembly, the three query checkers, the self-repair loop, and
//! query explanation.

mod checkers;
mod conversation;
mod explain;
mod generate;
mod prompt;
mod provider;

pub use checkers::{
    check_execution, check_semantics, check_syntax, repair_instruction, CheckerReport, CheckerType, Checkers, Dialect,
    Status,
};
pub use conversation::{Conversation, Message, Role, SourceRef};
pub use explain::{explain_query, explanation_prompt, ExplanationStyle};
pub use generate::{
    extract_sql, generate_query, Attempt, GenerateError, GenerationConfig, GenerationDeps, GenerationResult,
    GenerationStatus, EXHAUSTED_REPLY,
};
pub use prompt::{
    assemble_prompt, grounded_schema, FewShot, PromptBundle, PromptConfig, SourceView, HISTORY_HEADER, SCHEMA_HEADER,
    TASK_INSTRUCTIONS,
};
pub use provider::{HttpProvider, LlmProvider, ProviderError, ScriptedProvider};
