use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::provider::{LlmProvider, ProviderError};
use crate::index::SubOntology;
use crate::ontology::{serialize_ontology, Ontology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplanationStyle {
    Compact,
    Verbose,
    Formal,
    Simple,
    Precise,
}

impl ExplanationStyle {
    pub const ALL: [ExplanationStyle; 5] = [
        ExplanationStyle::Compact,
        ExplanationStyle::Verbose,
        ExplanationStyle::Formal,
        ExplanationStyle::Simple,
        ExplanationStyle::Precise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExplanationStyle::Compact => "Compact",
            ExplanationStyle::Verbose => "Verbose",
            ExplanationStyle::Formal => "Formal",
            ExplanationStyle::Simple => "Simple",
            ExplanationStyle::Precise => "Precise",
        }
    }

    fn directive(self) -> &'static str {
        match self {
            ExplanationStyle::Compact => "Use one or two short sentences.",
            ExplanationStyle::Verbose => "Walk through every table, join, filter and aggregate in turn.",
            ExplanationStyle::Formal => "Use a formal, report-like register.",
            ExplanationStyle::Simple => "Use everyday words and avoid database terms.",
            ExplanationStyle::Precise => "State exactly which values are filtered, combined and returned.",
        }
    }
}

impl fmt::Display for ExplanationStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExplanationStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown explanation style {s:?}; expected one of compact, verbose, formal, simple, precise"))
    }
}

pub fn explanation_prompt(query: &str, sub: &SubOntology, onto: &Ontology, question: &str, style: ExplanationStyle) -> String {
    format!(
        "Task: Explain the SQL query below to a non-expert user.\nStyle: {style}\n- Guideline: {}\n\nQuestion: {question}\n\nQuery:\n{}\n\nData model used by the query:\n\n{}",
        style.directive(),
        query.trim(),
        serialize_ontology(&sub.ontology(onto)),
    )
}

/// Asks the provider for an explanation and returns its text unchanged.
pub fn explain_query(
    query: &str,
    sub: &SubOntology,
    onto: &Ontology,
    question: &str,
    style: ExplanationStyle,
    provider: &dyn LlmProvider,
) -> Result<String, ProviderError> {
    provider.complete(&explanation_prompt(query, sub, onto, question, style))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn styles_parse_case_insensitively() {
        for s in ExplanationStyle::ALL {
            assert_eq!(s.as_str().to_lowercase().parse::<ExplanationStyle>(), Ok(s));
        }
        assert!("chatty".parse::<ExplanationStyle>().is_err());
    }
}
