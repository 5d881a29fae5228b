use std::collections::VecDeque;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("provider error: {0}")]
pub struct ProviderError(pub String);

/// A text-completion backend.
pub trait LlmProvider: Send + Sync {
    fn provider_id(&self) -> String;
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;
}

/// Replays an ordered list of responses and records every prompt it was
/// given. Fails once the script runs out.
#[derive(Debug, Default)]
pub struct ScriptedProvider {
    script: Mutex<VecDeque<String>>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedProvider {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { script: Mutex::new(responses.into_iter().map(Into::into).collect()), prompts: Mutex::default() }
    }

    /// A JSON array of strings, or plain text with responses separated by
    /// lines consisting of `---`.
    pub fn parse_script(text: &str) -> Result<Self, ProviderError> {
        if text.trim_start().starts_with('[') {
            let items: Vec<String> =
                serde_json::from_str(text).map_err(|e| ProviderError(format!("bad script: {e}")))?;
            return Ok(Self::new(items));
        }
        let mut items = Vec::new();
        let mut cur = String::new();
        for line in text.lines() {
            if line.trim() == "---" {
                items.push(std::mem::take(&mut cur));
            } else {
                cur.push_str(line);
                cur.push('\n');
            }
        }
        if !cur.trim().is_empty() {
            items.push(cur);
        }
        Ok(Self::new(items.into_iter().map(|s| s.trim().to_string())))
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path).map_err(|e| ProviderError(format!("{}: {e}", path.display())))?;
        Self::parse_script(&text)
    }

    pub fn push(&self, response: impl Into<String>) {
        self.script.lock().unwrap_or_else(|p| p.into_inner()).push_back(response.into());
    }

    pub fn remaining(&self) -> usize {
        self.script.lock().unwrap_or_else(|p| p.into_inner()).len()
    }

    /// Every prompt received so far, oldest first.
    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

impl LlmProvider for ScriptedProvider {
    fn provider_id(&self) -> String {
        "scripted".into()
    }

    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        self.prompts.lock().unwrap_or_else(|p| p.into_inner()).push(prompt.to_string());
        self.script
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .pop_front()
            .ok_or_else(|| ProviderError("script exhausted".into()))
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    prompt: &'a str,
    model: &'a str,
}

#[derive(Deserialize)]
struct CompletionResponse {
    text: String,
}

/// JSON over HTTP: `POST {prompt, model}` answered by `{text}`.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    endpoint: String,
    model: String,
    timeout: Duration,
}

impl HttpProvider {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, timeout: Duration) -> Self {
        Self { endpoint: endpoint.into(), model: model.into(), timeout }
    }
}

impl LlmProvider for HttpProvider {
    fn provider_id(&self) -> String {
        format!("http:{}#{}", self.endpoint, self.model)
    }

    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(self.timeout)).build().into();
        let mut resp = agent
            .post(&self.endpoint)
            .send_json(CompletionRequest { prompt, model: &self.model })
            .map_err(|e| ProviderError(format!("{}: {e}", self.endpoint)))?;
        let body: CompletionResponse =
            resp.body_mut().read_json().map_err(|e| ProviderError(format!("malformed completion response: {e}")))?;
        Ok(body.text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_is_replayed_in_order_then_fails() {
        let p = ScriptedProvider::new(["a", "b"]);
        assert_eq!(p.complete("1").unwrap(), "a");
        assert_eq!(p.complete("2").unwrap(), "b");
        assert!(p.complete("3").is_err());
        assert_eq!(p.prompts(), ["1", "2", "3"]);
    }

    #[test]
    fn script_formats() {
        let p = ScriptedProvider::parse_script(r#"["x", "y\nz"]"#).unwrap();
        assert_eq!(p.remaining(), 2);
        let p = ScriptedProvider::parse_script("SELECT 1\n---\nQuery:\nSELECT 2\n").unwrap();
        assert_eq!(p.complete("").unwrap(), "SELECT 1");
        assert_eq!(p.complete("").unwrap(), "Query:\nSELECT 2");
        assert!(ScriptedProvider::parse_script("[1, 2").is_err());
    }

    #[test]
    fn unreachable_endpoint_is_a_provider_error() {
        let p = HttpProvider::new("http://127.0.0.1:9/complete", "m", Duration::from_millis(300));
        assert!(p.complete("hi").is_err());
    }
}
