use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("embedder error: {0}")]
pub struct EmbedderError(pub String);

/// Maps texts to unit vectors of a fixed dimension.
pub trait Embedder: Send + Sync {
    fn id(&self) -> String;
    fn dimension(&self) -> usize;
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedderError>;

    fn embed_one(&self, text: &str) -> Result<Vec<f64>, EmbedderError> {
        let mut v = self.embed(&[text.to_string()])?;
        v.pop().ok_or_else(|| EmbedderError("embedder returned no vector".into()))
    }
}

/// Scales `v` to unit length. A zero vector stays zero.
pub fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Lowercase word tokens, split on non-alphanumerics and camelCase humps.
pub fn word_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for piece in text.split(|c: char| !c.is_alphanumeric()) {
        let chars: Vec<char> = piece.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let hump = (prev.is_lowercase() && cur.is_uppercase())
                || (prev.is_uppercase() && cur.is_uppercase() && next_lower)
                || (prev.is_alphabetic() != cur.is_alphabetic());
            if hump {
                out.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        if start < chars.len() {
            out.push(chars[start..].iter().collect::<String>().to_lowercase());
        }
    }
    out
}

/// Feature hashing over word tokens and character trigrams; no network, no
/// state, identical output on every run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicHashEmbedder {
    dimension: usize,
}

impl DeterministicHashEmbedder {
    pub const DEFAULT_DIMENSION: usize = 256;

    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        Self { dimension }
    }

    pub fn vector(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        let mut add = |feature: &str, weight: f64| {
            let h = fnv1a(feature.as_bytes());
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            v[(h % self.dimension as u64) as usize] += sign * weight;
        };
        let tokens = word_tokens(text);
        if tokens.is_empty() {
            add(&format!("t:{text}"), 1.0);
        }
        for tok in &tokens {
            add(&format!("w:{tok}"), 1.0);
            let padded: Vec<char> = format!("#{tok}#").chars().collect();
            for tri in padded.windows(3) {
                add(&format!("c:{}", tri.iter().collect::<String>()), 0.5);
            }
        }
        normalize(&mut v);
        v
    }
}

impl Default for DeterministicHashEmbedder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIMENSION)
    }
}

impl Embedder for DeterministicHashEmbedder {
    fn id(&self) -> String {
        format!("hash-fnv1a-{}", self.dimension)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedderError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// HTTP embedding service: `POST {texts}` answered by `{vectors}`.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    endpoint: String,
    dimension: usize,
    timeout: Duration,
}

impl RemoteEmbedder {
    pub fn new(endpoint: impl Into<String>, dimension: usize) -> Self {
        Self { endpoint: endpoint.into(), dimension, timeout: Duration::from_secs(30) }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

impl Embedder for RemoteEmbedder {
    fn id(&self) -> String {
        format!("remote:{}", self.endpoint)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedderError> {
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(self.timeout)).build().into();
        let mut resp = agent
            .post(&self.endpoint)
            .send_json(EmbedRequest { texts })
            .map_err(|e| EmbedderError(format!("{}: {e}", self.endpoint)))?;
        let body: EmbedResponse =
            resp.body_mut().read_json().map_err(|e| EmbedderError(format!("malformed embedding response: {e}")))?;
        if body.vectors.len() != texts.len() {
            return Err(EmbedderError(format!("expected {} vectors, got {}", texts.len(), body.vectors.len())));
        }
        let mut out = body.vectors;
        for v in &mut out {
            if v.len() != self.dimension {
                return Err(EmbedderError(format!("expected dimension {}, got {}", self.dimension, v.len())));
            }
            normalize(v);
        }
        Ok(out)
    }
}
