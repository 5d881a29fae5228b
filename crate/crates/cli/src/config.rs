//! Service configuration: a TOML file overlaid with `AUTOBIR_*` variables.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use autobir_core::index::{Budget, DeterministicHashEmbedder, Embedder, RemoteEmbedder};
use autobir_core::pipeline::{HttpProvider, LlmProvider, ScriptedProvider};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("configuration error: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub endpoint: Option<String>,
    pub model: String,
    pub timeout_s: u64,
    /// Replays responses from this file instead of calling an endpoint.
    pub scripted_path: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self { endpoint: None, model: "default".into(), timeout_s: 60, scripted_path: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderKind {
    Deterministic,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub endpoint: Option<String>,
    pub dimension: usize,
    pub timeout_s: u64,
    /// Index data and object properties as well as classes.
    pub index_properties: bool,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            kind: EmbedderKind::Deterministic,
            endpoint: None,
            dimension: DeterministicHashEmbedder::DEFAULT_DIMENSION,
            timeout_s: 30,
            index_properties: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub catalog_root: PathBuf,
    pub tenant: String,
    pub listen_addr: String,
    pub k_history: usize,
    pub max_iterations: usize,
    pub chart_iterations: usize,
    pub provider: ProviderConfig,
    pub embedder: EmbedderConfig,
    pub budgets: Budget,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            catalog_root: PathBuf::from("autobir-catalog"),
            tenant: "default".into(),
            listen_addr: "127.0.0.1:8080".into(),
            k_history: 10,
            max_iterations: 3,
            chart_iterations: 3,
            provider: ProviderConfig::default(),
            embedder: EmbedderConfig::default(),
            budgets: Budget::default(),
        }
    }
}

fn parsed<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| ConfigError(format!("{key}={value:?}: {e}")))
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// File (if any), then process environment, then validation.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        cfg.apply_env(std::env::vars())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `AUTOBIR_<FIELD>` and `AUTOBIR_<SECTION>_<FIELD>` overrides.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        for (key, value) in vars {
            let Some(name) = key.strip_prefix("AUTOBIR_") else { continue };
            let opt = |v: &str| (!v.trim().is_empty()).then(|| v.trim().to_string());
            match name {
                "CATALOG_ROOT" => self.catalog_root = PathBuf::from(&value),
                "TENANT" => self.tenant = value.clone(),
                "LISTEN_ADDR" => self.listen_addr = value.clone(),
                "K_HISTORY" => self.k_history = parsed(&key, &value)?,
                "MAX_ITERATIONS" => self.max_iterations = parsed(&key, &value)?,
                "CHART_ITERATIONS" => self.chart_iterations = parsed(&key, &value)?,
                "PROVIDER_ENDPOINT" => self.provider.endpoint = opt(&value),
                "PROVIDER_MODEL" => self.provider.model = value.clone(),
                "PROVIDER_TIMEOUT_S" => self.provider.timeout_s = parsed(&key, &value)?,
                "PROVIDER_SCRIPTED_PATH" => self.provider.scripted_path = opt(&value).map(PathBuf::from),
                "EMBEDDER_KIND" => {
                    self.embedder.kind = match value.trim().to_ascii_lowercase().as_str() {
                        "deterministic" => EmbedderKind::Deterministic,
                        "remote" => EmbedderKind::Remote,
                        other => return Err(ConfigError(format!("{key}: unknown embedder kind {other:?}"))),
                    }
                }
                "EMBEDDER_ENDPOINT" => self.embedder.endpoint = opt(&value),
                "EMBEDDER_DIMENSION" => self.embedder.dimension = parsed(&key, &value)?,
                "EMBEDDER_TIMEOUT_S" => self.embedder.timeout_s = parsed(&key, &value)?,
                "EMBEDDER_INDEX_PROPERTIES" => self.embedder.index_properties = parsed(&key, &value)?,
                "BUDGETS_MAX_CLASSES" => self.budgets.max_classes = parsed(&key, &value)?,
                "BUDGETS_MAX_PATH_LEN" => self.budgets.max_path_len = parsed(&key, &value)?,
                "BUDGETS_SEED_K" => self.budgets.seed_k = parsed(&key, &value)?,
                "BUDGETS_MIN_SIM" => self.budgets.min_sim = parsed(&key, &value)?,
                // unrelated variables such as AUTOBIR_LOG are left alone
                _ => {}
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.provider.endpoint.is_some() && self.provider.scripted_path.is_some() {
            return Err(ConfigError("provider.endpoint and provider.scripted_path are mutually exclusive".into()));
        }
        if self.provider.timeout_s == 0 || self.embedder.timeout_s == 0 {
            return Err(ConfigError("timeouts must be positive".into()));
        }
        if self.embedder.dimension == 0 {
            return Err(ConfigError("embedder.dimension must be positive".into()));
        }
        if self.embedder.kind == EmbedderKind::Remote && self.embedder.endpoint.is_none() {
            return Err(ConfigError("embedder.kind = \"remote\" needs embedder.endpoint".into()));
        }
        if self.max_iterations == 0 || self.chart_iterations == 0 {
            return Err(ConfigError("iteration limits must be positive".into()));
        }
        if self.budgets.max_classes == 0 || self.budgets.seed_k == 0 {
            return Err(ConfigError("budgets.max_classes and budgets.seed_k must be positive".into()));
        }
        Ok(())
    }

    /// Creates the catalog root when its parent exists.
    pub fn ensure_catalog_root(&self) -> Result<(), ConfigError> {
        let root = &self.catalog_root;
        if root.is_dir() {
            return Ok(());
        }
        let parent = root.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(ConfigError(format!("catalog root {} has no parent directory", root.display())));
        }
        std::fs::create_dir(root).map_err(|e| ConfigError(format!("{}: {e}", root.display())))
    }

    pub fn provider(&self) -> Result<Arc<dyn LlmProvider>, ConfigError> {
        match (&self.provider.scripted_path, &self.provider.endpoint) {
            (Some(path), None) => Ok(Arc::new(ScriptedProvider::load(path).map_err(|e| ConfigError(e.to_string()))?)),
            (None, Some(endpoint)) => Ok(Arc::new(HttpProvider::new(
                endpoint.clone(),
                self.provider.model.clone(),
                Duration::from_secs(self.provider.timeout_s),
            ))),
            (None, None) => Err(ConfigError("no provider configured; set provider.endpoint or provider.scripted_path".into())),
            (Some(_), Some(_)) => Err(ConfigError("provider.endpoint and provider.scripted_path are mutually exclusive".into())),
        }
    }

    pub fn embedder(&self) -> Arc<dyn Embedder> {
        match (self.embedder.kind, &self.embedder.endpoint) {
            (EmbedderKind::Remote, Some(endpoint)) => Arc::new(
                RemoteEmbedder::new(endpoint.clone(), self.embedder.dimension)
                    .with_timeout(Duration::from_secs(self.embedder.timeout_s)),
            ),
            _ => Arc::new(DeterministicHashEmbedder::new(self.embedder.dimension)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_env_overlay() {
        let mut cfg = Config::from_toml(
            "catalog_root = \"/tmp/c\"\nk_history = 4\n[provider]\nscripted_path = \"s.json\"\n[budgets]\nmax_classes = 6\n",
        )
        .unwrap();
        assert_eq!(cfg.k_history, 4);
        assert_eq!(cfg.budgets.max_classes, 6);
        assert_eq!(cfg.budgets.seed_k, 3);
        let env = [("AUTOBIR_K_HISTORY", "7"), ("AUTOBIR_BUDGETS_MIN_SIM", "0.3"), ("HOME", "/x")];
        cfg.apply_env(env.iter().map(|(k, v)| (k.to_string(), v.to_string()))).unwrap();
        assert_eq!(cfg.k_history, 7);
        assert_eq!(cfg.budgets.min_sim, 0.3);
        cfg.validate().unwrap();
        assert!(cfg.apply_env([("AUTOBIR_K_HISTORY".to_string(), "many".to_string())]).is_err());
    }

    #[test]
    fn invalid_configs() {
        assert!(Config::from_toml("nonsense = 1").is_err());
        let mut cfg = Config::default();
        cfg.provider.endpoint = Some("http://x".into());
        cfg.provider.scripted_path = Some("s".into());
        assert!(cfg.validate().is_err());
        let mut cfg = Config::default();
        cfg.embedder.dimension = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = Config::default();
        cfg.provider.timeout_s = 0;
        assert!(cfg.validate().is_err());
        assert!(Config::default().provider().is_err());
    }

    #[test]
    fn catalog_root_creation() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = Config { catalog_root: dir.path().join("cat"), ..Default::default() };
        cfg.ensure_catalog_root().unwrap();
        assert!(cfg.catalog_root.is_dir());
        cfg.catalog_root = dir.path().join("missing/cat");
        assert!(cfg.ensure_catalog_root().is_err());
    }
}
