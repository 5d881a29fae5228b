//! The operations behind both the CLI and the HTTP service.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, TryLockError};

use autobir_core::catalog::{Artifacts, Catalog, CatalogError, DataSourceRecord, Resolved};
use autobir_core::engine::ConnectionDescriptor;
use autobir_core::index::{build_index, knn_search, EntityKind, Embedder, IndexConfig, SearchFilter, SearchHit};
use autobir_core::ontology::{
    apply_annotation_text, apply_policies, derive_ontology, parse_policies, serialize_bindings, serialize_ontology,
    BindingSet,
};
use autobir_core::physical::{introspect, parse_ddl};
use autobir_core::pipeline::{
    explain_query, generate_query, Checkers, Conversation, ExplanationStyle, GenerationConfig, GenerationDeps,
    GenerationResult, GenerationStatus, LlmProvider, PromptConfig, SourceRef, SourceView,
};
use autobir_core::reporting::{
    execute_query, generate_chart, replay_testcase, ChartOutcome, Page, ReplayOutcome, ResultSet, TestCaseParts,
    TestCaseRecord, TestCaseStore, SAMPLE_ROWS, SNAPSHOT_ROWS,
};
use serde::{Deserialize, Serialize};

use crate::config::{Config, ConfigError};
use crate::error::AppError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SetupRequest {
    pub name: String,
    pub tenant: Option<String>,
    pub collection: Option<String>,
    pub ddl: Option<String>,
    pub connection: Option<ConnectionDescriptor>,
    pub policies: Option<String>,
    pub annotations: Option<String>,
    /// Publish a new version when the name is already registered.
    pub new_version: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetupOutcome {
    pub id: String,
    pub version: u32,
    pub classes: usize,
    pub object_properties: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OntologyView {
    pub id: String,
    pub version: u32,
    pub ontology: String,
    pub bindings: String,
}

/// The accepted (or exhausted) answer of the latest `ask`, with whatever was
/// derived from it since.
#[derive(Debug, Clone)]
struct Answer {
    question: String,
    result: GenerationResult,
    execution: Option<ResultSet>,
    chart: Option<autobir_core::reporting::ChartSpec>,
}

struct Session {
    conversation: Conversation,
    source: Arc<Resolved>,
    answer: Option<Answer>,
}

pub struct Workbench {
    config: Config,
    catalog: Catalog,
    provider: Option<Arc<dyn LlmProvider>>,
    embedder: Arc<dyn Embedder>,
    testcases: TestCaseStore,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

fn restrict_bindings(bind: &BindingSet, classes: &[String]) -> BindingSet {
    BindingSet {
        classes: bind.classes.iter().filter(|(k, _)| classes.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect(),
    }
}

impl Workbench {
    /// Opens the catalog and builds the configured provider, if any. A
    /// missing provider only fails the operations that need one.
    pub fn open(config: Config) -> Result<Self, AppError> {
        let provider = match (&config.provider.scripted_path, &config.provider.endpoint) {
            (None, None) => None,
            _ => Some(config.provider()?),
        };
        Self::build(config, provider)
    }

    pub fn with_provider(config: Config, provider: Arc<dyn LlmProvider>) -> Result<Self, AppError> {
        Self::build(config, Some(provider))
    }

    fn build(config: Config, provider: Option<Arc<dyn LlmProvider>>) -> Result<Self, AppError> {
        config.validate()?;
        config.ensure_catalog_root()?;
        let catalog = Catalog::open(&config.catalog_root)?;
        let testcases = TestCaseStore::new(&config.catalog_root);
        let embedder = config.embedder();
        Ok(Self { config, catalog, provider, embedder, testcases, sessions: Mutex::default() })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    fn provider(&self) -> Result<Arc<dyn LlmProvider>, AppError> {
        match &self.provider {
            Some(p) => Ok(p.clone()),
            None => Err(ConfigError("no provider configured; set provider.endpoint or provider.scripted_path".into()).into()),
        }
    }

    fn tenant<'a>(&'a self, tenant: Option<&'a str>) -> &'a str {
        tenant.filter(|t| !t.is_empty()).unwrap_or(&self.config.tenant)
    }

    /// Ingest, derive, refine, annotate, index, register and publish.
    pub fn setup(&self, req: &SetupRequest) -> Result<SetupOutcome, AppError> {
        if req.name.trim().is_empty() {
            return Err(AppError::BadRequest("a data source needs a name".into()));
        }
        let tenant = self.tenant(req.tenant.as_deref());
        let mut warnings = Vec::new();
        let mut physical = match (&req.ddl, &req.connection) {
            (Some(ddl), _) => parse_ddl(ddl)?,
            (None, Some(conn)) => {
                let i = introspect(conn)?;
                warnings.extend(i.warnings.iter().map(ToString::to_string));
                i.model
            }
            (None, None) => return Err(AppError::BadRequest("provide DDL or a database connection".into())),
        };
        physical.source_id = req.name.clone();
        let (mut ontology, mut bindings) = derive_ontology(&physical)?;
        if let Some(text) = &req.policies {
            let refined = apply_policies(&ontology, &bindings, &parse_policies(text)?)?;
            ontology = refined.ontology;
            bindings = refined.bindings;
        }
        if let Some(text) = &req.annotations {
            apply_annotation_text(&mut ontology, text).map_err(AppError::Annotation)?;
        }

        let record = match self.catalog.find(tenant, &req.name) {
            Ok(r) if req.new_version => r,
            Ok(_) => return Err(CatalogError::DuplicateName { tenant: tenant.into(), name: req.name.clone() }.into()),
            Err(CatalogError::NotFound(_)) => self.catalog.register_source(
                &req.name,
                req.connection.clone(),
                tenant,
                req.collection.as_deref().unwrap_or("default"),
            )?,
            Err(e) => return Err(e.into()),
        };
        let cfg = IndexConfig {
            index_properties: self.config.embedder.index_properties,
            source_id: record.id.clone(),
            ..Default::default()
        };
        let index = build_index(&ontology, self.embedder.as_ref(), &cfg)?;
        let entry = self.catalog.publish_version(
            tenant,
            &record.id,
            Artifacts { ontology: &ontology, bindings: &bindings, physical: &physical, index: Some(&index) },
        )?;
        Ok(SetupOutcome {
            id: record.id,
            version: entry.version,
            classes: ontology.classes.len(),
            object_properties: ontology.object_property_count(),
            warnings,
        })
    }

    pub fn list_sources(&self, tenant: Option<&str>, collection: Option<&str>) -> Result<Vec<DataSourceRecord>, AppError> {
        Ok(self.catalog.list_sources(self.tenant(tenant), collection)?)
    }

    fn resolve(&self, tenant: Option<&str>, source: &str, version: Option<u32>) -> Result<Resolved, AppError> {
        let mut r = self.catalog.resolve(self.tenant(tenant), source, version)?;
        if r.index.as_ref().is_none_or(|i| i.embedder_id != self.embedder.id()) {
            // published without an index, or with a different embedder
            let cfg = IndexConfig {
                index_properties: self.config.embedder.index_properties,
                source_id: r.record.id.clone(),
                ..Default::default()
            };
            r.index = Some(build_index(&r.ontology, self.embedder.as_ref(), &cfg)?);
        }
        Ok(r)
    }

    pub fn ontology(&self, tenant: Option<&str>, source: &str, version: Option<u32>) -> Result<OntologyView, AppError> {
        let r = self.catalog.resolve(self.tenant(tenant), source, version)?;
        Ok(OntologyView {
            id: r.record.id.clone(),
            version: r.version.version,
            ontology: serialize_ontology(&r.ontology),
            bindings: serialize_bindings(&r.bindings),
        })
    }

    pub fn search(
        &self,
        tenant: Option<&str>,
        source: &str,
        version: Option<u32>,
        query: &str,
        k: usize,
        kind: Option<EntityKind>,
    ) -> Result<Vec<SearchHit>, AppError> {
        let r = self.resolve(tenant, source, version)?;
        let index = r.index.as_ref().expect("resolve always attaches an index");
        Ok(knn_search(index, self.embedder.as_ref(), query, k, &SearchFilter { kind, source_id: None })?)
    }

    pub fn create_conversation(&self, tenant: Option<&str>, source: &str, version: Option<u32>) -> Result<String, AppError> {
        let resolved = self.resolve(tenant, source, version)?;
        let source_ref = SourceRef { source_id: resolved.record.id.clone(), version: resolved.version.version };
        let conversation = Conversation::new(source_ref, self.config.k_history);
        let id = conversation.id.clone();
        let session = Session { conversation, source: Arc::new(resolved), answer: None };
        self.sessions.lock().unwrap_or_else(|p| p.into_inner()).insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    /// Runs `f` with exclusive access to a conversation; a concurrent caller
    /// gets `Busy` instead of waiting.
    fn with_session<T>(&self, cid: &str, f: impl FnOnce(&mut Session) -> Result<T, AppError>) -> Result<T, AppError> {
        let slot = self
            .sessions
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .get(cid)
            .cloned()
            .ok_or_else(|| AppError::ConversationNotFound(cid.into()))?;
        let mut guard = match slot.try_lock() {
            Ok(g) => g,
            Err(TryLockError::WouldBlock) => return Err(AppError::Busy(cid.into())),
            Err(TryLockError::Poisoned(p)) => p.into_inner(),
        };
        f(&mut guard)
    }

    fn generation_config(&self) -> GenerationConfig {
        GenerationConfig {
            max_iterations: self.config.max_iterations,
            budget: self.config.budgets,
            prompt: PromptConfig::default(),
            alignment_advisory: false,
        }
    }

    pub fn ask(&self, cid: &str, question: &str) -> Result<GenerationResult, AppError> {
        if question.trim().is_empty() {
            return Err(AppError::BadRequest("the question is empty".into()));
        }
        let provider = self.provider()?;
        let config = self.generation_config();
        self.with_session(cid, |s| {
            let source = s.source.clone();
            let checkers = Checkers::new(source.record.connection.clone());
            let deps = GenerationDeps {
                source: SourceView::from(source.as_ref()),
                index: source.index.as_ref().expect("resolve always attaches an index"),
                embedder: self.embedder.as_ref(),
                provider: provider.as_ref(),
                checkers: &checkers,
                config: &config,
            };
            let result = generate_query(&mut s.conversation, question, deps)?;
            s.answer = Some(Answer { question: question.to_string(), result: result.clone(), execution: None, chart: None });
            Ok(result)
        })
    }

    fn accepted(s: &Session) -> Result<(&Answer, &str), AppError> {
        let answer = s.answer.as_ref().ok_or_else(|| AppError::NoAnswer("ask a question first".into()))?;
        match (&answer.result.status, &answer.result.query) {
            (GenerationStatus::Accepted, Some(q)) => Ok((answer, q.as_str())),
            _ => Err(AppError::NoAnswer("the last question has no accepted query".into())),
        }
    }

    fn connection(s: &Session) -> Result<ConnectionDescriptor, AppError> {
        s.source
            .record
            .connection
            .clone()
            .ok_or_else(|| AppError::NoConnection(format!("source {} has no database connection", s.source.record.name)))
    }

    pub fn explain(&self, cid: &str, style: ExplanationStyle) -> Result<String, AppError> {
        let provider = self.provider()?;
        self.with_session(cid, |s| {
            let (answer, query) = Self::accepted(s)?;
            let text = explain_query(
                query,
                &answer.result.sub_ontology,
                &s.source.ontology,
                &answer.question,
                style,
                provider.as_ref(),
            )?;
            if let Some(a) = s.answer.as_mut() {
                a.result.explanation = Some(text.clone());
            }
            Ok(text)
        })
    }

    pub fn execute(&self, cid: &str, page: Page) -> Result<ResultSet, AppError> {
        self.with_session(cid, |s| {
            let (_, query) = Self::accepted(s)?;
            let rs = execute_query(&Self::connection(s)?, query, page)?;
            if let Some(a) = s.answer.as_mut() {
                a.execution = Some(rs.clone());
            }
            Ok(rs)
        })
    }

    pub fn visualize(&self, cid: &str) -> Result<ChartOutcome, AppError> {
        let provider = self.provider()?;
        let iterations = self.config.chart_iterations;
        self.with_session(cid, |s| {
            let (answer, query) = Self::accepted(s)?;
            let rs = match &answer.execution {
                Some(rs) => rs.clone(),
                None => execute_query(&Self::connection(s)?, query, Page::new(0, SAMPLE_ROWS))?,
            };
            let out = generate_chart(&answer.question, query, &rs, provider.as_ref(), iterations)?;
            if let Some(a) = s.answer.as_mut() {
                a.chart = Some(out.spec.clone());
            }
            Ok(out)
        })
    }

    /// Archives the latest accepted answer; the snapshot is always the first
    /// rows of the result, whatever page was viewed.
    pub fn archive(&self, cid: &str) -> Result<TestCaseRecord, AppError> {
        self.with_session(cid, |s| {
            let (answer, query) = Self::accepted(s)?;
            let snapshot = match &s.source.record.connection {
                Some(conn) => Some(execute_query(conn, query, Page::new(0, SNAPSHOT_ROWS))?),
                None => None,
            };
            let sub = &answer.result.sub_ontology;
            let onto_text = serialize_ontology(&sub.ontology(&s.source.ontology));
            let bind_text = serialize_bindings(&restrict_bindings(&s.source.bindings, &sub.classes));
            Ok(self.testcases.archive(TestCaseParts {
                question: &answer.question,
                query,
                explanation: answer.result.explanation.as_deref(),
                result: snapshot.as_ref(),
                sub_ontology_text: Some(&onto_text),
                bindings_snippet: Some(&bind_text),
                chart_spec: answer.chart.as_ref(),
                checker_trail: &answer.result.attempts,
                source_ref: Some(&s.conversation.source_ref),
            })?)
        })
    }

    pub fn list_testcases(&self, source: Option<&str>) -> Result<Vec<TestCaseRecord>, AppError> {
        Ok(self.testcases.list(source)?)
    }

    /// Replays against `database` when given, else the connection of the
    /// record's source.
    pub fn replay(&self, tenant: Option<&str>, id: &str, database: Option<&Path>) -> Result<ReplayOutcome, AppError> {
        let record = self.testcases.load(id)?;
        let conn = match database {
            Some(p) => ConnectionDescriptor::from_path(p),
            None => {
                let src = record
                    .source_ref
                    .as_ref()
                    .ok_or_else(|| AppError::NoConnection(format!("test case {id} names no source")))?;
                self.catalog
                    .find(self.tenant(tenant), &src.source_id)?
                    .connection
                    .ok_or_else(|| AppError::NoConnection(format!("source {} has no database connection", src.source_id)))?
            }
        };
        Ok(replay_testcase(&record, &conn)?)
    }
}
