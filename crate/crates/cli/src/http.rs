//! HTTP adapter over [`Workbench`]. Handlers only translate requests and
//! responses; blocking work runs off the async executor.

use std::sync::Arc;

use autobir_core::index::EntityKind;
use autobir_core::pipeline::ExplanationStyle;
use autobir_core::reporting::Page;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::AppError;
use crate::workbench::{SetupRequest, Workbench};

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.body())).into_response()
    }
}

type Shared = State<Arc<Workbench>>;
type ApiResult = Result<Json<Value>, AppError>;

async fn blocking<T: Serialize + Send + 'static>(
    wb: Arc<Workbench>,
    f: impl FnOnce(&Workbench) -> Result<T, AppError> + Send + 'static,
) -> ApiResult {
    let out = tokio::task::spawn_blocking(move || f(&wb))
        .await
        .map_err(|e| AppError::BadRequest(format!("request aborted: {e}")))??;
    Ok(Json(serde_json::to_value(out).expect("responses serialize")))
}

fn bad(e: impl std::fmt::Display) -> AppError {
    AppError::BadRequest(e.to_string())
}

fn query<T>(r: Result<Query<T>, QueryRejection>) -> Result<T, AppError> {
    r.map(|Query(v)| v).map_err(|e| bad(e.body_text()))
}

fn json<T>(r: Result<Json<T>, JsonRejection>) -> Result<T, AppError> {
    r.map(|Json(v)| v).map_err(|e| bad(e.body_text()))
}

fn body<T: for<'de> Deserialize<'de> + Default>(raw: Option<Json<Value>>) -> Result<T, AppError> {
    match raw {
        None => Ok(T::default()),
        Some(Json(Value::Null)) => Ok(T::default()),
        Some(Json(v)) => serde_json::from_value(v).map_err(bad),
    }
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn create_source(State(wb): Shared, req: Result<Json<SetupRequest>, JsonRejection>) -> ApiResult {
    let req = json(req)?;
    blocking(wb, move |wb| wb.setup(&req)).await
}

#[derive(Debug, Default, Deserialize)]
struct ListParams {
    tenant: Option<String>,
    collection: Option<String>,
}

async fn list_sources(State(wb): Shared, p: Result<Query<ListParams>, QueryRejection>) -> ApiResult {
    let p = query(p)?;
    blocking(wb, move |wb| wb.list_sources(p.tenant.as_deref(), p.collection.as_deref())).await
}

#[derive(Debug, Default, Deserialize)]
struct VersionParams {
    tenant: Option<String>,
    version: Option<u32>,
}

async fn get_ontology(State(wb): Shared, Path(id): Path<String>, p: Result<Query<VersionParams>, QueryRejection>) -> ApiResult {
    let p = query(p)?;
    blocking(wb, move |wb| wb.ontology(p.tenant.as_deref(), &id, p.version)).await
}

#[derive(Debug, Default, Deserialize)]
struct SearchParams {
    q: String,
    k: Option<usize>,
    kind: Option<EntityKind>,
    tenant: Option<String>,
    version: Option<u32>,
}

async fn search(State(wb): Shared, Path(id): Path<String>, p: Result<Query<SearchParams>, QueryRejection>) -> ApiResult {
    let p = query(p)?;
    blocking(wb, move |wb| wb.search(p.tenant.as_deref(), &id, p.version, &p.q, p.k.unwrap_or(5), p.kind)).await
}

#[derive(Debug, Default, Deserialize)]
struct NewConversation {
    source_id: String,
    version: Option<u32>,
    tenant: Option<String>,
}

async fn create_conversation(State(wb): Shared, req: Result<Json<NewConversation>, JsonRejection>) -> ApiResult {
    let req = json(req)?;
    blocking(wb, move |wb| {
        let id = wb.create_conversation(req.tenant.as_deref(), &req.source_id, req.version)?;
        Ok(json!({ "conversation_id": id }))
    })
    .await
}

#[derive(Debug, Default, Deserialize)]
struct AskBody {
    question: String,
}

async fn ask(State(wb): Shared, Path(cid): Path<String>, req: Result<Json<AskBody>, JsonRejection>) -> ApiResult {
    let req = json(req)?;
    blocking(wb, move |wb| wb.ask(&cid, &req.question)).await
}

#[derive(Debug, Deserialize)]
struct ExplainBody {
    style: String,
}

async fn explain(State(wb): Shared, Path(cid): Path<String>, req: Result<Json<ExplainBody>, JsonRejection>) -> ApiResult {
    let req = json(req)?;
    let style: ExplanationStyle = req.style.parse().map_err(bad)?;
    blocking(wb, move |wb| Ok(json!({ "text": wb.explain(&cid, style)? }))).await
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct PageBody {
    offset: usize,
    limit: usize,
}

impl Default for PageBody {
    fn default() -> Self {
        Self { offset: 0, limit: 50 }
    }
}

async fn execute(State(wb): Shared, Path(cid): Path<String>, raw: Option<Json<Value>>) -> ApiResult {
    let p: PageBody = body(raw)?;
    blocking(wb, move |wb| wb.execute(&cid, Page::new(p.offset, p.limit))).await
}

async fn visualize(State(wb): Shared, Path(cid): Path<String>) -> ApiResult {
    blocking(wb, move |wb| wb.visualize(&cid)).await
}

async fn archive(State(wb): Shared, Path(cid): Path<String>) -> ApiResult {
    blocking(wb, move |wb| Ok(json!({ "testcase_id": wb.archive(&cid)?.id }))).await
}

#[derive(Debug, Default, Deserialize)]
struct TestCaseParams {
    source: Option<String>,
}

async fn list_testcases(State(wb): Shared, p: Result<Query<TestCaseParams>, QueryRejection>) -> ApiResult {
    let p = query(p)?;
    blocking(wb, move |wb| wb.list_testcases(p.source.as_deref())).await
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct ReplayBody {
    tenant: Option<String>,
}

async fn replay(State(wb): Shared, Path(id): Path<String>, raw: Option<Json<Value>>) -> ApiResult {
    let req: ReplayBody = body(raw)?;
    blocking(wb, move |wb| wb.replay(req.tenant.as_deref(), &id, None)).await
}

pub fn router(wb: Arc<Workbench>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/datasources", post(create_source).get(list_sources))
        .route("/ontologies/{id}", get(get_ontology))
        .route("/ontologies/{id}/search", get(search))
        .route("/conversations", post(create_conversation))
        .route("/conversations/{cid}/ask", post(ask))
        .route("/conversations/{cid}/explain", post(explain))
        .route("/conversations/{cid}/execute", post(execute))
        .route("/conversations/{cid}/visualize", post(visualize))
        .route("/conversations/{cid}/archive", post(archive))
        .route("/testcases", get(list_testcases))
        .route("/testcases/{id}/replay", post(replay))
        .fallback(|| async { AppError::NotFound("no such endpoint".into()) })
        .with_state(wb)
}

/// Binds `addr` and serves until `shutdown` resolves; in-flight requests
/// complete first.
pub async fn serve(
    wb: Arc<Workbench>,
    addr: &str,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(wb)).with_graceful_shutdown(shutdown).await
}
