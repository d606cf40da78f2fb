//! JSON API over a [`Repository`].
//!
//! Public routes never return depositor addresses or decision tokens.
//! Admin routes sit under `/admin` and need the configured shared secret
//! in the `x-admin-secret` header.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Redirect, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chrono::{DateTime, NaiveDate, Utc};
use fairdeal_core::fairness::FairnessAlert;
use fairdeal_core::mail::DeliveryReceipt;
use fairdeal_core::repo::{AccessKind, AccessState, EprintFilter, EprintId, EprintMetadata, EprintRecord, ACTOR_ADMIN};
use fairdeal_core::stats::{AccessStats, Period, ResponseStats};
use fairdeal_core::workflow::{Action, Decision, Purpose, RequestId};
use fairdeal_core::{Error, Repository};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::clock::{parse_instant, Clock};

pub const ADMIN_SECRET_HEADER: &str = "x-admin-secret";

#[derive(Clone)]
pub struct AppState {
    pub repo: Arc<Repository>,
    pub clock: Arc<dyn Clock>,
    pub admin_secret: Option<String>,
    pub ui_dir: Option<PathBuf>,
}

pub fn router(state: AppState) -> Router {
    let admin = Router::new()
        .route("/stats/responses", get(response_stats))
        .route("/stats/access", get(access_stats))
        .route("/alerts", get(alerts))
        .route("/scheduler/tick", post(tick))
        .route("/requests/{id}/resend-notification", post(resend))
        .route("/eprints/{id}/access", put(set_access))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_secret));

    let mut app = Router::new()
        .route("/eprints", get(list_eprints))
        .route("/eprints/{id}", get(get_eprint))
        .route("/eprints/{id}/documents/{index}", get(download))
        .route("/eprints/{id}/request", post(create_request))
        .route("/respond", get(respond))
        .route("/{id}/", get(landing_page))
        .nest("/admin", admin);
    if let Some(dir) = &state.ui_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    app.with_state(state)
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let (status, code) = match &err {
            Error::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            Error::UnknownToken => (StatusCode::NOT_FOUND, "unknown_token"),
            Error::NotRequestable(_) => (StatusCode::CONFLICT, "not_requestable"),
            Error::DecisionConflict { .. } => (StatusCode::CONFLICT, "decision_conflict"),
            Error::AttestationRequired => (StatusCode::UNPROCESSABLE_ENTITY, "attestation_required"),
            Error::InvalidAddress(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_address"),
            Error::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
            Error::InvalidPeriod => (StatusCode::BAD_REQUEST, "invalid_period"),
            Error::ForbiddenTransition { .. } => (StatusCode::FORBIDDEN, "forbidden_transition"),
            Error::Transport(_) => (StatusCode::BAD_GATEWAY, "transport"),
            Error::Config(_) | Error::Template(_) | Error::Storage(_) => {
                tracing::error!(%err, "internal error");
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        ApiError::new(status, code, err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.code, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn require_secret(State(state): State<AppState>, headers: HeaderMap, request: Request, next: Next) -> Response {
    let supplied = headers.get(ADMIN_SECRET_HEADER).and_then(|v| v.to_str().ok());
    match (&state.admin_secret, supplied) {
        (Some(expected), Some(given)) if expected == given => next.run(request).await,
        _ => ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong admin secret").into_response(),
    }
}

fn eprint_id(raw: &str) -> ApiResult<EprintId> {
    EprintId::new(raw)
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("not found: eprint {raw}")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentLink {
    pub label: String,
    pub media_type: String,
    pub byte_length: u64,
    pub url: String,
}

/// What a reader sees on an eprint's landing page.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicEprintView {
    pub id: EprintId,
    pub metadata: EprintMetadata,
    pub access_kind: AccessKind,
    pub requestable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embargo_until: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document_links: Option<Vec<DocumentLink>>,
    /// Statement the request form asks the reader to accept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attestation_text: Option<String>,
}

impl PublicEprintView {
    pub fn of(record: &EprintRecord, attestation_text: &str) -> Self {
        let open = record.access.is_open();
        let document_links = open.then(|| {
            record
                .parts
                .iter()
                .enumerate()
                .map(|(i, part)| DocumentLink {
                    label: part.label.clone(),
                    media_type: part.media_type.clone(),
                    byte_length: part.byte_length,
                    url: format!("/eprints/{}/documents/{i}", record.id),
                })
                .collect()
        });
        PublicEprintView {
            id: record.id.clone(),
            metadata: record.metadata.clone(),
            access_kind: record.access.kind(),
            requestable: !open,
            embargo_until: record.access.embargo_until(),
            document_links,
            attestation_text: (!open).then(|| attestation_text.to_owned()),
        }
    }
}

fn view(state: &AppState, record: &EprintRecord) -> PublicEprintView {
    PublicEprintView::of(record, &state.repo.settings().profile.attestation_text)
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    access: Option<String>,
}

async fn list_eprints(
    State(state): State<AppState>,
    Query(q): Query<ListQuery>,
) -> ApiResult<Json<Vec<PublicEprintView>>> {
    let access_kind = match q.access.as_deref() {
        None => None,
        Some("open") => Some(AccessKind::Open),
        Some("closed") => Some(AccessKind::Closed),
        Some(other) => return Err(ApiError::bad_request(format!("access must be open or closed, not {other:?}"))),
    };
    let records = state.repo.list_eprints(&EprintFilter { access_kind, venue: None });
    Ok(Json(records.iter().map(|r| view(&state, r)).collect()))
}

async fn get_eprint(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<PublicEprintView>> {
    let record = state.repo.get_eprint(&eprint_id(&id)?)?;
    Ok(Json(view(&state, &record)))
}

async fn landing_page(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let id = eprint_id(&id)?;
    state.repo.get_eprint(&id)?;
    let index = state.ui_dir.as_ref().map(|d| d.join("index.html")).filter(|p| p.is_file());
    match index {
        Some(path) => {
            let html = tokio::fs::read(&path).await.map_err(|e| ApiError::from(Error::from(e)))?;
            Ok(([(header::CONTENT_TYPE, "text/html; charset=utf-8")], html).into_response())
        }
        None => Ok(Redirect::to(&format!("/eprints/{id}")).into_response()),
    }
}

async fn download(State(state): State<AppState>, Path((id, index)): Path<(String, usize)>) -> ApiResult<Response> {
    let record = state.repo.get_eprint(&eprint_id(&id)?)?;
    if !record.access.is_open() {
        return Err(ApiError::new(
            StatusCode::FORBIDDEN,
            "closed_access",
            "this document is closed access; request a copy instead",
        ));
    }
    let part = record
        .parts
        .get(index)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("not found: document {index}")))?;
    let bytes = state.repo.store().blobs().get(&part.storage_ref)?;
    let disposition = format!("inline; filename=\"{}\"", part.label.replace('"', ""));
    Ok(([(header::CONTENT_TYPE, part.media_type.clone()), (header::CONTENT_DISPOSITION, disposition)], bytes)
        .into_response())
}

#[derive(Debug, Deserialize)]
pub struct RequestForm {
    pub email: String,
    pub purpose: Purpose,
    pub attested: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RequestAccepted {
    pub request_id: RequestId,
    pub message: String,
}

pub const ACKNOWLEDGEMENT: &str =
    "Your request has been sent to the author. If the author agrees, a copy of the document will be emailed to you.";

async fn create_request(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(form): Json<RequestForm>,
) -> ApiResult<(StatusCode, Json<RequestAccepted>)> {
    let id = eprint_id(&id)?;
    let created = state.repo.create_request(&id, &form.email, form.purpose, form.attested, state.clock.now())?;
    Ok((StatusCode::CREATED, Json(RequestAccepted { request_id: created.request_id, message: ACKNOWLEDGEMENT.into() })))
}

#[derive(Debug, Deserialize)]
struct RespondQuery {
    token: String,
    action: String,
}

#[derive(Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RespondOutcome {
    pub outcome: String,
    pub state: String,
    pub eprint_id: EprintId,
    /// False when this click repeated an earlier decision.
    pub delivered: bool,
}

async fn respond(State(state): State<AppState>, Query(q): Query<RespondQuery>) -> ApiResult<Json<RespondOutcome>> {
    let action: Action = q.action.parse().map_err(|_| ApiError::bad_request("action must be accept or reject"))?;
    let outcome = state.repo.decide(&q.token, action, state.clock.now())?;
    let text = match outcome.state_after {
        Decision::Approved { .. } => "document sent",
        Decision::Rejected { .. } => "request declined",
        Decision::Pending => "pending",
    };
    Ok(Json(RespondOutcome {
        outcome: text.into(),
        state: outcome.state_after.label().into(),
        eprint_id: outcome.eprint_id,
        delivered: outcome.delivered,
    }))
}

#[derive(Debug, Deserialize)]
struct StatsQuery {
    from: Option<String>,
    to: Option<String>,
    window: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResponseStatsBody {
    #[serde(flatten)]
    pub stats: ResponseStats,
    pub table: String,
}

/// Resolves optional bounds to `[from or epoch, to or now)`.
pub fn period_from(from: Option<&str>, to: Option<&str>, now: DateTime<Utc>) -> Result<Period, String> {
    let start = from.map(parse_instant).transpose()?.unwrap_or(DateTime::UNIX_EPOCH);
    let end = to.map(parse_instant).transpose()?.unwrap_or(now);
    Period::new(start, end).map_err(|e| e.to_string())
}

pub fn parse_window(text: &str) -> Result<std::time::Duration, String> {
    humantime::parse_duration(text).map_err(|e| format!("window {text:?}: {e}"))
}

async fn response_stats(
    State(state): State<AppState>,
    Query(q): Query<StatsQuery>,
) -> ApiResult<Json<ResponseStatsBody>> {
    let now = state.clock.now();
    let period = period_from(q.from.as_deref(), q.to.as_deref(), now).map_err(ApiError::bad_request)?;
    let window = match q.window.as_deref() {
        Some(w) => parse_window(w).map_err(ApiError::bad_request)?,
        None => state.repo.settings().ignore_window,
    };
    let stats = state.repo.response_stats(period, window, now)?;
    let table = stats.render_table(&state.repo.settings().mail.repo_name);
    Ok(Json(ResponseStatsBody { stats, table }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AccessStatsBody {
    #[serde(flatten)]
    pub stats: AccessStats,
    pub table: String,
}

async fn access_stats(State(state): State<AppState>) -> Json<AccessStatsBody> {
    let stats = state.repo.access_stats(state.clock.now());
    let table = stats.render_table(&state.repo.settings().mail.repo_name);
    Json(AccessStatsBody { stats, table })
}

async fn alerts(State(state): State<AppState>) -> Json<Vec<FairnessAlert>> {
    Json(state.repo.alerts(state.clock.now()))
}

#[derive(Debug, Deserialize)]
struct TickQuery {
    now: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TickBody {
    pub flipped: Vec<EprintId>,
}

async fn tick(State(state): State<AppState>, Query(q): Query<TickQuery>) -> ApiResult<Json<TickBody>> {
    let now = match q.now.as_deref() {
        Some(text) => parse_instant(text).map_err(ApiError::bad_request)?,
        None => state.clock.now(),
    };
    Ok(Json(TickBody { flipped: state.repo.run_due_embargoes(now)? }))
}

async fn resend(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<DeliveryReceipt>> {
    let receipt = state.repo.resend_notification(&RequestId::from(id.as_str()), state.clock.now())?;
    Ok(Json(receipt))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AccessChange {
    pub previous: AccessState,
    pub current: AccessState,
}

async fn set_access(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(access): Json<AccessState>,
) -> ApiResult<Json<AccessChange>> {
    let id = eprint_id(&id)?;
    let previous = state.repo.set_access_state(&id, access, ACTOR_ADMIN, state.clock.now())?;
    let current = state.repo.get_eprint(&id)?.access;
    Ok(Json(AccessChange { previous, current }))
}
