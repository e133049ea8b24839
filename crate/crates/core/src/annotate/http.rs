use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use super::{AnnotateError, AnnotationTask, Judgment, JudgmentStore, SubmitOutcome};
use crate::model::Dialogue;

/// Sampled dialogues plus the judgment store behind the HTTP API.
#[derive(Debug)]
pub struct AnnotateService {
    dialogues: BTreeMap<String, Dialogue>,
    store: JudgmentStore,
}

impl AnnotateService {
    /// Keeps only the dialogues the store's tasks refer to.
    pub fn new(corpus: Vec<Dialogue>, store: JudgmentStore) -> AnnotateService {
        let dialogues = corpus
            .into_iter()
            .filter(|d| store.is_sampled(&d.id))
            .map(|d| (d.id.clone(), d))
            .collect();
        AnnotateService { dialogues, store }
    }

    pub fn store(&self) -> &JudgmentStore {
        &self.store
    }

    pub fn dialogue(&self, id: &str) -> Result<&Dialogue, AnnotateError> {
        self.dialogues
            .get(id)
            .ok_or_else(|| AnnotateError::UnknownDialogue(id.to_string()))
    }
}

#[derive(Debug, Serialize)]
struct Progress {
    judged: usize,
    total: usize,
}

#[derive(Debug, Serialize)]
struct TaskResponse<'a> {
    task: Option<AnnotationTask>,
    dialogue: Option<&'a Dialogue>,
    progress: Progress,
}

#[derive(Debug, Deserialize)]
struct TaskQuery {
    evaluator: Option<String>,
}

impl IntoResponse for AnnotateError {
    fn into_response(self) -> Response {
        let (status, code) = match &self {
            AnnotateError::UnknownDialogue(_) => (StatusCode::NOT_FOUND, "unknown_dialogue"),
            AnnotateError::UnknownEvaluator(_) => (StatusCode::FORBIDDEN, "unknown_evaluator"),
            AnnotateError::InvalidFraction(_) => (StatusCode::BAD_REQUEST, "invalid_fraction"),
            AnnotateError::Io { .. } | AnnotateError::Journal { .. } => {
                log::error!("{self}");
                (StatusCode::INTERNAL_SERVER_ERROR, "storage")
            }
        };
        (status, Json(json!({ "error": code, "message": self.to_string() }))).into_response()
    }
}

async fn next_task(
    State(svc): State<Arc<AnnotateService>>,
    Query(q): Query<TaskQuery>,
) -> Result<Response, AnnotateError> {
    let Some(evaluator) = q.evaluator.filter(|e| !e.trim().is_empty()) else {
        let body = json!({ "error": "missing_evaluator", "message": "evaluator query parameter is required" });
        return Ok((StatusCode::BAD_REQUEST, Json(body)).into_response());
    };
    let task = svc.store.next_task(&evaluator)?;
    let dialogue = match &task {
        Some(t) => Some(svc.dialogue(&t.dialogue_id)?),
        None => None,
    };
    let progress = Progress {
        judged: svc.store.judged_by(&evaluator),
        total: svc.store.tasks().len(),
    };
    Ok(Json(TaskResponse {
        task,
        dialogue,
        progress,
    })
    .into_response())
}

async fn get_dialogue(
    State(svc): State<Arc<AnnotateService>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<Dialogue>, AnnotateError> {
    svc.dialogue(&id).cloned().map(Json)
}

async fn post_judgment(
    State(svc): State<Arc<AnnotateService>>,
    Json(judgment): Json<Judgment>,
) -> Result<Response, AnnotateError> {
    let outcome = svc.store.submit(judgment)?;
    let status = match outcome {
        SubmitOutcome::Created => StatusCode::CREATED,
        _ => StatusCode::OK,
    };
    Ok((status, Json(outcome)).into_response())
}

async fn summary(State(svc): State<Arc<AnnotateService>>) -> Response {
    Json(svc.store.summary()).into_response()
}

/// API routes, with the UI bundle served from `static_dir` at `/` when given.
pub fn router(service: Arc<AnnotateService>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/tasks", get(next_task))
        .route("/api/dialogues/{id}", get(get_dialogue))
        .route("/api/judgments", post(post_judgment))
        .route("/api/summary", get(summary))
        .with_state(service);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves on `listener` until the process is stopped.
pub async fn serve(
    listener: tokio::net::TcpListener,
    service: Arc<AnnotateService>,
    static_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    log::info!("annotation service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(service, static_dir)).await
}
