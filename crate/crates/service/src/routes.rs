use std::time::Instant;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use medsim_core::faqmatch::FaqError;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{AppState, MAX_QUESTION_CHARS};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchRequest {
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchItem {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub source: String,
    pub last_updated: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResponse {
    pub matches: Vec<MatchItem>,
    pub elapsed_ms: f64,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/match", post(match_handler))
        .route("/v1/faqs", post(ingest_handler))
        .route("/v1/healthz", get(health_handler))
        .layer(middleware::from_fn(log_request))
        .with_state(state)
}

async fn log_request(req: Request, next: Next) -> Response {
    let start = Instant::now();
    let method = req.method().to_string();
    let path = req.uri().path().to_string();
    let response = next.run(req).await;
    tracing::info!(
        target: "medsim::request",
        method,
        path,
        status = response.status().as_u16(),
        elapsed_ms = start.elapsed().as_secs_f64() * 1e3,
    );
    response
}

async fn match_handler(State(app): State<AppState>, body: Result<Json<MatchRequest>, JsonRejection>) -> Response {
    let start = Instant::now();
    let Json(req) = match body {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.body_text()),
    };
    if req.question.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "question must not be empty");
    }
    if req.question.chars().count() > MAX_QUESTION_CHARS {
        return error(
            StatusCode::BAD_REQUEST,
            format!("question exceeds {MAX_QUESTION_CHARS} characters"),
        );
    }
    let Some(model) = app.model() else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "model not loaded");
    };
    let snapshot = app.snapshot();
    let cfg = app.config().clone();
    let scored = tokio::task::spawn_blocking(move || {
        let Some(index) = snapshot.index.as_ref() else {
            return Ok(Vec::new());
        };
        let results =
            index.match_question(&req.question, model.scorer.as_ref(), cfg.filter_threshold, cfg.decision_threshold)?;
        Ok::<_, FaqError>(
            results
                .into_iter()
                .take(cfg.max_results)
                .map(|m| {
                    let e = index.get(&m.faq_id).expect("result comes from this snapshot");
                    MatchItem {
                        id: e.id.clone(),
                        question: e.question.clone(),
                        answer: e.answer.clone(),
                        source: e.source.clone(),
                        last_updated: e.last_updated.clone(),
                        score: m.p_positive,
                    }
                })
                .collect(),
        )
    })
    .await;
    match scored {
        Ok(Ok(matches)) => Json(MatchResponse {
            matches,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        })
        .into_response(),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

fn ingest_error(e: &FaqError) -> Response {
    let body = match e {
        FaqError::Entry { line, field, message } => {
            json!({ "error": e.to_string(), "line": line, "field": field, "message": message })
        }
        FaqError::Parse { line, message } => json!({ "error": e.to_string(), "line": line, "message": message }),
        FaqError::DuplicateId { id, line } => json!({ "error": e.to_string(), "line": line, "field": "id", "id": id }),
        other => json!({ "error": other.to_string() }),
    };
    (StatusCode::BAD_REQUEST, Json(body)).into_response()
}

async fn ingest_handler(State(app): State<AppState>, body: Bytes) -> Response {
    let Ok(text) = std::str::from_utf8(&body) else {
        return error(StatusCode::BAD_REQUEST, "body is not valid UTF-8");
    };
    if text.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "body contains no FAQ entries");
    }
    let entries = match medsim_core::faqmatch::parse_faqs(text) {
        Ok(e) => e,
        Err(e) => return ingest_error(&e),
    };
    match app.ingest(entries).await {
        Ok(n) => Json(json!({ "ingested": n, "rejected": 0 })).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn health_handler(State(app): State<AppState>) -> Response {
    let faq_count = app.snapshot().faq_count();
    match app.model() {
        Some(m) => Json(json!({ "status": "ok", "faq_count": faq_count, "model_version": m.version })).into_response(),
        None => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(json!({ "status": "loading", "faq_count": faq_count, "model_version": null })),
        )
            .into_response(),
    }
}
