#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use medsim_core::faqmatch::JaccardScorer;
use medsim_service::{AppState, LoadedModel, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

pub struct Fixture {
    pub state: AppState,
    pub router: Router,
    pub dir: tempfile::TempDir,
}

pub fn fixture(with_model: bool, tweak: impl FnOnce(&mut ServiceConfig)) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ServiceConfig {
        faq_store: dir.path().join("faqs.jsonl"),
        ..ServiceConfig::default()
    };
    tweak(&mut config);
    let state = AppState::open(config).unwrap();
    if with_model {
        state.install_model(LoadedModel::new(Arc::new(JaccardScorer), "stub"));
    }
    let router = medsim_service::router(state.clone());
    Fixture { state, router, dir }
}

pub async fn call(router: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let resp = router.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

pub async fn ask(router: &Router, question: &str) -> (StatusCode, Value) {
    call(router, "POST", "/v1/match", Some(json!({ "question": question }).to_string())).await
}

pub fn faq_json(id: &str, question: &str, answer: &str) -> Value {
    json!({
        "id": id,
        "question": question,
        "answer": answer,
        "source": "Ministry of Health",
        "last_updated": "2020-04-01",
    })
}

/// `n` FAQs over a synthetic vocabulary; question `i` is unique.
pub fn synthetic_faqs(n: usize, answer_tag: &str) -> Vec<Value> {
    let topics = ["fever", "cough", "masks", "travel", "pets", "schools", "vaccines", "testing", "symptoms", "children"];
    (0..n)
        .map(|i| {
            let q = format!(
                "how does {} relate to {} for case{i} in region{}?",
                topics[i % topics.len()],
                topics[(i / topics.len()) % topics.len()],
                i % 37
            );
            faq_json(&format!("faq-{i:04}"), &q, &format!("{answer_tag}: answer {i}"))
        })
        .collect()
}

pub fn as_jsonl(values: &[Value]) -> String {
    values.iter().map(|v| v.to_string() + "\n").collect()
}
