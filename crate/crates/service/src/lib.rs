//! HTTP front end for FAQ matching.
//!
//! Routes:
//! - `POST /v1/match` with `{"question": "..."}`
//! - `POST /v1/faqs` with a JSON array or JSONL of FAQ entries
//! - `GET /v1/healthz`
//!
//! FAQs live in immutable snapshots. Ingestion builds a new snapshot,
//! persists the store, then publishes by swapping one pointer, so every
//! request sees exactly one snapshot.

use std::net::SocketAddr;
use std::path::PathBuf;

use medsim_core::faqmatch::{DEFAULT_DECISION_THRESHOLD, DEFAULT_FILTER_THRESHOLD};

mod routes;
mod state;

pub use routes::{router, MatchItem, MatchRequest, MatchResponse};
pub use state::{load_store, persist_store, AppState, LoadedModel, Snapshot};

/// Longest accepted user question, in characters.
pub const MAX_QUESTION_CHARS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    /// Checkpoint to serve, or `None` to stay unready.
    pub model: Option<ModelSource>,
    pub faq_store: PathBuf,
    pub replacement_map: Option<PathBuf>,
    pub filter_threshold: f64,
    pub decision_threshold: f64,
    pub max_results: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Checkpoint(PathBuf),
    /// Token Jaccard similarity, no trained model required.
    Lexical,
}

impl ModelSource {
    /// `lexical` selects the built-in scorer; anything else is a path.
    pub fn parse(s: &str) -> Self {
        if s == "lexical" {
            Self::Lexical
        } else {
            Self::Checkpoint(PathBuf::from(s))
        }
    }
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            model: None,
            faq_store: PathBuf::from("faqs.jsonl"),
            replacement_map: None,
            filter_threshold: DEFAULT_FILTER_THRESHOLD,
            decision_threshold: DEFAULT_DECISION_THRESHOLD,
            max_results: 5,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("FAQ store {path}: {message}")]
    Store { path: PathBuf, message: String },
    #[error("model: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), ServiceError> {
        for (name, t) in [
            ("filter_threshold", self.filter_threshold),
            ("decision_threshold", self.decision_threshold),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(ServiceError::Config(format!("{name} must be in [0, 1], got {t}")));
            }
        }
        if self.max_results == 0 {
            return Err(ServiceError::Config("max_results must be at least 1".into()));
        }
        Ok(())
    }
}

/// Loads the store, binds the listener and serves until the process ends.
/// The model loads in the background; until it is ready, health and match
/// answer 503.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    config.validate()?;
    let app = AppState::open(config.clone())?;
    if let Some(source) = config.model.clone() {
        let app = app.clone();
        tokio::spawn(async move {
            let loaded = tokio::task::spawn_blocking(move || LoadedModel::load(&source)).await;
            match loaded {
                Ok(Ok(model)) => {
                    tracing::info!(model_version = %model.version, "model loaded");
                    app.install_model(model);
                }
                Ok(Err(e)) => tracing::error!(error = %e, "model failed to load"),
                Err(e) => tracing::error!(error = %e, "model loader panicked"),
            }
        });
    } else {
        tracing::warn!("no model configured; /v1/match will answer 503");
    }
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(app)).await?;
    Ok(())
}
