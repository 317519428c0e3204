use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, RwLock};

use medsim_core::faqmatch::{faqs_to_jsonl, parse_faqs, FaqError, JaccardScorer};
use medsim_core::model::{checkpoint, PairScorer};
use medsim_core::{FaqEntry, FaqIndex, ReplacementMap};

use crate::{ModelSource, ServiceConfig, ServiceError};

/// One immutable, fully built view of the FAQ set.
#[derive(Debug)]
pub struct Snapshot {
    /// `None` while the store is empty.
    pub index: Option<FaqIndex>,
    /// Bumped on every publication.
    pub generation: u64,
}

impl Snapshot {
    pub fn faq_count(&self) -> usize {
        self.index.as_ref().map_or(0, FaqIndex::len)
    }

    pub fn entries(&self) -> &[FaqEntry] {
        self.index.as_ref().map_or(&[], FaqIndex::entries)
    }
}

pub struct LoadedModel {
    pub scorer: Arc<dyn PairScorer>,
    pub version: String,
}

impl LoadedModel {
    pub fn new(scorer: Arc<dyn PairScorer>, version: impl Into<String>) -> Self {
        Self {
            scorer,
            version: version.into(),
        }
    }

    pub fn load(source: &ModelSource) -> Result<Self, ServiceError> {
        match source {
            ModelSource::Lexical => Ok(Self::new(Arc::new(JaccardScorer), "lexical-jaccard")),
            ModelSource::Checkpoint(path) => {
                let model = checkpoint::load(path).map_err(|e| ServiceError::Model(format!("{}: {e}", path.display())))?;
                let version = checkpoint::fingerprint(&model);
                Ok(Self::new(Arc::new(model), version))
            }
        }
    }
}

struct Inner {
    config: ServiceConfig,
    map: ReplacementMap,
    snapshot: RwLock<Arc<Snapshot>>,
    model: RwLock<Option<Arc<LoadedModel>>>,
    writer: tokio::sync::Mutex<()>,
}

/// Shared service state. Cloning is cheap.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

/// Reads the JSONL store; a missing file is an empty store.
pub fn load_store(path: &Path) -> Result<Vec<FaqEntry>, ServiceError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    parse_faqs(&text).map_err(|e| ServiceError::Store {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes the store beside its final location, then renames it into place
/// so a reader never observes a half-written file.
pub fn persist_store(path: &Path, entries: &[FaqEntry]) -> std::io::Result<()> {
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(faqs_to_jsonl(entries).as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn build_snapshot(entries: Vec<FaqEntry>, map: &ReplacementMap, generation: u64) -> Result<Snapshot, FaqError> {
    let index = if entries.is_empty() {
        None
    } else {
        Some(FaqIndex::build(entries, map.clone())?)
    };
    Ok(Snapshot { index, generation })
}

impl AppState {
    /// Loads the replacement map and the FAQ store named in `config`.
    pub fn open(config: ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        let map = match &config.replacement_map {
            Some(p) => ReplacementMap::from_json(&fs::read_to_string(p)?).map_err(|e| ServiceError::Store {
                path: p.clone(),
                message: e.to_string(),
            })?,
            None => ReplacementMap::default_covid(),
        };
        let entries = load_store(&config.faq_store)?;
        let snapshot = build_snapshot(entries, &map, 0).map_err(|e| ServiceError::Store {
            path: config.faq_store.clone(),
            message: e.to_string(),
        })?;
        Ok(Self(Arc::new(Inner {
            config,
            map,
            snapshot: RwLock::new(Arc::new(snapshot)),
            model: RwLock::new(None),
            writer: tokio::sync::Mutex::new(()),
        })))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.0.config
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.0.snapshot.read().expect("snapshot lock"))
    }

    pub fn model(&self) -> Option<Arc<LoadedModel>> {
        self.0.model.read().expect("model lock").clone()
    }

    pub fn install_model(&self, model: LoadedModel) {
        *self.0.model.write().expect("model lock") = Some(Arc::new(model));
    }

    /// Merges `incoming` into the current set (same id replaces), persists
    /// the result and publishes it. Nothing is published if any step fails.
    pub async fn ingest(&self, incoming: Vec<FaqEntry>) -> Result<usize, ServiceError> {
        let _writer = self.0.writer.lock().await;
        let current = self.snapshot();
        let state = self.clone();
        let count = incoming.len();
        let next = tokio::task::spawn_blocking(move || -> Result<Snapshot, ServiceError> {
            let mut entries: Vec<FaqEntry> = current.entries().to_vec();
            let mut position: std::collections::HashMap<String, usize> =
                entries.iter().enumerate().map(|(i, e)| (e.id.clone(), i)).collect();
            for e in incoming {
                match position.get(&e.id) {
                    Some(&i) => entries[i] = e,
                    None => {
                        position.insert(e.id.clone(), entries.len());
                        entries.push(e);
                    }
                }
            }
            let store = &state.0.config.faq_store;
            let snapshot = build_snapshot(entries, &state.0.map, current.generation + 1).map_err(|e| {
                ServiceError::Store {
                    path: store.clone(),
                    message: e.to_string(),
                }
            })?;
            persist_store(store, snapshot.entries())?;
            Ok(snapshot)
        })
        .await
        .map_err(|e| ServiceError::Io(std::io::Error::other(e.to_string())))??;
        *self.0.snapshot.write().expect("snapshot lock") = Arc::new(next);
        Ok(count)
    }
}
