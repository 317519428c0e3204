//! FAQ matching: placeholder substitution, tf-idf overlap filtering and
//! exhaustive pair scoring with a precision-biased threshold.
//!
//! The pipeline for one user question is
//!
//! 1. substitute placeholders (the same map is applied to FAQ questions at
//!    ingestion),
//! 2. keep FAQs whose idf-weighted token overlap with the question reaches
//!    `filter_threshold`,
//! 3. score every survivor with the pair model,
//! 4. keep scores at or above `decision_threshold`, best first.
//!
//! Returning nothing is a valid outcome.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::model::{ModelError, PairScorer};

mod idf;
mod preprocess;

pub use idf::{content_tokens, overlap_score, weighted_overlap, IdfIndex, STOPWORDS};
pub use preprocess::{preprocess, Replacement, ReplacementMap};

pub const DEFAULT_FILTER_THRESHOLD: f64 = 0.2;
pub const DEFAULT_DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum FaqError {
    #[error("line {line}: field `{field}`: {message}")]
    Entry {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate FAQ id `{id}` at line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("FAQ set is empty")]
    EmptyCorpus,
    #[error("user question is empty")]
    EmptyQuestion,
    #[error("replacement map: {0}")]
    Map(String),
    #[error("model failure: {0}")]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaqEntry {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub source: String,
    /// ISO-8601 date or date-time.
    pub last_updated: String,
    #[serde(skip)]
    pub preprocessed_question: String,
}

pub fn parse_iso_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|d| d.date_naive()))
}

impl FaqEntry {
    /// Validates a JSON object as an FAQ entry; `line` is 1-based.
    pub fn from_json(value: &serde_json::Value, line: usize) -> Result<Self, FaqError> {
        let obj = value.as_object().ok_or(FaqError::Parse {
            line,
            message: "expected a JSON object".into(),
        })?;
        let field = |name: &'static str| -> Result<String, FaqError> {
            match obj.get(name) {
                Some(serde_json::Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
                Some(serde_json::Value::String(_)) => Err(FaqError::Entry {
                    line,
                    field: name,
                    message: "must not be empty".into(),
                }),
                Some(_) => Err(FaqError::Entry {
                    line,
                    field: name,
                    message: "expected a string".into(),
                }),
                None => Err(FaqError::Entry {
                    line,
                    field: name,
                    message: "missing".into(),
                }),
            }
        };
        let entry = FaqEntry {
            id: field("id")?,
            question: field("question")?,
            answer: field("answer")?,
            source: field("source")?,
            last_updated: field("last_updated")?,
            preprocessed_question: String::new(),
        };
        if parse_iso_date(&entry.last_updated).is_none() {
            return Err(FaqError::Entry {
                line,
                field: "last_updated",
                message: format!("`{}` is not an ISO-8601 date", entry.last_updated),
            });
        }
        Ok(entry)
    }
}

/// Parses FAQ entries from a JSON array or JSONL text, rejecting duplicate
/// ids. For arrays, `line` in errors is the 1-based element index.
pub fn parse_faqs(text: &str) -> Result<Vec<FaqEntry>, FaqError> {
    let values: Vec<(usize, serde_json::Value)> = if text.trim_start().starts_with('[') {
        let arr: Vec<serde_json::Value> = serde_json::from_str(text).map_err(|e| FaqError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        arr.into_iter().enumerate().map(|(i, v)| (i + 1, v)).collect()
    } else {
        let mut out = Vec::new();
        for (i, line) in text.as_bytes().lines().enumerate() {
            let line = line.map_err(|e| FaqError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let v = serde_json::from_str(&line).map_err(|e| FaqError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            out.push((i + 1, v));
        }
        out
    };
    let mut seen = BTreeSet::new();
    let mut entries = Vec::with_capacity(values.len());
    for (line, v) in values {
        let e = FaqEntry::from_json(&v, line)?;
        if !seen.insert(e.id.clone()) {
            return Err(FaqError::DuplicateId { id: e.id, line });
        }
        entries.push(e);
    }
    Ok(entries)
}

/// One JSON object per line, fields in declaration order.
pub fn faqs_to_jsonl(entries: &[FaqEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        s.push_str(&serde_json::to_string(e).expect("FAQ entry serializes"));
        s.push('\n');
    }
    s
}

/// Immutable FAQ snapshot: entries with cached placeholder-substituted
/// questions, their content tokens and the idf table over them.
#[derive(Debug, Clone)]
pub struct FaqIndex {
    entries: Vec<FaqEntry>,
    tokens: Vec<BTreeSet<String>>,
    by_id: HashMap<String, usize>,
    idf: IdfIndex,
    map: ReplacementMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub faq_id: String,
    pub p_positive: f64,
    pub overlap: f64,
    pub passed_filter: bool,
    /// 1-based.
    pub rank: usize,
}

impl FaqIndex {
    pub fn build(mut entries: Vec<FaqEntry>, map: ReplacementMap) -> Result<Self, FaqError> {
        if entries.is_empty() {
            return Err(FaqError::EmptyCorpus);
        }
        let mut by_id = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter_mut().enumerate() {
            if by_id.insert(e.id.clone(), i).is_some() {
                return Err(FaqError::DuplicateId {
                    id: e.id.clone(),
                    line: i + 1,
                });
            }
            e.preprocessed_question = preprocess(&e.question, &map);
        }
        let questions: Vec<&str> = entries.iter().map(|e| e.preprocessed_question.as_str()).collect();
        let idf = IdfIndex::build(&questions)?;
        let tokens = questions.iter().map(|q| content_tokens(q)).collect();
        Ok(Self {
            entries,
            tokens,
            by_id,
            idf,
            map,
        })
    }

    pub fn entries(&self) -> &[FaqEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&FaqEntry> {
        self.by_id.get(id).map(|&i| &self.entries[i])
    }

    pub fn idf(&self) -> &IdfIndex {
        &self.idf
    }

    pub fn replacement_map(&self) -> &ReplacementMap {
        &self.map
    }

    /// Candidate generation stage: indices of FAQs whose overlap with the
    /// preprocessed user question reaches `filter_threshold`, with the
    /// overlap. This is the place to swap in a sub-linear retriever once the
    /// FAQ set outgrows exhaustive scoring.
    pub fn candidates(&self, user_preprocessed: &str, filter_threshold: f64) -> Vec<(usize, f64)> {
        let user = content_tokens(user_preprocessed);
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, faq)| (i, weighted_overlap(&user, faq, |t| self.idf.idf(t))))
            .filter(|&(_, s)| s >= filter_threshold)
            .collect()
    }

    /// Runs the full matching pipeline. Any model failure fails the whole
    /// request.
    pub fn match_question<S: PairScorer + ?Sized>(
        &self,
        user_question: &str,
        scorer: &S,
        filter_threshold: f64,
        decision_threshold: f64,
    ) -> Result<Vec<MatchResult>, FaqError> {
        if user_question.trim().is_empty() {
            return Err(FaqError::EmptyQuestion);
        }
        let user = preprocess(user_question, &self.map);
        let mut results = Vec::new();
        for (i, overlap) in self.candidates(&user, filter_threshold) {
            let e = &self.entries[i];
            let p = scorer.score(&user, &e.preprocessed_question)?;
            if p >= decision_threshold {
                results.push(MatchResult {
                    faq_id: e.id.clone(),
                    p_positive: p,
                    overlap,
                    passed_filter: true,
                    rank: 0,
                });
            }
        }
        results.sort_by(|a, b| b.p_positive.total_cmp(&a.p_positive).then_with(|| a.faq_id.cmp(&b.faq_id)));
        for (r, m) in results.iter_mut().enumerate() {
            m.rank = r + 1;
        }
        Ok(results)
    }
}

/// Jaccard similarity of content-token sets. A model-free scorer for tests,
/// benchmarks and smoke deployments.
#[derive(Debug, Clone, Copy, Default)]
pub struct JaccardScorer;

impl PairScorer for JaccardScorer {
    fn score(&self, a: &str, b: &str) -> Result<f64, ModelError> {
        let a = content_tokens(a);
        let b = content_tokens(b);
        let union = a.union(&b).count();
        Ok(if union == 0 {
            0.0
        } else {
            a.intersection(&b).count() as f64 / union as f64
        })
    }
}

/// Free-function form of [`FaqIndex::match_question`].
pub fn match_question<S: PairScorer + ?Sized>(
    user_question: &str,
    index: &FaqIndex,
    scorer: &S,
    filter_threshold: f64,
    decision_threshold: f64,
) -> Result<Vec<MatchResult>, FaqError> {
    index.match_question(user_question, scorer, filter_threshold, decision_threshold)
}
