//! Intermediate-task dataset construction.
//!
//! Every constructor emits balanced binary pairs: one positive per source
//! record and `negatives_per_positive` negatives drawn from the same category.
//! Randomness comes from a per-category stream derived from
//! `(rng_seed, category)`, so output depends only on the input and the seed,
//! and categories can be processed independently.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Answer, Label, LabeledPair, PairKind, Question};
use crate::text::SentenceSplitter;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TaskGenError {
    #[error("record `{0}` has no category")]
    MissingCategory(String),
    #[error("category `{0}` has fewer than two distinct answers to sample negatives from")]
    CategoryTooSmall(String),
    #[error("at least two distinct categories are required, found {0}")]
    TooFewCategories(usize),
    #[error("negatives_per_positive must be at least 1")]
    BadConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskGenConfig {
    pub rng_seed: u64,
    pub negatives_per_positive: usize,
    pub min_sentences_for_aa: usize,
    /// Question, answer or pair ids that must not appear in any output pair.
    #[serde(default)]
    pub exclude: BTreeSet<String>,
}

impl Default for TaskGenConfig {
    fn default() -> Self {
        Self {
            rng_seed: 0,
            negatives_per_positive: 1,
            min_sentences_for_aa: 3,
            exclude: BTreeSet::new(),
        }
    }
}

impl TaskGenConfig {
    pub fn with_seed(rng_seed: u64) -> Self {
        Self {
            rng_seed,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<(), TaskGenError> {
        if self.negatives_per_positive == 0 {
            return Err(TaskGenError::BadConfig);
        }
        Ok(())
    }
}

/// Constructor output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskOutput {
    pub pairs: Vec<LabeledPair>,
    /// Parallel to `pairs`: true for negatives drawn with replacement because
    /// the category had too few distinct candidates.
    pub with_replacement: Vec<bool>,
    /// Source records that produced no pairs.
    pub skipped: usize,
}

impl TaskOutput {
    fn push(&mut self, pair: LabeledPair, replaced: bool) {
        self.pairs.push(pair);
        self.with_replacement.push(replaced);
    }
}

/// Deterministic RNG for one category.
pub fn category_rng(rng_seed: u64, category: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(rng_seed.to_le_bytes());
    h.update(category.as_bytes());
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(seed)
}

/// Draws `n` items, without replacement when enough candidates exist.
fn draw<'a, T>(candidates: &'a [T], n: usize, rng: &mut ChaCha8Rng) -> (Vec<&'a T>, bool) {
    if candidates.len() >= n {
        (candidates.choose_multiple(rng, n).collect(), false)
    } else {
        let picks = (0..n).filter_map(|_| candidates.choose(rng)).collect();
        (picks, true)
    }
}

fn pair(text_a: &str, text_b: &str, label: Label, kind: PairKind, seed: &str) -> LabeledPair {
    LabeledPair {
        text_a: text_a.to_string(),
        text_b: text_b.to_string(),
        label,
        kind,
        labeler_id: None,
        seed_id: Some(seed.to_string()),
        id: None,
    }
}

/// Question/answer matching: the true answer is positive, answers of other
/// questions in the same category are negatives.
pub fn build_qa_pairs(corpus: &[(Question, Answer)], cfg: &TaskGenConfig) -> Result<TaskOutput, TaskGenError> {
    cfg.check()?;
    let records: Vec<&(Question, Answer)> = corpus
        .iter()
        .filter(|(q, a)| {
            !cfg.exclude.contains(&q.id) && !cfg.exclude.contains(&a.id) && !cfg.exclude.contains(&a.question_id)
        })
        .collect();

    let mut by_cat: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (q, a)) in records.iter().enumerate() {
        let cat = q
            .category
            .as_deref()
            .or(a.category.as_deref())
            .ok_or_else(|| TaskGenError::MissingCategory(q.id.clone()))?;
        by_cat.entry(cat).or_default().push(i);
    }

    let mut negatives: Vec<Vec<(&str, bool)>> = vec![Vec::new(); records.len()];
    for (cat, members) in &by_cat {
        let mut rng = category_rng(cfg.rng_seed, cat);
        for &i in members {
            let own = &records[i].1;
            let candidates: Vec<&str> = members
                .iter()
                .map(|&j| &records[j].1)
                .filter(|a| a.id != own.id && a.text != own.text)
                .map(|a| a.text.as_str())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if candidates.is_empty() {
                return Err(TaskGenError::CategoryTooSmall(cat.to_string()));
            }
            let (picks, replaced) = draw(&candidates, cfg.negatives_per_positive, &mut rng);
            negatives[i] = picks.into_iter().map(|t| (*t, replaced)).collect();
        }
    }

    let mut out = TaskOutput::default();
    for (i, (q, a)) in records.iter().enumerate() {
        out.push(pair(&q.text, &a.text, Label::Positive, PairKind::QA, &q.id), false);
        for &(neg, replaced) in &negatives[i] {
            out.push(pair(&q.text, neg, Label::Negative, PairKind::QA, &q.id), replaced);
        }
    }
    Ok(out)
}

/// Answer-completion pairs: an answer's first two sentences ("start") paired
/// with its remaining sentences ("end") is positive; the same start paired
/// with another answer's end from the same category is negative.
///
/// Answers that are too short, lack a category, or have no same-category
/// partner are skipped and counted.
pub fn build_aa_pairs(
    answers: &[Answer],
    splitter: &dyn SentenceSplitter,
    cfg: &TaskGenConfig,
) -> Result<TaskOutput, TaskGenError> {
    cfg.check()?;
    let min_sentences = cfg.min_sentences_for_aa.max(3);
    let mut out = TaskOutput::default();

    struct Piece<'a> {
        id: &'a str,
        start: String,
        end: String,
    }
    let mut pieces: Vec<Piece> = Vec::new();
    let mut by_cat: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut cat_of = Vec::new();
    for a in answers {
        if cfg.exclude.contains(&a.id) || cfg.exclude.contains(&a.question_id) {
            continue;
        }
        let Some(cat) = a.category.as_deref() else {
            out.skipped += 1;
            continue;
        };
        let sentences = splitter.split(&a.text);
        if sentences.len() < min_sentences {
            out.skipped += 1;
            continue;
        }
        by_cat.entry(cat).or_default().push(pieces.len());
        cat_of.push(cat);
        pieces.push(Piece {
            id: &a.id,
            start: sentences[..2].join(" "),
            end: sentences[2..].join(" "),
        });
    }

    let mut negatives: Vec<Option<(Vec<&str>, bool)>> = vec![None; pieces.len()];
    for (cat, members) in &by_cat {
        let mut rng = category_rng(cfg.rng_seed, cat);
        for &i in members {
            let candidates: Vec<&str> = members
                .iter()
                .filter(|&&j| j != i && pieces[j].end != pieces[i].end)
                .map(|&j| pieces[j].end.as_str())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let (picks, replaced) = draw(&candidates, cfg.negatives_per_positive, &mut rng);
            negatives[i] = Some((picks.into_iter().copied().collect(), replaced));
        }
    }

    for (piece, negs) in pieces.iter().zip(negatives) {
        let Some((ends, replaced)) = negs else {
            out.skipped += 1;
            continue;
        };
        out.push(pair(&piece.start, &piece.end, Label::Positive, PairKind::AA, piece.id), false);
        for end in ends {
            out.push(pair(&piece.start, end, Label::Negative, PairKind::AA, piece.id), replaced);
        }
    }
    Ok(out)
}

/// Question/category matching: the question's own category label is
/// positive, a different category label is negative.
pub fn build_qc_pairs(questions: &[Question], cfg: &TaskGenConfig) -> Result<TaskOutput, TaskGenError> {
    cfg.check()?;
    let included: Vec<&Question> = questions.iter().filter(|q| !cfg.exclude.contains(&q.id)).collect();
    let mut categories = BTreeSet::new();
    for q in &included {
        let cat = q
            .category
            .as_deref()
            .ok_or_else(|| TaskGenError::MissingCategory(q.id.clone()))?;
        categories.insert(cat);
    }
    if categories.len() < 2 {
        return Err(TaskGenError::TooFewCategories(categories.len()));
    }

    let mut rngs: BTreeMap<&str, ChaCha8Rng> = categories
        .iter()
        .map(|c| (*c, category_rng(cfg.rng_seed, c)))
        .collect();
    let mut out = TaskOutput::default();
    for q in included {
        let own = q.category.as_deref().unwrap_or_default();
        let others: Vec<&str> = categories.iter().copied().filter(|c| *c != own).collect();
        let rng = rngs.get_mut(own).expect("category registered above");
        let (picks, replaced) = draw(&others, cfg.negatives_per_positive, rng);
        out.push(pair(&q.text, own, Label::Positive, PairKind::QC, &q.id), false);
        for c in picks {
            out.push(pair(&q.text, c, Label::Negative, PairKind::QC, &q.id), replaced);
        }
    }
    Ok(out)
}

/// Already-labeled question pairs (e.g. a general-domain duplicate-question
/// corpus), re-tagged as QQ. Pairs whose id or seed id is excluded are dropped.
pub fn passthrough_qq(pairs: &[LabeledPair], cfg: &TaskGenConfig) -> TaskOutput {
    let mut out = TaskOutput::default();
    for p in pairs {
        let excluded = [&p.id, &p.seed_id]
            .into_iter()
            .flatten()
            .any(|id| cfg.exclude.contains(id));
        if excluded {
            out.skipped += 1;
            continue;
        }
        let mut p = p.clone();
        p.kind = PairKind::QQ;
        out.push(p, false);
    }
    out
}
