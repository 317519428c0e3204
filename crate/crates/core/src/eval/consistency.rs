//! Per-example agreement across models trained on different splits, and
//! probing a pair with analyst-written rewrites of its second question.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{Label, LabeledPair};
use crate::model::PairScorer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConsistentlyCorrect,
    ConsistentlyWrong,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyVerdict {
    pub pair_id: String,
    pub verdict: Verdict,
    /// Models that labeled the pair correctly.
    pub votes: usize,
    pub models: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub pair_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub verdicts: Vec<ConsistencyVerdict>,
    pub skipped: Vec<SkippedPair>,
}

/// Votes needed for a consistent verdict: four, or a strict majority when
/// more than seven models vote.
fn required_votes(k: usize) -> usize {
    4.max(k / 2 + 1)
}

pub fn verdict_for(correct: usize, k: usize) -> Verdict {
    let need = required_votes(k);
    if correct >= need {
        Verdict::ConsistentlyCorrect
    } else if k - correct >= need {
        Verdict::ConsistentlyWrong
    } else {
        Verdict::Mixed
    }
}

fn vote<S: PairScorer>(models: &[S], pair: &LabeledPair, threshold: f64) -> Result<usize, String> {
    let mut correct = 0;
    for (i, m) in models.iter().enumerate() {
        let p = m
            .score(&pair.text_a, &pair.text_b)
            .map_err(|e| format!("model {i}: {e}"))?;
        let label = if p >= threshold { Label::Positive } else { Label::Negative };
        if label == pair.label {
            correct += 1;
        }
    }
    Ok(correct)
}

/// Classifies every pair by how many of `models` get it right. Pairs on
/// which a model fails are skipped and reported.
pub fn consistency_analysis<S: PairScorer>(
    models: &[S],
    pairs: &[LabeledPair],
    threshold: f64,
) -> Result<ConsistencyReport, EvalError> {
    if models.len() < 4 {
        return Err(EvalError::TooFewModels(models.len()));
    }
    let k = models.len();
    let mut report = ConsistencyReport::default();
    for (i, pair) in pairs.iter().enumerate() {
        let pair_id = pair.id.clone().unwrap_or_else(|| format!("pair-{i}"));
        match vote(models, pair, threshold) {
            Ok(votes) => report.verdicts.push(ConsistencyVerdict {
                pair_id,
                verdict: verdict_for(votes, k),
                votes,
                models: k,
            }),
            Err(reason) => {
                log::warn!("skipping {pair_id}: {reason}");
                report.skipped.push(SkippedPair { pair_id, reason });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub text_b: String,
    pub verdict: Option<ConsistencyVerdict>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub text_a: String,
    pub label: Label,
    pub base: ProbeRow,
    pub edits: Vec<ProbeRow>,
}

/// Holds the first question fixed and re-runs the consistency vote on each
/// rewrite of the second. Probe pairs are returned only; they never join any
/// evaluation set.
pub fn probe_with_edits<S: PairScorer>(
    models: &[S],
    base_pair: &LabeledPair,
    edits: &[String],
    threshold: f64,
) -> Result<ProbeReport, EvalError> {
    if edits.is_empty() {
        return Err(EvalError::NoEdits);
    }
    let run = |text_b: &str, id: String| -> Result<ProbeRow, EvalError> {
        let mut pair = base_pair.clone();
        pair.text_b = text_b.to_string();
        pair.id = Some(id);
        let r = consistency_analysis(models, std::slice::from_ref(&pair), threshold)?;
        Ok(ProbeRow {
            text_b: text_b.to_string(),
            verdict: r.verdicts.into_iter().next(),
            error: r.skipped.into_iter().next().map(|s| s.reason),
        })
    };
    let base = run(&base_pair.text_b, "base".into())?;
    let edits = edits
        .iter()
        .enumerate()
        .map(|(i, e)| run(e, format!("edit-{}", i + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProbeReport {
        text_a: base_pair.text_a.clone(),
        label: base_pair.label,
        base,
        edits,
    })
}
