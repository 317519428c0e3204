//! Measurement protocol: accuracy, repeated train/dev splits with error bars,
//! paired significance tests and per-example consistency analysis.

use std::fmt::{Display, Write as _};

use serde::{Deserialize, Serialize};

use crate::corpus::{split_by_group, Label, LabeledPair};

mod consistency;
mod stats;

pub use consistency::{
    consistency_analysis, probe_with_edits, verdict_for, ConsistencyReport, ConsistencyVerdict, ProbeReport,
    ProbeRow, SkippedPair, Verdict,
};
pub use stats::{
    ln_gamma, mean_std, paired_t_test, regularized_beta, student_t_two_sided, Alternative, TTest,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("need at least 2 paired samples, got {0}")]
    TooFewSamples(usize),
    #[error("expected {expected} seeds, got {got}")]
    SeedCount { expected: usize, got: usize },
    #[error("split {index} (seed {seed}) failed: {message}")]
    Trainer { index: usize, seed: u64, message: String },
    #[error("trainer returned accuracy {0} outside [0, 1]")]
    BadAccuracy(f64),
    #[error("consistency analysis needs at least 4 models, got {0}")]
    TooFewModels(usize),
    #[error("edit list is empty")]
    NoEdits,
    #[error("reports `{0}` and `{1}` cover different splits")]
    UnpairedReports(String, String),
}

/// `(1/T) Σ 1[pred_t = label_t]`.
pub fn accuracy(preds: &[Label], labels: &[Label]) -> Result<f64, EvalError> {
    if preds.len() != labels.len() {
        return Err(EvalError::LengthMismatch(preds.len(), labels.len()));
    }
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRun {
    pub split_index: usize,
    pub rng_seed: u64,
    pub accuracy: f64,
    pub model_tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub tag_a: String,
    pub tag_b: String,
    pub t_statistic: f64,
    pub p_value: f64,
    pub df: usize,
    pub alternative: Alternative,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_tag: String,
    pub runs: Vec<SplitRun>,
    pub mean: f64,
    /// Sample (n - 1) standard deviation.
    pub std: f64,
    pub comparisons: Vec<Comparison>,
}

impl EvalReport {
    pub fn from_runs(model_tag: impl Into<String>, runs: Vec<SplitRun>) -> Self {
        let accs: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
        let (mean, std) = if accs.is_empty() { (0.0, 0.0) } else { mean_std(&accs) };
        Self {
            model_tag: model_tag.into(),
            runs,
            mean,
            std,
            comparisons: Vec::new(),
        }
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.accuracy).collect()
    }
}

/// One train/dev partition handed to a trainer.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub index: usize,
    pub seed: u64,
    pub train: Vec<LabeledPair>,
    pub dev: Vec<LabeledPair>,
}

/// Partitions `pool` into train/dev for one seed. Pairs are grouped by
/// labeler when every pair has one, otherwise by seed question, so a group
/// never straddles the two sides.
pub fn train_dev_split(pool: &[LabeledPair], dev_fraction: f64, seed: u64) -> (Vec<LabeledPair>, Vec<LabeledPair>) {
    let by_labeler = pool.iter().all(|p| p.labeler_id.is_some());
    let split = split_by_group(
        pool,
        |i, p| {
            if by_labeler {
                p.labeler_id.clone().unwrap_or_default()
            } else {
                p.seed_id.clone().unwrap_or_else(|| format!("#{i}"))
            }
        },
        dev_fraction,
        0.0,
        seed,
    );
    (split.train, split.dev)
}

/// Trains and scores one model per seed on a fresh train/dev split of
/// `pool`. The trainer returns held-out test accuracy; the test set itself is
/// the caller's and stays fixed across splits.
pub fn run_splits<F, Er>(
    model_tag: &str,
    pool: &[LabeledPair],
    k: usize,
    seeds: &[u64],
    dev_fraction: f64,
    mut trainer: F,
) -> Result<EvalReport, EvalError>
where
    F: FnMut(&SplitData) -> Result<f64, Er>,
    Er: Display,
{
    if seeds.len() != k {
        return Err(EvalError::SeedCount {
            expected: k,
            got: seeds.len(),
        });
    }
    let mut runs = Vec::with_capacity(k);
    for (index, &seed) in seeds.iter().enumerate() {
        let (train, dev) = train_dev_split(pool, dev_fraction, seed);
        let data = SplitData { index, seed, train, dev };
        let acc = trainer(&data).map_err(|e| EvalError::Trainer {
            index,
            seed,
            message: e.to_string(),
        })?;
        if !(0.0..=1.0).contains(&acc) {
            return Err(EvalError::BadAccuracy(acc));
        }
        runs.push(SplitRun {
            split_index: index,
            rng_seed: seed,
            accuracy: acc,
            model_tag: model_tag.to_string(),
        });
    }
    Ok(EvalReport::from_runs(model_tag, runs))
}

/// Paired t-test between two reports over the same splits.
pub fn compare(a: &EvalReport, b: &EvalReport, alternative: Alternative) -> Result<Comparison, EvalError> {
    let same_splits = a.runs.len() == b.runs.len()
        && a
            .runs
            .iter()
            .zip(&b.runs)
            .all(|(x, y)| x.split_index == y.split_index && x.rng_seed == y.rng_seed);
    if !same_splits {
        return Err(EvalError::UnpairedReports(a.model_tag.clone(), b.model_tag.clone()));
    }
    let r = paired_t_test(&a.accuracies(), &b.accuracies(), alternative)?;
    Ok(Comparison {
        tag_a: a.model_tag.clone(),
        tag_b: b.model_tag.clone(),
        t_statistic: r.t,
        p_value: r.p,
        df: r.df,
        alternative,
        degenerate: r.degenerate,
    })
}

/// Adds every pairwise comparison `(i, j), i < j` to report `i`.
pub fn attach_comparisons(reports: &mut [EvalReport], alternative: Alternative) -> Result<(), EvalError> {
    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            let c = compare(&reports[i], &reports[j], alternative)?;
            reports[i].comparisons.push(c);
        }
    }
    Ok(())
}

/// Plain-text table: one row per model with mean ± std accuracy in percent,
/// followed by the pairwise tests.
pub fn render_table(reports: &[EvalReport]) -> String {
    let width = reports.iter().map(|r| r.model_tag.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$} | {:>17} | splits", "model", "accuracy (%)");
    let _ = writeln!(out, "{}-+-{}-+-------", "-".repeat(width), "-".repeat(17));
    for r in reports {
        let cell = format!("{:.1} ± {:.1}", 100.0 * r.mean, 100.0 * r.std);
        let _ = writeln!(out, "{:<width$} | {:>17} | {}", r.model_tag, cell, r.runs.len());
    }
    let comparisons: Vec<&Comparison> = reports.iter().flat_map(|r| &r.comparisons).collect();
    if !comparisons.is_empty() {
        out.push('\n');
        for c in comparisons {
            let _ = writeln!(
                out,
                "{} vs {}: t = {:.3}, df = {}, p = {:.4}",
                c.tag_a, c.tag_b, c.t_statistic, c.df, c.p_value
            );
        }
    }
    out
}
