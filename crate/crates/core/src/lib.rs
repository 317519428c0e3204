//! Medical question similarity toolkit.
//!
//! The crate is organised around the life cycle of a question-pair classifier:
//!
//! * [`corpus`] loads and validates labeled pairs and QA corpora, splits them by
//!   labeler and computes token statistics.
//! * [`taskgen`] turns a QA corpus into intermediate-task datasets (QA, AA, QC, QQ).
//! * [`model`] holds the pair classifier, its desk-scale encoder and the
//!   single/double fine-tuning loops.
//! * [`eval`] implements accuracy, multi-split runs, the paired t-test and the
//!   consistency/probing analysis.
//! * [`faqmatch`] is the serving pipeline: placeholder substitution, tf-idf
//!   overlap filtering and exhaustive pair scoring.
//! * [`synth`] generates synthetic corpora with controllable synonym structure,
//!   used by tests, benchmarks and demos.

pub mod corpus;
pub mod eval;
pub mod faqmatch;
pub mod model;
pub mod synth;
pub mod taskgen;
pub mod text;

pub use corpus::{Answer, CorpusStats, Label, LabeledPair, PairKind, Question, SplitAssignment};
pub use eval::{ConsistencyVerdict, EvalReport, SplitRun, Verdict};
pub use faqmatch::{FaqEntry, FaqIndex, IdfIndex, MatchResult, ReplacementMap};
pub use model::{
    DeskEncoder, EncoderConfig, PairClassifier, PairEncoder, PairScorer, Schedule, TrainConfig,
    TrainReport,
};
pub use taskgen::TaskGenConfig;
