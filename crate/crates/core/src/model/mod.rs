//! Sentence-pair classifier with a pluggable encoder and a two-class head,
//! trained by mini-batch SGD on cross-entropy.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub mod checkpoint;
mod desk;
mod params;
mod train;
mod vocab;

pub use desk::{DeskEncoder, EncoderConfig, PairTokens};
pub use params::ParamSet;
pub use train::{double_finetune, finetune, finetune_with_monitor, Schedule, TrainConfig, TrainReport};
pub use vocab::{Vocab, UNK};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("empty text on side {0}")]
    EmptyText(char),
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("early stopping requires a dev set")]
    MissingDev,
    #[error("intermediate dataset is empty")]
    EmptyIntermediate,
    #[error("intermediate stage needs a fixed epoch count")]
    IntermediateNeedsEpochs,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("scorer failure: {0}")]
    Scorer(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// A trainable pair encoder: maps `(text_a, text_b)` to a fixed-width vector.
///
/// `prepare` tokenizes and truncates once; `forward` keeps whatever the
/// matching `backward` needs to accumulate parameter gradients. Forward
/// passes are pure functions of the input and parameters.
pub trait PairEncoder: Clone + Send + Sync {
    type Input: Send + Sync;
    type Trace;

    fn output_width(&self) -> usize;
    fn prepare(&self, text_a: &str, text_b: &str, max_tokens: usize) -> Self::Input;
    fn forward(&self, input: &Self::Input) -> (Array1<f64>, Self::Trace);
    fn backward(&self, trace: &Self::Trace, d_out: ArrayView1<f64>, grads: &mut ParamSet);
    fn params(&self) -> &ParamSet;
    fn params_mut(&mut self) -> &mut ParamSet;

    fn encode(&self, text_a: &str, text_b: &str, max_tokens: usize) -> Array1<f64> {
        self.forward(&self.prepare(text_a, text_b, max_tokens)).0
    }
}

/// Trims the longer segment from its end, one token at a time, until the
/// joint length fits `max_tokens`. Ties trim segment b.
pub fn truncate_pair<T>(a: &mut Vec<T>, b: &mut Vec<T>, max_tokens: usize) {
    while a.len() + b.len() > max_tokens {
        if a.len() > b.len() {
            a.pop();
        } else {
            b.pop();
        }
    }
}

/// Anything that can give the probability that two texts are similar.
pub trait PairScorer: Send + Sync {
    fn score(&self, text_a: &str, text_b: &str) -> Result<f64, ModelError>;
}

impl<T: PairScorer + ?Sized> PairScorer for &T {
    fn score(&self, a: &str, b: &str) -> Result<f64, ModelError> {
        (**self).score(a, b)
    }
}

impl<T: PairScorer + ?Sized> PairScorer for Arc<T> {
    fn score(&self, a: &str, b: &str) -> Result<f64, ModelError> {
        (**self).score(a, b)
    }
}

impl<T: PairScorer + ?Sized> PairScorer for Box<T> {
    fn score(&self, a: &str, b: &str) -> Result<f64, ModelError> {
        (**self).score(a, b)
    }
}

pub const HEAD_W: usize = 0;
pub const HEAD_B: usize = 1;

/// Encoder plus an affine map to two logits (index 1 = similar).
#[derive(Debug, Clone, PartialEq)]
pub struct PairClassifier<E> {
    pub encoder: E,
    pub head: ParamSet,
    /// Decision threshold on the positive-class probability.
    pub threshold: f64,
    /// Token budget used when the classifier serves as a [`PairScorer`].
    pub max_tokens: usize,
    /// Number of completed training epochs; zero marks an untrained model.
    pub epochs_trained: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: crate::corpus::Label,
    pub p_positive: f64,
}

pub(crate) fn log_softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    [logits[0] - lse, logits[1] - lse]
}

impl<E: PairEncoder> PairClassifier<E> {
    pub fn new(encoder: E, head_seed: u64) -> Self {
        let w = encoder.output_width();
        let mut rng = ChaCha8Rng::seed_from_u64(head_seed);
        let normal = Normal::new(0.0, 1.0 / (w as f64).sqrt()).expect("positive std");
        let mut head = ParamSet::new();
        head.push("head.w", Array2::from_shape_fn((w, 2), |_| normal.sample(&mut rng)));
        head.push("head.b", Array2::zeros((1, 2)));
        Self {
            encoder,
            head,
            threshold: 0.5,
            max_tokens: 200,
            epochs_trained: 0,
        }
    }

    pub fn is_trained(&self) -> bool {
        self.epochs_trained > 0
    }

    pub fn logits(&self, features: ArrayView1<f64>) -> [f64; 2] {
        let z = features.dot(self.head.get(HEAD_W));
        let b = self.head.get(HEAD_B);
        [z[0] + b[[0, 0]], z[1] + b[[0, 1]]]
    }

    /// Class probabilities `[p_negative, p_positive]` for a prepared input.
    pub fn probabilities(&self, input: &E::Input) -> [f64; 2] {
        let (features, _) = self.encoder.forward(input);
        let ls = log_softmax2(self.logits(features.view()));
        [ls[0].exp(), ls[1].exp()]
    }

    /// Cross-entropy of one example; accumulates its gradient into the two
    /// gradient sets.
    pub fn accumulate_gradient(
        &self,
        input: &E::Input,
        label: crate::corpus::Label,
        enc_grads: &mut ParamSet,
        head_grads: &mut ParamSet,
    ) -> f64 {
        let (features, trace) = self.encoder.forward(input);
        let ls = log_softmax2(self.logits(features.view()));
        let y = label.as_u8() as usize;
        let loss = -ls[y];
        let mut dlogits = [ls[0].exp(), ls[1].exp()];
        dlogits[y] -= 1.0;
        let dl = Array1::from(dlogits.to_vec());
        let w = self.head.get(HEAD_W);
        for (i, f) in features.iter().enumerate() {
            head_grads.get_mut(HEAD_W)[[i, 0]] += f * dlogits[0];
            head_grads.get_mut(HEAD_W)[[i, 1]] += f * dlogits[1];
        }
        head_grads.get_mut(HEAD_B)[[0, 0]] += dlogits[0];
        head_grads.get_mut(HEAD_B)[[0, 1]] += dlogits[1];
        let d_features = w.dot(&dl);
        self.encoder.backward(&trace, d_features.view(), enc_grads);
        loss
    }

    /// Loss of one example without gradients.
    pub fn loss(&self, input: &E::Input, label: crate::corpus::Label) -> f64 {
        let (features, _) = self.encoder.forward(input);
        -log_softmax2(self.logits(features.view()))[label.as_u8() as usize]
    }
}

/// Classifies one pair, truncating to `max_tokens` before encoding.
pub fn predict<E: PairEncoder>(
    model: &PairClassifier<E>,
    text_a: &str,
    text_b: &str,
    max_tokens: usize,
) -> Result<Prediction, ModelError> {
    if text_a.trim().is_empty() {
        return Err(ModelError::EmptyText('a'));
    }
    if text_b.trim().is_empty() {
        return Err(ModelError::EmptyText('b'));
    }
    let input = model.encoder.prepare(text_a, text_b, max_tokens.max(2));
    let p = model.probabilities(&input)[1];
    let label = if p >= model.threshold {
        crate::corpus::Label::Positive
    } else {
        crate::corpus::Label::Negative
    };
    Ok(Prediction { label, p_positive: p })
}

impl<E: PairEncoder> PairScorer for PairClassifier<E> {
    fn score(&self, text_a: &str, text_b: &str) -> Result<f64, ModelError> {
        predict(self, text_a, text_b, self.max_tokens).map(|p| p.p_positive)
    }
}

/// Fraction of `pairs` classified correctly at the model's threshold.
pub fn dataset_accuracy<E: PairEncoder>(
    model: &PairClassifier<E>,
    pairs: &[crate::corpus::LabeledPair],
    max_tokens: usize,
) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let correct = pairs
        .iter()
        .filter(|p| {
            let input = model.encoder.prepare(&p.text_a, &p.text_b, max_tokens);
            let positive = model.probabilities(&input)[1] >= model.threshold;
            positive == (p.label == crate::corpus::Label::Positive)
        })
        .count();
    correct as f64 / pairs.len() as f64
}

/// A desk-scale classifier over a vocabulary built from `texts`.
pub fn desk_classifier<'a>(
    config: EncoderConfig,
    texts: impl IntoIterator<Item = &'a str>,
) -> PairClassifier<DeskEncoder> {
    let head_seed = config.init_seed.wrapping_add(0x9e37_79b9);
    PairClassifier::new(DeskEncoder::new(config, Vocab::build(texts)), head_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    fn tiny(seed: u64) -> PairClassifier<DeskEncoder> {
        let cfg = EncoderConfig {
            width: 6,
            layers: 2,
            ff_width: 5,
            position_scale: 0.3,
            init_seed: seed,
        };
        desk_classifier(cfg, ["fever rash cough headache", "high blood pressure hypertension"])
    }

    #[test]
    fn truncation_trims_longer_side_first() {
        let mut a: Vec<u32> = (0..5).collect();
        let mut b: Vec<u32> = (0..2).collect();
        truncate_pair(&mut a, &mut b, 4);
        assert_eq!((a.len(), b.len()), (2, 2));
        let mut a: Vec<u32> = (0..3).collect();
        let mut b: Vec<u32> = (0..3).collect();
        truncate_pair(&mut a, &mut b, 5);
        assert_eq!((a.len(), b.len()), (3, 2));
        let mut a: Vec<u32> = vec![1];
        let mut b: Vec<u32> = (0..10).collect();
        truncate_pair(&mut a, &mut b, 2);
        assert_eq!((a.len(), b.len()), (1, 1));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let m = tiny(1);
        for (a, b) in [("fever", "rash"), ("high blood pressure", "hypertension"), ("x y z", "cough")] {
            let p = m.probabilities(&m.encoder.prepare(a, b, 200));
            assert!((p[0] + p[1] - 1.0).abs() < 1e-9);
            assert!((0.0..=1.0).contains(&p[1]));
        }
    }

    #[test]
    fn predict_is_deterministic() {
        let m = tiny(2);
        let p1 = predict(&m, "fever rash", "cough", 200).unwrap();
        let p2 = predict(&m, "fever rash", "cough", 200).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn predict_rejects_empty_text() {
        let m = tiny(3);
        assert!(matches!(predict(&m, " ", "x", 10), Err(ModelError::EmptyText('a'))));
        assert!(matches!(predict(&m, "x", "", 10), Err(ModelError::EmptyText('b'))));
    }

    #[test]
    fn long_input_matches_pretruncated_input() {
        let m = tiny(4);
        let long_a = "fever rash cough headache fever rash cough headache";
        let long_b = "high blood pressure hypertension high blood";
        let p_long = predict(&m, long_a, long_b, 6).unwrap();
        let p_short = predict(&m, "fever rash cough", "high blood pressure", 6).unwrap();
        assert_eq!(p_long, p_short);
    }

    #[test]
    fn label_follows_threshold() {
        let mut m = tiny(5);
        let p = predict(&m, "fever", "rash", 10).unwrap();
        m.threshold = p.p_positive;
        assert_eq!(predict(&m, "fever", "rash", 10).unwrap().label, Label::Positive);
        m.threshold = p.p_positive + 1e-12;
        assert_eq!(predict(&m, "fever", "rash", 10).unwrap().label, Label::Negative);
    }
}
