//! Helpers shared by the integration and acceptance tests.
#![allow(dead_code)]

use medsim_core::corpus::LabeledPair;
use medsim_core::model::{
    dataset_accuracy, desk_classifier, double_finetune, finetune, DeskEncoder, PairEncoder, Schedule,
};
use medsim_core::synth::SynonymDomain;
use medsim_core::taskgen::build_qa_pairs;
use medsim_core::{EncoderConfig, Label, PairClassifier, TaskGenConfig, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Worst relative disagreement between backprop and central differences
/// over every parameter of a tiny classifier on one random pair.
pub fn gradient_check(seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = ["fever", "cough", "rash", "pain", "child", "dose", "night", "sleep"];
    let mut phrase = |n: usize| -> String {
        use rand::seq::IndexedRandom;
        use rand::Rng;
        let len = rng.random_range(1..=n);
        (0..len).map(|_| *words.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ")
    };
    let (a, b) = (phrase(4), phrase(4));
    let label = if seed.is_multiple_of(2) { Label::Positive } else { Label::Negative };
    let config = EncoderConfig {
        width: 4,
        layers: 2,
        ff_width: 6,
        position_scale: 0.1,
        init_seed: seed,
    };
    let model = desk_classifier(config, words.iter().copied());
    let input = model.encoder.prepare(&a, &b, 12);
    let mut enc_g = model.encoder.params().zeros_like();
    let mut head_g = model.head.zeros_like();
    model.accumulate_gradient(&input, label, &mut enc_g, &mut head_g);

    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let check = |analytic: f64, numeric: f64, name: &str, worst: &mut f64| -> Result<(), String> {
        let scale = analytic.abs().max(numeric.abs()).max(1e-5);
        let rel = (analytic - numeric).abs() / scale;
        *worst = worst.max(rel);
        if rel > 1e-4 {
            return Err(format!("{name}: analytic {analytic} numeric {numeric} ({a:?} / {b:?})"));
        }
        Ok(())
    };
    for t in 0..model.encoder.params().len() {
        let name = model.encoder.params().name(t).to_string();
        let shape = model.encoder.params().get(t).dim();
        for r in 0..shape.0 {
            for c in 0..shape.1 {
                let mut plus = model.clone();
                plus.encoder.params_mut().get_mut(t)[[r, c]] += eps;
                let mut minus = model.clone();
                minus.encoder.params_mut().get_mut(t)[[r, c]] -= eps;
                let numeric = (plus.loss(&input, label) - minus.loss(&input, label)) / (2.0 * eps);
                check(enc_g.get(t)[[r, c]], numeric, &format!("{name}[{r},{c}]"), &mut worst)?;
            }
        }
    }
    for t in 0..model.head.len() {
        let shape = model.head.get(t).dim();
        for r in 0..shape.0 {
            for c in 0..shape.1 {
                let mut plus = model.clone();
                plus.head.get_mut(t)[[r, c]] += eps;
                let mut minus = model.clone();
                minus.head.get_mut(t)[[r, c]] -= eps;
                let numeric = (plus.loss(&input, label) - minus.loss(&input, label)) / (2.0 * eps);
                check(head_g.get(t)[[r, c]], numeric, model.head.name(t), &mut worst)?;
            }
        }
    }
    Ok(worst)
}

/// Knobs for the synonym-transfer experiment.
#[derive(Debug, Clone)]
pub struct TransferSetup {
    pub categories: usize,
    pub concepts_per_category: usize,
    pub qa_per_pair: usize,
    pub final_train: usize,
    pub final_dev: usize,
    pub test: usize,
    pub encoder: EncoderConfig,
    pub mid_lr: f64,
    pub mid_epochs: usize,
    pub final_lr: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
}

impl Default for TransferSetup {
    fn default() -> Self {
        Self {
            categories: 4,
            concepts_per_category: 4,
            qa_per_pair: 40,
            final_train: 64,
            final_dev: 64,
            test: 200,
            encoder: EncoderConfig::default(),
            mid_lr: 0.2,
            mid_epochs: 5,
            final_lr: 0.1,
            batch_size: 16,
            patience: 3,
            max_epochs: 40,
        }
    }
}

pub struct TransferData {
    pub intermediate: Vec<LabeledPair>,
    pub train: Vec<LabeledPair>,
    pub dev: Vec<LabeledPair>,
    pub test: Vec<LabeledPair>,
    pub base: PairClassifier<DeskEncoder>,
}

/// One replicate: a fresh domain, fresh data and a fresh initialisation,
/// all derived from `seed`. Final-task positives reuse the same surface
/// form; test positives always switch form.
pub fn transfer_data(setup: &TransferSetup, seed: u64) -> TransferData {
    let domain = SynonymDomain::new(setup.categories, setup.concepts_per_category, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let qa = domain.qa_corpus(setup.qa_per_pair, &mut rng);
    let intermediate = build_qa_pairs(&qa, &TaskGenConfig::with_seed(seed)).expect("qa pairs").pairs;
    let concepts: Vec<usize> = (0..domain.concepts.len()).collect();
    let train = domain.question_pairs(&concepts, setup.final_train, 0.0, &mut rng);
    let dev = domain.question_pairs(&concepts, setup.final_dev, 0.0, &mut rng);
    let test = domain.question_pairs(&concepts, setup.test, 1.0, &mut rng);
    let texts = domain.all_texts();
    let encoder = EncoderConfig {
        init_seed: seed,
        ..setup.encoder.clone()
    };
    let base = desk_classifier(encoder, texts.iter().map(String::as_str));
    TransferData {
        intermediate,
        train,
        dev,
        test,
        base,
    }
}

/// Test accuracy of (single fine-tuning, double fine-tuning) from the same
/// initialisation.
pub fn transfer_trial(setup: &TransferSetup, seed: u64) -> (f64, f64) {
    let data = transfer_data(setup, seed);
    let final_cfg = TrainConfig {
        max_tokens: 64,
        learning_rate: setup.final_lr,
        batch_size: setup.batch_size,
        schedule: Schedule::EarlyStop {
            patience: setup.patience,
            max_epochs: setup.max_epochs,
        },
        rng_seed: seed,
        ..TrainConfig::default()
    };
    let mid_cfg = TrainConfig {
        learning_rate: setup.mid_lr,
        schedule: Schedule::Epochs(setup.mid_epochs),
        ..final_cfg.clone()
    };
    let (single, _) = finetune(data.base.clone(), &data.train, Some(&data.dev), &final_cfg).expect("single");
    let (double, _) =
        double_finetune(data.base, &data.intermediate, &data.train, Some(&data.dev), &mid_cfg, &final_cfg)
            .expect("double");
    (
        dataset_accuracy(&single, &data.test, 64),
        dataset_accuracy(&double, &data.test, 64),
    )
}

/// Train accuracy of a tiny encoder after 30 epochs on 50 separable pairs.
pub fn overfit_run(seed: u64) -> f64 {
    let pairs = medsim_core::synth::separable_pairs(50, seed);
    let texts: Vec<&str> = pairs.iter().flat_map(|p| [p.text_a.as_str(), p.text_b.as_str()]).collect();
    let config = EncoderConfig {
        width: 8,
        layers: 1,
        ff_width: 16,
        position_scale: 0.1,
        init_seed: seed,
    };
    let model = desk_classifier(config, texts);
    let cfg = TrainConfig {
        max_tokens: 16,
        learning_rate: 0.5,
        batch_size: 10,
        schedule: Schedule::Epochs(30),
        rng_seed: seed,
        ..TrainConfig::default()
    };
    let (model, _) = finetune(model, &pairs, None, &cfg).expect("training runs");
    dataset_accuracy(&model, &pairs, 16)
}
