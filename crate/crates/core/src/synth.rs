//! Synthetic corpora for tests, benchmarks and demos.
//!
//! [`SynonymDomain`] models a tiny medical vocabulary: conditions grouped
//! into categories, each condition with two interchangeable surface forms,
//! and a handful of question intents with several phrasings. Answers always
//! name a condition by its first form while questions use either form, so a
//! model that learns to match questions to answers has to learn the
//! synonymy. Question-similarity data can be drawn with or without
//! cross-form positives to control how much of that knowledge the final task
//! itself reveals.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Answer, Label, LabeledPair, PairKind, Question};

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ze", "pu", "da", "fe", "go", "hi", "ju", "bo",
];

const FILLERS: [&str; 6] = ["doctor", "please", "hello", "quick", "question", "honestly"];

struct Intent {
    phrasings: &'static [&'static str],
    answer: &'static [&'static str],
}

// `{}` marks where the condition goes.
const INTENTS: [Intent; 4] = [
    Intent {
        phrasings: &["what treats {}", "how do i cure {}", "which medicine helps {}"],
        answer: &[
            "{} is usually treated with rest fluids and medication.",
            "Most people recover from {} with therapy.",
            "See a pharmacist about {} treatment options.",
        ],
    },
    Intent {
        phrasings: &["what causes {}", "why do people get {}", "where does {} come from"],
        answer: &[
            "{} is caused by an infection or inflammation.",
            "Genetics and environment can trigger {}.",
            "The origin of {} is often unknown.",
        ],
    },
    Intent {
        phrasings: &["is {} contagious", "can {} spread to others", "could i catch {} from someone"],
        answer: &[
            "{} can spread through close contact.",
            "Washing hands limits transmission of {}.",
            "Stay home while {} is active.",
        ],
    },
    Intent {
        phrasings: &["what are symptoms of {}", "how do i know if i have {}", "signs of {}"],
        answer: &[
            "{} often shows pain swelling and fatigue.",
            "Early signs of {} include fever.",
            "A clinician can confirm {} with a test.",
        ],
    },
];

#[derive(Debug, Clone)]
pub struct Concept {
    pub category: String,
    pub forms: [String; 2],
}

#[derive(Debug, Clone)]
pub struct SynonymDomain {
    pub concepts: Vec<Concept>,
    pub categories: Vec<String>,
}

fn pseudo_word(rng: &mut ChaCha8Rng, taken: &mut std::collections::BTreeSet<String>) -> String {
    loop {
        let w: String = (0..3).map(|_| *SYLLABLES.choose(rng).expect("non-empty")).collect();
        if taken.insert(w.clone()) {
            return w;
        }
    }
}

impl SynonymDomain {
    pub fn new(categories: usize, concepts_per_category: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut taken = std::collections::BTreeSet::new();
        let categories: Vec<String> = (0..categories).map(|_| pseudo_word(&mut rng, &mut taken)).collect();
        let mut concepts = Vec::new();
        for cat in &categories {
            for _ in 0..concepts_per_category {
                let forms = [pseudo_word(&mut rng, &mut taken), pseudo_word(&mut rng, &mut taken)];
                concepts.push(Concept {
                    category: cat.clone(),
                    forms,
                });
            }
        }
        Self { concepts, categories }
    }

    pub fn intent_count(&self) -> usize {
        INTENTS.len()
    }

    /// A question about `concept` with `intent`, naming it by `form`.
    pub fn question(&self, concept: usize, intent: usize, form: usize, rng: &mut ChaCha8Rng) -> String {
        let phrasing = INTENTS[intent].phrasings.choose(rng).expect("non-empty");
        let mut q = phrasing.replace("{}", &self.concepts[concept].forms[form]);
        if rng.random_bool(0.3) {
            q = format!("{} {q}", FILLERS.choose(rng).expect("non-empty"));
        }
        q
    }

    /// A multi-sentence answer naming the concept by its first form.
    pub fn answer(&self, concept: usize, intent: usize) -> String {
        let name = &self.concepts[concept].forms[0];
        INTENTS[intent]
            .answer
            .iter()
            .map(|s| s.replace("{}", name))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// `per_pair` questions for every (concept, intent), each with its answer.
    pub fn qa_corpus(&self, per_pair: usize, rng: &mut ChaCha8Rng) -> Vec<(Question, Answer)> {
        let mut out = Vec::new();
        for c in 0..self.concepts.len() {
            for i in 0..INTENTS.len() {
                for k in 0..per_pair {
                    let id = format!("c{c}-i{i}-{k}");
                    let form = rng.random_range(0..2);
                    let cat = self.concepts[c].category.clone();
                    out.push((
                        Question::new(id.clone(), self.question(c, i, form, rng)).with_category(cat.clone()),
                        Answer {
                            id: format!("{id}:answer"),
                            question_id: id,
                            text: self.answer(c, i),
                            category: Some(cat),
                        },
                    ));
                }
            }
        }
        out
    }

    /// Balanced question-similarity pairs over `concepts`. Positives share
    /// concept and intent; with probability `cross_form` the two questions
    /// use different surface forms. Negatives differ in concept (same
    /// category when possible) or in intent.
    pub fn question_pairs(
        &self,
        concepts: &[usize],
        n: usize,
        cross_form: f64,
        rng: &mut ChaCha8Rng,
    ) -> Vec<LabeledPair> {
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let c = *concepts.choose(rng).expect("non-empty concept list");
            let i = rng.random_range(0..INTENTS.len());
            let f1 = rng.random_range(0..2);
            let q1 = self.question(c, i, f1, rng);
            let (q2, label) = if k % 2 == 0 {
                let f2 = if rng.random_bool(cross_form) { 1 - f1 } else { f1 };
                let mut q2 = self.question(c, i, f2, rng);
                while q2 == q1 {
                    q2 = self.question(c, i, f2, rng);
                }
                (q2, Label::Positive)
            } else if rng.random_bool(0.5) {
                let siblings: Vec<usize> = concepts
                    .iter()
                    .copied()
                    .filter(|&o| o != c && self.concepts[o].category == self.concepts[c].category)
                    .collect();
                let others: Vec<usize> = concepts.iter().copied().filter(|&o| o != c).collect();
                let pool = if siblings.is_empty() { &others } else { &siblings };
                let o = *pool.choose(rng).expect("at least two concepts");
                (self.question(o, i, rng.random_range(0..2), rng), Label::Negative)
            } else {
                let j = (i + rng.random_range(1..INTENTS.len())) % INTENTS.len();
                (self.question(c, j, rng.random_range(0..2), rng), Label::Negative)
            };
            out.push(LabeledPair {
                text_a: q1,
                text_b: q2,
                label,
                kind: PairKind::QQ,
                labeler_id: None,
                seed_id: Some(format!("pair-{k}")),
                id: None,
            });
        }
        out
    }

    /// Every text the domain can produce, for building a vocabulary.
    pub fn all_texts(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (c, concept) in self.concepts.iter().enumerate() {
            for (i, intent) in INTENTS.iter().enumerate() {
                for form in &concept.forms {
                    for p in intent.phrasings {
                        out.push(p.replace("{}", form));
                    }
                }
                out.push(self.answer(c, i));
            }
        }
        out.extend(FILLERS.iter().map(|s| s.to_string()));
        out
    }
}

/// Identity-vs-distinct pairs: positives repeat a random phrase, negatives
/// pair two phrases with no word in common. Half of each.
pub fn separable_pairs(n: usize, seed: u64) -> Vec<LabeledPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = std::collections::BTreeSet::new();
    let words: Vec<String> = (0..24).map(|_| pseudo_word(&mut rng, &mut taken)).collect();
    let phrase = |rng: &mut ChaCha8Rng, pool: &[String]| -> String {
        pool.choose_multiple(rng, 3).cloned().collect::<Vec<_>>().join(" ")
    };
    (0..n)
        .map(|k| {
            if k % 2 == 0 {
                let p = phrase(&mut rng, &words);
                LabeledPair::new(p.clone(), p, Label::Positive, PairKind::QQ).expect("valid pair")
            } else {
                let mut shuffled = words.clone();
                shuffled.shuffle(&mut rng);
                let (left, right) = shuffled.split_at(12);
                LabeledPair::new(phrase(&mut rng, left), phrase(&mut rng, right), Label::Negative, PairKind::QQ)
                    .expect("valid pair")
            }
        })
        .collect()
}

/// A random categorised QA corpus with 1 to 5 sentence answers.
pub fn random_qa_corpus(categories: usize, records: usize, seed: u64) -> Vec<(Question, Answer)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = std::collections::BTreeSet::new();
    let cats: Vec<String> = (0..categories).map(|_| pseudo_word(&mut rng, &mut taken)).collect();
    let vocab: Vec<String> = (0..200).map(|_| pseudo_word(&mut rng, &mut taken)).collect();
    let sentence = |rng: &mut ChaCha8Rng| -> String {
        let len = rng.random_range(3..8);
        let words: Vec<&str> = (0..len).map(|_| vocab.choose(rng).expect("non-empty").as_str()).collect();
        format!("{}.", words.join(" "))
    };
    (0..records)
        .map(|r| {
            // round-robin keeps every category populated
            let cat = cats[r % categories].clone();
            let id = format!("r{r}");
            let q = format!("{}?", sentence(&mut rng).trim_end_matches('.'));
            let n_sent = rng.random_range(1..=5);
            let a = (0..n_sent).map(|_| sentence(&mut rng)).collect::<Vec<_>>().join(" ");
            (
                Question::new(id.clone(), q).with_category(cat.clone()),
                Answer {
                    id: format!("{id}:answer"),
                    question_id: id,
                    text: a,
                    category: Some(cat),
                },
            )
        })
        .collect()
}

/// Question-pair data shaped like a doctor-labeled similarity corpus: each
/// seed question yields one similar and one different pair. The pairs of a
/// seed normally share a labeler; with probability `shared_seed_prob` the
/// second pair goes to another labeler.
pub fn labeled_pair_fixture(seeds: usize, labelers: usize, shared_seed_prob: f64, seed: u64) -> Vec<LabeledPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * seeds);
    for s in 0..seeds {
        let doc = rng.random_range(0..labelers);
        let other = if rng.random_bool(shared_seed_prob) && labelers > 1 {
            (doc + rng.random_range(1..labelers)) % labelers
        } else {
            doc
        };
        let seed_q = format!("seed question {s}?");
        for (label, who, text) in [
            (Label::Positive, doc, format!("similar rewrite of {s}?")),
            (Label::Negative, other, format!("different question near {s}?")),
        ] {
            out.push(LabeledPair {
                text_a: seed_q.clone(),
                text_b: text,
                label,
                kind: PairKind::QQ,
                labeler_id: Some(format!("doc{who}")),
                seed_id: Some(format!("s{s}")),
                id: None,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_is_deterministic() {
        let a = SynonymDomain::new(3, 4, 9);
        let b = SynonymDomain::new(3, 4, 9);
        assert_eq!(a.concepts.len(), 12);
        assert_eq!(a.concepts[5].forms, b.concepts[5].forms);
    }

    #[test]
    fn answers_use_first_form() {
        let d = SynonymDomain::new(2, 2, 1);
        let a = d.answer(3, 0);
        assert!(a.contains(&d.concepts[3].forms[0]));
        assert!(!a.contains(&d.concepts[3].forms[1]));
    }

    #[test]
    fn question_pairs_balanced() {
        let d = SynonymDomain::new(2, 3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pairs = d.question_pairs(&[0, 1, 2, 3, 4, 5], 40, 1.0, &mut rng);
        let pos = pairs.iter().filter(|p| p.label == Label::Positive).count();
        assert_eq!(pos, 20);
    }

    #[test]
    fn separable_pairs_are_separable() {
        for p in separable_pairs(50, 3) {
            let same = p.text_a == p.text_b;
            assert_eq!(same, p.label == Label::Positive);
        }
    }
}
