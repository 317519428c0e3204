use std::collections::BTreeSet;
use std::f64::consts::PI;

use medsim_core::corpus::split_by_seed;
use medsim_core::eval::{accuracy, consistency_analysis, mean_std, paired_t_test, Alternative};
use medsim_core::faqmatch::{content_tokens, preprocess, weighted_overlap};
use medsim_core::model::{ModelError, PairScorer};
use medsim_core::synth::{labeled_pair_fixture, random_qa_corpus};
use medsim_core::taskgen::{build_qa_pairs, build_qc_pairs};
use medsim_core::{Label, ReplacementMap, TaskGenConfig};
use proptest::prelude::*;

/// Two-sided Student-t tail from the finite trigonometric series for
/// integer degrees of freedom.
fn t_tail_series(t: f64, df: usize) -> f64 {
    let theta = (t.abs() / (df as f64).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let inside = if df % 2 == 1 {
        if df == 1 {
            2.0 * theta / PI
        } else {
            let mut term = c;
            let mut sum = c;
            let mut k = 2;
            while k + 3 <= df {
                term *= c * c * k as f64 / (k + 1) as f64;
                sum += term;
                k += 2;
            }
            2.0 / PI * (theta + s * sum)
        }
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1;
        while k + 3 <= df {
            term *= c * c * k as f64 / (k + 1) as f64;
            sum += term;
            k += 2;
        }
        s * sum
    };
    1.0 - inside
}

#[test]
fn t_test_matches_series_for_small_df() {
    for df in 2..=30usize {
        for &t in &[0.1, 0.5, 1.0, 1.7, 2.5, 4.0, 7.5] {
            let got = medsim_core::eval::student_t_two_sided(t, df as f64);
            let want = t_tail_series(t, df);
            assert!((got - want).abs() < 1e-9, "df {df} t {t}: {got} vs {want}");
        }
    }
}

struct Fixed(f64);

impl PairScorer for Fixed {
    fn score(&self, _: &str, b: &str) -> Result<f64, ModelError> {
        Ok(if b.len().is_multiple_of(2) { self.0 } else { 1.0 - self.0 })
    }
}

proptest! {
    #[test]
    fn accuracy_matches_counting(bits in prop::collection::vec((any::<bool>(), any::<bool>()), 1..300)) {
        let to = |b: bool| if b { Label::Positive } else { Label::Negative };
        let preds: Vec<Label> = bits.iter().map(|b| to(b.0)).collect();
        let labels: Vec<Label> = bits.iter().map(|b| to(b.1)).collect();
        let hits = bits.iter().filter(|b| b.0 == b.1).count();
        prop_assert_eq!(accuracy(&preds, &labels).unwrap(), hits as f64 / bits.len() as f64);
    }

    #[test]
    fn mean_std_is_permutation_invariant(mut xs in prop::collection::vec(0.0f64..1.0, 2..20), seed in any::<u64>()) {
        let (m1, s1) = mean_std(&xs);
        use rand::{seq::SliceRandom, SeedableRng};
        xs.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (m2, s2) = mean_std(&xs);
        prop_assert!((m1 - m2).abs() < 1e-12 && (s1 - s2).abs() < 1e-12);
    }

    #[test]
    fn t_test_antisymmetric(a in prop::collection::vec(0.5f64..1.0, 5), b in prop::collection::vec(0.5f64..1.0, 5)) {
        let x = paired_t_test(&a, &b, Alternative::TwoSided).unwrap();
        let y = paired_t_test(&b, &a, Alternative::TwoSided).unwrap();
        prop_assert!((x.p - y.p).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&x.p));
    }

    #[test]
    fn seed_split_is_a_disjoint_partition(seed in any::<u64>(), dev in 0.0f64..0.4, test in 0.0f64..0.4) {
        let pairs = labeled_pair_fixture(60, 6, 0.2, seed);
        let s = split_by_seed(&pairs, dev, test, seed);
        prop_assert_eq!(s.train.len() + s.dev.len() + s.test.len(), pairs.len());
        let seeds = |v: &[medsim_core::LabeledPair]| -> BTreeSet<String> {
            v.iter().filter_map(|p| p.seed_id.clone()).collect()
        };
        let (a, b, c) = (seeds(&s.train), seeds(&s.dev), seeds(&s.test));
        prop_assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
    }

    #[test]
    fn preprocess_is_idempotent(text in "[a-zA-Z0-9 ?!,.-]{0,60}") {
        let map = ReplacementMap::default_covid();
        let once = preprocess(&text, &map);
        prop_assert_eq!(preprocess(&once, &map), once);
    }

    #[test]
    fn preprocess_idempotent_near_patterns(parts in prop::collection::vec(
        prop::sample::select(vec!["covid", "COVID-19", "coronavirus", "-", " ", "19", "x", "?"]), 0..12)) {
        let map = ReplacementMap::default_covid();
        let text = parts.concat();
        let once = preprocess(&text, &map);
        prop_assert_eq!(preprocess(&once, &map), once);
    }

    #[test]
    fn overlap_grows_with_shared_tokens(
        user in prop::collection::btree_set("[a-e]{1,2}", 1..6),
        faq in prop::collection::btree_set("[a-e]{1,2}", 0..6),
        extra in "[a-e]{1,2}",
    ) {
        let w = |t: &str| 1.0 + t.len() as f64;
        let before = weighted_overlap(&user, &faq, w);
        let mut bigger = faq.clone();
        bigger.insert(extra);
        let after = weighted_overlap(&user, &bigger, w);
        prop_assert!(after >= before);
        prop_assert!((0.0..=1.0).contains(&after));
    }

    #[test]
    fn consistency_ignores_model_order(p in 0.0f64..1.0, q in 0.0f64..1.0, rot in 0usize..5) {
        let mut models = vec![Fixed(p), Fixed(q), Fixed(0.2), Fixed(0.9), Fixed(p)];
        let pairs = labeled_pair_fixture(10, 3, 0.0, 1);
        let base = consistency_analysis(&models, &pairs, 0.5).unwrap();
        models.rotate_left(rot);
        let rotated = consistency_analysis(&models, &pairs, 0.5).unwrap();
        prop_assert_eq!(base, rotated);
    }

    #[test]
    fn constructors_are_balanced_and_deterministic(seed in 0u64..1000) {
        let corpus = random_qa_corpus(5, 60, seed);
        let cfg = TaskGenConfig::with_seed(seed);
        let qa = build_qa_pairs(&corpus, &cfg).unwrap();
        prop_assert_eq!(&qa, &build_qa_pairs(&corpus, &cfg).unwrap());
        let pos = qa.pairs.iter().filter(|p| p.label == Label::Positive).count();
        prop_assert_eq!(2 * pos, qa.pairs.len());
        let questions: Vec<_> = corpus.into_iter().map(|(q, _)| q).collect();
        let qc = build_qc_pairs(&questions, &cfg).unwrap();
        prop_assert_eq!(qc.pairs.len(), 2 * questions.len());
    }
}

#[test]
fn content_tokens_drop_stopwords() {
    let t = content_tokens("What can the child take for a fever?");
    assert!(t.contains("child") && t.contains("fever"));
    assert!(!t.contains("the") && !t.contains("what"));
}
