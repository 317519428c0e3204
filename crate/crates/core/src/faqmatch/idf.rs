use std::collections::{BTreeMap, BTreeSet};

use super::FaqError;
use crate::text::alnum_tokens;

/// The fixed 50-word stopword list.
pub const STOPWORDS: &str = include_str!("../../data/stopwords.txt");

fn stopwords() -> &'static BTreeSet<&'static str> {
    static SET: std::sync::OnceLock<BTreeSet<&'static str>> = std::sync::OnceLock::new();
    SET.get_or_init(|| STOPWORDS.lines().map(str::trim).filter(|l| !l.is_empty()).collect())
}

/// Distinct lowercased alphanumeric tokens that are not stopwords.
pub fn content_tokens(text: &str) -> BTreeSet<String> {
    let stop = stopwords();
    alnum_tokens(text).into_iter().filter(|t| !stop.contains(t.as_str())).collect()
}

/// Document frequencies over a question set, with smoothed idf
/// `ln((1 + N) / (1 + df)) + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfIndex {
    doc_count: usize,
    df: BTreeMap<String, usize>,
}

impl IdfIndex {
    pub fn build<S: AsRef<str>>(docs: &[S]) -> Result<Self, FaqError> {
        if docs.is_empty() {
            return Err(FaqError::EmptyCorpus);
        }
        let mut df = BTreeMap::new();
        for d in docs {
            for t in content_tokens(d.as_ref()) {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        Ok(Self {
            doc_count: docs.len(),
            df,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn df(&self, token: &str) -> usize {
        self.df.get(token).copied().unwrap_or(0)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.df.contains_key(token)
    }

    /// Tokens never seen in the index get the maximum weight (df = 0).
    pub fn idf(&self, token: &str) -> f64 {
        let n = self.doc_count as f64;
        ((1.0 + n) / (1.0 + self.df(token) as f64)).ln() + 1.0
    }
}

/// `Σ w(shared) / Σ w(user)` over distinct tokens; 0 when `user` is empty.
pub fn weighted_overlap<F>(user: &BTreeSet<String>, faq: &BTreeSet<String>, weight: F) -> f64
where
    F: Fn(&str) -> f64,
{
    let total: f64 = user.iter().map(|t| weight(t)).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let shared: f64 = user.intersection(faq).map(|t| weight(t)).sum();
    shared / total
}

/// Idf-weighted recall of the user question's content tokens in the FAQ
/// question. Both inputs are expected to be preprocessed.
pub fn overlap_score(user_q: &str, faq_q: &str, idf: &IdfIndex) -> f64 {
    weighted_overlap(&content_tokens(user_q), &content_tokens(faq_q), |t| idf.idf(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idf_values() {
        let mut docs: Vec<String> = (0..10).map(|i| format!("fever doc{i}")).collect();
        docs[0].push_str(" rash");
        let idx = IdfIndex::build(&docs).unwrap();
        assert_eq!(idx.idf("fever"), 1.0);
        assert!((idx.idf("rash") - 2.704_748_092_238_425).abs() < 1e-12);
    }

    #[test]
    fn stopwords_are_not_indexed() {
        let idx = IdfIndex::build(&["the fever", "the rash"]).unwrap();
        assert!(!idx.contains("the"));
        assert!(idx.contains("fever"));
        assert_eq!(stopwords().len(), 50);
    }

    #[test]
    fn empty_corpus_errors() {
        assert!(IdfIndex::build::<&str>(&[]).is_err());
    }

    #[test]
    fn hand_weighted_overlap() {
        let user: BTreeSet<String> = ["fever", "rash"].iter().map(|s| s.to_string()).collect();
        let faq: BTreeSet<String> = ["fever", "cough"].iter().map(|s| s.to_string()).collect();
        let w = |t: &str| if t == "fever" { 2.0 } else { 3.0 };
        assert!((weighted_overlap(&user, &faq, w) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn identical_and_disjoint() {
        let idx = IdfIndex::build(&["fever rash", "cough"]).unwrap();
        assert_eq!(overlap_score("fever rash?", "Fever, rash", &idx), 1.0);
        assert_eq!(overlap_score("fever", "cough", &idx), 0.0);
        assert_eq!(overlap_score("the of", "fever", &idx), 0.0);
    }
}
