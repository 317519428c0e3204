//! Fixtures shared by the benchmarks.

use medsim_core::faqmatch::{FaqIndex, ReplacementMap};
use medsim_core::FaqEntry;

const TOPICS: [&str; 10] = [
    "fever", "cough", "masks", "travel", "pets", "schools", "vaccines", "testing", "symptoms", "children",
];

/// `n` FAQ entries whose questions mix two topics and a unique case marker.
pub fn faq_entries(n: usize) -> Vec<FaqEntry> {
    (0..n)
        .map(|i| FaqEntry {
            id: format!("faq-{i:05}"),
            question: format!(
                "how does {} relate to {} for case{i} in region{}?",
                TOPICS[i % TOPICS.len()],
                TOPICS[(i / TOPICS.len()) % TOPICS.len()],
                i % 37
            ),
            answer: format!("answer {i}"),
            source: "https://example.org/faq".into(),
            last_updated: "2020-04-01".into(),
            preprocessed_question: String::new(),
        })
        .collect()
}

pub fn faq_index(n: usize) -> FaqIndex {
    FaqIndex::build(faq_entries(n), ReplacementMap::default_covid()).expect("fixture entries are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_ids_are_unique() {
        assert_eq!(faq_index(500).len(), 500);
    }
}
