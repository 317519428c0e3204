use std::collections::{BTreeSet, HashMap};

use crate::text::model_tokens;

pub const UNK: &str = "[unk]";

/// Lowercased whitespace vocabulary. Id 0 is the shared unknown symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary from every token in `texts`, sorted for
    /// reproducibility.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let set: BTreeSet<String> = texts.into_iter().flat_map(model_tokens).collect();
        Self::from_tokens(std::iter::once(UNK.to_string()).chain(set.into_iter().filter(|t| t != UNK)))
    }

    /// Restores a vocabulary from its ordered token list; the first token
    /// must be the unknown symbol.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let tokens: Vec<String> = tokens.into_iter().collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        model_tokens(text).iter().map(|t| self.id(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_maps_to_zero() {
        let v = Vocab::build(["Fever and rash", "fever?"]);
        assert_eq!(v.tokens()[0], UNK);
        assert_eq!(v.len(), 4);
        assert_eq!(v.encode("FEVER cough"), vec![v.id("fever"), 0]);
    }
}
