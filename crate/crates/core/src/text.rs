//! Small tokenization helpers shared across modules.

/// Whitespace tokens of `text` after trimming. Used for corpus statistics.
pub fn whitespace_tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

/// Lowercased whitespace tokens with leading/trailing punctuation removed.
///
/// Internal punctuation is kept, so `COVID-19?` becomes `covid-19`.
pub fn model_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Lowercased maximal alphanumeric runs.
pub fn alnum_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Splits text into sentences.
pub trait SentenceSplitter {
    fn split<'a>(&self, text: &'a str) -> Vec<&'a str>;
}

/// Splits after `.`, `!` or `?` when followed by whitespace or end of text.
/// Delimiters stay attached to their sentence; runs like `?!` stay together.
#[derive(Debug, Clone, Copy, Default)]
pub struct PunctuationSplitter;

impl SentenceSplitter for PunctuationSplitter {
    fn split<'a>(&self, text: &'a str) -> Vec<&'a str> {
        let mut out = Vec::new();
        let mut start = 0;
        let mut chars = text.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if !matches!(c, '.' | '!' | '?') {
                continue;
            }
            match chars.peek() {
                Some(&(_, '.' | '!' | '?')) => continue,
                Some(&(_, next)) if !next.is_whitespace() => continue,
                _ => {}
            }
            let end = i + c.len_utf8();
            let s = text[start..end].trim();
            if !s.is_empty() {
                out.push(s);
            }
            start = end;
        }
        let tail = text[start..].trim();
        if !tail.is_empty() {
            out.push(tail);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentences_keep_delimiters() {
        let s = PunctuationSplitter.split("S1. S2! S3? S4.");
        assert_eq!(s, vec!["S1.", "S2!", "S3?", "S4."]);
    }

    #[test]
    fn decimals_do_not_split() {
        let s = PunctuationSplitter.split("Take 2.5 mg daily. Then stop");
        assert_eq!(s, vec!["Take 2.5 mg daily.", "Then stop"]);
    }

    #[test]
    fn repeated_punctuation_stays_together() {
        let s = PunctuationSplitter.split("Really?! Yes.");
        assert_eq!(s, vec!["Really?!", "Yes."]);
    }

    #[test]
    fn model_tokens_strip_edges() {
        assert_eq!(
            model_tokens("How can I avoid COVID-19?"),
            vec!["how", "can", "i", "avoid", "covid-19"]
        );
        assert!(model_tokens(" ?! ").is_empty());
    }

    #[test]
    fn alnum_splits_hyphens() {
        assert_eq!(alnum_tokens("COVID-19, fever"), vec!["covid", "19", "fever"]);
    }
}
