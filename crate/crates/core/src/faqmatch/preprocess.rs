use serde::{Deserialize, Serialize};

use super::FaqError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub pattern: String,
    pub replacement: String,
}

/// Case-insensitive whole-token substitutions, tried longest pattern first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplacementMap {
    rules: Vec<(Vec<char>, Replacement)>,
}

impl ReplacementMap {
    pub fn new(rules: Vec<Replacement>) -> Result<Self, FaqError> {
        if let Some(r) = rules.iter().find(|r| r.pattern.trim().is_empty()) {
            return Err(FaqError::Map(format!("empty pattern (replacement `{}`)", r.replacement)));
        }
        let mut rules: Vec<(Vec<char>, Replacement)> =
            rules.into_iter().map(|r| (r.pattern.chars().collect(), r)).collect();
        // stable: equal-length patterns keep their listed order
        rules.sort_by_key(|r| std::cmp::Reverse(r.0.len()));
        Ok(Self { rules })
    }

    pub fn empty() -> Self {
        Self { rules: Vec::new() }
    }

    /// `covid-19`, `covid` and `coronavirus` all become `the disease`.
    pub fn default_covid() -> Self {
        let rule = |p: &str| Replacement {
            pattern: p.into(),
            replacement: "the disease".into(),
        };
        Self::new(vec![rule("covid-19"), rule("covid"), rule("coronavirus")]).expect("non-empty patterns")
    }

    /// Parses a JSON list of `{"pattern", "replacement"}` objects.
    pub fn from_json(text: &str) -> Result<Self, FaqError> {
        let rules: Vec<Replacement> = serde_json::from_str(text).map_err(|e| FaqError::Map(e.to_string()))?;
        Self::new(rules)
    }

    pub fn rules(&self) -> impl Iterator<Item = &Replacement> {
        self.rules.iter().map(|(_, r)| r)
    }
}

impl Default for ReplacementMap {
    fn default() -> Self {
        Self::default_covid()
    }
}

fn eq_ci(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Replaces every pattern occurrence that is delimited on both sides by a
/// non-alphanumeric character or the text boundary. Hyphens delimit, so
/// `covid-related` becomes `the disease-related` while `covid-19` is matched
/// whole by the longer pattern. All other characters are copied unchanged.
pub fn preprocess(text: &str, map: &ReplacementMap) -> String {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    'scan: while i < n {
        if i == 0 || !chars[i - 1].is_alphanumeric() {
            for (pat, rule) in &map.rules {
                let end = i + pat.len();
                if end > n || (end < n && chars[end].is_alphanumeric()) {
                    continue;
                }
                if chars[i..end].iter().zip(pat).all(|(&c, &p)| eq_ci(c, p)) {
                    out.push_str(&rule.replacement);
                    i = end;
                    continue 'scan;
                }
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}
