//! Labeled pair and QA corpora: records, loaders, labeler-disjoint splits and
//! token statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: field `{field}`: {message}")]
    Row {
        row: usize,
        field: &'static str,
        message: String,
    },
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("duplicate id `{id}` at row {row}")]
    DuplicateId { id: String, row: usize },
    #[error("invalid record: {0}")]
    Invalid(String),
    #[error("pair {index} has no labeler id")]
    MissingLabeler { index: usize },
    #[error("pair {index}: labeler `{labeler}` is not in the split assignment")]
    UnassignedLabeler { index: usize, labeler: String },
    #[error("labeler `{0}` assigned to more than one split")]
    OverlappingAssignment(String),
    #[error("seed questions shared between train and test: {0:?}")]
    SeedOverlap(Vec<String>),
    #[error("cannot compute statistics over an empty question list")]
    Empty,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Binary similarity label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Negative),
            1 => Some(Label::Positive),
            _ => None,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = u8::deserialize(d)?;
        Label::from_u8(v).ok_or_else(|| serde::de::Error::custom(format!("label must be 0 or 1, got {v}")))
    }
}

/// Which kind of segments a pair holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairKind {
    /// question / question
    QQ,
    /// question / answer
    QA,
    /// answer start / answer end
    AA,
    /// question / category label
    QC,
}

impl PairKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "QQ" => Some(PairKind::QQ),
            "QA" => Some(PairKind::QA),
            "AA" => Some(PairKind::AA),
            "QC" => Some(PairKind::QC),
            _ => None,
        }
    }
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PairKind::QQ => "QQ",
            PairKind::QA => "QA",
            PairKind::AA => "AA",
            PairKind::QC => "QC",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeler_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_id: Option<String>,
}

impl Question {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            category: None,
            labeler_id: None,
            seed_id: None,
        }
    }

    pub fn with_category(mut self, category: impl Into<String>) -> Self {
        self.category = Some(category.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub id: String,
    pub question_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

/// The universal training and evaluation record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledPair {
    pub text_a: String,
    pub text_b: String,
    pub label: Label,
    pub kind: PairKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeler_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl LabeledPair {
    pub fn new(
        text_a: impl Into<String>,
        text_b: impl Into<String>,
        label: Label,
        kind: PairKind,
    ) -> Result<Self, CorpusError> {
        let pair = Self {
            text_a: text_a.into(),
            text_b: text_b.into(),
            label,
            kind,
            labeler_id: None,
            seed_id: None,
            id: None,
        };
        pair.validate().map_err(|(_, m)| CorpusError::Invalid(m))?;
        Ok(pair)
    }

    pub fn with_labeler(mut self, labeler: impl Into<String>) -> Self {
        self.labeler_id = Some(labeler.into());
        self
    }

    pub fn with_seed(mut self, seed: impl Into<String>) -> Self {
        self.seed_id = Some(seed.into());
        self
    }

    /// Checks the record invariants, returning the offending field on failure.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.text_a.trim().is_empty() {
            return Err(("text_a", "must not be empty".into()));
        }
        if self.text_b.trim().is_empty() {
            return Err(("text_b", "must not be empty".into()));
        }
        if self.kind == PairKind::QQ && self.label == Label::Negative && self.text_a == self.text_b {
            return Err(("text_b", "negative QQ pair has identical texts".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairFormat {
    Jsonl,
    Csv,
}

/// Loads a pair file, validating every row. Row indices in errors are 1-based.
pub fn load_pairs(path: &Path, format: PairFormat) -> Result<Vec<LabeledPair>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    let pairs = match format {
        PairFormat::Jsonl => read_pairs_jsonl(BufReader::new(file))?,
        PairFormat::Csv => read_pairs_csv(file)?,
    };
    Ok(pairs)
}

pub fn read_pairs_jsonl<R: BufRead>(reader: R) -> Result<Vec<LabeledPair>, CorpusError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| CorpusError::Parse {
            row,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            row,
            message: e.to_string(),
        })?;
        let pair = pair_from_json(&value, row)?;
        check_id(&pair, row, &mut ids)?;
        out.push(pair);
    }
    Ok(out)
}

fn check_id(pair: &LabeledPair, row: usize, ids: &mut HashSet<String>) -> Result<(), CorpusError> {
    if let Some(id) = &pair.id {
        if !ids.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id: id.clone(), row });
        }
    }
    Ok(())
}

fn pair_from_json(value: &Value, row: usize) -> Result<LabeledPair, CorpusError> {
    let obj = value.as_object().ok_or(CorpusError::Parse {
        row,
        message: "expected a JSON object".into(),
    })?;
    let req_str = |field: &'static str| -> Result<String, CorpusError> {
        match obj.get(field) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(CorpusError::Row {
                row,
                field,
                message: "expected a string".into(),
            }),
            None => Err(CorpusError::Row {
                row,
                field,
                message: "missing".into(),
            }),
        }
    };
    let opt_str = |field: &'static str| -> Result<Option<String>, CorpusError> {
        match obj.get(field) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(CorpusError::Row {
                row,
                field,
                message: "expected a string".into(),
            }),
        }
    };
    let label = match obj.get("label") {
        Some(v) => v
            .as_u64()
            .and_then(|n| u8::try_from(n).ok())
            .and_then(Label::from_u8)
            .ok_or_else(|| CorpusError::Row {
                row,
                field: "label",
                message: format!("expected 0 or 1, got {v}"),
            })?,
        None => {
            return Err(CorpusError::Row {
                row,
                field: "label",
                message: "missing".into(),
            })
        }
    };
    let kind_s = req_str("kind")?;
    let kind = PairKind::parse(&kind_s).ok_or_else(|| CorpusError::Row {
        row,
        field: "kind",
        message: format!("expected one of QQ, QA, AA, QC, got `{kind_s}`"),
    })?;
    let pair = LabeledPair {
        text_a: req_str("text_a")?,
        text_b: req_str("text_b")?,
        label,
        kind,
        labeler_id: opt_str("labeler_id")?,
        seed_id: opt_str("seed_id")?,
        id: opt_str("id")?,
    };
    pair.validate()
        .map_err(|(field, message)| CorpusError::Row { row, field, message })?;
    Ok(pair)
}

/// Reads a headed CSV with columns `text_a,text_b,label,kind` and optional
/// `labeler_id,seed_id,id`. Row 1 is the first data row.
pub fn read_pairs_csv<R: std::io::Read>(reader: R) -> Result<Vec<LabeledPair>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CorpusError::Parse {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| CorpusError::Parse {
            row,
            message: e.to_string(),
        })?;
        let mut obj = serde_json::Map::new();
        for (h, v) in headers.iter().zip(rec.iter()) {
            let value = if h == "label" {
                v.trim()
                    .parse::<u64>()
                    .map(Value::from)
                    .unwrap_or_else(|_| Value::String(v.to_string()))
            } else if v.is_empty() && matches!(h, "labeler_id" | "seed_id" | "id") {
                Value::Null
            } else {
                Value::String(v.to_string())
            };
            obj.insert(h.to_string(), value);
        }
        let pair = pair_from_json(&Value::Object(obj), row)?;
        check_id(&pair, row, &mut ids)?;
        out.push(pair);
    }
    Ok(out)
}

/// Converts the publicly released question-pair CSV (headerless rows of
/// `labeler, question_1, question_2, label`) into QQ pairs. The seed id of a
/// row is the first question, which every derived pair shares.
pub fn load_released_pairs_csv(path: &Path) -> Result<Vec<LabeledPair>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(file);
    let mut seeds: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| CorpusError::Parse {
            row,
            message: e.to_string(),
        })?;
        if rec.len() < 4 {
            return Err(CorpusError::Parse {
                row,
                message: format!("expected 4 columns, got {}", rec.len()),
            });
        }
        // A header row may be present in some copies of the file.
        if row == 1 && rec[3].trim().parse::<u8>().is_err() {
            continue;
        }
        let label = rec[3]
            .trim()
            .parse::<u8>()
            .ok()
            .and_then(Label::from_u8)
            .ok_or_else(|| CorpusError::Row {
                row,
                field: "label",
                message: format!("expected 0 or 1, got `{}`", &rec[3]),
            })?;
        let next = seeds.len();
        let seed = *seeds.entry(rec[1].to_string()).or_insert(next);
        let pair = LabeledPair {
            text_a: rec[1].to_string(),
            text_b: rec[2].to_string(),
            label,
            kind: PairKind::QQ,
            labeler_id: Some(rec[0].trim().to_string()),
            seed_id: Some(format!("seed-{seed}")),
            id: None,
        };
        pair.validate()
            .map_err(|(field, message)| CorpusError::Row { row, field, message })?;
        out.push(pair);
    }
    Ok(out)
}

pub fn write_pairs_jsonl<W: Write>(writer: W, pairs: &[LabeledPair]) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    for p in pairs {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[derive(Debug, Deserialize)]
struct QaRow {
    id: String,
    question: String,
    answer: String,
    #[serde(default)]
    category: Option<String>,
}

/// Loads a QA corpus JSONL file into question/answer records.
pub fn load_qa_corpus(path: &Path) -> Result<Vec<(Question, Answer)>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_qa_corpus(BufReader::new(file))
}

pub fn read_qa_corpus<R: BufRead>(reader: R) -> Result<Vec<(Question, Answer)>, CorpusError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| CorpusError::Parse {
            row,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let r: QaRow = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            row,
            message: e.to_string(),
        })?;
        if !ids.insert(r.id.clone()) {
            return Err(CorpusError::DuplicateId { id: r.id, row });
        }
        if r.question.trim().is_empty() {
            return Err(CorpusError::Row {
                row,
                field: "question",
                message: "must not be empty".into(),
            });
        }
        let q = Question {
            id: r.id.clone(),
            text: r.question,
            category: r.category.clone(),
            labeler_id: None,
            seed_id: None,
        };
        let a = Answer {
            id: format!("{}:answer", r.id),
            question_id: r.id,
            text: r.answer,
            category: r.category,
        };
        out.push((q, a));
    }
    Ok(out)
}

pub fn write_qa_corpus<W: Write>(writer: W, records: &[(Question, Answer)]) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    for (q, a) in records {
        let row = serde_json::json!({
            "id": q.id,
            "question": q.text,
            "answer": a.text,
            "category": q.category,
        });
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Which labelers contribute to which split.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train_labelers: BTreeSet<String>,
    pub dev_labelers: BTreeSet<String>,
    pub test_labelers: BTreeSet<String>,
}

impl SplitAssignment {
    pub fn new<I, S>(train: I, dev: I, test: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let a = Self {
            train_labelers: train.into_iter().map(Into::into).collect(),
            dev_labelers: dev.into_iter().map(Into::into).collect(),
            test_labelers: test.into_iter().map(Into::into).collect(),
        };
        a.check_disjoint()?;
        Ok(a)
    }

    pub fn check_disjoint(&self) -> Result<(), CorpusError> {
        let sets = [&self.train_labelers, &self.dev_labelers, &self.test_labelers];
        for (i, a) in sets.iter().enumerate() {
            for b in &sets[i + 1..] {
                if let Some(x) = a.intersection(b).next() {
                    return Err(CorpusError::OverlappingAssignment(x.clone()));
                }
            }
        }
        Ok(())
    }

    fn slot(&self, labeler: &str) -> Option<usize> {
        if self.train_labelers.contains(labeler) {
            Some(0)
        } else if self.dev_labelers.contains(labeler) {
            Some(1)
        } else if self.test_labelers.contains(labeler) {
            Some(2)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Split {
    pub train: Vec<LabeledPair>,
    pub dev: Vec<LabeledPair>,
    pub test: Vec<LabeledPair>,
}

/// Partitions pairs by who labeled them, then verifies that no seed question
/// appears in both train and test.
pub fn split_by_labeler(pairs: &[LabeledPair], assignment: &SplitAssignment) -> Result<Split, CorpusError> {
    assignment.check_disjoint()?;
    let mut split = Split::default();
    for (index, p) in pairs.iter().enumerate() {
        let labeler = p.labeler_id.as_deref().ok_or(CorpusError::MissingLabeler { index })?;
        match assignment.slot(labeler) {
            Some(0) => split.train.push(p.clone()),
            Some(1) => split.dev.push(p.clone()),
            Some(_) => split.test.push(p.clone()),
            None => {
                return Err(CorpusError::UnassignedLabeler {
                    index,
                    labeler: labeler.to_string(),
                })
            }
        }
    }
    let train_seeds: BTreeSet<&str> = split.train.iter().filter_map(|p| p.seed_id.as_deref()).collect();
    let shared: Vec<String> = split
        .test
        .iter()
        .filter_map(|p| p.seed_id.as_deref())
        .filter(|s| train_seeds.contains(s))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(String::from)
        .collect();
    if !shared.is_empty() {
        return Err(CorpusError::SeedOverlap(shared));
    }
    Ok(split)
}

/// Group-wise random split: records sharing a group key always land in the
/// same partition. Groups are shuffled with `rng_seed` and filled in order
/// dev, test, train until each target fraction of records is reached.
pub fn split_by_group<F>(
    pairs: &[LabeledPair],
    group_of: F,
    dev_fraction: f64,
    test_fraction: f64,
    rng_seed: u64,
) -> Split
where
    F: Fn(usize, &LabeledPair) -> String,
{
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        groups.entry(group_of(i, p)).or_default().push(i);
    }
    let mut keys: Vec<&String> = groups.keys().collect();
    keys.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));

    let n = pairs.len() as f64;
    let dev_target = (dev_fraction * n).round() as usize;
    let test_target = (test_fraction * n).round() as usize;
    let mut slot_of = vec![0u8; pairs.len()];
    let (mut dev_n, mut test_n) = (0usize, 0usize);
    for key in keys {
        let members = &groups[key];
        let slot = if dev_n < dev_target {
            dev_n += members.len();
            1
        } else if test_n < test_target {
            test_n += members.len();
            2
        } else {
            0
        };
        for &i in members {
            slot_of[i] = slot;
        }
    }
    let mut split = Split::default();
    for (p, slot) in pairs.iter().zip(slot_of) {
        match slot {
            1 => split.dev.push(p.clone()),
            2 => split.test.push(p.clone()),
            _ => split.train.push(p.clone()),
        }
    }
    split
}

/// Seed-disjoint random split, used when pairs carry no labeler ids.
/// Pairs without a seed id form singleton groups.
pub fn split_by_seed(pairs: &[LabeledPair], dev_fraction: f64, test_fraction: f64, rng_seed: u64) -> Split {
    split_by_group(
        pairs,
        |i, p| p.seed_id.clone().unwrap_or_else(|| format!("#{i}")),
        dev_fraction,
        test_fraction,
        rng_seed,
    )
}

/// Labeler split when every pair has a labeler id, otherwise a seed-disjoint
/// random split with a warning.
pub fn split_or_fallback(
    pairs: &[LabeledPair],
    assignment: &SplitAssignment,
    dev_fraction: f64,
    test_fraction: f64,
    rng_seed: u64,
) -> Result<Split, CorpusError> {
    if pairs.iter().all(|p| p.labeler_id.is_some()) {
        split_by_labeler(pairs, assignment)
    } else {
        log::warn!("pairs carry no labeler ids; falling back to a seed-disjoint random split");
        Ok(split_by_seed(pairs, dev_fraction, test_fraction, rng_seed))
    }
}

/// Token-length statistics over unique question texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub pair_count: usize,
    pub unique_question_count: usize,
    pub token_min: usize,
    pub token_max: usize,
    pub token_median: f64,
    pub token_mean: f64,
}

/// Computes statistics over the distinct texts of `questions` using
/// `count_tokens`. `pair_count` is left at zero; see [`pair_stats`].
pub fn compute_stats<F>(questions: &[Question], count_tokens: F) -> Result<CorpusStats, CorpusError>
where
    F: Fn(&str) -> usize,
{
    if questions.is_empty() {
        return Err(CorpusError::Empty);
    }
    let unique: BTreeSet<&str> = questions.iter().map(|q| q.text.as_str()).collect();
    let mut counts: Vec<usize> = unique.iter().map(|t| count_tokens(t)).collect();
    counts.sort_unstable();
    let n = counts.len();
    let median = if n % 2 == 1 {
        counts[n / 2] as f64
    } else {
        (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
    };
    let mean = counts.iter().sum::<usize>() as f64 / n as f64;
    Ok(CorpusStats {
        pair_count: 0,
        unique_question_count: n,
        token_min: counts[0],
        token_max: counts[n - 1],
        token_median: median,
        token_mean: mean,
    })
}

/// Whitespace token count.
pub fn whitespace_count(text: &str) -> usize {
    crate::text::whitespace_tokens(text).count()
}

/// Both sides of every pair as questions.
pub fn questions_from_pairs(pairs: &[LabeledPair]) -> Vec<Question> {
    pairs
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            [
                Question::new(format!("{i}a"), p.text_a.clone()),
                Question::new(format!("{i}b"), p.text_b.clone()),
            ]
        })
        .collect()
}

/// Statistics over a question-pair corpus using whitespace tokens.
pub fn pair_stats(pairs: &[LabeledPair]) -> Result<CorpusStats, CorpusError> {
    let mut stats = compute_stats(&questions_from_pairs(pairs), whitespace_count)?;
    stats.pair_count = pairs.len();
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qq(a: &str, b: &str, label: Label, labeler: &str, seed: &str) -> LabeledPair {
        LabeledPair::new(a, b, label, PairKind::QQ)
            .unwrap()
            .with_labeler(labeler)
            .with_seed(seed)
    }

    #[test]
    fn loads_two_valid_rows() {
        let data = r#"{"text_a":"a","text_b":"b","label":1,"kind":"QQ"}
{"text_a":"c","text_b":"d","label":0,"kind":"QA","labeler_id":"x","seed_id":"s"}
"#;
        let pairs = read_pairs_jsonl(data.as_bytes()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1].kind, PairKind::QA);
        assert_eq!(pairs[1].labeler_id.as_deref(), Some("x"));
    }

    #[test]
    fn label_two_is_rejected_at_its_row() {
        let data = "{\"text_a\":\"a\",\"text_b\":\"b\",\"label\":1,\"kind\":\"QQ\"}\n{\"text_a\":\"a\",\"text_b\":\"b\",\"label\":2,\"kind\":\"QQ\"}\n";
        match read_pairs_jsonl(data.as_bytes()) {
            Err(CorpusError::Row { row: 2, field: "label", .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_named() {
        let data = "{\"text_a\":\"a\",\"label\":1,\"kind\":\"QQ\"}\n";
        let err = read_pairs_jsonl(data.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("text_b"), "{err}");
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let data = "{\"id\":\"p1\",\"text_a\":\"a\",\"text_b\":\"b\",\"label\":1,\"kind\":\"QQ\"}\n{\"id\":\"p1\",\"text_a\":\"c\",\"text_b\":\"d\",\"label\":1,\"kind\":\"QQ\"}\n";
        assert!(matches!(
            read_pairs_jsonl(data.as_bytes()),
            Err(CorpusError::DuplicateId { row: 2, .. })
        ));
    }

    #[test]
    fn negative_qq_with_identical_texts_is_invalid() {
        assert!(LabeledPair::new("same", "same", Label::Negative, PairKind::QQ).is_err());
        assert!(LabeledPair::new("same", "same", Label::Positive, PairKind::QQ).is_ok());
    }

    #[test]
    fn csv_rows_match_jsonl_semantics() {
        let data = "text_a,text_b,label,kind,labeler_id,seed_id\nq1,q2,1,QQ,d1,s1\nq1,q3,0,QQ,d1,\n";
        let pairs = read_pairs_csv(data.as_bytes()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1].seed_id, None);
        let bad = "text_a,text_b,label,kind\nq1,q2,7,QQ\n";
        assert!(matches!(
            read_pairs_csv(bad.as_bytes()),
            Err(CorpusError::Row { row: 1, field: "label", .. })
        ));
    }

    #[test]
    fn labeler_split_partitions() {
        let pairs = vec![
            qq("a1", "b1", Label::Positive, "A", "s1"),
            qq("a2", "b2", Label::Negative, "A", "s2"),
            qq("a3", "b3", Label::Positive, "B", "s3"),
            qq("a4", "b4", Label::Negative, "B", "s4"),
        ];
        let asg = SplitAssignment::new(vec!["A"], vec![], vec!["B"]).unwrap();
        let s = split_by_labeler(&pairs, &asg).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (2, 0, 2));
    }

    #[test]
    fn unassigned_labeler_is_an_error() {
        let pairs = vec![qq("a", "b", Label::Positive, "C", "s")];
        let asg = SplitAssignment::new(vec!["A"], vec![], vec!["B"]).unwrap();
        assert!(matches!(
            split_by_labeler(&pairs, &asg),
            Err(CorpusError::UnassignedLabeler { index: 0, .. })
        ));
    }

    #[test]
    fn shared_seed_across_train_and_test_is_detected() {
        let pairs = vec![
            qq("seed q", "similar", Label::Positive, "A", "s1"),
            qq("seed q", "different", Label::Negative, "B", "s1"),
            qq("other", "x", Label::Positive, "B", "s2"),
        ];
        let asg = SplitAssignment::new(vec!["A"], vec![], vec!["B"]).unwrap();
        match split_by_labeler(&pairs, &asg) {
            Err(CorpusError::SeedOverlap(ids)) => assert_eq!(ids, vec!["s1".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overlapping_assignment_is_rejected() {
        assert!(SplitAssignment::new(vec!["A"], vec!["A"], vec![]).is_err());
    }

    #[test]
    fn seed_fallback_keeps_seeds_together() {
        let pairs: Vec<_> = (0..40)
            .map(|i| {
                let mut p = LabeledPair::new(format!("q{}", i / 2), format!("r{i}"), Label::Positive, PairKind::QQ).unwrap();
                p.seed_id = Some(format!("s{}", i / 2));
                p
            })
            .collect();
        let asg = SplitAssignment::default();
        let s = split_or_fallback(&pairs, &asg, 0.2, 0.2, 3).unwrap();
        assert_eq!(s.train.len() + s.dev.len() + s.test.len(), 40);
        let seeds = |v: &[LabeledPair]| v.iter().map(|p| p.seed_id.clone().unwrap()).collect::<BTreeSet<_>>();
        assert!(seeds(&s.train).is_disjoint(&seeds(&s.test)));
        assert!(seeds(&s.train).is_disjoint(&seeds(&s.dev)));
        assert!(!s.test.is_empty() && !s.dev.is_empty());
    }

    #[test]
    fn stats_by_hand() {
        let qs = vec![Question::new("1", "a b"), Question::new("2", "a b c")];
        let s = compute_stats(&qs, whitespace_count).unwrap();
        assert_eq!((s.token_min, s.token_max), (2, 3));
        assert_eq!(s.token_mean, 2.5);
        assert_eq!(s.token_median, 2.5);
    }

    #[test]
    fn single_question_stats() {
        let qs = vec![Question::new("1", "Are fibroadenomas malignant?")];
        let s = compute_stats(&qs, whitespace_count).unwrap();
        assert_eq!(s.token_min, s.token_max);
        assert_eq!(s.token_min, 3);
    }

    #[test]
    fn stats_dedupe_texts_not_ids() {
        let qs = vec![Question::new("1", "x y"), Question::new("2", "x y"), Question::new("3", "z")];
        let s = compute_stats(&qs, whitespace_count).unwrap();
        assert_eq!(s.unique_question_count, 2);
    }

    #[test]
    fn empty_stats_error() {
        assert!(matches!(compute_stats(&[], whitespace_count), Err(CorpusError::Empty)));
    }

    #[test]
    fn released_csv_conversion() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mqp.csv");
        std::fs::write(
            &path,
            "1,\"Seed one?\",\"Similar one?\",1\n1,\"Seed one?\",\"Different one?\",0\n2,\"Seed two?\",\"Similar two?\",1\n",
        )
        .unwrap();
        let pairs = load_released_pairs_csv(&path).unwrap();
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[0].seed_id, pairs[1].seed_id);
        assert_ne!(pairs[0].seed_id, pairs[2].seed_id);
        assert_eq!(pairs[2].labeler_id.as_deref(), Some("2"));
    }
}
