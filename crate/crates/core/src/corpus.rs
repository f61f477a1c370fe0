//! Message datasets and crowd judgments: loading, adjudication, worker
//! screening, deduplication, label collapse, and train/validation splits.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::actionability::ActionSet;
use crate::error::{Error, Result};
use crate::seed;
use crate::text::{is_url, tokenize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    Ccsid,
    CrisisLex,
    Irma,
    #[default]
    Other,
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "ccsid" => Source::Ccsid,
            "crisislex" => Source::CrisisLex,
            "irma" => Source::Irma,
            _ => Source::Other,
        })
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Ccsid => "ccsid",
            Source::CrisisLex => "crisislex",
            Source::Irma => "irma",
            Source::Other => "other",
        })
    }
}

/// One social media or SMS record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    id: String,
    timestamp: Option<i64>,
    text: String,
    source: Source,
}

impl Message {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::Empty("message text".into()));
        }
        Ok(Message {
            id: id.into(),
            timestamp: None,
            text,
            source: Source::Other,
        })
    }

    pub fn with_timestamp(mut self, timestamp: i64) -> Self {
        self.timestamp = Some(timestamp);
        self
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn timestamp(&self) -> Option<i64> {
        self.timestamp
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn source(&self) -> Source {
        self.source
    }
}

/// Messages with unique ids, in input order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MessageSet {
    messages: Vec<Message>,
}

impl MessageSet {
    pub fn new(messages: Vec<Message>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(messages.len());
        for m in &messages {
            if !seen.insert(m.id.as_str()) {
                return Err(Error::Config(format!("duplicate message id {:?}", m.id)));
            }
        }
        Ok(MessageSet { messages })
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn into_messages(self) -> Vec<Message> {
        self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Message> {
        self.messages.iter()
    }
}

/// Three-level informativeness, ordered from least to most informative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InformativenessLabel {
    NotInformative,
    SomewhatInformative,
    Informative,
}

impl InformativenessLabel {
    pub const ALL: [InformativenessLabel; 3] = [
        InformativenessLabel::Informative,
        InformativenessLabel::SomewhatInformative,
        InformativenessLabel::NotInformative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InformativenessLabel::Informative => "informative",
            InformativenessLabel::SomewhatInformative => "somewhat",
            InformativenessLabel::NotInformative => "not",
        }
    }
}

impl FromStr for InformativenessLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "informative" | "inf" => Ok(InformativenessLabel::Informative),
            "somewhat" | "somewhat informative" | "somewhat_informative" => {
                Ok(InformativenessLabel::SomewhatInformative)
            }
            "not" | "not informative" | "not_informative" => Ok(InformativenessLabel::NotInformative),
            other => Err(Error::Config(format!("unknown informativeness label {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinaryInformativeness {
    NotInformative,
    Informative,
}

impl BinaryInformativeness {
    pub fn is_informative(self) -> bool {
        self == BinaryInformativeness::Informative
    }

    /// Class index used by the network: 0 = not informative, 1 = informative.
    pub fn class_index(self) -> usize {
        match self {
            BinaryInformativeness::NotInformative => 0,
            BinaryInformativeness::Informative => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BinaryInformativeness::Informative => "informative",
            BinaryInformativeness::NotInformative => "not",
        }
    }
}

impl FromStr for BinaryInformativeness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(collapse_labels(s.parse::<InformativenessLabel>()?))
    }
}

/// Merge the two informative levels into one class.
pub fn collapse_labels(label: InformativenessLabel) -> BinaryInformativeness {
    match label {
        InformativenessLabel::Informative | InformativenessLabel::SomewhatInformative => {
            BinaryInformativeness::Informative
        }
        InformativenessLabel::NotInformative => BinaryInformativeness::NotInformative,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledMessage {
    pub message: Message,
    pub label: BinaryInformativeness,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgment {
    pub message_id: String,
    pub worker_id: String,
    pub label: InformativenessLabel,
}

/// A problem with one input record; loading continues past it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Parsed records plus the per-record errors encountered along the way.
#[derive(Clone, Debug)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub errors: Vec<RecordError>,
}

// ---------------------------------------------------------------------------
// Label vocabulary mapping
// ---------------------------------------------------------------------------

/// Maps dataset label strings onto the binary scheme.
///
/// Exact (case-insensitive, trimmed) entries are consulted first. Unlisted
/// strings fall back to: contains "informative" and not negated means
/// informative, a negation ("not", "non", "un") directly before it means not.
#[derive(Clone, Debug)]
pub struct LabelMap {
    table: HashMap<String, BinaryInformativeness>,
}

impl Default for LabelMap {
    fn default() -> Self {
        use BinaryInformativeness::*;
        let table = [
            ("informative", Informative),
            ("related and informative", Informative),
            ("not informative", NotInformative),
            ("non-informative", NotInformative),
            ("uninformative", NotInformative),
            ("related - but not informative", NotInformative),
            ("related but not informative", NotInformative),
            ("not related", NotInformative),
            ("not applicable", NotInformative),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        LabelMap { table }
    }
}

impl LabelMap {
    pub fn empty() -> Self {
        LabelMap {
            table: HashMap::new(),
        }
    }

    /// Read `label text = informative|not` lines; `#` starts a comment.
    /// Entries extend (and override) the built-in table.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::io(path, e))?;
        let mut map = LabelMap::default();
        map.extend_from_str(&text)?;
        Ok(map)
    }

    pub fn extend_from_str(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.rsplit_once('=').ok_or_else(|| Error::Parse {
                context: "label map".into(),
                line: i + 1,
                message: "expected `label = informative|not`".into(),
            })?;
            let value = value.parse::<BinaryInformativeness>().map_err(|e| Error::Parse {
                context: "label map".into(),
                line: i + 1,
                message: e.to_string(),
            })?;
            self.table.insert(normalize_label(key), value);
        }
        Ok(())
    }

    pub fn map(&self, raw: &str) -> Option<BinaryInformativeness> {
        let key = normalize_label(raw);
        if let Some(v) = self.table.get(&key) {
            return Some(*v);
        }
        let pos = key.find("informative")?;
        let before = key[..pos].trim_end_matches([' ', '-', '_']);
        let negated = before.ends_with("not") || before.ends_with("non") || before.ends_with("un");
        Some(if negated {
            BinaryInformativeness::NotInformative
        } else {
            BinaryInformativeness::Informative
        })
    }
}

fn normalize_label(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

// ---------------------------------------------------------------------------
// Loaders
// ---------------------------------------------------------------------------

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Load a CrisisLex-style CSV (header row; id, text and label columns).
pub fn load_crisislex_csv(path: impl AsRef<Path>, labels: &LabelMap) -> Result<Loaded<LabeledMessage>> {
    let path = path.as_ref();
    read_crisislex_csv(open(path)?, labels).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        Error::MostlyMalformed {
            malformed,
            total,
            first,
            ..
        } => Error::MostlyMalformed {
            path: path.to_path_buf(),
            malformed,
            total,
            first,
        },
        other => other,
    })
}

pub fn read_crisislex_csv(reader: impl Read, labels: &LabelMap) -> Result<Loaded<LabeledMessage>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::Headers)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            context: "crisislex csv".into(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let (id_col, text_col, label_col) = crisislex_columns(&headers);

    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    let mut total = 0usize;
    for (i, row) in rdr.records().enumerate() {
        total += 1;
        let line = i + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                errors.push(RecordError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let field = |c: usize| row.get(c).map(str::trim).unwrap_or("");
        let (id, text, raw_label) = (field(id_col), field(text_col), field(label_col));
        let result = (|| {
            if id.is_empty() {
                return Err("missing tweet id".to_string());
            }
            let label = labels
                .map(raw_label)
                .ok_or_else(|| format!("unmapped label {raw_label:?}"))?;
            let message = Message::new(id, text)
                .map_err(|_| "empty text".to_string())?
                .with_source(Source::CrisisLex);
            if !seen.insert(id.to_string()) {
                return Err(format!("duplicate id {id:?}"));
            }
            Ok(LabeledMessage { message, label })
        })();
        match result {
            Ok(r) => records.push(r),
            Err(message) => errors.push(RecordError { line, message }),
        }
    }
    if total > 0 && errors.len() * 2 > total {
        return Err(Error::MostlyMalformed {
            path: "<csv>".into(),
            malformed: errors.len(),
            total,
            first: errors[0].to_string(),
        });
    }
    Ok(Loaded { records, errors })
}

fn crisislex_columns(headers: &csv::StringRecord) -> (usize, usize, usize) {
    let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    let find = |pred: &dyn Fn(&str) -> bool| names.iter().position(|n| pred(n));
    let id = find(&|n| n.contains("id")).unwrap_or(0);
    let text = find(&|n| n.contains("text") || n == "tweet" || n == "message").unwrap_or(1);
    let label = find(&|n| n.contains("label") || n.contains("informativeness")).unwrap_or(2);
    (id, text, label)
}

/// One line of a messages file. `label` and `actions` are optional annotations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<String>>,
}

impl MessageRecord {
    pub fn from_message(m: &Message) -> Self {
        MessageRecord {
            id: m.id.clone(),
            text: m.text.clone(),
            timestamp: m.timestamp,
            source: Some(m.source.to_string()),
            label: None,
            actions: None,
        }
    }

    pub fn to_message(&self) -> Result<Message> {
        let mut m = Message::new(self.id.clone(), self.text.clone())?;
        m.timestamp = self.timestamp;
        if let Some(s) = &self.source {
            m.source = s.parse()?;
        }
        Ok(m)
    }

    pub fn binary_label(&self) -> Option<Result<BinaryInformativeness>> {
        self.label.as_deref().map(str::parse)
    }

    pub fn action_set(&self) -> Option<Result<ActionSet>> {
        self.actions.as_ref().map(|codes| ActionSet::from_codes(codes.iter().map(String::as_str)))
    }
}

/// Read raw message records from line-delimited JSON, one per line.
pub fn read_message_records(reader: impl BufRead) -> Result<Loaded<MessageRecord>> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<jsonl>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<MessageRecord>(&line) {
            Ok(r) if r.text.trim().is_empty() => errors.push(RecordError {
                line: line_no,
                message: "empty text".into(),
            }),
            Ok(r) if !seen.insert(r.id.clone()) => errors.push(RecordError {
                line: line_no,
                message: format!("duplicate id {:?}", r.id),
            }),
            Ok(r) => records.push(r),
            Err(e) => errors.push(RecordError {
                line: line_no,
                message: e.to_string(),
            }),
        }
    }
    Ok(Loaded { records, errors })
}

pub fn load_message_records(path: impl AsRef<Path>) -> Result<Loaded<MessageRecord>> {
    let path = path.as_ref();
    read_message_records(open(path)?)
}

/// Load a messages file into a [`MessageSet`], preserving input order.
pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Loaded<Message>> {
    let loaded = load_message_records(path)?;
    records_to_messages(loaded)
}

pub fn records_to_messages(loaded: Loaded<MessageRecord>) -> Result<Loaded<Message>> {
    let Loaded {
        records,
        mut errors,
    } = loaded;
    let mut messages = Vec::with_capacity(records.len());
    for r in records {
        match r.to_message() {
            Ok(m) => messages.push(m),
            Err(e) => errors.push(RecordError {
                line: 0,
                message: format!("{}: {e}", r.id),
            }),
        }
    }
    Ok(Loaded {
        records: messages,
        errors,
    })
}

#[derive(Deserialize)]
struct JudgmentRecord {
    message_id: String,
    worker_id: String,
    label: String,
}

/// Read judgments: `{message_id, worker_id, label}` per line.
pub fn read_judgments(reader: impl BufRead) -> Result<Loaded<Judgment>> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<judgments>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<JudgmentRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| {
                let label = r.label.parse().map_err(|e: Error| e.to_string())?;
                Ok(Judgment {
                    message_id: r.message_id,
                    worker_id: r.worker_id,
                    label,
                })
            })
            .and_then(|j| {
                if seen.insert((j.message_id.clone(), j.worker_id.clone())) {
                    Ok(j)
                } else {
                    Err(format!(
                        "worker {:?} judged {:?} twice",
                        j.worker_id, j.message_id
                    ))
                }
            });
        match parsed {
            Ok(j) => records.push(j),
            Err(message) => errors.push(RecordError {
                line: line_no,
                message,
            }),
        }
    }
    Ok(Loaded { records, errors })
}

pub fn load_judgments(path: impl AsRef<Path>) -> Result<Loaded<Judgment>> {
    let path = path.as_ref();
    read_judgments(open(path)?)
}

// ---------------------------------------------------------------------------
// Adjudication
// ---------------------------------------------------------------------------

/// Most frequent label; ties go to the more informative label.
pub fn adjudicate(judgments: &[InformativenessLabel]) -> Result<InformativenessLabel> {
    if judgments.is_empty() {
        return Err(Error::Empty("no judgments to adjudicate".into()));
    }
    let mut counts = [0usize; 3];
    for j in judgments {
        counts[*j as usize] += 1;
    }
    // Enum order runs Not < Somewhat < Informative, so max_by_key on
    // (count, label) prefers the more informative label on ties.
    let best = InformativenessLabel::ALL
        .into_iter()
        .max_by_key(|l| (counts[*l as usize], *l))
        .expect("three labels");
    Ok(best)
}

/// Agreement between individual judgments and the adjudicated labels.
#[derive(Clone, Debug, PartialEq)]
pub struct AgreementReport {
    pub overall: f64,
    /// Keyed by adjudicated label; only categories that occur are present.
    pub per_category: BTreeMap<InformativenessLabel, f64>,
}

/// Fraction of (message, judgment) pairs matching the message's adjudicated label.
pub fn agreement<S: AsRef<[InformativenessLabel]>>(per_message: &[S]) -> Result<AgreementReport> {
    let mut total = (0usize, 0usize);
    let mut by_cat: BTreeMap<InformativenessLabel, (usize, usize)> = BTreeMap::new();
    for (i, js) in per_message.iter().enumerate() {
        let js = js.as_ref();
        if js.len() < 2 {
            return Err(Error::Insufficient(format!(
                "message {i} has {} judgment(s); agreement needs at least 2",
                js.len()
            )));
        }
        let label = adjudicate(js)?;
        let matching = js.iter().filter(|j| **j == label).count();
        total.0 += matching;
        total.1 += js.len();
        let e = by_cat.entry(label).or_default();
        e.0 += matching;
        e.1 += js.len();
    }
    if total.1 == 0 {
        return Err(Error::Empty("no messages for agreement".into()));
    }
    Ok(AgreementReport {
        overall: total.0 as f64 / total.1 as f64,
        per_category: by_cat
            .into_iter()
            .map(|(k, (m, n))| (k, m as f64 / n as f64))
            .collect(),
    })
}

/// Group judgments by message id (sorted by id), skipping excluded workers.
pub fn group_judgments<'a>(
    judgments: &'a [Judgment],
    excluded_workers: &BTreeSet<String>,
) -> BTreeMap<&'a str, Vec<InformativenessLabel>> {
    let mut grouped: BTreeMap<&str, Vec<InformativenessLabel>> = BTreeMap::new();
    for j in judgments {
        if excluded_workers.contains(&j.worker_id) {
            continue;
        }
        grouped.entry(j.message_id.as_str()).or_default().push(j.label);
    }
    grouped
}

/// Adjudicate every message that still has judgments after worker exclusion.
pub fn adjudicate_all(
    judgments: &[Judgment],
    excluded_workers: &BTreeSet<String>,
) -> BTreeMap<String, InformativenessLabel> {
    group_judgments(judgments, excluded_workers)
        .into_iter()
        .map(|(id, js)| (id.to_string(), adjudicate(&js).expect("groups are non-empty")))
        .collect()
}

// ---------------------------------------------------------------------------
// Gold questions
// ---------------------------------------------------------------------------

pub const DEFAULT_GOLD_THRESHOLD: f64 = 0.7;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GoldAnswer {
    Informativeness(InformativenessLabel),
    Actions(ActionSet),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldQuestion {
    pub message_id: String,
    pub correct: GoldAnswer,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkerAnswer {
    pub message_id: String,
    pub worker_id: String,
    pub answer: GoldAnswer,
}

impl From<&Judgment> for WorkerAnswer {
    fn from(j: &Judgment) -> Self {
        WorkerAnswer {
            message_id: j.message_id.clone(),
            worker_id: j.worker_id.clone(),
            answer: GoldAnswer::Informativeness(j.label),
        }
    }
}

/// Fraction of the gold questions `worker` answered that were answered correctly.
pub fn score_gold(worker: &str, gold: &[GoldQuestion], answers: &[WorkerAnswer]) -> Result<f64> {
    let key: HashMap<&str, &GoldAnswer> = gold
        .iter()
        .map(|g| (g.message_id.as_str(), &g.correct))
        .collect();
    let (mut correct, mut answered) = (0usize, 0usize);
    for a in answers.iter().filter(|a| a.worker_id == worker) {
        if let Some(expected) = key.get(a.message_id.as_str()) {
            answered += 1;
            if **expected == a.answer {
                correct += 1;
            }
        }
    }
    if answered == 0 {
        return Err(Error::Insufficient(format!(
            "worker {worker:?} answered no gold questions"
        )));
    }
    Ok(correct as f64 / answered as f64)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WorkerScreen {
    pub scores: BTreeMap<String, f64>,
    /// Workers scoring below the threshold; their judgments are excluded.
    pub flagged: BTreeSet<String>,
    /// Workers who saw no gold question and so could not be scored.
    pub unscored: BTreeSet<String>,
}

/// Score every worker against the gold set and flag those under `threshold`.
pub fn screen_workers(gold: &[GoldQuestion], answers: &[WorkerAnswer], threshold: f64) -> WorkerScreen {
    let workers: BTreeSet<&str> = answers.iter().map(|a| a.worker_id.as_str()).collect();
    let mut screen = WorkerScreen::default();
    for w in workers {
        match score_gold(w, gold, answers) {
            Ok(score) => {
                if score < threshold {
                    screen.flagged.insert(w.to_string());
                }
                screen.scores.insert(w.to_string(), score);
            }
            Err(_) => {
                screen.unscored.insert(w.to_string());
            }
        }
    }
    screen
}

/// Fails if any gold question id appears in `evaluation`.
pub fn ensure_gold_disjoint(gold: &[GoldQuestion], evaluation: &[Message]) -> Result<()> {
    let ids: HashSet<&str> = evaluation.iter().map(|m| m.id.as_str()).collect();
    let overlap: Vec<&str> = gold
        .iter()
        .map(|g| g.message_id.as_str())
        .filter(|id| ids.contains(id))
        .collect();
    if overlap.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "gold questions overlap the evaluation split: {overlap:?}"
        )))
    }
}

// ---------------------------------------------------------------------------
// Deduplication
// ---------------------------------------------------------------------------

pub const NEAR_DUPLICATE_JACCARD: f64 = 0.8;

pub fn is_retweet(text: &str) -> bool {
    let t = text.trim_start();
    t.get(..4).is_some_and(|p| p.eq_ignore_ascii_case("rt @"))
}

/// Lowercased token set with URLs and mentions removed.
pub fn dedupe_key(text: &str) -> BTreeSet<String> {
    tokenize(text)
        .iter()
        .filter(|t| !is_url(t) && !t.starts_with('@'))
        .map(str::to_lowercase)
        .collect()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Drop retweets, then keep each message only if it is not a near duplicate
/// of an earlier survivor.
pub fn dedupe(messages: &[Message]) -> Vec<Message> {
    let mut kept: Vec<(BTreeSet<String>, &Message)> = Vec::new();
    for m in messages.iter().filter(|m| !is_retweet(&m.text)) {
        let key = dedupe_key(&m.text);
        if kept
            .iter()
            .all(|(k, _)| jaccard(k, &key) < NEAR_DUPLICATE_JACCARD)
        {
            kept.push((key, m));
        }
    }
    kept.into_iter().map(|(_, m)| m.clone()).collect()
}

// ---------------------------------------------------------------------------
// Train / validation split
// ---------------------------------------------------------------------------

pub const VALIDATION_CCSID: usize = 300;
pub const VALIDATION_CRISISLEX_PER_CLASS: usize = 150;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<LabeledMessage>,
    pub validation: Vec<LabeledMessage>,
}

/// How many validation items each pool contributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitPlan {
    pub ccsid: usize,
    pub crisislex_per_class: usize,
}

/// Full composition when every pool can supply it. Otherwise every quota is
/// scaled by the factor of the most deficient pool, where a pool at scale
/// `s` is assumed to hold at least twice its quota (half kept for training).
pub fn plan_split(n_ccsid: usize, n_informative: usize, n_not: usize) -> Result<SplitPlan> {
    if n_ccsid >= VALIDATION_CCSID
        && n_informative >= VALIDATION_CRISISLEX_PER_CLASS
        && n_not >= VALIDATION_CRISISLEX_PER_CLASS
    {
        return Ok(SplitPlan {
            ccsid: VALIDATION_CCSID,
            crisislex_per_class: VALIDATION_CRISISLEX_PER_CLASS,
        });
    }
    let pools = [
        ("ccsid", n_ccsid, 2 * VALIDATION_CCSID),
        ("crisislex informative", n_informative, 2 * VALIDATION_CRISISLEX_PER_CLASS),
        ("crisislex not-informative", n_not, 2 * VALIDATION_CRISISLEX_PER_CLASS),
    ];
    let (name, have, reference) = pools
        .iter()
        .copied()
        .min_by(|a, b| (a.1 as f64 / a.2 as f64).total_cmp(&(b.1 as f64 / b.2 as f64)))
        .expect("three pools");
    let scaled = |quota: usize| quota * have / reference;
    let plan = SplitPlan {
        ccsid: scaled(VALIDATION_CCSID),
        crisislex_per_class: scaled(VALIDATION_CRISISLEX_PER_CLASS),
    };
    if plan.ccsid == 0 || plan.crisislex_per_class == 0 {
        return Err(Error::Insufficient(format!(
            "{name} has only {have} usable messages; cannot build a validation split"
        )));
    }
    Ok(plan)
}

/// Sample the validation set without replacement; everything else trains.
pub fn build_split(ccsid: &[LabeledMessage], crisislex: &[LabeledMessage], seed: u64) -> Result<Split> {
    let mut ids = HashSet::new();
    for lm in ccsid.iter().chain(crisislex) {
        if !ids.insert(lm.message.id.as_str()) {
            return Err(Error::Config(format!(
                "message id {:?} appears more than once across corpora",
                lm.message.id
            )));
        }
    }
    let (cl_inf, cl_not): (Vec<usize>, Vec<usize>) =
        (0..crisislex.len()).partition(|&i| crisislex[i].label.is_informative());
    let plan = plan_split(ccsid.len(), cl_inf.len(), cl_not.len())?;

    let mut rng = seed::rng(seed::derive_seed(seed, "split"));
    let mut ccsid_idx: Vec<usize> = (0..ccsid.len()).collect();
    ccsid_idx.shuffle(&mut rng);
    let mut cl_inf = cl_inf;
    cl_inf.shuffle(&mut rng);
    let mut cl_not = cl_not;
    cl_not.shuffle(&mut rng);

    let mut in_val_ccsid = vec![false; ccsid.len()];
    let mut in_val_cl = vec![false; crisislex.len()];
    for &i in &ccsid_idx[..plan.ccsid] {
        in_val_ccsid[i] = true;
    }
    for &i in cl_inf[..plan.crisislex_per_class]
        .iter()
        .chain(&cl_not[..plan.crisislex_per_class])
    {
        in_val_cl[i] = true;
    }

    let mut split = Split::default();
    for (lm, v) in ccsid.iter().zip(&in_val_ccsid).chain(crisislex.iter().zip(&in_val_cl)) {
        if *v {
            split.validation.push(lm.clone());
        } else {
            split.train.push(lm.clone());
        }
    }
    Ok(split)
}
