//! Keyword induction and keyword-similarity document features.
//!
//! A document becomes one value per keyword: the similarity-weighted share of
//! its tokens whose embedding lies within the cosine cutoff of the keyword.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actionability::{ActionSet, ActionabilityType};
use crate::error::{Error, Result};
use crate::text::{cosine, is_url, EmbeddingTable, TokenSequence};

pub const DEFAULT_CUTOFF: f64 = 0.45;
pub const DEFAULT_KEYWORD_COUNT: usize = 18;
pub const DEFAULT_MIN_COUNT: usize = 3;

/// Ordered, duplicate-free lowercase keywords for one category.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordList {
    category: ActionabilityType,
    keywords: Vec<String>,
}

impl KeywordList {
    /// Lowercases and drops repeats, keeping first occurrences.
    pub fn new<S: AsRef<str>>(category: ActionabilityType, keywords: impl IntoIterator<Item = S>) -> Self {
        let mut seen = HashSet::new();
        let keywords = keywords
            .into_iter()
            .map(|k| k.as_ref().trim().to_lowercase())
            .filter(|k| !k.is_empty() && seen.insert(k.clone()))
            .collect();
        KeywordList { category, keywords }
    }

    pub fn category(&self) -> ActionabilityType {
        self.category
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    /// Keywords absent from `table`.
    pub fn missing_from(&self, table: &EmbeddingTable) -> Vec<&str> {
        self.keywords
            .iter()
            .filter(|k| !table.contains(k))
            .map(String::as_str)
            .collect()
    }
}

/// Shipped keyword lists. Only two categories have published lists; the
/// rest are induced from annotated data.
pub fn default_keyword_lists() -> Vec<KeywordList> {
    vec![
        KeywordList::new(
            ActionabilityType::AccessibilityChange,
            "accessibility street bridge blocked derailment collapse close flooded closed careful \
             cancel cancelled canceled avoid alert affect advised"
                .split_whitespace(),
        ),
        KeywordList::new(
            ActionabilityType::PersonalOpinion,
            "i people us all me please good will trump your pray praying toll concerned omg worried god"
                .split_whitespace(),
        ),
    ]
}

/// Parse blocks of `[CODE Name]` followed by whitespace-separated keywords.
pub fn parse_keyword_lists(text: &str) -> Result<Vec<KeywordList>> {
    let mut lists: Vec<(ActionabilityType, Vec<String>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let header = header.strip_suffix(']').ok_or_else(|| Error::Parse {
                context: "keyword lists".into(),
                line: i + 1,
                message: "unterminated category header".into(),
            })?;
            let code = header.split_whitespace().next().unwrap_or("");
            let category: ActionabilityType = code.parse().map_err(|e: Error| Error::Parse {
                context: "keyword lists".into(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if lists.iter().any(|(c, _)| *c == category) {
                return Err(Error::Parse {
                    context: "keyword lists".into(),
                    line: i + 1,
                    message: format!("category {category} listed twice"),
                });
            }
            lists.push((category, Vec::new()));
        } else {
            let (_, words) = lists.last_mut().ok_or_else(|| Error::Parse {
                context: "keyword lists".into(),
                line: i + 1,
                message: "keywords before any category header".into(),
            })?;
            words.extend(line.split_whitespace().map(str::to_string));
        }
    }
    Ok(lists
        .into_iter()
        .map(|(c, words)| KeywordList::new(c, words))
        .collect())
}

pub fn format_keyword_lists(lists: &[KeywordList]) -> String {
    let mut out = String::new();
    for l in lists {
        let _ = writeln!(out, "[{} {}]", l.category.code(), l.category.name());
        let _ = writeln!(out, "{}", l.keywords.join(" "));
        out.push('\n');
    }
    out
}

pub fn load_keyword_lists(path: impl AsRef<Path>) -> Result<Vec<KeywordList>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_keyword_lists(&text)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Denominator {
    /// Every document token counts, embedded or not.
    #[default]
    AllTokens,
    /// Only tokens present in the embedding table count.
    EmbeddedTokensOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub cutoff: f64,
    pub denominator: Denominator,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            cutoff: DEFAULT_CUTOFF,
            denominator: Denominator::AllTokens,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff > 0.0 && self.cutoff < 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("cutoff {} outside (0, 1)", self.cutoff)))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub category: ActionabilityType,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vectorized {
    pub features: FeatureVector,
    /// Keywords with no embedding; their components are 0.
    pub missing_keywords: Vec<String>,
}

/// Convert a document into one similarity-proportion value per keyword.
pub fn vectorize(
    tokens: &TokenSequence,
    keywords: &KeywordList,
    table: &EmbeddingTable,
    config: &FeatureConfig,
) -> Result<Vectorized> {
    config.validate()?;
    if tokens.is_empty() {
        return Err(Error::Empty("document has no tokens".into()));
    }
    // Count distinct tokens and sum per-token contributions in sorted order,
    // which makes the result exactly independent of token order.
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens.iter() {
        *counts.entry(t).or_default() += 1;
    }
    let embedded: Vec<(&[f64], usize)> = counts
        .iter()
        .filter_map(|(t, n)| table.get(t).map(|v| (v, *n)))
        .collect();
    let denominator = match config.denominator {
        Denominator::AllTokens => tokens.len(),
        Denominator::EmbeddedTokensOnly => embedded.iter().map(|(_, n)| n).sum(),
    };

    let mut missing = Vec::new();
    let mut values = Vec::with_capacity(keywords.len());
    for kw in keywords.keywords() {
        let Some(kv) = table.get(kw) else {
            missing.push(kw.clone());
            values.push(0.0);
            continue;
        };
        if denominator == 0 {
            values.push(0.0);
            continue;
        }
        let mut sum = 0.0;
        for (tv, n) in &embedded {
            // A zero vector has no direction; treat it as dissimilar.
            let Ok(sim) = cosine(tv, kv) else { continue };
            if sim >= config.cutoff {
                sum += sim * *n as f64;
            }
        }
        values.push((sum / denominator as f64).clamp(0.0, 1.0));
    }
    Ok(Vectorized {
        features: FeatureVector {
            category: keywords.category(),
            values,
        },
        missing_keywords: missing,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct InducedKeywords {
    pub list: KeywordList,
    pub scores: Vec<f64>,
    /// Set when fewer than `k` tokens were eligible.
    pub short: bool,
}

fn eligible_token(t: &str) -> bool {
    !is_url(t) && t.chars().any(char::is_alphanumeric)
}

/// Rank tokens by smoothed log-likelihood ratio between documents tagged with
/// `category` and the rest; return the top `k` (ties alphabetical).
pub fn induce_keywords(
    corpus: &[(TokenSequence, ActionSet)],
    category: ActionabilityType,
    k: usize,
    min_count: usize,
) -> Result<InducedKeywords> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let n_pos_docs = corpus.iter().filter(|(_, a)| a.contains(category)).count();
    if n_pos_docs == 0 || n_pos_docs == corpus.len() {
        return Err(Error::Insufficient(format!(
            "{category} needs at least one positive and one negative document"
        )));
    }
    let mut pos: HashMap<&str, usize> = HashMap::new();
    let mut neg: HashMap<&str, usize> = HashMap::new();
    let (mut n_pos, mut n_neg) = (0usize, 0usize);
    for (tokens, actions) in corpus {
        let (counts, total) = if actions.contains(category) {
            (&mut pos, &mut n_pos)
        } else {
            (&mut neg, &mut n_neg)
        };
        for t in tokens.iter() {
            *counts.entry(t).or_default() += 1;
            *total += 1;
        }
    }
    let vocab: HashSet<&str> = pos.keys().chain(neg.keys()).copied().collect();
    let v = vocab.len() as f64;

    let mut scored: Vec<(&str, f64)> = vocab
        .iter()
        .copied()
        .filter(|t| eligible_token(t))
        .filter(|t| pos.get(t).unwrap_or(&0) + neg.get(t).unwrap_or(&0) >= min_count)
        .map(|t| {
            let cp = *pos.get(t).unwrap_or(&0) as f64;
            let cn = *neg.get(t).unwrap_or(&0) as f64;
            let score = ((cp + 1.0) / (n_pos as f64 + v)).ln() - ((cn + 1.0) / (n_neg as f64 + v)).ln();
            (t, score)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let short = scored.len() < k;
    scored.truncate(k);
    Ok(InducedKeywords {
        list: KeywordList::new(category, scored.iter().map(|(t, _)| *t)),
        scores: scored.iter().map(|(_, s)| *s).collect(),
        short,
    })
}
