use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::svm::{classify_one, train_svm_with_report, SvmHyperparams, SvmModel};
use super::{ActionSet, ActionabilityType};
use crate::error::{Error, Result};
use crate::features::{vectorize, FeatureConfig, KeywordList};
use crate::informativeness::InformativenessDecision;
use crate::persist::{self, Tensor};
use crate::seed;
use crate::text::{tokenize, EmbeddingTable, TokenSequence};

/// Downsampled training data.
#[derive(Clone, Debug, PartialEq)]
pub struct Balanced<T> {
    pub positives: Vec<T>,
    pub negatives: Vec<T>,
    /// Set when there were fewer negatives than positives (passed through).
    pub underfilled: bool,
}

/// Uniformly sample `positives.len()` negatives without replacement.
pub fn downsample_negatives<T: Clone>(positives: &[T], negatives: &[T], seed: u64) -> Result<Balanced<T>> {
    if positives.is_empty() {
        return Err(Error::Empty("no positive examples to balance against".into()));
    }
    if negatives.len() < positives.len() {
        warn!(
            "only {} negatives for {} positives; passing through unbalanced",
            negatives.len(),
            positives.len()
        );
        return Ok(Balanced {
            positives: positives.to_vec(),
            negatives: negatives.to_vec(),
            underfilled: true,
        });
    }
    let mut rng = seed::rng(seed);
    let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, negatives.len(), positives.len()).into_vec();
    idx.sort_unstable();
    Ok(Balanced {
        positives: positives.to_vec(),
        negatives: idx.into_iter().map(|i| negatives[i].clone()).collect(),
        underfilled: false,
    })
}

/// +1 iff any token equals any keyword, ignoring case.
pub fn keyword_baseline(tokens: &TokenSequence, keywords: &KeywordList) -> i8 {
    let hit = tokens
        .iter()
        .any(|t| keywords.keywords().iter().any(|k| k.eq_ignore_ascii_case(t)));
    if hit {
        1
    } else {
        -1
    }
}

/// One SVM per category with the keyword lists and feature settings used to train them.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    models: Vec<SvmModel>,
    keywords: Vec<KeywordList>,
    feature_config: FeatureConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CategoryReport {
    pub category: ActionabilityType,
    pub positives: usize,
    pub negatives_used: usize,
    pub support_vectors: usize,
    pub converged: bool,
    pub missing_keywords: Vec<String>,
}

/// Order keyword lists by category and require all nine.
fn ordered_lists(lists: &[KeywordList]) -> Result<Vec<KeywordList>> {
    ActionabilityType::ALL
        .iter()
        .map(|t| {
            lists
                .iter()
                .find(|l| l.category() == *t)
                .cloned()
                .ok_or_else(|| Error::MissingCategory(format!("{} ({}) has no keyword list", t.name(), t.code())))
        })
        .collect()
}

/// Train all nine classifiers. Categories train in parallel; each uses its
/// own sub-seeds so the result does not depend on scheduling.
pub fn train_ensemble(
    corpus: &[(TokenSequence, ActionSet)],
    keyword_lists: &[KeywordList],
    table: &EmbeddingTable,
    feature_config: &FeatureConfig,
    hp: &SvmHyperparams,
    seed: u64,
) -> Result<(Ensemble, Vec<CategoryReport>)> {
    feature_config.validate()?;
    hp.validate()?;
    let lists = ordered_lists(keyword_lists)?;
    let results: Vec<Result<(SvmModel, CategoryReport)>> = lists
        .par_iter()
        .map(|list| train_category(corpus, list, table, feature_config, hp, seed))
        .collect();
    let mut models = Vec::with_capacity(9);
    let mut reports = Vec::with_capacity(9);
    for r in results {
        let (m, rep) = r?;
        models.push(m);
        reports.push(rep);
    }
    Ok((
        Ensemble {
            models,
            keywords: lists,
            feature_config: *feature_config,
        },
        reports,
    ))
}

fn train_category(
    corpus: &[(TokenSequence, ActionSet)],
    list: &KeywordList,
    table: &EmbeddingTable,
    feature_config: &FeatureConfig,
    hp: &SvmHyperparams,
    seed: u64,
) -> Result<(SvmModel, CategoryReport)> {
    let category = list.category();
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    let mut missing = Vec::new();
    for (tokens, actions) in corpus {
        if tokens.is_empty() {
            continue;
        }
        let v = vectorize(tokens, list, table, feature_config)?;
        if missing.is_empty() {
            missing = v.missing_keywords;
        }
        if actions.contains(category) {
            positives.push(v.features.values);
        } else {
            negatives.push(v.features.values);
        }
    }
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Insufficient(format!(
            "{category} needs positive and negative training messages ({} / {})",
            positives.len(),
            negatives.len()
        )));
    }
    let code = category.code();
    let balanced = downsample_negatives(&positives, &negatives, seed::derive_seed(seed, &format!("downsample/{code}")))?;
    let mut x = balanced.positives;
    let n_pos = x.len();
    x.extend(balanced.negatives);
    let y: Vec<f64> = (0..x.len()).map(|i| if i < n_pos { 1.0 } else { -1.0 }).collect();
    let (mut model, report) = train_svm_with_report(&x, &y, hp, seed::derive_seed(seed, &format!("smo/{code}")), false)?;
    model.category = Some(category);
    if !model.converged {
        warn!("{category}: SMO stopped after {} sweeps without converging", report.sweeps);
    }
    let rep = CategoryReport {
        category,
        positives: n_pos,
        negatives_used: x.len() - n_pos,
        support_vectors: model.support_vectors.len(),
        converged: model.converged,
        missing_keywords: missing,
    };
    Ok((model, rep))
}

const MAGIC: &[u8; 8] = b"CTACTSVM";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    category: ActionabilityType,
    hyperparams: SvmHyperparams,
    dimension: usize,
    converged: bool,
    support_vectors: usize,
}

#[derive(Serialize, Deserialize)]
struct EnsembleHeader {
    feature_config: FeatureConfig,
    keywords: Vec<KeywordList>,
    models: Vec<ModelHeader>,
}

impl Ensemble {
    pub fn from_parts(models: Vec<SvmModel>, keywords: Vec<KeywordList>, feature_config: FeatureConfig) -> Result<Self> {
        let keywords = ordered_lists(&keywords)?;
        let models = ActionabilityType::ALL
            .iter()
            .map(|t| {
                models
                    .iter()
                    .find(|m| m.category == Some(*t))
                    .cloned()
                    .ok_or_else(|| Error::MissingCategory(format!("{} has no model", t.name())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble {
            models,
            keywords,
            feature_config,
        })
    }

    pub fn model(&self, category: ActionabilityType) -> &SvmModel {
        &self.models[category.index()]
    }

    pub fn keywords(&self, category: ActionabilityType) -> &KeywordList {
        &self.keywords[category.index()]
    }

    pub fn keyword_lists(&self) -> &[KeywordList] {
        &self.keywords
    }

    pub fn feature_config(&self) -> &FeatureConfig {
        &self.feature_config
    }

    /// Features for one category.
    pub fn features(&self, category: ActionabilityType, tokens: &TokenSequence, table: &EmbeddingTable) -> Result<Vec<f64>> {
        Ok(vectorize(tokens, self.keywords(category), table, &self.feature_config)?
            .features
            .values)
    }

    /// Per-category labels and margins, in category order.
    pub fn decisions(&self, tokens: &TokenSequence, table: &EmbeddingTable) -> Result<Vec<(ActionabilityType, i8, f64)>> {
        ActionabilityType::ALL
            .iter()
            .map(|&t| {
                let (label, margin) = classify_one(self.model(t), &self.features(t, tokens, table)?)?;
                Ok((t, label, margin))
            })
            .collect()
    }

    pub fn classify_tokens(&self, tokens: &TokenSequence, table: &EmbeddingTable) -> Result<ActionSet> {
        Ok(self
            .decisions(tokens, table)?
            .into_iter()
            .filter(|(_, label, _)| *label > 0)
            .map(|(t, _, _)| t)
            .collect())
    }

    /// Tag `text`. When a gate decision is supplied and rejected the message,
    /// no classifier runs and the set is empty.
    pub fn classify_actionability(
        &self,
        text: &str,
        table: &EmbeddingTable,
        gate: Option<&InformativenessDecision>,
    ) -> Result<ActionSet> {
        if gate.is_some_and(|g| !g.decision.is_informative()) {
            return Ok(ActionSet::new());
        }
        self.classify_tokens(&tokenize(text), table)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = EnsembleHeader {
            feature_config: self.feature_config,
            keywords: self.keywords.clone(),
            models: self
                .models
                .iter()
                .map(|m| ModelHeader {
                    category: m.category.expect("ensemble models carry a category"),
                    hyperparams: m.hyperparams,
                    dimension: m.dimension,
                    converged: m.converged,
                    support_vectors: m.support_vectors.len(),
                })
                .collect(),
        };
        let mut tensors = Vec::with_capacity(27);
        for m in &self.models {
            let flat: Vec<f64> = m.support_vectors.iter().flatten().copied().collect();
            tensors.push(Tensor::new(vec![m.support_vectors.len(), m.dimension], flat));
            tensors.push(Tensor::vector(m.dual_coef.clone()));
            tensors.push(Tensor::vector(vec![m.bias]));
        }
        persist::encode(MAGIC, VERSION, &header, &tensors)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, tensors): (EnsembleHeader, Vec<Tensor>) = persist::decode(MAGIC, VERSION, bytes)?;
        if header.models.len() != 9 || tensors.len() != 27 {
            return Err(Error::ModelFormat(format!(
                "expected 9 models / 27 tensors, found {} / {}",
                header.models.len(),
                tensors.len()
            )));
        }
        let mut models = Vec::with_capacity(9);
        for (h, t) in header.models.iter().zip(tensors.chunks_exact(3)) {
            let (sv, coef, bias) = (&t[0], &t[1], &t[2]);
            if sv.dims != [h.support_vectors, h.dimension] || coef.dims != [h.support_vectors] || bias.dims != [1] {
                return Err(Error::ModelFormat(format!("tensor shapes disagree with header for {}", h.category)));
            }
            let support_vectors = if h.dimension == 0 {
                vec![Vec::new(); h.support_vectors]
            } else {
                sv.data.chunks_exact(h.dimension).map(<[f64]>::to_vec).collect()
            };
            models.push(SvmModel {
                category: Some(h.category),
                support_vectors,
                dual_coef: coef.data.clone(),
                bias: bias.data[0],
                hyperparams: h.hyperparams,
                dimension: h.dimension,
                converged: h.converged,
            });
        }
        Ensemble::from_parts(models, header.keywords, header.feature_config)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        persist::write_file(path, &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&persist::read_file(path)?)
    }
}
