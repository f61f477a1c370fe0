//! `key = value` pipeline configuration. Command-line flags override file values.

use std::fs;
use std::path::{Path, PathBuf};

use crate::actionability::SvmHyperparams;
use crate::error::{Error, Result};
use crate::features::{Denominator, FeatureConfig};
use crate::informativeness::{check_threshold, DEFAULT_THRESHOLD};
use crate::profile::DEFAULT_BUCKET_WIDTH;
use crate::text::DEFAULT_DIMENSION;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub embeddings: Option<PathBuf>,
    pub embedding_dimension: usize,
    pub keywords: Option<PathBuf>,
    pub informativeness_model: Option<PathBuf>,
    pub actionability_model: Option<PathBuf>,
    pub threshold: f64,
    pub features: FeatureConfig,
    pub svm: SvmHyperparams,
    pub bucket_width: i64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            embeddings: None,
            embedding_dimension: DEFAULT_DIMENSION,
            keywords: None,
            informativeness_model: None,
            actionability_model: None,
            threshold: DEFAULT_THRESHOLD,
            features: FeatureConfig::default(),
            svm: SvmHyperparams::default(),
            bucket_width: DEFAULT_BUCKET_WIDTH,
            seed: 0,
        }
    }
}

pub const KEYS: [&str; 14] = [
    "embeddings",
    "embedding_dimension",
    "keywords",
    "informativeness_model",
    "actionability_model",
    "threshold",
    "cutoff",
    "denominator",
    "c",
    "gamma",
    "tolerance",
    "max_passes",
    "bucket_width",
    "seed",
];

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl PipelineConfig {
    /// Apply one setting. Relative paths resolve against `base` when given.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<()> {
        let path = |v: &str| {
            let p = PathBuf::from(v);
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        match key {
            "embeddings" => self.embeddings = Some(path(value)),
            "embedding_dimension" => self.embedding_dimension = number(key, value)?,
            "keywords" => self.keywords = Some(path(value)),
            "informativeness_model" => self.informativeness_model = Some(path(value)),
            "actionability_model" => self.actionability_model = Some(path(value)),
            "threshold" => self.threshold = number(key, value)?,
            "cutoff" => self.features.cutoff = number(key, value)?,
            "denominator" => {
                self.features.denominator = match value {
                    "all" | "all_tokens" => Denominator::AllTokens,
                    "embedded" | "embedded_tokens_only" => Denominator::EmbeddedTokensOnly,
                    _ => return Err(Error::Config(format!("denominator: expected all or embedded, got {value:?}"))),
                }
            }
            "c" => self.svm.c = number(key, value)?,
            "gamma" => self.svm.gamma = number(key, value)?,
            "tolerance" => self.svm.tolerance = number(key, value)?,
            "max_passes" => self.svm.max_passes = number(key, value)?,
            "bucket_width" => self.bucket_width = number(key, value)?,
            "seed" => self.seed = number(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut config = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                context: "config".into(),
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            config
                .set(key.trim(), value.trim(), base)
                .map_err(|e| Error::Parse {
                    context: "config".into(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
        }
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        check_threshold(self.threshold)?;
        self.features.validate()?;
        self.svm.validate()?;
        if self.bucket_width <= 0 {
            return Err(Error::Config("bucket_width must be positive".into()));
        }
        for p in [
            &self.embeddings,
            &self.keywords,
            &self.informativeness_model,
            &self.actionability_model,
        ]
        .into_iter()
        .flatten()
        {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let text = "# pipeline\nthreshold = 0.7\ngamma=1.5 # tuned\nembeddings = vec.txt\ndenominator = embedded\n";
        let mut c = PipelineConfig::parse(text, Some(Path::new("/data"))).unwrap();
        assert_eq!(c.threshold, 0.7);
        assert_eq!(c.svm.gamma, 1.5);
        assert_eq!(c.svm.c, 20.0);
        assert_eq!(c.embeddings.as_deref(), Some(Path::new("/data/vec.txt")));
        assert_eq!(c.features.denominator, Denominator::EmbeddedTokensOnly);
        c.set("threshold", "0.4", None).unwrap();
        assert_eq!(c.threshold, 0.4);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = PipelineConfig::parse("seed = 1\nbogus = 2\n", None).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(PipelineConfig::parse("seed 1", None).is_err());
        assert!(PipelineConfig::parse("seed = x", None).is_err());
        let mut c = PipelineConfig {
            threshold: 1.0,
            ..PipelineConfig::default()
        };
        assert!(c.validate().is_err());
        c.threshold = 0.5;
        c.keywords = Some("/definitely/not/here".into());
        assert!(c.validate().is_err());
    }
}
