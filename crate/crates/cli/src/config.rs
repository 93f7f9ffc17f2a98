use std::path::{Path, PathBuf};

use advkit::ingest::{CleaningPolicy, RangeTable};
use advkit::sequencing::TokenLayout;
use advkit::{LabelVocabulary, QuantizerConfig};
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// Pipeline configuration, read from TOML.
///
/// ```toml
/// vocabulary = "labels.txt"
///
/// [quantizer]
/// restarts = 5
///
/// [cleaning]
/// max_duration_s = 30.0
///
/// [ranges.default]
/// a = { min = 1.0, max = 7.0 }
/// d = { min = 1.0, max = 7.0 }
/// v = { min = 1.0, max = 7.0 }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Label vocabulary file; the built-in ten-group table when absent.
    pub vocabulary: Option<PathBuf>,
    pub quantizer: QuantizerConfig,
    pub cleaning: CleaningPolicy,
    pub ranges: RangeTable,
    pub layout: TokenLayout,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // Relative vocabulary paths resolve against the config file's directory.
        if let (Some(vocab), Some(dir)) = (cfg.vocabulary.as_mut(), path.parent()) {
            if vocab.is_relative() {
                *vocab = dir.join(&*vocab);
            }
        }
        Ok(cfg)
    }

    pub fn vocabulary(&self) -> Result<LabelVocabulary> {
        match &self.vocabulary {
            None => Ok(LabelVocabulary::default_table()),
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("reading vocabulary {}", path.display()))?;
                Ok(LabelVocabulary::parse(&text)?)
            }
        }
    }
}
