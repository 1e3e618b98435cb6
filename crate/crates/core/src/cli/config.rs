//! Run configuration file (TOML). Every section and key is optional; unknown
//! keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::SynthSpec;
use crate::decoding::DecodeOptions;
use crate::error::{Error, Result};
use crate::experiment::ModelSize;
use crate::training::TrainConfig;

/// Vocabulary and caption-length limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub min_count: usize,
    pub vocab_cap: usize,
    /// Longest caption accepted, in words.
    pub max_caption_len: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            min_count: 1,
            vocab_cap: 10_000,
            max_caption_len: 20,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub features: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    /// Where `train` writes checkpoints, vocabulary and log.
    pub output_dir: Option<PathBuf>,
    /// Checkpoint read by `generate`; defaults to `<output_dir>/best.ckpt`.
    pub checkpoint: Option<PathBuf>,
    /// Vocabulary read by `generate`; defaults to `vocab.txt` beside the
    /// checkpoint.
    pub vocab: Option<PathBuf>,
}

impl PathsConfig {
    fn resolve_against(&mut self, base: &Path) {
        for p in [
            &mut self.features,
            &mut self.train,
            &mut self.validation,
            &mut self.test,
            &mut self.lexicon,
            &mut self.output_dir,
            &mut self.checkpoint,
            &mut self.vocab,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn require<'a>(&self, field: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        field
            .as_deref()
            .ok_or_else(|| Error::config(format!("paths.{key} is not set")))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("run"))
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.output_dir().join("best.ckpt"))
    }

    pub fn vocab(&self) -> PathBuf {
        self.vocab.clone().unwrap_or_else(|| {
            let ckpt = self.checkpoint();
            ckpt.parent().unwrap_or(Path::new(".")).join("vocab.txt")
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    pub eps: f64,
    pub tolerance: f64,
    pub seed: u64,
    /// Must stay 0; a nonzero rate is refused.
    pub dropout_rate: f64,
    /// Number of random captions in the checked batch.
    pub captions: usize,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            eps: 1e-5,
            tolerance: 1e-3,
            seed: 0,
            dropout_rate: 0.0,
            captions: 2,
        }
    }
}

/// `[decode]`: the library's decoding options, but greedy unless a beam
/// width is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeSection {
    pub max_len: usize,
    pub beam_width: usize,
    pub length_penalty: f64,
    pub suppress_unk: bool,
}

impl Default for DecodeSection {
    fn default() -> Self {
        let d = DecodeOptions::default();
        Self {
            max_len: d.max_len,
            beam_width: 1,
            length_penalty: d.length_penalty,
            suppress_unk: d.suppress_unk,
        }
    }
}

impl DecodeSection {
    pub fn options(&self) -> DecodeOptions {
        DecodeOptions {
            max_len: self.max_len,
            beam_width: self.beam_width,
            length_penalty: self.length_penalty,
            suppress_unk: self.suppress_unk,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSize,
    pub train: TrainConfig,
    pub decode: DecodeSection,
    pub corpus: CorpusConfig,
    pub paths: PathsConfig,
    pub synth: SynthSpec,
    pub gradcheck: GradcheckConfig,
}

impl RunConfig {
    /// Parses a config; relative paths are taken relative to `base`.
    pub fn parse(text: &str, source: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("{source}: {}", e.to_string().trim_end())))?;
        cfg.paths.resolve_against(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.decode.options().validate()?;
        self.synth.validate()?;
        if self.corpus.max_caption_len == 0 {
            return Err(Error::config("corpus.max_caption_len must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.model.dropout_rate) {
            return Err(Error::config(format!(
                "model.dropout_rate must lie in [0, 1), got {}",
                self.model.dropout_rate
            )));
        }
        if self.gradcheck.captions == 0 {
            return Err(Error::config("gradcheck.captions must be at least 1"));
        }
        Ok(())
    }
}
