use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target sentiment of a caption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentCategory {
    Positive,
    Neutral,
    Negative,
}

impl SentimentCategory {
    pub const ALL: [SentimentCategory; 3] = [
        SentimentCategory::Positive,
        SentimentCategory::Neutral,
        SentimentCategory::Negative,
    ];

    pub fn index(self) -> usize {
        match self {
            SentimentCategory::Positive => 0,
            SentimentCategory::Neutral => 1,
            SentimentCategory::Negative => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Short label used in text files: `pos`, `neutral`, `neg`.
    pub fn label(self) -> &'static str {
        match self {
            SentimentCategory::Positive => "pos",
            SentimentCategory::Neutral => "neutral",
            SentimentCategory::Negative => "neg",
        }
    }
}

impl fmt::Display for SentimentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SentimentCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pos" | "positive" => Ok(SentimentCategory::Positive),
            "neg" | "negative" => Ok(SentimentCategory::Negative),
            "neutral" => Ok(SentimentCategory::Neutral),
            other => Err(Error::config(format!("unknown sentiment `{other}`"))),
        }
    }
}

/// Which parts of the sentiment machinery a model carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Plain attention captioner, no sentiment input.
    Attend,
    /// Fixed one-hot sentiment vectors in both positions, no sentiment loss.
    MinusE1E2L2,
    /// Learned gate embedding only, no sentiment loss.
    MinusE2L2,
    /// Both learned embeddings, no sentiment loss.
    MinusL2,
    Full,
}

impl Variant {
    /// Row order of the ablation table.
    pub const ALL: [Variant; 5] = [
        Variant::Attend,
        Variant::MinusE1E2L2,
        Variant::MinusE2L2,
        Variant::MinusL2,
        Variant::Full,
    ];

    pub fn has_gate_sentiment(self) -> bool {
        !matches!(self, Variant::Attend)
    }

    pub fn has_word_sentiment(self) -> bool {
        matches!(self, Variant::Full | Variant::MinusL2 | Variant::MinusE1E2L2)
    }

    pub fn uses_sentiment_loss(self) -> bool {
        matches!(self, Variant::Full)
    }

    pub fn one_hot_sentiment(self) -> bool {
        matches!(self, Variant::MinusE1E2L2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Attend => "attend",
            Variant::MinusE1E2L2 => "minus-e1e2l2",
            Variant::MinusE2L2 => "minus-e2l2",
            Variant::MinusL2 => "minus-l2",
            Variant::Full => "full",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown variant `{s}` (expected one of attend, minus-e1e2l2, minus-e2l2, minus-l2, full)"
                ))
            })
    }
}

/// Network dimensions and variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Number of image regions.
    pub regions: usize,
    /// Feature width per region.
    pub feature_dim: usize,
    /// LSTM hidden and cell width.
    pub hidden: usize,
    pub word_dim: usize,
    /// Width of the learned sentiment embeddings. The one-hot variant
    /// ignores this and uses 3.
    pub sentiment_dim: usize,
    pub vocab_size: usize,
    pub variant: Variant,
    pub dropout_rate: f64,
    /// Width of the attention scorer's hidden layer.
    pub attention_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::tiny(Variant::Full)
    }
}

impl ModelConfig {
    /// The small configuration used for gradient checks.
    pub fn tiny(variant: Variant) -> Self {
        Self {
            regions: 4,
            feature_dim: 8,
            hidden: 16,
            word_dim: 10,
            sentiment_dim: 6,
            vocab_size: 20,
            variant,
            dropout_rate: 0.0,
            attention_dim: 8,
        }
    }

    /// Published full-size dimensions (196x512 grid, 9703 words).
    pub fn reference_scale(variant: Variant) -> Self {
        Self {
            regions: 196,
            feature_dim: 512,
            hidden: if variant == Variant::Attend { 1024 } else { 2048 },
            word_dim: 512,
            sentiment_dim: 256,
            vocab_size: 9703,
            variant,
            dropout_rate: 0.5,
            attention_dim: 512,
        }
    }

    /// Width of the vectors actually fed from the sentiment tables.
    pub fn effective_sentiment_dim(&self) -> usize {
        if self.variant.one_hot_sentiment() {
            SentimentCategory::ALL.len()
        } else {
            self.sentiment_dim
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("regions", self.regions),
            ("feature_dim", self.feature_dim),
            ("hidden", self.hidden),
            ("word_dim", self.word_dim),
            ("sentiment_dim", self.sentiment_dim),
            ("vocab_size", self.vocab_size),
            ("attention_dim", self.attention_dim),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::config(format!("model.{name} must be at least 1")));
        }
        if self.vocab_size < crate::corpus::vocab::NUM_SPECIAL {
            return Err(Error::config("model.vocab_size must cover the special tokens"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config(format!(
                "model.dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}
