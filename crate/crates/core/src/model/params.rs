use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use super::config::{ModelConfig, SentimentCategory};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Parameter names. Each trainable symbol of the network has exactly one.
pub mod names {
    pub const WORD_EMBED: &str = "word_embed";
    /// Sentiment table feeding the LSTM gates (E1).
    pub const GATE_SENTIMENT: &str = "sentiment.gate";
    /// Sentiment table feeding the word head (E2).
    pub const WORD_SENTIMENT: &str = "sentiment.word";

    pub const WORD_HEAD_HIDDEN: &str = "word_head.hidden";
    pub const WORD_HEAD_CONTEXT: &str = "word_head.context";
    pub const WORD_HEAD_SENTIMENT: &str = "word_head.sentiment";
    pub const WORD_HEAD_BIAS: &str = "word_head.bias";

    pub const SENTIMENT_HEAD_HIDDEN: &str = "sentiment_head.hidden";
    pub const SENTIMENT_HEAD_BIAS: &str = "sentiment_head.bias";

    pub const ATTENTION_FEATURES: &str = "attention.features";
    pub const ATTENTION_HIDDEN: &str = "attention.hidden";
    pub const ATTENTION_BIAS: &str = "attention.bias";
    pub const ATTENTION_SCORE: &str = "attention.score";

    pub const INIT_H_WEIGHT: &str = "init.h.weight";
    pub const INIT_H_BIAS: &str = "init.h.bias";
    pub const INIT_C_WEIGHT: &str = "init.c.weight";
    pub const INIT_C_BIAS: &str = "init.c.bias";

    /// `LSTM[gate][family]`, gates in order i, g, o, f and families in
    /// order word, hidden, context, sentiment, bias.
    pub const LSTM: [[&str; 5]; 4] = [
        [
            "lstm.i.word",
            "lstm.i.hidden",
            "lstm.i.context",
            "lstm.i.sentiment",
            "lstm.i.bias",
        ],
        [
            "lstm.g.word",
            "lstm.g.hidden",
            "lstm.g.context",
            "lstm.g.sentiment",
            "lstm.g.bias",
        ],
        [
            "lstm.o.word",
            "lstm.o.hidden",
            "lstm.o.context",
            "lstm.o.sentiment",
            "lstm.o.bias",
        ],
        [
            "lstm.f.word",
            "lstm.f.hidden",
            "lstm.f.context",
            "lstm.f.sentiment",
            "lstm.f.bias",
        ],
    ];
}

/// LSTM gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input,
    Modulation,
    Output,
    Forget,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Modulation, Gate::Output, Gate::Forget];
}

/// Which input a gate weight multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Word,
    Hidden,
    Context,
    Sentiment,
    Bias,
}

pub fn lstm_name(gate: Gate, family: Family) -> &'static str {
    names::LSTM[gate as usize][family as usize]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Tensor,
    pub trainable: bool,
}

#[derive(Debug, Clone, Copy)]
enum Init {
    Zeros,
    /// Glorot-uniform over `(fan_in, fan_out)`.
    Glorot,
    Uniform(f64),
    Identity,
}

/// Every tensor of a model, in a fixed order, plus the config that shaped them.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    config: ModelConfig,
    tensors: IndexMap<String, Param>,
}

impl Parameters {
    /// Randomly initialized parameters. Deterministic in `seed`.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(config, |shape, init| sample(shape, init, &mut rng))
    }

    /// All-zero parameters (one-hot tables are still the identity).
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        Self::build(config, |shape, init| match init {
            Init::Identity => Tensor::identity(shape[0]),
            _ => Tensor::zeros(shape),
        })
    }

    fn build(config: &ModelConfig, mut make: impl FnMut(&[usize], Init) -> Tensor) -> Result<Self> {
        use names::*;
        config.validate()?;
        let v = config.variant;
        let (d, h, m, n, a) = (
            config.feature_dim,
            config.hidden,
            config.word_dim,
            config.vocab_size,
            config.attention_dim,
        );
        let f = config.effective_sentiment_dim();
        let mut tensors = IndexMap::new();
        let mut add = |name: &str, shape: &[usize], init: Init, trainable: bool| {
            tensors.insert(
                name.to_string(),
                Param {
                    value: make(shape, init),
                    trainable,
                },
            );
        };

        add(WORD_EMBED, &[n, m], Init::Uniform(0.5), true);
        let table_init = if v.one_hot_sentiment() {
            Init::Identity
        } else {
            Init::Uniform(0.5)
        };
        let tables_trainable = !v.one_hot_sentiment();
        if v.has_gate_sentiment() {
            add(GATE_SENTIMENT, &[3, f], table_init, tables_trainable);
        }
        if v.has_word_sentiment() {
            add(WORD_SENTIMENT, &[3, f], table_init, tables_trainable);
        }

        add(INIT_H_WEIGHT, &[d, h], Init::Glorot, true);
        add(INIT_H_BIAS, &[1, h], Init::Zeros, true);
        add(INIT_C_WEIGHT, &[d, h], Init::Glorot, true);
        add(INIT_C_BIAS, &[1, h], Init::Zeros, true);

        add(ATTENTION_FEATURES, &[d, a], Init::Glorot, true);
        add(ATTENTION_HIDDEN, &[h, a], Init::Glorot, true);
        add(ATTENTION_BIAS, &[1, a], Init::Zeros, true);
        add(ATTENTION_SCORE, &[a, 1], Init::Glorot, true);

        for gate in Gate::ALL {
            add(lstm_name(gate, Family::Word), &[m, h], Init::Glorot, true);
            add(lstm_name(gate, Family::Hidden), &[h, h], Init::Glorot, true);
            add(lstm_name(gate, Family::Context), &[d, h], Init::Glorot, true);
            if v.has_gate_sentiment() {
                add(lstm_name(gate, Family::Sentiment), &[f, h], Init::Glorot, true);
            }
            add(lstm_name(gate, Family::Bias), &[1, h], Init::Zeros, true);
        }

        add(WORD_HEAD_HIDDEN, &[h, n], Init::Glorot, true);
        add(WORD_HEAD_CONTEXT, &[d, n], Init::Glorot, true);
        if v.has_word_sentiment() {
            add(WORD_HEAD_SENTIMENT, &[f, n], Init::Glorot, true);
        }
        add(WORD_HEAD_BIAS, &[1, n], Init::Zeros, true);

        if v.uses_sentiment_loss() {
            let classes = SentimentCategory::ALL.len();
            add(SENTIMENT_HEAD_HIDDEN, &[h, classes], Init::Glorot, true);
            add(SENTIMENT_HEAD_BIAS, &[1, classes], Init::Zeros, true);
        }

        Ok(Self {
            config: config.clone(),
            tensors,
        })
    }

    /// Reassembles parameters read from storage, checking names and shapes
    /// against what `config` requires.
    pub fn from_tensors(config: &ModelConfig, tensors: IndexMap<String, Param>) -> Result<Self> {
        let expected = Self::zeros(config)?;
        if expected.tensors.len() != tensors.len() {
            return Err(Error::config(format!(
                "expected {} parameter tensors for variant {}, found {}",
                expected.tensors.len(),
                config.variant,
                tensors.len()
            )));
        }
        for (name, want) in &expected.tensors {
            let got = tensors
                .get(name)
                .ok_or_else(|| Error::config(format!("missing parameter `{name}`")))?;
            if got.value.shape() != want.value.shape() || got.trainable != want.trainable {
                return Err(Error::config(format!(
                    "parameter `{name}`: expected shape {:?}, found {:?}",
                    want.value.shape(),
                    got.value.shape()
                )));
            }
        }
        Ok(Self {
            config: config.clone(),
            tensors,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.tensors.get(name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.tensors.get_index_of(name)
    }

    pub fn get_index(&self, i: usize) -> Option<(&str, &Param)> {
        self.tensors.get_index(i).map(|(k, v)| (k.as_str(), v))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn value(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name).map(|p| &p.value)
    }

    pub fn value_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name).map(|p| &mut p.value)
    }

    /// Replaces a tensor's value, keeping its shape.
    pub fn set(&mut self, name: &str, value: Tensor) -> Result<()> {
        let p = self
            .tensors
            .get_mut(name)
            .ok_or_else(|| Error::config(format!("no parameter named `{name}`")))?;
        if p.value.shape() != value.shape() {
            return Err(Error::config(format!(
                "parameter `{name}` has shape {:?}, got {:?}",
                p.value.shape(),
                value.shape()
            )));
        }
        p.value = value;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn trainable(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.iter().filter(|(_, p)| p.trainable).map(|(k, p)| (k, &p.value))
    }

    /// Total number of trainable scalars.
    pub fn trainable_scalars(&self) -> usize {
        self.trainable().map(|(_, t)| t.numel()).sum()
    }
}

fn sample(shape: &[usize], init: Init, rng: &mut ChaCha8Rng) -> Tensor {
    let numel: usize = shape.iter().product();
    let bound = match init {
        Init::Zeros => return Tensor::zeros(shape),
        Init::Identity => return Tensor::identity(shape[0]),
        Init::Uniform(b) => b,
        Init::Glorot => {
            let fan_in = shape[0] as f64;
            let fan_out = *shape.last().unwrap() as f64;
            (6.0 / (fan_in + fan_out)).sqrt()
        }
    };
    let dist = Uniform::new_inclusive(-bound, bound);
    let data: Vec<f64> = (0..numel).map(|_| dist.sample(rng)).collect();
    debug_assert!(data.iter().all(|v| v.is_finite()));
    Tensor::new(shape.to_vec(), data).expect("shape and data agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::Variant;

    fn census(v: Variant) -> Parameters {
        Parameters::init(&ModelConfig::tiny(v), 3).unwrap()
    }

    #[test]
    fn minus_e2l2_drops_exactly_word_sentiment() {
        let full = census(Variant::Full);
        let minus_l2 = census(Variant::MinusL2);
        let minus_e2 = census(Variant::MinusE2L2);
        let e2 = full.value(names::WORD_SENTIMENT).unwrap().numel();
        let we = full.value(names::WORD_HEAD_SENTIMENT).unwrap().numel();
        let sh = full.value(names::SENTIMENT_HEAD_HIDDEN).unwrap().numel()
            + full.value(names::SENTIMENT_HEAD_BIAS).unwrap().numel();
        assert_eq!(minus_l2.trainable_scalars(), full.trainable_scalars() - sh);
        assert_eq!(minus_e2.trainable_scalars(), minus_l2.trainable_scalars() - e2 - we);
        assert!(!minus_e2.contains(names::WORD_SENTIMENT));
        assert!(!minus_e2.contains(names::WORD_HEAD_SENTIMENT));
    }

    #[test]
    fn attend_has_no_sentiment_parameters() {
        let p = census(Variant::Attend);
        for (name, _) in p.iter() {
            assert!(!name.contains("sentiment"), "{name}");
        }
    }

    #[test]
    fn one_hot_tables_are_frozen_identity() {
        let p = census(Variant::MinusE1E2L2);
        for name in [names::GATE_SENTIMENT, names::WORD_SENTIMENT] {
            let param = p.get(name).unwrap();
            assert!(!param.trainable);
            assert_eq!(param.value, Tensor::identity(3));
        }
        assert_eq!(
            p.value(lstm_name(Gate::Input, Family::Sentiment)).unwrap().shape(),
            &[3, 16]
        );
        assert_eq!(p.value(names::WORD_HEAD_SENTIMENT).unwrap().shape(), &[3, 20]);
    }

    #[test]
    fn init_is_deterministic() {
        let c = ModelConfig::tiny(Variant::Full);
        assert_eq!(Parameters::init(&c, 9).unwrap(), Parameters::init(&c, 9).unwrap());
        assert_ne!(Parameters::init(&c, 9).unwrap(), Parameters::init(&c, 10).unwrap());
    }

    #[test]
    fn from_tensors_rejects_wrong_shapes() {
        let c = ModelConfig::tiny(Variant::Full);
        let p = Parameters::init(&c, 1).unwrap();
        let mut t = p.tensors.clone();
        assert!(Parameters::from_tensors(&c, t.clone()).is_ok());
        t.get_mut(names::WORD_EMBED).unwrap().value = Tensor::zeros(&[3, 3]);
        assert!(Parameters::from_tensors(&c, t).is_err());
    }
}
