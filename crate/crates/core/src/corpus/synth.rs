//! Small synthetic captioning corpus with machine-checkable sentiment.
//!
//! Every image contains one latent object. One random region holds that
//! object's prototype vector plus noise; the others hold noise only. Captions
//! follow the template `a <adj> <noun>` for positive and negative captions and
//! `a <noun>` for neutral ones.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::captions::RawCaption;
use super::features::FeatureStore;
use crate::error::{Error, Result};
use crate::metrics::lexicon::{AnpLexicon, Polarity};
use crate::model::{SentimentCategory, SpatialFeatures};
use crate::tensor::Tensor;

pub const NOUNS: [&str; 8] = ["dog", "cat", "car", "bird", "train", "flower", "boat", "house"];
pub const POSITIVE_ADJECTIVES: [&str; 8] = [
    "beautiful",
    "cute",
    "lovely",
    "happy",
    "sunny",
    "pretty",
    "nice",
    "cuddly",
];
pub const NEGATIVE_ADJECTIVES: [&str; 8] = ["dirty", "ugly", "broken", "lonely", "gloomy", "rusty", "bad", "dead"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_images: usize,
    pub regions: usize,
    pub feature_dim: usize,
    pub n_objects: usize,
    pub adjectives_per_polarity: usize,
    pub neutral_per_image: usize,
    pub positive_per_image: usize,
    pub negative_per_image: usize,
    /// Norm of each object prototype.
    pub signal: f64,
    /// Standard deviation of the per-value Gaussian noise.
    pub noise: f64,
    /// Chance that a caption uses its object's preferred adjective rather than
    /// a uniform draw from the polarity's set.
    pub preferred_adjective_prob: f64,
    pub validation_images: usize,
    pub test_images: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_images: 200,
            regions: 4,
            feature_dim: 8,
            n_objects: 3,
            adjectives_per_polarity: 4,
            neutral_per_image: 3,
            positive_per_image: 1,
            negative_per_image: 1,
            signal: 3.0,
            noise: 0.3,
            preferred_adjective_prob: 0.7,
            validation_images: 20,
            test_images: 40,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(format!("synth: {m}")));
        if self.n_images == 0 || self.regions == 0 || self.feature_dim == 0 {
            return bad("n_images, regions and feature_dim must be positive".into());
        }
        if self.n_objects == 0 || self.n_objects > NOUNS.len() {
            return bad(format!("n_objects must be in 1..={}", NOUNS.len()));
        }
        if self.adjectives_per_polarity == 0 || self.adjectives_per_polarity > POSITIVE_ADJECTIVES.len() {
            return bad(format!(
                "adjectives_per_polarity must be in 1..={}",
                POSITIVE_ADJECTIVES.len()
            ));
        }
        if self.validation_images + self.test_images >= self.n_images {
            return bad("validation and test splits leave no training images".into());
        }
        if !(0.0..=1.0).contains(&self.preferred_adjective_prob) {
            return bad("preferred_adjective_prob must be in [0, 1]".into());
        }
        if !(self.noise >= 0.0 && self.signal > 0.0) {
            return bad("noise must be >= 0 and signal > 0".into());
        }
        Ok(())
    }

    pub fn nouns(&self) -> &'static [&'static str] {
        &NOUNS[..self.n_objects]
    }

    pub fn adjectives(&self, polarity: Polarity) -> &'static [&'static str] {
        let all: &'static [&'static str] = match polarity {
            Polarity::Positive => &POSITIVE_ADJECTIVES,
            Polarity::Negative => &NEGATIVE_ADJECTIVES,
        };
        &all[..self.adjectives_per_polarity]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyCorpus {
    pub spec: SynthSpec,
    pub features: FeatureStore,
    pub train: Vec<RawCaption>,
    pub validation: Vec<RawCaption>,
    pub test: Vec<RawCaption>,
    pub lexicon: AnpLexicon,
    /// Latent object index per image, in feature-store order.
    pub objects: Vec<usize>,
    /// Prototype per object, `n_objects x D`.
    pub prototypes: Tensor,
}

impl ToyCorpus {
    /// Caption texts the vocabulary is built from (training split only).
    pub fn vocab_texts(&self) -> Vec<&str> {
        self.train.iter().map(|c| c.text.as_str()).collect()
    }

    pub fn image_ids(&self, captions: &[RawCaption]) -> Vec<String> {
        let mut ids: Vec<String> = captions.iter().map(|c| c.image_id.clone()).collect();
        ids.dedup();
        ids
    }
}

fn round_f32(x: f64) -> f64 {
    x as f32 as f64
}

pub fn synth_toy_corpus(spec: &SynthSpec, seed: u64) -> Result<ToyCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (k, d) = (spec.regions, spec.feature_dim);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let noise = Normal::new(0.0, spec.noise.max(f64::MIN_POSITIVE)).expect("valid normal");

    let mut prototypes = Vec::with_capacity(spec.n_objects * d);
    for _ in 0..spec.n_objects {
        let v: Vec<f64> = (0..d).map(|_| std_normal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        prototypes.extend(v.iter().map(|x| x * spec.signal / norm));
    }

    let nouns = spec.nouns();
    let mut lexicon = AnpLexicon::new();
    for polarity in [Polarity::Positive, Polarity::Negative] {
        for adj in spec.adjectives(polarity) {
            for noun in nouns {
                lexicon.add_anp(adj, noun, polarity)?;
            }
        }
    }

    let mut features = FeatureStore::new(k, d);
    let mut objects = Vec::with_capacity(spec.n_images);
    let mut per_image: Vec<Vec<RawCaption>> = Vec::with_capacity(spec.n_images);
    for i in 0..spec.n_images {
        let id = format!("img{i:04}");
        let object = rng.gen_range(0..spec.n_objects);
        let region = rng.gen_range(0..k);
        let mut grid = Vec::with_capacity(k * d);
        for r in 0..k {
            for j in 0..d {
                let base = if r == region { prototypes[object * d + j] } else { 0.0 };
                let n = if spec.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                grid.push(round_f32(base + n));
            }
        }
        features.insert(SpatialFeatures::new(id.clone(), Tensor::matrix(k, d, grid)?)?)?;
        objects.push(object);

        let noun = nouns[object];
        let mut caps = Vec::new();
        for _ in 0..spec.neutral_per_image {
            caps.push(RawCaption::new(
                &id,
                Some(SentimentCategory::Neutral),
                format!("a {noun}"),
            ));
        }
        for (polarity, count) in [
            (Polarity::Positive, spec.positive_per_image),
            (Polarity::Negative, spec.negative_per_image),
        ] {
            let adjs = spec.adjectives(polarity);
            for _ in 0..count {
                let adj = if rng.gen_bool(spec.preferred_adjective_prob) {
                    adjs[object % adjs.len()]
                } else {
                    adjs.choose(&mut rng).copied().expect("nonempty adjective set")
                };
                caps.push(RawCaption::new(
                    &id,
                    Some(polarity.sentiment()),
                    format!("a {adj} {noun}"),
                ));
            }
        }
        per_image.push(caps);
    }

    let n_train = spec.n_images - spec.validation_images - spec.test_images;
    let mut splits = per_image.into_iter();
    let train = splits.by_ref().take(n_train).flatten().collect();
    let validation = splits.by_ref().take(spec.validation_images).flatten().collect();
    let test = splits.flatten().collect();

    Ok(ToyCorpus {
        spec: spec.clone(),
        features,
        train,
        validation,
        test,
        lexicon,
        objects,
        prototypes: Tensor::matrix(spec.n_objects, d, prototypes)?,
    })
}
