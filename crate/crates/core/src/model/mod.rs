//! The sentiment-conditioned attention decoder and its ablation variants.

pub mod checkpoint;
pub mod config;
pub mod network;
pub mod params;

pub use config::{ModelConfig, SentimentCategory, Variant};
pub use network::{
    Attended, DecoderState, FeatureContext, ForwardTrace, Graph, Mode, SentimentInputs, SpatialFeatures, StepTrace,
};
pub use params::{names, Parameters};
