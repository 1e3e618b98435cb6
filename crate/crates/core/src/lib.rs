pub mod autodiff;
pub mod cli;
pub mod corpus;
pub mod decoding;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod training;

pub use error::{Error, Result, TensorError};
