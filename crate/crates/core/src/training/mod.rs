//! Losses, the Adam optimizer and the training loop.

pub mod adam;
pub mod gradcheck;
pub mod loss;
pub mod trainer;

pub use adam::{adam_step, clip_gradients, global_norm, AdamConfig, AdamState};
pub use gradcheck::{check_gradients, GradientCheck, ParamCheck};
pub use loss::{
    attention_regularizer, combined_loss, example_loss, loss_l1, loss_l2, Example, GradMap, LossBreakdown, LossWeights,
};
pub use trainer::{
    select_best, train, train_with, validation_score, EpochLog, SelectionMetric, TrainConfig, TrainData, TrainOutcome,
};
