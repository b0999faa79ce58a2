//! The CNN estimator: forward pass, hand-derived gradients, Adam training
//! and hierarchical training over growing antenna counts.

mod adam;
mod cnn;
mod train;
#[cfg(test)]
mod tests;

pub use adam::{adam_step, AdamConfig, TrainState};
pub use cnn::{cnn_estimate, cnn_forward, cnn_mse, hidden_preactivation, init_from_fe, loss_and_gradient, Activation, CnnGradient, CnnParams};
pub use train::{
    hierarchical_train, input_level, interpolate_circular, live_random_init, random_init, stage_antennas, stage_iterations, train, upsample_params,
    NoiseLevel, TrainConfig, TrainOutcome, TrainingScenario,
};
