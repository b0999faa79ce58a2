use super::cnn::{CnnGradient, CnnParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { alpha: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Optimizer state owned by a training loop.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: CnnParams,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
    pub adam: AdamConfig,
    /// Step-size factor for the first kernel `a1` (layer-wise learning rate).
    pub kernel1_scale: f64,
    /// `(iteration, minibatch loss)`.
    pub history: Vec<(usize, f64)>,
}

impl TrainState {
    pub fn new(params: CnnParams, adam: AdamConfig) -> Self {
        let n = 4 * params.dim();
        Self { params, first_moment: vec![0.0; n], second_moment: vec![0.0; n], step: 0, adam, kernel1_scale: 1.0, history: Vec::new() }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(state: &mut TrainState, grad: &CnnGradient) {
    let AdamConfig { alpha, beta1, beta2, eps } = state.adam;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let g = grad.flat();
    let mut x = state.params.flat();
    let k = state.params.dim();
    for i in 0..x.len() {
        let m = beta1 * state.first_moment[i] + (1.0 - beta1) * g[i];
        let v = beta2 * state.second_moment[i] + (1.0 - beta2) * g[i] * g[i];
        state.first_moment[i] = m;
        state.second_moment[i] = v;
        let rate = if i < k { alpha * state.kernel1_scale } else { alpha };
        x[i] -= rate * (m / c1) / ((v / c2).sqrt() + eps);
    }
    state.params.set_flat(&x);
}
