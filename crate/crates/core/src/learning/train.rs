use rand::Rng;
use rayon::prelude::*;

use super::adam::{adam_step, AdamConfig, TrainState};
use super::cnn::{cnn_mse, hidden_preactivation, loss_and_gradient, Activation, CnnParams};
use crate::channel::{covariance_ula, draw_batch, sample_scenario, sigma2_from_snr_db, Geometry, ObservationBatch, ScenarioKind};
use crate::error::{Error, Result};
use crate::numerics::TransformQ;
use crate::rng::{stream, tag};

/// How the noise variance of a training or evaluation sample is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    Fixed(f64),
    /// Taken from the drawn user position (placed-user scenario).
    FromScenario,
}

/// Data-generating model for training and evaluation on a ULA.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingScenario {
    pub prior: ScenarioKind,
    pub antennas: usize,
    pub snapshots: usize,
    pub noise: NoiseLevel,
    pub quadrature_points: usize,
}

impl TrainingScenario {
    /// One fresh `(H, Y, c_hat)` sample with `m` antennas.
    pub fn draw<R: Rng + ?Sized>(&self, m: usize, q: TransformQ, rng: &mut R) -> Result<ObservationBatch> {
        let d = sample_scenario(&self.prior, Geometry::Ula(m), rng)?;
        let sigma2 = match self.noise {
            NoiseLevel::Fixed(s) => s,
            NoiseLevel::FromScenario => {
                let snr = d.snr_db.ok_or_else(|| Error::Config("scenario does not define an SNR".into()))?;
                sigma2_from_snr_db(snr)
            }
        };
        let c = covariance_ula(&d.spectrum, m, self.quadrature_points)?;
        draw_batch(&c, self.snapshots, sigma2, q, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub scenario: TrainingScenario,
    pub activation: Activation,
    /// Transform for the full antenna count.
    pub transform: TransformQ,
    pub iterations: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub validation_batches: usize,
    pub validation_every: usize,
}

impl TrainConfig {
    pub fn new(scenario: TrainingScenario, activation: Activation, transform: TransformQ, iterations: usize) -> Self {
        Self {
            scenario,
            activation,
            transform,
            iterations,
            batch_size: 20,
            adam: AdamConfig::default(),
            validation_batches: 500,
            validation_every: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best validation checkpoint.
    pub params: CnnParams,
    /// `(iteration, minibatch loss)`.
    pub history: Vec<(usize, f64)>,
    /// `(iteration, validation MSE)`.
    pub validation: Vec<(usize, f64)>,
    pub best_validation: f64,
}

/// Kernels iid uniform in `(-1/sqrt(K), 1/sqrt(K))`, biases zero.
pub fn random_init<R: Rng + ?Sized>(activation: Activation, transform: TransformQ, rng: &mut R) -> CnnParams {
    let k = transform.output_dim();
    let r = 1.0 / (k as f64).sqrt();
    let mut p = CnnParams::zeros(activation, transform);
    p.a1.iter_mut().for_each(|v| *v = rng.random_range(-r..r));
    p.a2.iter_mut().for_each(|v| *v = rng.random_range(-r..r));
    p
}

/// Probe batches and redraws used by [`live_random_init`].
const INIT_PROBES: u64 = 16;
const INIT_ATTEMPTS: u64 = 64;

/// [`random_init`], redrawn while some ReLU probe sample leaves every hidden
/// unit inactive. The input is nonnegative and often nearly flat, so a first
/// kernel with a negative sum can switch the whole layer off, after which no
/// gradient reaches `a1`, `b1` or `a2`.
pub fn live_random_init(config: &TrainConfig, q: TransformQ, seed: u64) -> Result<CnnParams> {
    let draw = |attempt: u64| {
        let key: &[u64] = if attempt == 0 { &[tag::INIT, 0] } else { &[tag::INIT, 0, attempt] };
        random_init(config.activation, q, &mut stream(seed, key))
    };
    if config.activation != Activation::Relu {
        return Ok(draw(0));
    }
    let m = q.input_dim();
    let probes = (0..INIT_PROBES)
        .map(|j| config.scenario.draw(m, q, &mut stream(seed, &[tag::INIT, 1, j])))
        .collect::<Result<Vec<_>>>()?;
    for attempt in 0..INIT_ATTEMPTS {
        let p = draw(attempt);
        let mut live = true;
        for b in &probes {
            if !hidden_preactivation(&p, &b.c_hat)?.iter().any(|&z| z > 0.0) {
                live = false;
                break;
            }
        }
        if live {
            return Ok(p);
        }
    }
    log::warn!("no live ReLU initialization in {INIT_ATTEMPTS} draws; using the first");
    Ok(draw(0))
}

fn validation_set(config: &TrainConfig, m: usize, q: TransformQ, seed: u64, stage: u64) -> Result<Vec<ObservationBatch>> {
    (0..config.validation_batches as u64)
        .into_par_iter()
        .map(|j| config.scenario.draw(m, q, &mut stream(seed, &[tag::VALIDATION, stage, j])))
        .collect()
}

/// Mean entry of `c_hat` over `batches`.
pub fn input_level(batches: &[ObservationBatch]) -> f64 {
    let (sum, n) = batches.iter().fold((0.0, 0usize), |(s, n), b| (s + b.c_hat.iter().sum::<f64>(), n + b.c_hat.len()));
    if n == 0 {
        1.0
    } else {
        sum / n as f64
    }
}

fn train_stage(config: &TrainConfig, m: usize, init: CnnParams, iterations: usize, seed: u64, stage: u64) -> Result<TrainOutcome> {
    let q = init.transform;
    if q.input_dim() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: q.input_dim() });
    }
    let validation = validation_set(config, m, q, seed, stage)?;
    let mut state = TrainState::new(init, config.adam);
    // a1 multiplies c_hat, whose level grows with T and the SNR; scaling its
    // step keeps the per-step change of a1 * c_hat near alpha.
    state.kernel1_scale = 1.0 / input_level(&validation).max(1e-12);
    let mut best = state.params.clone();
    let mut best_mse = cnn_mse(&best, &validation)?;
    let mut val_history = vec![(0, best_mse)];
    for it in 0..iterations {
        let minibatch = (0..config.batch_size as u64)
            .into_par_iter()
            .map(|s| config.scenario.draw(m, q, &mut stream(seed, &[tag::TRAIN, stage, it as u64, s])))
            .collect::<Result<Vec<_>>>()?;
        let (loss, grad) = loss_and_gradient(&state.params, &minibatch).map_err(|e| match e {
            Error::NonFinite(_) => Error::Divergence { iteration: it, loss: f64::NAN },
            other => other,
        })?;
        if !grad.flat().iter().all(|g| g.is_finite()) {
            return Err(Error::Divergence { iteration: it, loss });
        }
        state.history.push((it, loss));
        adam_step(&mut state, &grad);
        let done = it + 1;
        if done % config.validation_every.max(1) == 0 || done == iterations {
            let mse = cnn_mse(&state.params, &validation)?;
            if !mse.is_finite() {
                return Err(Error::Divergence { iteration: it, loss: mse });
            }
            val_history.push((done, mse));
            if mse < best_mse {
                best_mse = mse;
                best = state.params.clone();
            }
        }
    }
    Ok(TrainOutcome { params: best, history: state.history, validation: val_history, best_validation: best_mse })
}

/// Stochastic training (fixed budget, best-validation checkpoint).
pub fn train(config: &TrainConfig, init: Option<CnnParams>, seed: u64) -> Result<TrainOutcome> {
    let m = config.scenario.antennas;
    let init = match init {
        Some(p) => p,
        None => live_random_init(config, config.transform.with_antennas(m), seed)?,
    };
    train_stage(config, m, init, config.iterations, seed, 0)
}

/// Antenna counts `M_i = ceil(M / beta^(n - i))`, `i = 0..=n`.
pub fn stage_antennas(m: usize, beta: f64, n: usize) -> Vec<usize> {
    (0..=n).map(|i| ((m as f64) / beta.powi((n - i) as i32)).ceil().max(1.0) as usize).collect()
}

/// Circular linear interpolation of `x` onto `k` points.
pub fn interpolate_circular(x: &[f64], k: usize) -> Vec<f64> {
    let n = x.len();
    (0..k)
        .map(|j| {
            let pos = j as f64 * n as f64 / k as f64;
            let i0 = pos.floor() as usize % n;
            let frac = pos - pos.floor();
            (1.0 - frac) * x[i0] + frac * x[(i0 + 1) % n]
        })
        .collect()
}

/// Moves trained parameters to a larger transform; kernels are divided by `beta`.
pub fn upsample_params(p: &CnnParams, transform: TransformQ, beta: f64) -> CnnParams {
    let k = transform.output_dim();
    CnnParams {
        a1: interpolate_circular(&p.a1, k).into_iter().map(|v| v / beta).collect(),
        b1: interpolate_circular(&p.b1, k),
        a2: interpolate_circular(&p.a2, k).into_iter().map(|v| v / beta).collect(),
        b2: interpolate_circular(&p.b2, k),
        activation: p.activation,
        transform,
    }
}

/// Splits `total` iterations evenly over `stages`, remainder to the last.
pub fn stage_iterations(total: usize, stages: usize) -> Vec<usize> {
    let base = total / stages;
    let mut v = vec![base; stages];
    if let Some(last) = v.last_mut() {
        *last += total - base * stages;
    }
    v
}

/// Curriculum over growing antenna counts; `n = 0` is plain [`train`].
pub fn hierarchical_train(config: &TrainConfig, beta: f64, n: usize, seed: u64) -> Result<Vec<TrainOutcome>> {
    if !(beta > 1.0) {
        return Err(Error::InvalidArgument(format!("beta must exceed 1, got {beta}")));
    }
    let sizes = stage_antennas(config.scenario.antennas, beta, n);
    let iters = stage_iterations(config.iterations, sizes.len());
    let mut outcomes: Vec<TrainOutcome> = Vec::with_capacity(sizes.len());
    for (stage, (&m, &it)) in sizes.iter().zip(&iters).enumerate() {
        let q = config.transform.with_antennas(m);
        let init = match outcomes.last() {
            None => live_random_init(config, q, seed)?,
            Some(prev) => upsample_params(&prev.params, q, beta),
        };
        log::info!("hierarchical stage {stage}: M={m}, {it} iterations");
        outcomes.push(train_stage(config, m, init, it, seed, stage as u64)?);
    }
    Ok(outcomes)
}
