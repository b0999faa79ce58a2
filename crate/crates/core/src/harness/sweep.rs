use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, MetricKind, SweepVariable};
use super::records::ResultRecord;
use super::registry::Algorithm;
use super::stats::mean_stderr;
use crate::baselines::{build_dictionary, genie_omp_estimate, ml_circulant_estimate, GenieMetric};
use crate::channel::{covariance_ula, draw_batch, sample_scenario, sigma2_from_snr_db, Geometry, ObservationBatch};
use crate::error::{Error, Result};
use crate::estimators::{
    build_fe_kernel, fast_estimate, genie_filter, gridded_estimate, linear_estimate, structured_estimate,
    CovarianceBank, FeKernel, FilterBank, StructuredBasis,
};
use crate::learning::{cnn_estimate, hierarchical_train, CnnParams, NoiseLevel, TrainConfig, TrainingScenario};
use crate::metrics::{last_snapshot_rate, normalized_mse};
use crate::model_io::load_cnn;
use crate::numerics::{ComplexMatrix, TransformQ};
use crate::rng::{stream, tag};

/// One operating point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub antennas: usize,
    /// `None` when the scenario draws the SNR itself.
    pub snr_db: Option<f64>,
    pub snapshots: usize,
    /// Value of the swept quantity (the antenna count for a single point).
    pub value: f64,
}

impl SweepPoint {
    pub fn sigma2(&self) -> Option<f64> {
        self.snr_db.map(sigma2_from_snr_db)
    }
}

pub fn sweep_points(config: &ExperimentConfig) -> Vec<SweepPoint> {
    let base = config.point;
    let snr = (!config.scenario.has_own_snr()).then_some(base.snr_db);
    let single = SweepPoint { index: 0, antennas: base.antennas, snr_db: snr, snapshots: base.snapshots, value: base.antennas as f64 };
    if config.sweep.variable == SweepVariable::None {
        return vec![single];
    }
    config
        .sweep
        .values
        .iter()
        .enumerate()
        .map(|(index, &v)| {
            let mut p = SweepPoint { index, value: v, ..single };
            match config.sweep.variable {
                SweepVariable::Antennas => p.antennas = v as usize,
                SweepVariable::Snr => p.snr_db = Some(v),
                SweepVariable::Coherence => p.snapshots = v as usize,
                SweepVariable::None => {}
            }
            p
        })
        .collect()
}

/// A bank that is either built once for a fixed noise level or rebuilt
/// from cached eigendecompositions for every trial's noise level.
#[derive(Debug, Clone)]
enum BankSource {
    Fixed(FilterBank),
    Dense(CovarianceBank),
    Structured(StructuredBasis),
}

impl BankSource {
    fn for_trial(&self, sigma2: f64, t: usize) -> Result<std::borrow::Cow<'_, FilterBank>> {
        use std::borrow::Cow;
        Ok(match self {
            BankSource::Fixed(b) => Cow::Borrowed(b),
            BankSource::Dense(c) => Cow::Owned(c.dense_bank(sigma2, t)?),
            BankSource::Structured(s) => Cow::Owned(s.bank(sigma2, t)?),
        })
    }
}

/// Everything the estimators of one sweep point need before trials start.
#[derive(Debug, Clone)]
pub struct PreparedPoint {
    pub point: SweepPoint,
    pub algorithms: Vec<Algorithm>,
    pub metric: MetricKind,
    seed: u64,
    prior: crate::channel::ScenarioKind,
    quadrature_points: usize,
    angular_spread: f64,
    omp_max_sparsity: usize,
    banks: BTreeMap<Algorithm, BankSource>,
    fe: Option<FeKernel>,
    pub cnns: BTreeMap<Algorithm, CnnParams>,
    dictionary: Option<ComplexMatrix>,
}

/// Data-generating model seen by learned estimators at `point`.
pub fn training_scenario(config: &ExperimentConfig, point: &SweepPoint) -> TrainingScenario {
    TrainingScenario {
        prior: config.scenario.kind(),
        antennas: point.antennas,
        snapshots: point.snapshots,
        noise: point.sigma2().map_or(NoiseLevel::FromScenario, NoiseLevel::Fixed),
        quadrature_points: config.estimators.quadrature_points,
    }
}

/// Trains (or loads) the CNN of a learned `algorithm` for `point`.
pub fn learned_params(config: &ExperimentConfig, point: &SweepPoint, algorithm: Algorithm) -> Result<CnnParams> {
    let activation = algorithm
        .activation()
        .ok_or_else(|| Error::InvalidArgument(format!("{algorithm} is not a learned estimator")))?;
    if let Some(path) = config.models.get(algorithm.name()) {
        let model = load_cnn(path).map_err(|e| e.context(path.display().to_string()))?;
        if model.params.transform.input_dim() != point.antennas || model.snapshots != point.snapshots {
            return Err(Error::Config(format!(
                "model {} is for M={}, T={}, but the point needs M={}, T={}",
                path.display(),
                model.params.transform.input_dim(),
                model.snapshots,
                point.antennas,
                point.snapshots
            )));
        }
        return Ok(model.params);
    }
    let q = TransformQ::parse(config.estimators.transform_kind(activation), point.antennas)?;
    let t = &config.training;
    let mut tc = TrainConfig::new(training_scenario(config, point), activation, q, t.iterations);
    tc.batch_size = t.batch_size;
    tc.validation_batches = t.validation_batches;
    tc.validation_every = t.validation_every;
    let seed = stream(config.seed, &[tag::MODEL, point.index as u64, algorithm.index()]).random::<u64>();
    log::info!("training {algorithm} for M={}, T={} ({} iterations)", point.antennas, point.snapshots, t.iterations);
    let stages = hierarchical_train(&tc, t.beta, t.stages, seed)
        .map_err(|e| e.context(format!("training {algorithm} at {}", point.value)))?;
    Ok(stages.into_iter().last().expect("at least one stage").params)
}

pub fn prepare_point(config: &ExperimentConfig, point: SweepPoint, algorithms: &[Algorithm]) -> Result<PreparedPoint> {
    let m = point.antennas;
    let prior = config.scenario.kind();
    let settings = &config.estimators;
    let needs_bank = algorithms.iter().any(|a| matches!(a, Algorithm::DiscreteMmse | Algorithm::CircMmse | Algorithm::ToepMmse));
    let covariances = if needs_bank {
        let mut rng = stream(config.seed, &[tag::BANK, point.index as u64]);
        Some(CovarianceBank::sample(&prior, Geometry::Ula(m), settings.bank_factor * m, settings.quadrature_points, &mut rng)?)
    } else {
        None
    };
    let mut banks = BTreeMap::new();
    let mut cnns = BTreeMap::new();
    for &a in algorithms {
        let q = match a {
            Algorithm::DiscreteMmse => None,
            Algorithm::CircMmse => Some(TransformQ::Dft(m)),
            Algorithm::ToepMmse => Some(TransformQ::Dft2(m)),
            Algorithm::CircSoftmax | Algorithm::ToepRelu => {
                cnns.insert(a, learned_params(config, &point, a)?);
                continue;
            }
            _ => continue,
        };
        let cov = covariances.as_ref().expect("bank sampled");
        let source = match (q, point.sigma2()) {
            (None, Some(s2)) => BankSource::Fixed(cov.dense_bank(s2, point.snapshots)?),
            (None, None) => BankSource::Dense(cov.clone()),
            (Some(q), Some(s2)) => BankSource::Fixed(cov.structured_basis(q)?.bank(s2, point.snapshots)?),
            (Some(q), None) => BankSource::Structured(cov.structured_basis(q)?),
        };
        banks.insert(a, source);
    }
    let angular_spread = prior.angular_spread();
    let fe = match point.sigma2() {
        Some(s2) if algorithms.contains(&Algorithm::FastMmse) => Some(build_fe_kernel(angular_spread, m, point.snapshots, s2)?),
        _ => None,
    };
    let dictionary = if algorithms.contains(&Algorithm::GenieOmp) {
        Some(build_dictionary(m, settings.omp_oversampling)?)
    } else {
        None
    };
    Ok(PreparedPoint {
        point,
        algorithms: algorithms.to_vec(),
        metric: config.metric,
        seed: config.seed,
        prior,
        quadrature_points: settings.quadrature_points,
        angular_spread,
        omp_max_sparsity: settings.omp_max_sparsity,
        banks,
        fe,
        cnns,
        dictionary,
    })
}

/// Channels, observations and true covariance of one Monte Carlo trial.
pub struct Trial {
    pub batch: ObservationBatch,
    pub covariance: crate::channel::CovarianceModel,
}

impl PreparedPoint {
    /// Matched trial `trial`: identical for every estimator and thread count.
    pub fn draw_trial(&self, trial: u64) -> Result<Trial> {
        let m = self.point.antennas;
        let mut rng = stream(self.seed, &[tag::TRIAL, self.point.index as u64, trial]);
        let draw = sample_scenario(&self.prior, Geometry::Ula(m), &mut rng)?;
        let sigma2 = match (self.point.sigma2(), draw.snr_db) {
            (Some(s2), _) => s2,
            (None, Some(snr)) => sigma2_from_snr_db(snr),
            (None, None) => return Err(Error::Config("scenario defines no SNR".into())),
        };
        let covariance = covariance_ula(&draw.spectrum, m, self.quadrature_points)?;
        let batch = draw_batch(&covariance, self.point.snapshots, sigma2, TransformQ::Identity(m), &mut rng)?;
        Ok(Trial { batch, covariance })
    }

    pub fn estimate(&self, algorithm: Algorithm, trial: &Trial) -> Result<ComplexMatrix> {
        let b = &trial.batch;
        let (s2, t) = (b.sigma2, b.snapshots());
        match algorithm {
            Algorithm::GenieMmse => linear_estimate(&genie_filter(&trial.covariance, s2)?, &b.y),
            Algorithm::DiscreteMmse => gridded_estimate(&*self.banks[&algorithm].for_trial(s2, t)?, b),
            Algorithm::CircMmse | Algorithm::ToepMmse => {
                let bank = self.banks[&algorithm].for_trial(s2, t)?;
                structured_estimate(&bank, &b.with_transform(bank.transform)?)
            }
            Algorithm::FastMmse => {
                let kernel = match &self.fe {
                    Some(k) => std::borrow::Cow::Borrowed(k),
                    None => std::borrow::Cow::Owned(build_fe_kernel(self.angular_spread, b.antennas(), t, s2)?),
                };
                fast_estimate(&kernel, &b.with_transform(kernel.transform)?)
            }
            Algorithm::CircSoftmax | Algorithm::ToepRelu => {
                let p = &self.cnns[&algorithm];
                cnn_estimate(p, &b.with_transform(p.transform)?)
            }
            Algorithm::CircMl => ml_circulant_estimate(b),
            Algorithm::GenieOmp => {
                let metric = match self.metric {
                    MetricKind::Mse => GenieMetric::Mse,
                    MetricKind::Rate => GenieMetric::Rate,
                };
                genie_omp_estimate(b, self.dictionary.as_ref().expect("dictionary built"), self.omp_max_sparsity, metric)
            }
            Algorithm::Zero => Ok(ComplexMatrix::zeros(b.antennas(), t)),
        }
    }

    fn score(&self, trial: &Trial, est: &ComplexMatrix) -> Result<f64> {
        match self.metric {
            MetricKind::Mse => normalized_mse(&trial.batch.h, est),
            MetricKind::Rate => last_snapshot_rate(&trial.batch.h, est, trial.batch.sigma2),
        }
    }

    /// Per-algorithm metric of one trial, in `self.algorithms` order.
    pub fn evaluate_trial(&self, trial: u64) -> Result<Vec<f64>> {
        let tr = self.draw_trial(trial)?;
        self.algorithms
            .iter()
            .map(|&a| {
                let est = self.estimate(a, &tr).map_err(|e| e.context(format!("{a}, trial {trial}")))?;
                self.score(&tr, &est)
            })
            .collect()
    }

    /// `samples[a][t]` for `trials` matched trials; the reduction order is
    /// fixed, so the result does not depend on the thread count.
    pub fn samples(&self, trials: usize) -> Result<Vec<Vec<f64>>> {
        let rows = (0..trials as u64).into_par_iter().map(|t| self.evaluate_trial(t)).collect::<Result<Vec<_>>>()?;
        Ok((0..self.algorithms.len()).map(|a| rows.iter().map(|r| r[a]).collect()).collect())
    }
}

fn run_sweep(config: &ExperimentConfig, metric: MetricKind) -> Result<Vec<ResultRecord>> {
    config.validate()?;
    let mut cfg = config.clone();
    cfg.metric = metric;
    let algorithms = cfg.algorithm_list()?;
    let mut records = Vec::new();
    for point in sweep_points(&cfg) {
        log::info!("sweep point {} = {}", cfg.sweep.variable.column(), point.value);
        let prepared = prepare_point(&cfg, point, &algorithms)?;
        let samples = prepared.samples(cfg.trials)?;
        for (a, s) in algorithms.iter().zip(&samples) {
            let (value, stderr) = mean_stderr(s);
            records.push(ResultRecord {
                algorithm: a.to_string(),
                sweep: cfg.sweep.variable,
                sweep_value: point.value,
                metric,
                value,
                stderr,
                trials: cfg.trials,
                seed: cfg.seed,
            });
        }
    }
    Ok(records)
}

/// Normalized MSE `||H - H^||_F^2 / (M T)` per sweep point and estimator.
pub fn run_mse_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    run_sweep(config, MetricKind::Mse)
}

/// Matched-filter rate of the last snapshot versus the number of observations.
pub fn run_rate_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    if config.sweep.variable != SweepVariable::Coherence {
        return Err(Error::Config("rate sweeps run over nCoherence".into()));
    }
    run_sweep(config, MetricKind::Rate)
}
