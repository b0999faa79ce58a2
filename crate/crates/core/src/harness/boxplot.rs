use rand::Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::records::BoxRecord;
use super::stats::box_stats;
use super::sweep::{sweep_points, training_scenario};
use crate::error::{Error, Result};
use crate::learning::{cnn_mse, hierarchical_train, Activation, TrainConfig};
use crate::numerics::TransformQ;
use crate::rng::{stream, tag};

/// Final evaluation MSE of repeated trainings, plain versus hierarchical.
#[derive(Debug, Clone)]
pub struct BoxplotResult {
    pub basic: Vec<f64>,
    pub hierarchical: Vec<f64>,
    pub records: Vec<BoxRecord>,
}

fn method_name(activation: Activation, q: &TransformQ) -> String {
    let structure = if matches!(q, TransformQ::Dft(_)) { "Circ" } else { "Toep" };
    let act = match activation {
        Activation::Relu => "ReLU",
        Activation::Softmax => "Softmax",
    };
    format!("{structure}{act}")
}

/// Trains `repetitions` CNNs per method with equal iteration budgets and
/// evaluates each on one shared evaluation set at the base point.
pub fn run_boxplot(config: &ExperimentConfig) -> Result<BoxplotResult> {
    config.validate()?;
    let point = sweep_points(config)[0];
    let bp = &config.boxplot;
    if bp.repetitions == 0 || bp.evaluation_batches == 0 {
        return Err(Error::Config("boxplot needs repetitions and evaluation_batches >= 1".into()));
    }
    let q = TransformQ::parse(&bp.transform, point.antennas)?;
    let t = &config.training;
    let scenario = training_scenario(config, &point);
    let mut tc = TrainConfig::new(scenario.clone(), bp.activation, q, t.iterations);
    tc.batch_size = t.batch_size;
    tc.validation_batches = t.validation_batches;
    tc.validation_every = t.validation_every;
    let eval = (0..bp.evaluation_batches as u64)
        .into_par_iter()
        .map(|j| scenario.draw(point.antennas, q, &mut stream(config.seed, &[tag::EVAL, j])))
        .collect::<Result<Vec<_>>>()?;
    let run = |stages: usize, method: u64| -> Result<Vec<f64>> {
        (0..bp.repetitions as u64)
            .map(|r| {
                let seed = stream(config.seed, &[tag::MODEL, method, r]).random::<u64>();
                let out = hierarchical_train(&tc, t.beta, stages, seed)
                    .map_err(|e| e.context(format!("boxplot repetition {r}")))?;
                let p = &out.last().expect("one stage").params;
                log::info!("boxplot method {method} repetition {r}: best validation {}", out.last().expect("stage").best_validation);
                cnn_mse(p, &eval)
            })
            .collect()
    };
    let basic = run(0, 0)?;
    let hierarchical = run(t.stages, 1)?;
    let name = method_name(bp.activation, &q);
    let records = vec![
        BoxRecord { method: name.clone(), stats: box_stats(&basic).expect("nonempty"), samples: basic.clone() },
        BoxRecord { method: format!("{name}Hier"), stats: box_stats(&hierarchical).expect("nonempty"), samples: hierarchical.clone() },
    ];
    Ok(BoxplotResult { basic, hierarchical, records })
}
