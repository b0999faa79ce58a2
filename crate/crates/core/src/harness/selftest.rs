//! A quick in-process oracle suite run by the `selftest` subcommand.

use num_complex::Complex64;
use rand::Rng;

use super::config::{ExperimentConfig, ScenarioConfig};
use super::records::{read_csv, write_csv};
use super::registry::Algorithm;
use super::stats::box_stats;
use super::sweep::{prepare_point, sweep_points};
use crate::baselines::{build_dictionary, omp_mmv};
use crate::channel::ObservationBatch;
use crate::estimators::{build_fe_kernel, fast_estimate, gridded_estimate, structured_estimate, FilterBank};
use crate::learning::{cnn_estimate, init_from_fe, loss_and_gradient, random_init, Activation};
use crate::numerics::{circular_convolution, dft_matrix, hermitian_eig, ComplexMatrix, TransformQ};
use crate::rng::{complex_normal, stream};

type Check = std::result::Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lift<T>(r: crate::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, c, |_, _| complex_normal(rng))
}

fn random_batch(rng: &mut impl Rng, q: TransformQ, t: usize, sigma2: f64) -> crate::Result<ObservationBatch> {
    let m = q.input_dim();
    let h = random_matrix(rng, m, t);
    let y = h.add(&random_matrix(rng, m, t).scale(sigma2.sqrt()))?;
    ObservationBatch::new(h, y, sigma2, q)
}

fn dft_is_unitary() -> Check {
    let f = dft_matrix(16);
    let d = lift(f.matmul(&f.adjoint()))?.max_abs_diff(&ComplexMatrix::identity(16));
    ensure(d < 1e-12, || format!("F F^H deviates from I by {d:e}"))
}

fn eigen_reconstructs() -> Check {
    let a = random_matrix(&mut stream(1, &[]), 8, 8);
    let h = a.add(&a.adjoint()).map_err(|e| e.to_string())?;
    let d = lift(hermitian_eig(&h))?.reconstruct().max_abs_diff(&h);
    ensure(d < 1e-10, || format!("V diag(l) V^H deviates by {d:e}"))
}

fn convolution_matches_definition() -> Check {
    let mut rng = stream(2, &[]);
    let a: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
    let fast = lift(circular_convolution(&a, &x))?;
    for (k, v) in fast.iter().enumerate() {
        let direct: f64 = (0..12).map(|j| a[j] * x[(k + 12 - j) % 12]).sum();
        ensure((v - direct).abs() < 1e-12, || format!("bin {k}: {v} vs {direct}"))?;
    }
    Ok(())
}

fn structured_equals_gridded() -> Check {
    let mut rng = stream(3, &[]);
    let q = TransformQ::Dft2(8);
    let filters: Vec<Vec<f64>> = (0..16).map(|_| (0..16).map(|_| rng.random_range(0.0..0.9)).collect()).collect();
    let offsets: Vec<f64> = (0..16).map(|_| rng.random_range(-2.0..0.0)).collect();
    let bank = lift(FilterBank::from_structured(q, filters, offsets, 2, 0.5))?;
    let batch = lift(random_batch(&mut rng, q, 2, 0.5))?;
    let se = lift(structured_estimate(&bank, &batch))?;
    let ge = lift(gridded_estimate(&bank.to_dense(), &batch))?;
    let rel = lift(se.sub(&ge))?.frobenius_norm() / ge.frobenius_norm();
    ensure(rel < 1e-10, || format!("relative difference {rel:e}"))
}

fn fe_is_a_softmax_cnn() -> Check {
    let kernel = lift(build_fe_kernel(2f64.to_radians(), 16, 1, 1.0))?;
    let params = init_from_fe(&kernel);
    let batch = lift(random_batch(&mut stream(4, &[]), TransformQ::Dft(16), 1, 1.0))?;
    let d = lift(cnn_estimate(&params, &batch))?.max_abs_diff(&lift(fast_estimate(&kernel, &batch))?);
    ensure(d < 1e-12, || format!("CNN and FE differ by {d:e}"))
}

fn gradient_matches_finite_differences() -> Check {
    for act in [Activation::Softmax, Activation::Relu] {
        let mut rng = stream(5, &[act as u64]);
        let q = TransformQ::Dft2(4);
        let params = random_init(act, q, &mut rng);
        let batches = vec![lift(random_batch(&mut rng, q, 2, 0.7))?];
        let (_, g) = lift(loss_and_gradient(&params, &batches))?;
        let g = g.flat();
        let x0 = params.flat();
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = 1e-5;
        for i in 0..x0.len() {
            let mut p = params.clone();
            let mut x = x0.clone();
            x[i] += h;
            p.set_flat(&x);
            let up = lift(loss_and_gradient(&p, &batches))?.0;
            x[i] -= 2.0 * h;
            p.set_flat(&x);
            let down = lift(loss_and_gradient(&p, &batches))?.0;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - g[i]).abs() / g[i].abs().max(fd.abs()).max(1e-6 * scale).max(1e-12);
            ensure(rel < 1e-5, || format!("{act} coordinate {i}: analytic {} vs numeric {fd}", g[i]))?;
        }
    }
    Ok(())
}

fn zero_estimator_is_calibrated() -> Check {
    let mut cfg = ExperimentConfig::new(
        ScenarioConfig::SinglePath { angular_spread_deg: 2.0 },
        &[Algorithm::Zero, Algorithm::GenieMmse],
        400,
        6,
    );
    cfg.point.antennas = 8;
    let p = lift(prepare_point(&cfg, sweep_points(&cfg)[0], &[Algorithm::Zero, Algorithm::GenieMmse]))?;
    let s = lift(p.samples(cfg.trials))?;
    let (zero, se) = super::stats::mean_stderr(&s[0]);
    let (genie, _) = super::stats::mean_stderr(&s[1]);
    ensure((zero - 1.0).abs() < 4.0 * se, || format!("zero estimator MSE {zero} +- {se}"))?;
    ensure(genie < zero, || format!("genie MSE {genie} is not below {zero}"))
}

fn omp_recovers_sparse_signal() -> Check {
    let d = ComplexMatrix::identity(8);
    let y = ComplexMatrix::from_fn(8, 2, |r, t| if r == 2 || r == 6 { Complex64::new(1.0 + t as f64, 0.5) } else { Complex64::new(0.0, 0.0) });
    let a = lift(omp_mmv(&y, &d, 2))?;
    let err = a.reconstruct(&d).max_abs_diff(&y);
    let dict = lift(build_dictionary(8, 4))?;
    ensure(err < 1e-12 && dict.cols() == 32, || format!("reconstruction error {err:e}"))
}

fn csv_round_trip() -> Check {
    let rec = super::records::ResultRecord {
        algorithm: "FastMMSE".into(),
        sweep: super::config::SweepVariable::Antennas,
        sweep_value: 32.0,
        metric: super::config::MetricKind::Mse,
        value: 0.1 + 0.2,
        stderr: 1e-3,
        trials: 10,
        seed: 1,
    };
    let mut buf = Vec::new();
    lift(write_csv(std::slice::from_ref(&rec), &mut buf))?;
    ensure(lift(read_csv(buf.as_slice()))? == vec![rec], || "CSV round trip changed the record".into())
}

fn box_stats_example() -> Check {
    let b = box_stats(&[1.0, 2.0, 3.0, 4.0, 5.0]).ok_or("empty")?;
    ensure((b.median, b.q1, b.q3) == (3.0, 2.0, 4.0) && b.outliers.is_empty(), || format!("{b:?}"))
}

/// Runs every check; returns `(name, outcome)` pairs.
pub fn run_selftest() -> Vec<(&'static str, Check)> {
    type Named = (&'static str, fn() -> Check);
    let checks: [Named; 10] = [
        ("dft_is_unitary", dft_is_unitary),
        ("eigen_reconstructs", eigen_reconstructs),
        ("convolution_matches_definition", convolution_matches_definition),
        ("structured_equals_gridded", structured_equals_gridded),
        ("fe_is_a_softmax_cnn", fe_is_a_softmax_cnn),
        ("gradient_matches_finite_differences", gradient_matches_finite_differences),
        ("zero_estimator_is_calibrated", zero_estimator_is_calibrated),
        ("omp_recovers_sparse_signal", omp_recovers_sparse_signal),
        ("csv_round_trip", csv_round_trip),
        ("box_stats_example", box_stats_example),
    ];
    checks.iter().map(|(name, f)| (*name, f())).collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        for (name, outcome) in super::run_selftest() {
            assert!(outcome.is_ok(), "{name}: {outcome:?}");
        }
    }
}
