use rand::Rng;

use super::*;
use crate::channel::{ObservationBatch, ScenarioKind, DEFAULT_QUADRATURE_POINTS, DEG};
use crate::estimators::{apply_diagonal, build_fe_kernel, fast_estimate, fast_filter, FeKernel};
use crate::numerics::{ComplexMatrix, TransformQ};
use crate::rng::{complex_normal, stream};

fn random_vec(rng: &mut impl Rng, k: usize, r: f64) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-r..r)).collect()
}

fn random_params(rng: &mut impl Rng, activation: Activation, q: TransformQ) -> CnnParams {
    let k = q.output_dim();
    CnnParams::new(
        random_vec(rng, k, 0.5),
        random_vec(rng, k, 0.5),
        random_vec(rng, k, 0.5),
        random_vec(rng, k, 0.5),
        activation,
        q,
    )
    .unwrap()
}

fn random_batch(rng: &mut impl Rng, q: TransformQ, t: usize, sigma2: f64) -> ObservationBatch {
    let m = q.input_dim();
    let h = ComplexMatrix::from_fn(m, t, |_, _| complex_normal(rng));
    let y = ComplexMatrix::from_fn(m, t, |r, c| h[(r, c)] + complex_normal(rng) * sigma2.sqrt());
    ObservationBatch::new(h, y, sigma2, q).unwrap()
}

fn circulant(a: &[f64]) -> Vec<Vec<f64>> {
    let k = a.len();
    (0..k).map(|r| (0..k).map(|c| a[(r + k - c) % k]).collect()).collect()
}

fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn dense_forward(p: &CnnParams, c: &[f64]) -> Vec<f64> {
    let z: Vec<f64> = matvec(&circulant(&p.a1), c).iter().zip(&p.b1).map(|(a, b)| a + b).collect();
    let act: Vec<f64> = match p.activation {
        Activation::Relu => z.iter().map(|v| v.max(0.0)).collect(),
        Activation::Softmax => {
            let e: Vec<f64> = z.iter().map(|v| v.exp()).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|v| v / s).collect()
        }
    };
    matvec(&circulant(&p.a2), &act).iter().zip(&p.b2).map(|(a, b)| a + b).collect()
}

#[test]
fn forward_special_cases() {
    let mut rng = stream(41, &[]);
    let q = TransformQ::Dft(8);
    let mut p = random_params(&mut rng, Activation::Relu, q);
    p.a1 = vec![0.0; 8];
    p.b1 = vec![0.0; 8];
    let c: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..5.0)).collect();
    assert_eq!(cnn_forward(&p, &c).unwrap(), p.b2);
}

#[test]
fn forward_matches_dense_layers() {
    let mut rng = stream(42, &[]);
    for act in [Activation::Relu, Activation::Softmax] {
        for _ in 0..20 {
            let p = random_params(&mut rng, act, TransformQ::Dft(8));
            let c: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..3.0)).collect();
            let got = cnn_forward(&p, &c).unwrap();
            for (a, b) in got.iter().zip(dense_forward(&p, &c)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn fe_initialized_network_is_the_fast_estimator() {
    let kernel = build_fe_kernel(2.0 * DEG, 16, 1, 0.5).unwrap();
    let p = init_from_fe(&kernel);
    assert_eq!(p.b2, vec![0.0; 16]);
    let mut rng = stream(43, &[]);
    for _ in 0..100 {
        let batch = random_batch(&mut rng, TransformQ::Dft(16), 1, 0.5);
        let w = cnn_forward(&p, &batch.c_hat).unwrap();
        let fe = fast_filter(&kernel, &batch.c_hat).unwrap();
        assert!(w.iter().zip(&fe).all(|(a, b)| (a - b).abs() <= 1e-12));
        let d = cnn_estimate(&p, &batch).unwrap().max_abs_diff(&fast_estimate(&kernel, &batch).unwrap());
        assert!(d <= 1e-12);
    }
}

#[test]
fn estimate_matches_dense_pipeline() {
    let mut rng = stream(44, &[]);
    let q = TransformQ::Dft2(8);
    let qd = q.dense();
    for act in [Activation::Relu, Activation::Softmax] {
        let p = random_params(&mut rng, act, q);
        let batch = random_batch(&mut rng, q, 3, 0.8);
        // c_hat from the dense Q, then Q^H diag(w) Q Y with explicit matrices.
        let qy = qd.matmul(&batch.y).unwrap();
        let c: Vec<f64> = (0..16).map(|k| qy.row(k).iter().map(|z| z.norm_sqr()).sum::<f64>() / 0.8).collect();
        let w = dense_forward(&p, &c);
        let oracle = qd.adjoint().matmul(&ComplexMatrix::from_diag(&w).matmul(&qy).unwrap()).unwrap();
        let got = cnn_estimate(&p, &batch).unwrap();
        assert!(got.sub(&oracle).unwrap().frobenius_norm() <= 1e-10 * oracle.frobenius_norm());
    }
    let mut p = CnnParams::zeros(Activation::Relu, q);
    p.b2 = random_vec(&mut rng, 16, 1.0);
    let batch = random_batch(&mut rng, q, 2, 1.0);
    assert!(cnn_estimate(&p, &batch).unwrap().max_abs_diff(&apply_diagonal(&q, &p.b2, &batch.y).unwrap()) < 1e-14);
}

fn loss_only(p: &CnnParams, mb: &[ObservationBatch]) -> f64 {
    mb.iter()
        .map(|b| cnn_estimate(p, b).unwrap().sub(&b.h).unwrap().frobenius_norm_sqr())
        .sum::<f64>()
        / mb.len() as f64
}

/// Largest per-coordinate relative error between analytic and central-difference gradients.
fn max_fd_error(p: &CnnParams, mb: &[ObservationBatch]) -> f64 {
    let (_, g) = loss_and_gradient(p, mb).unwrap();
    let g = g.flat();
    let x0 = p.flat();
    let h = 1e-5;
    let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..x0.len() {
        let mut xp = x0.clone();
        xp[i] += h;
        let mut xm = x0.clone();
        xm[i] -= h;
        let mut pp = p.clone();
        pp.set_flat(&xp);
        let mut pm = p.clone();
        pm.set_flat(&xm);
        let fd = (loss_only(&pp, mb) - loss_only(&pm, mb)) / (2.0 * h);
        let denom = g[i].abs().max(fd.abs()).max(1e-6 * scale).max(1e-12);
        worst = worst.max((g[i] - fd).abs() / denom);
    }
    worst
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = stream(45, &[]);
    for act in [Activation::Relu, Activation::Softmax] {
        for q in [TransformQ::Dft(8), TransformQ::Dft2(4)] {
            let p = random_params(&mut rng, act, q);
            let mb: Vec<_> = (0..2).map(|_| random_batch(&mut rng, q, 2, 0.7)).collect();
            let e = max_fd_error(&p, &mb);
            assert!(e < 1e-5, "{act} {q}: {e}");
        }
    }
}

#[test]
fn dead_output_layer_has_no_inner_gradient() {
    let mut rng = stream(46, &[]);
    for act in [Activation::Relu, Activation::Softmax] {
        let mut p = random_params(&mut rng, act, TransformQ::Dft(8));
        p.a2 = vec![0.0; 8];
        p.b2 = vec![0.0; 8];
        let mb: Vec<_> = (0..3).map(|_| random_batch(&mut rng, TransformQ::Dft(8), 2, 1.0)).collect();
        let (loss, g) = loss_and_gradient(&p, &mb).unwrap();
        let expect = mb.iter().map(|b| b.h.frobenius_norm_sqr()).sum::<f64>() / 3.0;
        assert!((loss - expect).abs() < 1e-12 * expect);
        assert!(g.a1.iter().chain(&g.b1).all(|v| *v == 0.0));
    }
}

#[test]
fn duplicated_sample_does_not_change_the_mean() {
    let mut rng = stream(47, &[]);
    let p = random_params(&mut rng, Activation::Softmax, TransformQ::Dft2(4));
    let b = random_batch(&mut rng, TransformQ::Dft2(4), 2, 1.0);
    let (l1, g1) = loss_and_gradient(&p, std::slice::from_ref(&b)).unwrap();
    let (l2, g2) = loss_and_gradient(&p, &[b.clone(), b]).unwrap();
    assert!((l1 - l2).abs() < 1e-12 * l1);
    assert!(g1.flat().iter().zip(g2.flat()).all(|(a, b)| (a - b).abs() < 1e-12 * (1.0 + a.abs())));
}

#[test]
fn adam_steps() {
    let q = TransformQ::Dft(1);
    let p = CnnParams::new(vec![0.3], vec![-0.2], vec![1.5], vec![0.0], Activation::Relu, q).unwrap();
    let mut s = TrainState::new(p.clone(), AdamConfig::default());
    adam_step(&mut s, &CnnGradient::zeros(1));
    assert_eq!(s.params, p);
    assert_eq!(s.step, 1);

    // Scalar first step: m^ = g, v^ = g^2, update -alpha g / (|g| + eps).
    let g = 0.25;
    let mut s = TrainState::new(p.clone(), AdamConfig::default());
    let grad = CnnGradient { a1: vec![g], b1: vec![-4.0], a2: vec![1e-9], b2: vec![0.0] };
    adam_step(&mut s, &grad);
    assert!((s.params.a1[0] - (0.3 - 1e-3 * g / (g + 1e-8))).abs() < 1e-15);
    assert!((s.params.b1[0] - (-0.2 + 1e-3 * 4.0 / (4.0 + 1e-8))).abs() < 1e-15);

    // The first-kernel scale shrinks only the a1 step.
    let mut scaled = TrainState::new(p.clone(), AdamConfig::default());
    scaled.kernel1_scale = 0.25;
    adam_step(&mut scaled, &grad);
    assert!((scaled.params.a1[0] - (0.3 - 0.25e-3 * g / (g + 1e-8))).abs() < 1e-15);
    assert_eq!(scaled.params.b1, s.params.b1);
    assert_eq!(scaled.params.a2, s.params.a2);

    // Two steps against a hand-rolled reference.
    let grads = [0.5, -0.1];
    let (a, b1, b2, eps) = (1e-3, 0.9, 0.999, 1e-8);
    let (mut x, mut m, mut v) = (0.3f64, 0.0f64, 0.0f64);
    let mut s = TrainState::new(p, AdamConfig::default());
    for (t, &gv) in grads.iter().enumerate() {
        m = b1 * m + (1.0 - b1) * gv;
        v = b2 * v + (1.0 - b2) * gv * gv;
        let mh = m / (1.0 - b1.powi(t as i32 + 1));
        let vh = v / (1.0 - b2.powi(t as i32 + 1));
        x -= a * mh / (vh.sqrt() + eps);
        adam_step(&mut s, &CnnGradient { a1: vec![gv], b1: vec![0.0], a2: vec![0.0], b2: vec![0.0] });
    }
    assert!((s.params.a1[0] - x).abs() < 1e-15);
}

fn single_path_config(m: usize, iterations: usize, act: Activation, q: TransformQ) -> TrainConfig {
    let scenario = TrainingScenario {
        prior: ScenarioKind::SinglePath { angular_spread: 2.0 * DEG },
        antennas: m,
        snapshots: 1,
        noise: NoiseLevel::Fixed(1.0),
        quadrature_points: DEFAULT_QUADRATURE_POINTS,
    };
    let mut c = TrainConfig::new(scenario, act, q, iterations);
    c.validation_batches = 100;
    c
}

#[test]
fn zero_iterations_returns_init() {
    let cfg = single_path_config(8, 0, Activation::Relu, TransformQ::Dft(8));
    let mut rng = stream(48, &[]);
    let init = random_params(&mut rng, Activation::Relu, TransformQ::Dft(8));
    let out = train(&cfg, Some(init.clone()), 1).unwrap();
    assert_eq!(out.params, init);
    assert!(out.history.is_empty());
}

#[test]
fn training_improves_validation_mse() {
    let mut cfg = single_path_config(16, 500, Activation::Relu, TransformQ::Dft2(16));
    cfg.validation_batches = 2000;
    cfg.validation_every = 500;
    let out = train(&cfg, None, 3).unwrap();
    let first = out.validation[0].1;
    assert!(out.best_validation < first, "{} !< {first}", out.best_validation);
}

#[test]
fn training_is_reproducible_and_hierarchy_of_zero_is_plain() {
    let cfg = single_path_config(8, 30, Activation::Softmax, TransformQ::Dft(8));
    let a = train(&cfg, None, 5).unwrap();
    let b = train(&cfg, None, 5).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.history, b.history);
    let h = hierarchical_train(&cfg, 2.0, 0, 5).unwrap();
    assert_eq!(h.len(), 1);
    assert_eq!(h[0].params, a.params);
    assert_eq!(h[0].history, a.history);
}

#[test]
fn hierarchical_stages() {
    assert_eq!(stage_antennas(64, 2.0, 3), vec![8, 16, 32, 64]);
    assert_eq!(stage_antennas(20, 2.0, 2), vec![5, 10, 20]);
    assert_eq!(stage_antennas(30, 2.0, 2), vec![8, 15, 30]);
    assert_eq!(stage_iterations(2500, 4), vec![625, 625, 625, 625]);
    assert_eq!(stage_iterations(10, 3), vec![3, 3, 4]);
    assert_eq!(interpolate_circular(&[2.5; 4], 8), vec![2.5; 8]);
    assert_eq!(interpolate_circular(&[0.0, 1.0], 4), vec![0.0, 0.5, 1.0, 0.5]);
    let cfg = single_path_config(16, 40, Activation::Relu, TransformQ::Dft2(16));
    let out = hierarchical_train(&cfg, 2.0, 2, 9).unwrap();
    assert_eq!(out.len(), 3);
    assert_eq!(out[2].params.dim(), 32);
    let mut p = CnnParams::zeros(Activation::Relu, TransformQ::Dft(4));
    p.a1 = vec![1.0; 4];
    p.b1 = vec![3.0; 4];
    let up = upsample_params(&p, TransformQ::Dft(8), 2.0);
    assert_eq!(up.a1, vec![0.5; 8]);
    assert_eq!(up.b1, vec![3.0; 8]);
}

#[test]
fn relu_initialization_is_never_dead() {
    // Low SNR makes c_hat nearly flat, so about half of the plain draws are dead.
    let mut cfg = single_path_config(8, 10, Activation::Relu, TransformQ::Dft(8));
    cfg.scenario.noise = NoiseLevel::Fixed(10.0);
    let q = TransformQ::Dft(8);
    let mut redrawn = 0;
    for seed in 0..12 {
        let p = live_random_init(&cfg, q, seed).unwrap();
        if p != random_init(Activation::Relu, q, &mut stream(seed, &[crate::rng::tag::INIT, 0])) {
            redrawn += 1;
        }
        let out = train(&cfg, None, seed).unwrap();
        let trained = train_state_after(&cfg, &p, seed);
        assert_ne!(trained.a1, p.a1, "seed {seed}: first layer never moved");
        assert_eq!(out.history.len(), 10);
    }
    assert!(redrawn > 0, "no dead draw among the seeds");
}

fn train_state_after(cfg: &TrainConfig, init: &CnnParams, seed: u64) -> CnnParams {
    let mut state = TrainState::new(init.clone(), cfg.adam);
    for it in 0..cfg.iterations as u64 {
        let mb: Vec<_> = (0..4).map(|s| cfg.scenario.draw(8, init.transform, &mut stream(seed, &[99, it, s])).unwrap()).collect();
        let (_, g) = loss_and_gradient(&state.params, &mb).unwrap();
        adam_step(&mut state, &g);
    }
    state.params
}

#[test]
fn fe_kernel_from_parts_round_trip() {
    let k = FeKernel::from_parts(vec![0.1, 0.2, 0.3], vec![0.0; 3], 1, 1.0).unwrap();
    assert_eq!(init_from_fe(&k).a1, vec![0.1, 0.3, 0.2]);
}
