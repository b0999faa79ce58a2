use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::channel::{
    circulant_from_eigenvalues, covariance_ula, AngularSpectrum, Geometry, ObservationBatch, ScenarioKind,
    DEFAULT_QUADRATURE_POINTS, DEG,
};
use crate::numerics::{dft_matrix, hermitian_eig, ComplexMatrix, TransformQ};
use crate::rng::{complex_normal, stream};

fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, c, |_, _| complex_normal(rng))
}

fn random_batch(rng: &mut impl Rng, q: TransformQ, t: usize, sigma2: f64) -> ObservationBatch {
    let m = q.input_dim();
    ObservationBatch::new(random_matrix(rng, m, t), random_matrix(rng, m, t), sigma2, q).unwrap()
}

fn random_structured_bank(rng: &mut impl Rng, q: TransformQ, n: usize, t: usize, sigma2: f64) -> FilterBank {
    let k = q.output_dim();
    let filters = (0..n).map(|_| (0..k).map(|_| rng.random_range(0.0..0.95)).collect()).collect();
    let offsets = (0..n).map(|_| rng.random_range(-3.0..0.0)).collect();
    FilterBank::from_structured(q, filters, offsets, t, sigma2).unwrap()
}

fn rel_err(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(1e-300)
}

fn single_path(m: usize, azimuth: f64) -> crate::channel::CovarianceModel {
    let sp = AngularSpectrum::single(azimuth, 2.0 * DEG, Geometry::Ula(m)).unwrap();
    covariance_ula(&sp, m, DEFAULT_QUADRATURE_POINTS).unwrap()
}

#[test]
fn fit_recovers_decomposable_filters() {
    let mut rng = stream(21, &[]);
    for q in [
        TransformQ::Dft(8),
        TransformQ::Dft2(4),
        TransformQ::Dft2(8),
        TransformQ::KronDft { horizontal: 2, vertical: 4 },
    ] {
        let bank = random_structured_bank(&mut rng, q, 1, 1, 1.0);
        let BankFilters::Structured(ws) = &bank.filters else { unreachable!() };
        let BankFilters::Dense(dense) = bank.to_dense().filters else { unreachable!() };
        let fit = fit_structured_weights(&dense[0], q).unwrap();
        let refit = FilterBank::from_structured(q, vec![fit.clone()], vec![0.0], 1, 1.0).unwrap().to_dense();
        let BankFilters::Dense(back) = refit.filters else { unreachable!() };
        assert!(back[0].max_abs_diff(&dense[0]) < 1e-10, "{q}");
        if q.is_unitary() {
            let d = ws[0].iter().zip(&fit).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(d < 1e-10, "{q}: {d}");
        }
    }
}

#[test]
fn fit_of_circulant_gives_its_eigenvalues() {
    let mut rng = stream(22, &[]);
    let lambda: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..1.0)).collect();
    let sp = AngularSpectrum::single(0.0, 0.1, Geometry::Ula(8)).unwrap();
    let w = circulant_from_eigenvalues(&lambda, sp).matrix;
    let fit = fit_structured_weights(&w, TransformQ::Dft(8)).unwrap();
    for (a, b) in fit.iter().zip(&lambda) {
        assert!((a - b).abs() < 1e-12);
    }
}

fn fit_objective(w: &ComplexMatrix, q: TransformQ, x: &[f64]) -> f64 {
    let approx = FilterBank::from_structured(q, vec![x.to_vec()], vec![0.0], 1, 1.0).unwrap().to_dense();
    let BankFilters::Dense(a) = approx.filters else { unreachable!() };
    w.sub(&a[0]).unwrap().frobenius_norm_sqr()
}

#[test]
fn toeplitz_fit_attains_least_squares_optimum() {
    // Oracle: vectorized real least squares over the (Re, Im) entries, by SVD.
    let mut rng = stream(23, &[]);
    let q = TransformQ::Dft2(4);
    let qd = q.dense();
    let (k, m) = (q.output_dim(), q.input_dim());
    for _ in 0..10 {
        let a = random_matrix(&mut rng, m, m);
        let w = a.add(&a.adjoint()).unwrap().scale(0.5);
        let design = DMatrix::from_fn(2 * m * m, k, |row, j| {
            let (entry, part) = (row / 2, row % 2);
            let (r, c) = (entry / m, entry % m);
            let z = qd[(j, r)].conj() * qd[(j, c)];
            if part == 0 { z.re } else { z.im }
        });
        let target = DVector::from_fn(2 * m * m, |row, _| {
            let z = w[((row / 2) / m, (row / 2) % m)];
            if row % 2 == 0 { z.re } else { z.im }
        });
        let oracle: Vec<f64> = design.svd(true, true).solve(&target, 1e-12).unwrap().iter().copied().collect();
        let fit = fit_structured_weights(&w, q).unwrap();
        let (a, b) = (fit_objective(&w, q, &fit), fit_objective(&w, q, &oracle));
        assert!((a - b).abs() < 1e-8 * b.max(1.0), "{a} vs {b}");
    }
}

#[test]
fn gridded_single_and_identical_filters() {
    let mut rng = stream(24, &[]);
    let c = single_path(6, 0.3);
    let w = genie_filter(&c, 0.5).unwrap();
    let bank = FilterBank::from_dense(vec![w.clone()], vec![-1.0], 2, 0.5).unwrap();
    let batch = random_batch(&mut rng, TransformQ::Identity(6), 2, 0.5);
    let out = gridded_estimate(&bank, &batch).unwrap();
    assert!(out.max_abs_diff(&w.matmul(&batch.y).unwrap()) < 1e-12);
    let same = FilterBank::from_dense(vec![w.clone(); 4], vec![-1.0, -5.0, 2.0, 0.0], 2, 0.5).unwrap();
    assert!(gridded_estimate(&same, &batch).unwrap().max_abs_diff(&w.matmul(&batch.y).unwrap()) < 1e-12);
    let wrong_t = random_batch(&mut rng, TransformQ::Identity(6), 3, 0.5);
    assert!(matches!(gridded_estimate(&bank, &wrong_t), Err(crate::Error::BankMismatch(_))));
}

#[test]
fn gridded_matches_direct_formula() {
    // Direct evaluation without max subtraction; logits stay small here.
    let mut rng = stream(25, &[]);
    for _ in 0..20 {
        let filters: Vec<ComplexMatrix> = (0..3)
            .map(|i| genie_filter(&single_path(2, -1.0 + i as f64), rng.random_range(0.3..2.0)).unwrap())
            .collect();
        let offsets: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..0.0)).collect();
        let bank = FilterBank::from_dense(filters.clone(), offsets.clone(), 1, 0.8).unwrap();
        let batch = random_batch(&mut rng, TransformQ::Identity(2), 1, 0.8);
        let y = batch.y.column(0);
        let mut num = ComplexMatrix::zeros(2, 2);
        let mut den = 0.0;
        for (w, b) in filters.iter().zip(&offsets) {
            let wy = w.matvec(&y).unwrap();
            let tr: f64 = y.iter().zip(&wy).map(|(a, c)| (a.conj() * c).re).sum::<f64>() / 0.8;
            let e = (tr + b).exp();
            num.axpy(e / 3.0, w);
            den += e / 3.0;
        }
        let oracle = num.scale(1.0 / den).matmul(&batch.y).unwrap();
        let out = gridded_estimate(&bank, &batch).unwrap();
        assert!(rel_err(&out, &oracle) < 1e-10);
    }
}

#[test]
fn structured_equals_gridded_on_decomposable_banks() {
    let mut rng = stream(26, &[]);
    for q in [TransformQ::Dft(8), TransformQ::Dft2(8)] {
        for t in [1, 2] {
            let bank = random_structured_bank(&mut rng, q, 12, t, 0.7);
            let dense = bank.to_dense();
            let batch = random_batch(&mut rng, q, t, 0.7);
            let se = structured_estimate(&bank, &batch).unwrap();
            let ge = gridded_estimate(&dense, &batch.with_transform(TransformQ::Identity(8)).unwrap()).unwrap();
            assert!(rel_err(&se, &ge) < 1e-10);
        }
    }
}

#[test]
fn structured_with_equal_columns_is_fixed_filter() {
    let mut rng = stream(27, &[]);
    let q = TransformQ::Dft2(8);
    let w: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..1.0)).collect();
    let bank = FilterBank::from_structured(q, vec![w.clone(); 5], vec![0.0, -1.0, -2.0, 1.0, 3.0], 2, 1.0).unwrap();
    let batch = random_batch(&mut rng, q, 2, 1.0);
    let out = structured_estimate(&bank, &batch).unwrap();
    assert!(out.max_abs_diff(&apply_diagonal(&q, &w, &batch.y).unwrap()) < 1e-12);
    let p = structured_weights(&bank, &batch.c_hat).unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn structured_matches_explicit_dense_pipeline() {
    let mut rng = stream(28, &[]);
    let q = TransformQ::Dft2(8);
    let qd = q.dense();
    for _ in 0..10 {
        let bank = random_structured_bank(&mut rng, q, 9, 2, 0.6);
        let batch = random_batch(&mut rng, q, 2, 0.6);
        let BankFilters::Structured(ws) = &bank.filters else { unreachable!() };
        // Explicit W_i = Q^H diag(w_i) Q and the trace form of the logits.
        let dense: Vec<ComplexMatrix> = ws
            .iter()
            .map(|w| qd.adjoint().matmul(&ComplexMatrix::from_diag(w).matmul(&qd).unwrap()).unwrap())
            .collect();
        let chat = batch.y.matmul(&batch.y.adjoint()).unwrap().scale(1.0 / 0.6);
        let z: Vec<f64> = dense.iter().zip(&bank.offsets).map(|(w, b)| w.matmul(&chat).unwrap().trace().re + b).collect();
        let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - zmax).exp()).collect();
        let s: f64 = e.iter().sum();
        let mut wsum = ComplexMatrix::zeros(8, 8);
        for (w, ei) in dense.iter().zip(&e) {
            wsum.axpy(ei / s, w);
        }
        let oracle = wsum.matmul(&batch.y).unwrap();
        assert!(rel_err(&structured_estimate(&bank, &batch).unwrap(), &oracle) < 1e-10);
    }
}

#[test]
fn bank_of_one_and_bank_size() {
    let mut rng = stream(29, &[]);
    let prior = ScenarioKind::SinglePath { angular_spread: 2.0 * DEG };
    let bank = build_filter_bank(&prior, Geometry::Ula(8), 1, 1, 1.0, BankMode::Dense, DEFAULT_QUADRATURE_POINTS, &mut rng).unwrap();
    let BankFilters::Dense(ws) = &bank.filters else { unreachable!() };
    for _ in 0..5 {
        let batch = random_batch(&mut rng, TransformQ::Identity(8), 1, 1.0);
        assert!(gridded_estimate(&bank, &batch).unwrap().max_abs_diff(&ws[0].matmul(&batch.y).unwrap()) < 1e-13);
    }
    let big = build_filter_bank(&prior, Geometry::Ula(8), 128, 1, 1.0, BankMode::Dense, DEFAULT_QUADRATURE_POINTS, &mut rng).unwrap();
    let BankFilters::Dense(ws) = &big.filters else { unreachable!() };
    assert_eq!(ws.len(), 128);
    for w in ws {
        assert!(w.is_hermitian(1e-12));
        let e = hermitian_eig(w).unwrap();
        assert!(e.values.iter().all(|&g| g > -1e-12 && g < 1.0));
    }
}

#[test]
fn bank_is_deterministic() {
    let prior = ScenarioKind::three_path(5.0 * DEG);
    let build = |mode| {
        build_filter_bank(&prior, Geometry::Ula(8), 16, 2, 0.5, mode, DEFAULT_QUADRATURE_POINTS, &mut stream(5, &[2, 7])).unwrap()
    };
    assert_eq!(build(BankMode::Dense), build(BankMode::Dense));
    let q = BankMode::Structured(TransformQ::Dft2(8));
    assert_eq!(build(q), build(q));
}

#[test]
fn structured_basis_matches_direct_fit() {
    let mut rng = stream(30, &[]);
    let prior = ScenarioKind::SinglePath { angular_spread: 2.0 * DEG };
    let cov = CovarianceBank::sample(&prior, Geometry::Ula(8), 6, DEFAULT_QUADRATURE_POINTS, &mut rng).unwrap();
    let dense = cov.dense_bank(0.4, 3).unwrap();
    let BankFilters::Dense(ws) = &dense.filters else { unreachable!() };
    for q in [TransformQ::Dft(8), TransformQ::Dft2(8)] {
        let bank = cov.structured_basis(q).unwrap().bank(0.4, 3).unwrap();
        let BankFilters::Structured(fits) = &bank.filters else { unreachable!() };
        for (w, fit) in ws.iter().zip(fits) {
            let direct = fit_structured_weights(w, q).unwrap();
            let d = direct.iter().zip(fit).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(d < 1e-10, "{q}: {d}");
        }
        assert_eq!(bank.offsets, dense.offsets);
    }
}

fn circulant_of(w0: &[f64]) -> ComplexMatrix {
    // F^H diag(sqrt(K) F w0) F with the unitary DFT.
    let k = w0.len();
    let f = dft_matrix(k);
    let x: Vec<Complex64> = w0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let lambda: Vec<Complex64> = f.matvec(&x).unwrap().iter().map(|z| z * (k as f64).sqrt()).collect();
    let d = ComplexMatrix::from_fn(k, k, |r, c| if r == c { lambda[r] } else { Complex64::new(0.0, 0.0) });
    f.adjoint().matmul(&d.matmul(&f).unwrap()).unwrap()
}

#[test]
fn fe_bank_is_the_circulant_embedding() {
    let mut rng = stream(31, &[]);
    let w0: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..1.0)).collect();
    let kernel = FeKernel::from_parts(w0.clone(), vec![-0.5; 8], 1, 1.0).unwrap();
    let bank = kernel.to_structured_bank().unwrap();
    let BankFilters::Structured(cols) = &bank.filters else { unreachable!() };
    let a = circulant_of(&w0);
    for (i, col) in cols.iter().enumerate() {
        for (j, v) in col.iter().enumerate() {
            assert!((a[(j, i)] - Complex64::new(*v, 0.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn fast_equals_structured_with_circulant_bank() {
    let mut rng = stream(32, &[]);
    for m in [4, 8, 16] {
        for _ in 0..10 {
            let w0: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..0.0)).collect();
            let kernel = FeKernel::from_parts(w0, b, 2, 0.9).unwrap();
            let batch = random_batch(&mut rng, TransformQ::Dft(m), 2, 0.9);
            let fe = fast_estimate(&kernel, &batch).unwrap();
            let se = structured_estimate(&kernel.to_structured_bank().unwrap(), &batch).unwrap();
            assert!(rel_err(&fe, &se) < 1e-10);
        }
    }
}

#[test]
fn fast_with_delta_kernel() {
    let mut rng = stream(33, &[]);
    let c = 0.7;
    let mut w0 = vec![0.0; 8];
    w0[0] = c;
    let b: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..0.0)).collect();
    let kernel = FeKernel::from_parts(w0, b.clone(), 1, 1.0).unwrap();
    let batch = random_batch(&mut rng, TransformQ::Dft(8), 1, 1.0);
    let z: Vec<f64> = batch.c_hat.iter().zip(&b).map(|(x, bb)| c * x + bb).collect();
    let expect: Vec<f64> = crate::numerics::softmax(&z).iter().map(|p| c * p).collect();
    let got = fast_filter(&kernel, &batch.c_hat).unwrap();
    for (a, e) in got.iter().zip(&expect) {
        assert!((a - e).abs() < 1e-12);
    }
}

#[test]
fn fe_kernel_range_and_noise_limit() {
    let k = build_fe_kernel(2.0 * DEG, 16, 1, 1.0).unwrap();
    assert!(k.w0.iter().all(|&v| (0.0..1.0).contains(&v)));
    assert!(k.b.iter().all(|&v| v == k.b[0] && v.is_finite()));
    let quiet = build_fe_kernel(2.0 * DEG, 16, 1, 1e14).unwrap();
    assert!(quiet.w0.iter().all(|&v| v < 1e-10));
    for (j, v) in k.w0_reversed.iter().enumerate() {
        assert_eq!(*v, k.w0[(16 - j) % 16]);
    }
}

#[test]
fn fe_kernel_shape_matches_direct_synthesis() {
    use std::f64::consts::PI;
    let m = 64;
    let s = 2.0 * DEG;
    let sigma2 = 1.0;
    let k = build_fe_kernel(s, m, 1, sigma2).unwrap();
    let peak = k.w0.iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    assert_eq!(peak, 0);
    // Direct transformed spectrum of a zero-centered Laplace path.
    let z = 2.0 * s * (1.0 - (-PI / s).exp());
    let g = |t: f64| (-(((t + PI).rem_euclid(2.0 * PI) - PI).abs()) / s).exp() / z;
    for j in 1..m / 2 {
        let u = 2.0 * PI * j as f64 / m as f64;
        let th = (u / PI).asin();
        let f = 2.0 * PI * (g(th) + g(PI - th)) / (PI * PI - u * u).sqrt();
        let w = f / (f + sigma2);
        assert!((k.w0[j] - w).abs() < 1e-6 * w.max(1e-12) + 1e-15, "{j}");
        assert!((k.w0[j] - k.w0[m - j]).abs() <= 0.1 * k.w0[j] + 1e-300);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn softmax_weights_form_a_distribution(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = stream(seed, &[]);
        let q = TransformQ::Dft2(4);
        let bank = random_structured_bank(&mut rng, q, n, 1, 0.3);
        let batch = random_batch(&mut rng, q, 1, 0.3);
        let p = structured_weights(&bank, &batch.c_hat).unwrap();
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let dense = bank.to_dense();
        let g = gridded_weights(&dense, &batch.sample_covariance()).unwrap();
        prop_assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
