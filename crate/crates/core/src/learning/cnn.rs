use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::ObservationBatch;
use crate::error::{Error, Result};
use crate::estimators::{apply_diagonal, FeKernel};
use crate::numerics::{circular_convolution, circular_correlation, softmax, ComplexMatrix, TransformQ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Softmax,
    Relu,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Softmax => "softmax",
            Activation::Relu => "relu",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(Activation::Softmax),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::InvalidArgument(format!("unknown activation `{other}`"))),
        }
    }
}

impl Activation {
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Activation::Softmax => softmax(z),
            Activation::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
        }
    }
}

/// Two-layer convolutional network `w = a2 * phi(a1 * c + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnParams {
    pub a1: Vec<f64>,
    pub b1: Vec<f64>,
    pub a2: Vec<f64>,
    pub b2: Vec<f64>,
    pub activation: Activation,
    pub transform: TransformQ,
}

/// Gradient with the layout of [`CnnParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct CnnGradient {
    pub a1: Vec<f64>,
    pub b1: Vec<f64>,
    pub a2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl CnnGradient {
    pub fn zeros(k: usize) -> Self {
        Self { a1: vec![0.0; k], b1: vec![0.0; k], a2: vec![0.0; k], b2: vec![0.0; k] }
    }

    pub fn flat(&self) -> Vec<f64> {
        [&self.a1[..], &self.b1, &self.a2, &self.b2].concat()
    }

    fn add_scaled(&mut self, s: f64, other: &CnnGradient) {
        for (dst, src) in [
            (&mut self.a1, &other.a1),
            (&mut self.b1, &other.b1),
            (&mut self.a2, &other.a2),
            (&mut self.b2, &other.b2),
        ] {
            dst.iter_mut().zip(src).for_each(|(d, v)| *d += s * v);
        }
    }
}

impl CnnParams {
    pub fn new(a1: Vec<f64>, b1: Vec<f64>, a2: Vec<f64>, b2: Vec<f64>, activation: Activation, transform: TransformQ) -> Result<Self> {
        let p = Self { a1, b1, a2, b2, activation, transform };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(activation: Activation, transform: TransformQ) -> Self {
        let k = transform.output_dim();
        Self { a1: vec![0.0; k], b1: vec![0.0; k], a2: vec![0.0; k], b2: vec![0.0; k], activation, transform }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.dim();
        for v in [&self.a1, &self.b1, &self.a2, &self.b2] {
            if v.len() != k {
                return Err(Error::DimensionMismatch { expected: k, actual: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("CNN parameters".into()));
            }
        }
        Ok(())
    }

    /// K.
    pub fn dim(&self) -> usize {
        self.transform.output_dim()
    }

    pub fn flat(&self) -> Vec<f64> {
        [&self.a1[..], &self.b1, &self.a2, &self.b2].concat()
    }

    pub fn set_flat(&mut self, x: &[f64]) {
        let k = self.dim();
        assert_eq!(x.len(), 4 * k, "flat parameter length");
        self.a1.copy_from_slice(&x[..k]);
        self.b1.copy_from_slice(&x[k..2 * k]);
        self.a2.copy_from_slice(&x[2 * k..3 * k]);
        self.b2.copy_from_slice(&x[3 * k..]);
    }
}

/// The FE as a softmax CNN: `a1 = w0~`, `b1 = b`, `a2 = w0`, `b2 = 0`.
pub fn init_from_fe(kernel: &FeKernel) -> CnnParams {
    CnnParams {
        a1: kernel.w0_reversed.clone(),
        b1: kernel.b.clone(),
        a2: kernel.w0.clone(),
        b2: vec![0.0; kernel.len()],
        activation: Activation::Softmax,
        transform: kernel.transform,
    }
}

struct Forward {
    z: Vec<f64>,
    p: Vec<f64>,
    w: Vec<f64>,
}

fn forward_full(params: &CnnParams, c_hat: &[f64]) -> Result<Forward> {
    if c_hat.len() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), actual: c_hat.len() });
    }
    let mut z = circular_convolution(&params.a1, c_hat)?;
    z.iter_mut().zip(&params.b1).for_each(|(v, b)| *v += b);
    let p = params.activation.apply(&z);
    let mut w = circular_convolution(&params.a2, &p)?;
    w.iter_mut().zip(&params.b2).for_each(|(v, b)| *v += b);
    Ok(Forward { z, p, w })
}

pub fn cnn_forward(params: &CnnParams, c_hat: &[f64]) -> Result<Vec<f64>> {
    Ok(forward_full(params, c_hat)?.w)
}

/// Hidden-layer input `a1 * c + b1`.
pub fn hidden_preactivation(params: &CnnParams, c_hat: &[f64]) -> Result<Vec<f64>> {
    Ok(forward_full(params, c_hat)?.z)
}

fn check_batch(params: &CnnParams, batch: &ObservationBatch) -> Result<()> {
    if batch.transform != params.transform {
        return Err(Error::BankMismatch(format!("batch statistic uses {}, CNN uses {}", batch.transform, params.transform)));
    }
    Ok(())
}

pub fn cnn_estimate(params: &CnnParams, batch: &ObservationBatch) -> Result<ComplexMatrix> {
    check_batch(params, batch)?;
    apply_diagonal(&params.transform, &cnn_forward(params, &batch.c_hat)?, &batch.y)
}

/// Loss `||H - Q^H diag(w) Q Y||_F^2` of one batch and its gradient.
fn sample_loss_and_gradient(params: &CnnParams, batch: &ObservationBatch) -> Result<(f64, CnnGradient)> {
    check_batch(params, batch)?;
    let q = &params.transform;
    let k = params.dim();
    let fw = forward_full(params, &batch.c_hat)?;

    // dL/dw_k = -2 Re sum_t (Q y_t)_k conj((Q e_t)_k) with e_t = h_t - h^_t.
    let mut loss = 0.0;
    let mut g = vec![0.0; k];
    for t in 0..batch.snapshots() {
        let qy = q.forward(&batch.y.column(t))?;
        let filtered: Vec<Complex64> = qy.iter().zip(&fw.w).map(|(z, w)| z * w).collect();
        let est = q.adjoint(&filtered)?;
        let err: Vec<Complex64> = batch.h.column(t).iter().zip(&est).map(|(h, e)| h - e).collect();
        loss += err.iter().map(|e| e.norm_sqr()).sum::<f64>();
        let qe = q.forward(&err)?;
        for (gk, (a, b)) in g.iter_mut().zip(qy.iter().zip(&qe)) {
            *gk -= 2.0 * (a * b.conj()).re;
        }
    }

    let g_a2 = circular_correlation(&g, &fw.p)?;
    let g_p = circular_correlation(&g, &params.a2)?;
    let g_z: Vec<f64> = match params.activation {
        Activation::Softmax => {
            let inner: f64 = fw.p.iter().zip(&g_p).map(|(p, gp)| p * gp).sum();
            fw.p.iter().zip(&g_p).map(|(p, gp)| p * (gp - inner)).collect()
        }
        Activation::Relu => fw.z.iter().zip(&g_p).map(|(&z, &gp)| if z > 0.0 { gp } else { 0.0 }).collect(),
    };
    let g_a1 = circular_correlation(&g_z, &batch.c_hat)?;
    Ok((loss, CnnGradient { a1: g_a1, b1: g_z, a2: g_a2, b2: g }))
}

/// Mean loss over the minibatch and its exact gradient.
pub fn loss_and_gradient(params: &CnnParams, minibatch: &[ObservationBatch]) -> Result<(f64, CnnGradient)> {
    use rayon::prelude::*;
    if minibatch.is_empty() {
        return Err(Error::InvalidArgument("empty minibatch".into()));
    }
    // Per-sample results are collected in order and reduced sequentially.
    let parts = minibatch
        .par_iter()
        .map(|b| sample_loss_and_gradient(params, b))
        .collect::<Result<Vec<_>>>()?;
    let s = 1.0 / minibatch.len() as f64;
    let mut loss = 0.0;
    let mut grad = CnnGradient::zeros(params.dim());
    for (l, g) in &parts {
        loss += s * l;
        grad.add_scaled(s, g);
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("minibatch loss {loss}")));
    }
    Ok((loss, grad))
}

/// Mean normalized MSE `||H - H^||_F^2 / (M T)` over `batches`.
pub fn cnn_mse(params: &CnnParams, batches: &[ObservationBatch]) -> Result<f64> {
    use rayon::prelude::*;
    let errs = batches
        .par_iter()
        .map(|b| {
            let est = cnn_estimate(params, b)?;
            Ok(est.sub(&b.h)?.frobenius_norm_sqr() / (b.antennas() * b.snapshots()) as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errs.iter().sum::<f64>() / errs.len().max(1) as f64)
}
