use num_complex::Complex64;
use rand::Rng;

use super::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, HermitianEigen, TransformQ};
use crate::rng::complex_normal;

/// `T` noisy snapshots `Y = H + Z` of channels sharing one covariance, with
/// the transform-domain statistic `c_hat` for a chosen `Q`.
#[derive(Debug, Clone)]
pub struct ObservationBatch {
    /// M x T true channels.
    pub h: ComplexMatrix,
    /// M x T observations.
    pub y: ComplexMatrix,
    pub sigma2: f64,
    pub transform: TransformQ,
    /// `(1/sigma^2) sum_t |Q y_t|^2`.
    pub c_hat: Vec<f64>,
}

impl ObservationBatch {
    pub fn new(h: ComplexMatrix, y: ComplexMatrix, sigma2: f64, transform: TransformQ) -> Result<Self> {
        if (h.rows(), h.cols()) != (y.rows(), y.cols()) {
            return Err(Error::DimensionMismatch { expected: h.rows() * h.cols(), actual: y.rows() * y.cols() });
        }
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
        }
        let c_hat = transform_statistic(&y, sigma2, &transform)?;
        Ok(Self { h, y, sigma2, transform, c_hat })
    }

    pub fn antennas(&self) -> usize {
        self.y.rows()
    }

    pub fn snapshots(&self) -> usize {
        self.y.cols()
    }

    /// Scaled sample covariance `(1/sigma^2) Y Y^H`, built on demand.
    pub fn sample_covariance(&self) -> ComplexMatrix {
        self.y.matmul(&self.y.adjoint()).expect("square").scale(1.0 / self.sigma2)
    }

    /// The same snapshots viewed through another transform.
    pub fn with_transform(&self, transform: TransformQ) -> Result<Self> {
        if transform == self.transform {
            return Ok(self.clone());
        }
        Ok(Self {
            c_hat: transform_statistic(&self.y, self.sigma2, &transform)?,
            transform,
            ..self.clone()
        })
    }

    /// Snapshot columns of `Y`.
    pub fn y_columns(&self) -> Vec<Vec<Complex64>> {
        self.y.columns()
    }
}

/// `(1/sigma^2) sum_t |Q y_t|^2` for the columns of `y`.
pub fn transform_statistic(y: &ComplexMatrix, sigma2: f64, q: &TransformQ) -> Result<Vec<f64>> {
    if y.rows() != q.input_dim() {
        return Err(Error::DimensionMismatch { expected: q.input_dim(), actual: y.rows() });
    }
    let mut c = vec![0.0; q.output_dim()];
    for col in y.columns() {
        for (acc, z) in c.iter_mut().zip(q.forward(&col)?) {
            *acc += z.norm_sqr();
        }
    }
    c.iter_mut().for_each(|v| *v /= sigma2);
    Ok(c)
}

/// `V diag(sqrt(max(lambda, 0)))`, the coloring matrix for channel draws.
#[derive(Debug, Clone)]
pub struct ChannelFactor {
    coloring: ComplexMatrix,
}

impl ChannelFactor {
    pub fn new(eig: &HermitianEigen) -> Self {
        let n = eig.values.len();
        let roots: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
        let coloring = ComplexMatrix::from_fn(n, n, |r, c| eig.vectors[(r, c)] * roots[c]);
        Self { coloring }
    }

    pub fn from_model(model: &CovarianceModel) -> Result<Self> {
        Ok(Self::new(&model.eigen()?))
    }

    pub fn antennas(&self) -> usize {
        self.coloring.rows()
    }

    pub fn draw_channel<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        let w: Vec<Complex64> = (0..self.antennas()).map(|_| complex_normal(rng)).collect();
        self.coloring.matvec(&w).expect("square coloring")
    }

    pub fn draw_batch<R: Rng + ?Sized>(
        &self,
        t: usize,
        sigma2: f64,
        transform: TransformQ,
        rng: &mut R,
    ) -> Result<ObservationBatch> {
        if t == 0 {
            return Err(Error::InvalidArgument("T must be at least 1".into()));
        }
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
        }
        let m = self.antennas();
        let sigma = sigma2.sqrt();
        let mut h = ComplexMatrix::zeros(m, t);
        let mut y = ComplexMatrix::zeros(m, t);
        for col in 0..t {
            let ht = self.draw_channel(rng);
            for (r, &v) in ht.iter().enumerate() {
                h[(r, col)] = v;
                y[(r, col)] = v + complex_normal(rng) * sigma;
            }
        }
        ObservationBatch::new(h, y, sigma2, transform)
    }
}

/// Draws `T` channels `h_t ~ CN(0, C)` and observations `y_t = h_t + sigma z_t`.
pub fn draw_batch<R: Rng + ?Sized>(
    model: &CovarianceModel,
    t: usize,
    sigma2: f64,
    transform: TransformQ,
    rng: &mut R,
) -> Result<ObservationBatch> {
    ChannelFactor::from_model(model)?.draw_batch(t, sigma2, transform, rng)
}

/// Recursive tracking update `alpha C_hat + beta y y^H`.
pub fn adaptive_update(c_hat: &ComplexMatrix, y: &[Complex64], alpha: f64, beta: f64) -> Result<ComplexMatrix> {
    if alpha < 0.0 || beta < 0.0 {
        return Err(Error::InvalidArgument(format!("alpha and beta must be nonnegative, got {alpha}, {beta}")));
    }
    if !c_hat.is_square() || c_hat.rows() != y.len() {
        return Err(Error::DimensionMismatch { expected: c_hat.rows(), actual: y.len() });
    }
    let n = y.len();
    let outer = ComplexMatrix::from_fn(n, n, |r, c| y[r] * y[c].conj());
    let mut out = c_hat.scale(alpha);
    out.axpy(beta, &outer);
    Ok(out)
}
