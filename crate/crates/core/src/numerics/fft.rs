//! Unitary DFT transforms and FFT-backed circular convolution.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{matrix::ComplexMatrix, CONV_RESIDUE_TOL};
use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Unnormalized forward FFT in place: `X_k = sum_m x_m e^{-i 2 pi k m / n}`.
pub fn fft_in_place(buf: &mut [Complex64]) {
    if buf.len() > 1 {
        plan(buf.len(), false).process(buf);
    }
}

/// Unnormalized inverse FFT in place: `x_m = sum_k X_k e^{+i 2 pi k m / n}`.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    if buf.len() > 1 {
        plan(buf.len(), true).process(buf);
    }
}

/// Unitary DFT matrix, `[F]_{mk} = exp(-i 2 pi m k / M) / sqrt(M)`.
pub fn dft_matrix(m: usize) -> ComplexMatrix {
    let s = 1.0 / (m as f64).sqrt();
    ComplexMatrix::from_fn(m, m, |r, c| twiddle(r * c, m) * s)
}

fn twiddle(k: usize, n: usize) -> Complex64 {
    let phase = -2.0 * PI * ((k % n) as f64) / n as f64;
    Complex64::from_polar(1.0, phase)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Adjoint,
}

/// The common transform `Q` (K x M, orthonormal columns) of the structured
/// estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformQ {
    Identity(usize),
    /// Unitary M-point DFT (circulant structure).
    Dft(usize),
    /// First M columns of the unitary 2M-point DFT (Toeplitz structure).
    Dft2(usize),
    /// `F_{M_H} (x) F_{M_V}` for a rectangular array; antenna index `h * M_V + v`.
    KronDft { horizontal: usize, vertical: usize },
}

impl TransformQ {
    /// Input dimension M.
    pub fn input_dim(&self) -> usize {
        match *self {
            TransformQ::Identity(m) | TransformQ::Dft(m) | TransformQ::Dft2(m) => m,
            TransformQ::KronDft { horizontal, vertical } => horizontal * vertical,
        }
    }

    /// Output dimension K.
    pub fn output_dim(&self) -> usize {
        match *self {
            TransformQ::Dft2(m) => 2 * m,
            _ => self.input_dim(),
        }
    }

    /// Same kind of transform resized for `m` antennas (rectangular arrays
    /// keep their aspect only when `m` factors accordingly).
    pub fn with_antennas(&self, m: usize) -> Self {
        match *self {
            TransformQ::Identity(_) => TransformQ::Identity(m),
            TransformQ::Dft(_) => TransformQ::Dft(m),
            TransformQ::Dft2(_) => TransformQ::Dft2(m),
            TransformQ::KronDft { vertical, .. } => {
                TransformQ::KronDft { horizontal: m.div_ceil(vertical), vertical }
            }
        }
    }

    /// `true` when `Q Q^H = I` as well as `Q^H Q = I`.
    pub fn is_unitary(&self) -> bool {
        !matches!(self, TransformQ::Dft2(_))
    }

    pub fn kind_name(&self) -> String {
        match *self {
            TransformQ::Identity(_) => "identity".into(),
            TransformQ::Dft(_) => "dft".into(),
            TransformQ::Dft2(_) => "dft2".into(),
            TransformQ::KronDft { horizontal, vertical } => format!("kron_dft:{horizontal}x{vertical}"),
        }
    }

    /// Parses a kind name for an `m`-antenna array.
    pub fn parse(kind: &str, m: usize) -> Result<Self> {
        match kind {
            "identity" => Ok(TransformQ::Identity(m)),
            "dft" => Ok(TransformQ::Dft(m)),
            "dft2" => Ok(TransformQ::Dft2(m)),
            other => {
                let dims = other
                    .strip_prefix("kron_dft:")
                    .and_then(|d| d.split_once('x'))
                    .and_then(|(h, v)| Some((h.parse::<usize>().ok()?, v.parse::<usize>().ok()?)));
                match dims {
                    Some((horizontal, vertical)) if horizontal * vertical == m => {
                        Ok(TransformQ::KronDft { horizontal, vertical })
                    }
                    _ => Err(Error::InvalidArgument(format!("unknown transform kind `{other}` for M={m}"))),
                }
            }
        }
    }

    /// Explicit K x M matrix, built entry by entry from the defining formula.
    pub fn dense(&self) -> ComplexMatrix {
        match *self {
            TransformQ::Identity(m) => ComplexMatrix::identity(m),
            TransformQ::Dft(m) => dft_matrix(m),
            TransformQ::Dft2(m) => {
                let s = 1.0 / ((2 * m) as f64).sqrt();
                ComplexMatrix::from_fn(2 * m, m, |k, n| twiddle(k * n, 2 * m) * s)
            }
            TransformQ::KronDft { horizontal, vertical } => {
                let fh = dft_matrix(horizontal);
                let fv = dft_matrix(vertical);
                let m = horizontal * vertical;
                ComplexMatrix::from_fn(m, m, |r, c| {
                    fh[(r / vertical, c / vertical)] * fv[(r % vertical, c % vertical)]
                })
            }
        }
    }

    pub fn forward(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply(x, Direction::Forward)
    }

    pub fn adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply(y, Direction::Adjoint)
    }

    /// `Q x` (forward) or `Q^H x` (adjoint) in O(K log K).
    pub fn apply(&self, x: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
        let expected = match direction {
            Direction::Forward => self.input_dim(),
            Direction::Adjoint => self.output_dim(),
        };
        if x.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: x.len() });
        }
        Ok(match (*self, direction) {
            (TransformQ::Identity(_), _) => x.to_vec(),
            (TransformQ::Dft(m), dir) => {
                let mut buf = x.to_vec();
                match dir {
                    Direction::Forward => fft_in_place(&mut buf),
                    Direction::Adjoint => ifft_in_place(&mut buf),
                }
                let s = 1.0 / (m as f64).sqrt();
                buf.iter_mut().for_each(|z| *z *= s);
                buf
            }
            (TransformQ::Dft2(m), Direction::Forward) => {
                let mut buf = vec![Complex64::new(0.0, 0.0); 2 * m];
                buf[..m].copy_from_slice(x);
                fft_in_place(&mut buf);
                let s = 1.0 / ((2 * m) as f64).sqrt();
                buf.iter_mut().for_each(|z| *z *= s);
                buf
            }
            (TransformQ::Dft2(m), Direction::Adjoint) => {
                let mut buf = x.to_vec();
                ifft_in_place(&mut buf);
                let s = 1.0 / ((2 * m) as f64).sqrt();
                buf.truncate(m);
                buf.iter_mut().for_each(|z| *z *= s);
                buf
            }
            (TransformQ::KronDft { horizontal, vertical }, dir) => {
                let mut buf = x.to_vec();
                let step = |b: &mut [Complex64]| match dir {
                    Direction::Forward => fft_in_place(b),
                    Direction::Adjoint => ifft_in_place(b),
                };
                for row in buf.chunks_mut(vertical) {
                    step(row);
                }
                let mut col = vec![Complex64::new(0.0, 0.0); horizontal];
                for v in 0..vertical {
                    for h in 0..horizontal {
                        col[h] = buf[h * vertical + v];
                    }
                    step(&mut col);
                    for h in 0..horizontal {
                        buf[h * vertical + v] = col[h];
                    }
                }
                let s = 1.0 / ((horizontal * vertical) as f64).sqrt();
                buf.iter_mut().for_each(|z| *z *= s);
                buf
            }
        })
    }

    /// Applies `Q^H diag(w) Q` to `x`.
    pub fn diagonal_filter(&self, w: &[f64], x: &[Complex64]) -> Result<Vec<Complex64>> {
        if w.len() != self.output_dim() {
            return Err(Error::DimensionMismatch { expected: self.output_dim(), actual: w.len() });
        }
        let mut qx = self.forward(x)?;
        for (z, &g) in qx.iter_mut().zip(w) {
            *z *= g;
        }
        self.adjoint(&qx)
    }
}

impl fmt::Display for TransformQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.kind_name())
    }
}

/// Convenience wrapper around [`TransformQ::apply`].
pub fn apply_transform(q: &TransformQ, x: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
    q.apply(x, direction)
}

fn spectra(a: &[f64], x: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut fa: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fx: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut fa);
    fft_in_place(&mut fx);
    (fa, fx)
}

fn finish_real(mut buf: Vec<Complex64>, scale_ref: f64) -> Vec<f64> {
    ifft_in_place(&mut buf);
    let n = buf.len() as f64;
    let residue = buf.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / n;
    debug_assert!(
        residue <= CONV_RESIDUE_TOL * scale_ref.max(f64::MIN_POSITIVE),
        "imaginary residue {residue:e} after real convolution"
    );
    buf.into_iter().map(|z| z.re / n).collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `[a * x]_j = sum_k a_k x_{(j - k) mod K}`, via FFT.
pub fn circular_convolution(a: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if a.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: x.len() });
    }
    let (fa, fx) = spectra(a, x);
    let prod = fa.iter().zip(&fx).map(|(p, q)| p * q).collect();
    Ok(finish_real(prod, norm2(a) * norm2(x)))
}

/// `[corr(g, x)]_k = sum_j g_j x_{(j - k) mod K}`; the adjoint of `a -> a * x`
/// evaluated at `g`.
pub fn circular_correlation(g: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if g.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: g.len(), actual: x.len() });
    }
    let (fg, fx) = spectra(g, x);
    let prod = fg.iter().zip(&fx).map(|(p, q)| p * q.conj()).collect();
    Ok(finish_real(prod, norm2(g) * norm2(x)))
}

/// `x~_j = x_{(-j) mod K}`.
pub fn reversed(x: &[f64]) -> Vec<f64> {
    let k = x.len();
    (0..k).map(|j| x[(k - j) % k]).collect()
}
