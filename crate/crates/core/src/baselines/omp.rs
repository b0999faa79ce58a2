use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::ObservationBatch;
use crate::error::{Error, Result};
use crate::metrics::last_snapshot_rate;
use crate::numerics::ComplexMatrix;

/// Default largest sparsity searched by the genie.
pub const DEFAULT_K_MAX: usize = 16;

/// Oversampled DFT frame: column `q` is `exp(i 2 pi n q / (ovs M)) / sqrt(M)`,
/// the normalized steering vector for `pi sin(theta) = 2 pi q / (ovs M)`.
pub fn build_dictionary(m: usize, oversampling: usize) -> Result<ComplexMatrix> {
    if oversampling == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!("invalid dictionary M={m} oversampling={oversampling}")));
    }
    let n = oversampling * m;
    let s = 1.0 / (m as f64).sqrt();
    Ok(ComplexMatrix::from_fn(m, n, |r, q| {
        Complex64::from_polar(s, 2.0 * PI * ((r * q) % n) as f64 / n as f64)
    }))
}

/// Row-sparse least-squares approximation `Y ~ D_S X`.
#[derive(Debug, Clone)]
pub struct SparseApprox {
    pub support: Vec<usize>,
    /// `|S| x T`.
    pub coefficients: ComplexMatrix,
    pub k: usize,
    /// `||R||_F` after each selection, starting with `||Y||_F`.
    pub residual_norms: Vec<f64>,
}

impl SparseApprox {
    pub fn reconstruct(&self, dictionary: &ComplexMatrix) -> ComplexMatrix {
        let m = dictionary.rows();
        let t = self.coefficients.cols();
        let mut out = ComplexMatrix::zeros(m, t);
        for (i, &j) in self.support.iter().enumerate() {
            for r in 0..m {
                let d = dictionary[(r, j)];
                for c in 0..t {
                    out[(r, c)] += d * self.coefficients[(i, c)];
                }
            }
        }
        out
    }
}

/// Greedy path with an incrementally orthonormalized support basis.
struct OmpPath {
    support: Vec<usize>,
    basis: Vec<Vec<Complex64>>,
    /// Upper-triangular factor, `r[i][j]` for `i <= j`.
    r: Vec<Vec<Complex64>>,
    /// Projections `q_i^H Y` per basis vector.
    proj: Vec<Vec<Complex64>>,
    residual_norms: Vec<f64>,
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn omp_path(y: &ComplexMatrix, d: &ComplexMatrix, k_max: usize) -> Result<OmpPath> {
    let (m, t) = (y.rows(), y.cols());
    if d.rows() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: d.rows() });
    }
    if k_max == 0 || k_max > m {
        return Err(Error::InvalidArgument(format!("sparsity must lie in 1..={m}, got {k_max}")));
    }
    let atoms = d.columns();
    let mut residual = y.columns();
    let y_cols = y.columns();
    let norm0 = y.frobenius_norm();
    let mut path = OmpPath {
        support: Vec::new(),
        basis: Vec::new(),
        r: Vec::new(),
        proj: Vec::new(),
        residual_norms: vec![norm0],
    };
    let dh = d.adjoint();
    for _ in 0..k_max {
        // Atom maximizing sum_t |d^H r_t|^2 among those not yet selected.
        let mut best = None;
        let mut best_val = -1.0;
        for (j, row) in (0..dh.rows()).map(|j| (j, dh.row(j))) {
            if path.support.contains(&j) {
                continue;
            }
            let v: f64 = residual.iter().map(|r| row.iter().zip(r).map(|(a, b)| a * b).sum::<Complex64>().norm_sqr()).sum();
            if v > best_val {
                best_val = v;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        if best_val <= (1e-28 * norm0 * norm0).max(f64::MIN_POSITIVE) {
            break;
        }
        // Twice-repeated Gram-Schmidt against the current basis.
        let mut v = atoms[j].clone();
        let mut rcol = vec![Complex64::new(0.0, 0.0); path.basis.len() + 1];
        for _ in 0..2 {
            for (i, q) in path.basis.iter().enumerate() {
                let c = inner(q, &v);
                rcol[i] += c;
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nv <= 1e-10 {
            return Err(Error::InvalidArgument(format!("atom {j} is dependent on the current support")));
        }
        v.iter_mut().for_each(|z| *z /= nv);
        rcol[path.basis.len()] = Complex64::new(nv, 0.0);
        let p: Vec<Complex64> = y_cols.iter().map(|yc| inner(&v, yc)).collect();
        for (r, &c) in residual.iter_mut().zip(&p) {
            r.iter_mut().zip(&v).for_each(|(a, b)| *a -= c * b);
        }
        path.support.push(j);
        path.basis.push(v);
        path.r.push(rcol);
        path.proj.push(p);
        let rn = residual.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        path.residual_norms.push(rn);
    }
    let _ = t;
    Ok(path)
}

impl OmpPath {
    /// `Q_k Q_k^H Y`, the least-squares fit on the first `k` atoms.
    fn estimate(&self, k: usize, m: usize, t: usize) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(m, t);
        for (q, p) in self.basis.iter().zip(&self.proj).take(k) {
            for r in 0..m {
                for c in 0..t {
                    out[(r, c)] += q[r] * p[c];
                }
            }
        }
        out
    }

    fn coefficients(&self, k: usize, t: usize) -> ComplexMatrix {
        // Back substitution in R X = Q^H Y.
        let mut x = ComplexMatrix::zeros(k, t);
        for c in 0..t {
            for i in (0..k).rev() {
                let mut acc = self.proj[i][c];
                for j in i + 1..k {
                    acc -= self.r[j][i] * x[(j, c)];
                }
                x[(i, c)] = acc / self.r[i][i];
            }
        }
        x
    }
}

/// Simultaneous (multiple-measurement) OMP with sparsity `k`.
pub fn omp_mmv(y: &ComplexMatrix, d: &ComplexMatrix, k: usize) -> Result<SparseApprox> {
    let path = omp_path(y, d, k)?;
    let kk = path.support.len();
    Ok(SparseApprox {
        coefficients: path.coefficients(kk, y.cols()),
        support: path.support,
        k,
        residual_norms: path.residual_norms,
    })
}

/// Criterion the genie uses to pick the sparsity level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenieMetric {
    Mse,
    Rate,
}

/// OMP estimate with the sparsity in `1..=k_max` chosen using the true channels.
pub fn genie_omp_estimate(batch: &ObservationBatch, d: &ComplexMatrix, k_max: usize, metric: GenieMetric) -> Result<ComplexMatrix> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let (m, t) = (batch.antennas(), batch.snapshots());
    let path = omp_path(&batch.y, d, k_max.min(m))?;
    let mut best: Option<(f64, ComplexMatrix)> = None;
    for k in 1..=path.support.len().max(1) {
        let est = path.estimate(k, m, t);
        let score = match metric {
            Metric::Mse => est.sub(&batch.h)?.frobenius_norm_sqr(),
            Metric::Rate => -last_snapshot_rate(&batch.h, &est, batch.sigma2)?,
        };
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, est));
        }
    }
    Ok(best.expect("at least one candidate").1)
}

use GenieMetric as Metric;
