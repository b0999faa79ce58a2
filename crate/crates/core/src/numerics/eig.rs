use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{matrix::ComplexMatrix, HERMITIAN_TOL};
use crate::error::{Error, Result};

/// Eigendecomposition `X = V diag(values) V^H` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are the matching unit eigenvectors.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V diag(f(lambda)) V^H`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let g: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in r..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    if g[k] != 0.0 {
                        acc += v[(r, k)] * v[(c, k)].conj() * g[k];
                    }
                }
                out[(r, c)] = acc;
                out[(c, r)] = acc.conj();
            }
            out[(r, r)] = Complex64::new(out[(r, r)].re, 0.0);
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Eigen-decomposes a Hermitian matrix; eigenvalues come back ascending.
pub fn hermitian_eig(x: &ComplexMatrix) -> Result<HermitianEigen> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch { expected: x.rows(), actual: x.cols() });
    }
    let asym = x.hermitian_asymmetry();
    if asym > HERMITIAN_TOL * x.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let n = x.rows();
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: ComplexMatrix::zeros(0, 0) });
    }
    let h = x.hermitian_part();
    let dm = DMatrix::from_fn(n, n, |r, c| h[(r, c)]);
    let eig = nalgebra::SymmetricEigen::try_new(dm, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("QR iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}
