use nalgebra::DMatrix;
use rand::Rng;

use super::genie::{genie_filter_from_eigen, offset_from_eigenvalues, offset_of_filter, wiener_gain};
use crate::channel::{covariance, sample_scenario, CovarianceModel, Geometry, ObservationBatch, ScenarioKind};
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, HermitianEigen, TransformQ};

/// Ridge added to the normal matrix of the structured least-squares fit.
pub const NORMAL_RIDGE: f64 = 1e-12;
/// Eigen-directions of the normal matrix below this fraction of the largest
/// are treated as exact null space.
const NULL_SPACE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum BankFilters {
    Dense(Vec<ComplexMatrix>),
    /// Columns `w_i` of `A_SE`.
    Structured(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BankMode {
    Dense,
    Structured(TransformQ),
}

/// Candidate filters with their offsets `b_i`, tied to the snapshot count and
/// noise variance they were built for.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub transform: TransformQ,
    pub filters: BankFilters,
    pub offsets: Vec<f64>,
    pub snapshots: usize,
    pub sigma2: f64,
}

impl FilterBank {
    pub fn from_dense(filters: Vec<ComplexMatrix>, offsets: Vec<f64>, snapshots: usize, sigma2: f64) -> Result<Self> {
        let m = filters.first().map(|w| w.rows()).ok_or_else(|| Error::InvalidArgument("empty filter bank".into()))?;
        if offsets.len() != filters.len() {
            return Err(Error::DimensionMismatch { expected: filters.len(), actual: offsets.len() });
        }
        if let Some(w) = filters.iter().find(|w| w.rows() != m || w.cols() != m) {
            return Err(Error::DimensionMismatch { expected: m, actual: w.cols() });
        }
        let bank = Self { transform: TransformQ::Identity(m), filters: BankFilters::Dense(filters), offsets, snapshots, sigma2 };
        bank.validate()?;
        Ok(bank)
    }

    pub fn from_structured(
        transform: TransformQ,
        filters: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        snapshots: usize,
        sigma2: f64,
    ) -> Result<Self> {
        if filters.is_empty() {
            return Err(Error::InvalidArgument("empty filter bank".into()));
        }
        if offsets.len() != filters.len() {
            return Err(Error::DimensionMismatch { expected: filters.len(), actual: offsets.len() });
        }
        let k = transform.output_dim();
        if let Some(w) = filters.iter().find(|w| w.len() != k) {
            return Err(Error::DimensionMismatch { expected: k, actual: w.len() });
        }
        let bank = Self { transform, filters: BankFilters::Structured(filters), offsets, snapshots, sigma2 };
        bank.validate()?;
        Ok(bank)
    }

    fn validate(&self) -> Result<()> {
        if self.snapshots == 0 || !(self.sigma2 > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid bank T={} sigma2={}", self.snapshots, self.sigma2)));
        }
        if self.offsets.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("filter bank offsets".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn antennas(&self) -> usize {
        self.transform.input_dim()
    }

    /// Dense filters `Q^H diag(w_i) Q` (a dense bank is returned as is).
    pub fn to_dense(&self) -> FilterBank {
        match &self.filters {
            BankFilters::Dense(_) => self.clone(),
            BankFilters::Structured(ws) => {
                let q = self.transform.dense();
                let qh = q.adjoint();
                let dense = ws
                    .iter()
                    .map(|w| {
                        let mut dq = q.clone();
                        for r in 0..dq.rows() {
                            for c in 0..dq.cols() {
                                dq[(r, c)] *= w[r];
                            }
                        }
                        qh.matmul(&dq).expect("conformant").hermitian_part()
                    })
                    .collect();
                FilterBank {
                    transform: TransformQ::Identity(self.antennas()),
                    filters: BankFilters::Dense(dense),
                    offsets: self.offsets.clone(),
                    snapshots: self.snapshots,
                    sigma2: self.sigma2,
                }
            }
        }
    }

    pub(crate) fn check_batch(&self, batch: &ObservationBatch) -> Result<()> {
        if batch.snapshots() != self.snapshots {
            return Err(Error::BankMismatch(format!("bank built for T={}, batch has T={}", self.snapshots, batch.snapshots())));
        }
        if (batch.sigma2 - self.sigma2).abs() > 1e-12 * self.sigma2 {
            return Err(Error::BankMismatch(format!("bank built for sigma2={}, batch has {}", self.sigma2, batch.sigma2)));
        }
        if batch.antennas() != self.antennas() {
            return Err(Error::DimensionMismatch { expected: self.antennas(), actual: batch.antennas() });
        }
        Ok(())
    }
}

/// Pseudo-inverse of the normal matrix `G_jk = |[Q Q^H]_jk|^2` of the fit
/// `min_w ||W - Q^H diag(w) Q||_F^2`.
#[derive(Debug, Clone)]
pub struct NormalSolver {
    transform: TransformQ,
    pinv: DMatrix<f64>,
}

impl NormalSolver {
    pub fn new(transform: TransformQ) -> Result<Self> {
        let k = transform.output_dim();
        if transform.is_unitary() {
            return Ok(Self { transform, pinv: DMatrix::identity(k, k) });
        }
        let q = transform.dense();
        let qqh = q.matmul(&q.adjoint())?;
        let g = DMatrix::from_fn(k, k, |r, c| qqh[(r, c)].norm_sqr() + if r == c { NORMAL_RIDGE } else { 0.0 });
        let eig = nalgebra::SymmetricEigen::try_new(g, f64::EPSILON, 0)
            .ok_or_else(|| Error::Eigen("normal matrix eigendecomposition failed".into()))?;
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let mut pinv = DMatrix::zeros(k, k);
        let mut dropped = 0;
        for (i, &mu) in eig.eigenvalues.iter().enumerate() {
            if mu <= NULL_SPACE_RTOL * top {
                dropped += 1;
                continue;
            }
            let u = eig.eigenvectors.column(i);
            pinv += (u * u.transpose()) / mu;
        }
        if dropped > 0 {
            log::debug!("normal matrix for {transform} has {dropped} null direction(s); using ridge {NORMAL_RIDGE:e} and minimum-norm solution");
        }
        Ok(Self { transform, pinv })
    }

    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        if self.transform.is_unitary() {
            return v.to_vec();
        }
        let x = &self.pinv * nalgebra::DVector::from_column_slice(v);
        x.iter().copied().collect()
    }
}

fn diag_of_conjugation(q: &ComplexMatrix, w: &ComplexMatrix) -> Result<Vec<f64>> {
    let qw = q.matmul(w)?;
    Ok((0..q.rows())
        .map(|j| qw.row(j).iter().zip(q.row(j)).map(|(a, b)| (a * b.conj()).re).sum())
        .collect())
}

/// Real `w` minimizing `||W - Q^H diag(w) Q||_F^2`, from the normal equations.
pub fn fit_structured_weights(w: &ComplexMatrix, q: TransformQ) -> Result<Vec<f64>> {
    if !w.is_square() || w.rows() != q.input_dim() {
        return Err(Error::DimensionMismatch { expected: q.input_dim(), actual: w.rows() });
    }
    let v = diag_of_conjugation(&q.dense(), w)?;
    Ok(NormalSolver::new(q)?.solve(&v))
}

/// Eigendecompositions of `N` covariance samples, from which filter banks for
/// any noise level and snapshot count are derived.
#[derive(Debug, Clone)]
pub struct CovarianceBank {
    antennas: usize,
    entries: Vec<HermitianEigen>,
}

impl CovarianceBank {
    /// Draws `n` parameter samples from `prior` and synthesizes their covariances.
    pub fn sample<R: Rng + ?Sized>(
        prior: &ScenarioKind,
        geometry: Geometry,
        n: usize,
        quadrature_points: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("filter bank needs N >= 1".into()));
        }
        let entries = (0..n)
            .map(|_| {
                let draw = sample_scenario(prior, geometry, rng)?;
                covariance(&draw.spectrum, quadrature_points)?.eigen()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { antennas: geometry.antennas(), entries })
    }

    pub fn from_models(models: &[CovarianceModel]) -> Result<Self> {
        let antennas = models.first().map(|c| c.antennas()).ok_or_else(|| Error::InvalidArgument("no models".into()))?;
        let entries = models.iter().map(|c| c.eigen()).collect::<Result<Vec<_>>>()?;
        Ok(Self { antennas, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn eigen(&self, i: usize) -> &HermitianEigen {
        &self.entries[i]
    }

    pub fn dense_bank(&self, sigma2: f64, snapshots: usize) -> Result<FilterBank> {
        let filters = self.entries.iter().map(|e| genie_filter_from_eigen(e, sigma2)).collect::<Result<Vec<_>>>()?;
        let offsets = self.entries.iter().map(|e| offset_from_eigenvalues(&e.values, sigma2, snapshots)).collect();
        FilterBank::from_dense(filters, offsets, snapshots, sigma2)
    }

    pub fn structured_basis(&self, q: TransformQ) -> Result<StructuredBasis> {
        if q.input_dim() != self.antennas {
            return Err(Error::DimensionMismatch { expected: self.antennas, actual: q.input_dim() });
        }
        let k = q.output_dim();
        let m = self.antennas;
        let projections = self
            .entries
            .iter()
            .map(|e| {
                // |Q v_m|^2 stored K x M row-major.
                let mut p = vec![0.0; k * m];
                for col in 0..m {
                    let qv = q.forward(&e.vectors.column(col))?;
                    for (j, z) in qv.iter().enumerate() {
                        p[j * m + col] = z.norm_sqr();
                    }
                }
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StructuredBasis {
            transform: q,
            solver: NormalSolver::new(q)?,
            projections,
            eigenvalues: self.entries.iter().map(|e| e.values.clone()).collect(),
        })
    }

    pub fn bank(&self, mode: BankMode, sigma2: f64, snapshots: usize) -> Result<FilterBank> {
        match mode {
            BankMode::Dense => self.dense_bank(sigma2, snapshots),
            BankMode::Structured(q) => self.structured_basis(q)?.bank(sigma2, snapshots),
        }
    }
}

/// Precomputed `|Q v_m|^2` for every covariance sample, so that structured
/// weights `w_i = G^+ v_i` with `v_i = P_i gain_i` are cheap for any `sigma^2`.
#[derive(Debug, Clone)]
pub struct StructuredBasis {
    transform: TransformQ,
    solver: NormalSolver,
    projections: Vec<Vec<f64>>,
    eigenvalues: Vec<Vec<f64>>,
}

impl StructuredBasis {
    pub fn transform(&self) -> TransformQ {
        self.transform
    }

    pub fn bank(&self, sigma2: f64, snapshots: usize) -> Result<FilterBank> {
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
        }
        let k = self.transform.output_dim();
        let m = self.transform.input_dim();
        let mut filters = Vec::with_capacity(self.projections.len());
        let mut offsets = Vec::with_capacity(self.projections.len());
        for (p, values) in self.projections.iter().zip(&self.eigenvalues) {
            let gains: Vec<f64> = values.iter().map(|&l| wiener_gain(l, sigma2)).collect();
            let v: Vec<f64> = (0..k).map(|j| p[j * m..(j + 1) * m].iter().zip(&gains).map(|(a, g)| a * g).sum()).collect();
            filters.push(self.solver.solve(&v));
            offsets.push(offset_from_eigenvalues(values, sigma2, snapshots));
        }
        FilterBank::from_structured(self.transform, filters, offsets, snapshots, sigma2)
    }
}

/// Draws `n` samples of the prior and builds the bank for `(T, sigma^2)`.
#[allow(clippy::too_many_arguments)]
pub fn build_filter_bank<R: Rng + ?Sized>(
    prior: &ScenarioKind,
    geometry: Geometry,
    n: usize,
    snapshots: usize,
    sigma2: f64,
    mode: BankMode,
    quadrature_points: usize,
    rng: &mut R,
) -> Result<FilterBank> {
    CovarianceBank::sample(prior, geometry, n, quadrature_points, rng)?.bank(mode, sigma2, snapshots)
}

/// Dense bank whose offsets are computed from the filters themselves.
pub fn bank_from_filters(filters: Vec<ComplexMatrix>, snapshots: usize, sigma2: f64) -> Result<FilterBank> {
    let offsets = filters.iter().map(|w| offset_of_filter(w, snapshots)).collect::<Result<Vec<_>>>()?;
    FilterBank::from_dense(filters, offsets, snapshots, sigma2)
}
