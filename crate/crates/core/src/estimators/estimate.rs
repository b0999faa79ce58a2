use super::bank::{BankFilters, FilterBank};
use crate::channel::ObservationBatch;
use crate::error::{Error, Result};
use crate::numerics::{dot, softmax, ComplexMatrix, TransformQ};

/// `Q^H diag(w) Q` applied to every column of `y`.
pub fn apply_diagonal(q: &TransformQ, w: &[f64], y: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::zeros(y.rows(), y.cols());
    for t in 0..y.cols() {
        out.set_column(t, &q.diagonal_filter(w, &y.column(t))?);
    }
    Ok(out)
}

/// Softmax weights over `tr(W_i C_hat) + b_i`.
pub fn gridded_weights(bank: &FilterBank, c_hat: &ComplexMatrix) -> Result<Vec<f64>> {
    let BankFilters::Dense(ws) = &bank.filters else {
        return Err(Error::InvalidArgument("gridded estimator needs dense filters".into()));
    };
    let mut z = Vec::with_capacity(ws.len());
    for (w, b) in ws.iter().zip(&bank.offsets) {
        // tr(W C) = sum_mn W_mn conj(C_mn) for Hermitian W, C.
        let tr: f64 = w.as_slice().iter().zip(c_hat.as_slice()).map(|(a, c)| (a * c.conj()).re).sum();
        if !tr.is_finite() {
            return Err(Error::NonFinite("trace in gridded estimator".into()));
        }
        z.push(tr + b);
    }
    Ok(softmax(&z))
}

/// Convex combination `sum_i p_i W_i`.
pub fn gridded_filter(bank: &FilterBank, c_hat: &ComplexMatrix) -> Result<ComplexMatrix> {
    let p = gridded_weights(bank, c_hat)?;
    let BankFilters::Dense(ws) = &bank.filters else { unreachable!() };
    let m = bank.antennas();
    let mut acc = ComplexMatrix::zeros(m, m);
    for (w, &pi) in ws.iter().zip(&p) {
        if pi != 0.0 {
            acc.axpy(pi, w);
        }
    }
    Ok(acc)
}

pub fn gridded_estimate(bank: &FilterBank, batch: &ObservationBatch) -> Result<ComplexMatrix> {
    bank.check_batch(batch)?;
    gridded_filter(bank, &batch.sample_covariance())?.matmul(&batch.y)
}

fn structured_columns<'a>(bank: &'a FilterBank, c_hat: &[f64]) -> Result<&'a [Vec<f64>]> {
    let BankFilters::Structured(ws) = &bank.filters else {
        return Err(Error::InvalidArgument("structured estimator needs coefficient vectors".into()));
    };
    let k = bank.transform.output_dim();
    if c_hat.len() != k {
        return Err(Error::DimensionMismatch { expected: k, actual: c_hat.len() });
    }
    Ok(ws)
}

/// `softmax(A_SE^T c_hat + b)`.
pub fn structured_weights(bank: &FilterBank, c_hat: &[f64]) -> Result<Vec<f64>> {
    let ws = structured_columns(bank, c_hat)?;
    let z: Vec<f64> = ws.iter().zip(&bank.offsets).map(|(w, b)| dot(w, c_hat) + b).collect();
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("structured estimator logits".into()));
    }
    Ok(softmax(&z))
}

/// Element-wise filter `A_SE softmax(A_SE^T c_hat + b)`.
pub fn structured_filter(bank: &FilterBank, c_hat: &[f64]) -> Result<Vec<f64>> {
    let p = structured_weights(bank, c_hat)?;
    let ws = structured_columns(bank, c_hat)?;
    let mut out = vec![0.0; c_hat.len()];
    for (w, &pi) in ws.iter().zip(&p) {
        if pi != 0.0 {
            out.iter_mut().zip(w).for_each(|(o, v)| *o += pi * v);
        }
    }
    Ok(out)
}

pub fn structured_estimate(bank: &FilterBank, batch: &ObservationBatch) -> Result<ComplexMatrix> {
    bank.check_batch(batch)?;
    if batch.transform != bank.transform {
        return Err(Error::BankMismatch(format!("batch statistic uses {}, bank uses {}", batch.transform, bank.transform)));
    }
    let w = structured_filter(bank, &batch.c_hat)?;
    apply_diagonal(&bank.transform, &w, &batch.y)
}

/// `W Y` for a fixed filter.
pub fn linear_estimate(w: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    w.matmul(y)
}
