//! Within (fixed-effects) OLS and residual moments.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kernels::DisturbanceMatrix;
use crate::sim::PanelData;
use crate::sum::{dot, pairwise_map_sum, pairwise_sum};

pub const MAX_REGRESSORS: usize = 16;
const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct WithinFit {
    pub beta_hat: Vec<f64>,
    /// `ν̂_it = ỹ_it − x̃_itᵀ β̂`.
    pub residuals: DisturbanceMatrix,
    /// `Σ x̃ x̃ᵀ`
    pub gram: DMatrix<f64>,
    /// Mean of `ỹ²`; the scale against which a perfect fit is detected.
    pub demeaned_y_scale: f64,
    pub n: usize,
    pub t: usize,
    pub k: usize,
}

/// Removes per-unit time means.
pub fn demean_matrix(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let vals: Vec<f64> = row.iter().copied().collect();
        let mean = pairwise_sum(&vals) / vals.len() as f64;
        row.add_scalar_mut(-mean);
    }
    out
}

/// `(ỹ, x̃)` with per-unit time means removed.
pub fn demean(p: &PanelData) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
    (demean_matrix(&p.y), p.x.iter().map(demean_matrix).collect())
}

pub fn within_ols(p: &PanelData) -> Result<WithinFit> {
    p.validate()?;
    let k = p.k();
    if k > MAX_REGRESSORS {
        return Err(Error::Estimation(format!(
            "{k} regressors exceeds the supported maximum of {MAX_REGRESSORS}"
        )));
    }
    let (y, x) = demean(p);
    let mut gram = DMatrix::zeros(k, k);
    let mut rhs = DVector::zeros(k);
    for a in 0..k {
        for b in 0..=a {
            let g = dot(x[a].as_slice(), x[b].as_slice());
            gram[(a, b)] = g;
            gram[(b, a)] = g;
        }
        rhs[a] = dot(x[a].as_slice(), y.as_slice());
    }

    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(Error::Estimation(format!(
            "normal equations are singular or ill-conditioned (eigenvalues in [{lo:e}, {hi:e}])"
        )));
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Estimation("normal equations are not positive definite".into()))?;
    let beta = chol.solve(&rhs);

    let mut resid = y.clone();
    for (b, xj) in beta.iter().zip(&x) {
        resid -= xj * *b;
    }
    let nt = (p.n() * p.t()) as f64;
    Ok(WithinFit {
        beta_hat: beta.iter().copied().collect(),
        residuals: DisturbanceMatrix::new(resid)?,
        gram,
        demeaned_y_scale: pairwise_map_sum(y.as_slice(), &|v| v * v) / nt,
        n: p.n(),
        t: p.t(),
        k,
    })
}

/// Plain fourth-moment average `(nT)⁻¹ Σ |ν̂_it|⁴`.
pub fn gamma4_hat(residuals: &DisturbanceMatrix) -> f64 {
    let vals = residuals.values().as_slice();
    pairwise_map_sum(vals, &|v| (v * v) * (v * v)) / vals.len() as f64
}

/// Fourth moment of the residuals divided by their squared second moment,
/// i.e. [`gamma4_hat`] of the residuals rescaled to unit mean square.
/// Returns `None` when all residuals are zero.
pub fn gamma4_hat_standardized(residuals: &DisturbanceMatrix) -> Option<f64> {
    let vals = residuals.values().as_slice();
    let m2 = pairwise_map_sum(vals, &|v| v * v) / vals.len() as f64;
    if m2 > 0.0 {
        Some(gamma4_hat(residuals) / (m2 * m2))
    } else {
        None
    }
}
