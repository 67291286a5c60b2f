//! Trace functionals of sample and population covariance matrices.
//!
//! John's statistic only needs `tr S` and `tr S²` of the sample covariance
//! `S = T⁻¹ V Vᵀ`, and every power formula only needs a handful of traces of
//! the population covariance `Σ`. Nothing here computes an eigendecomposition
//! of `S`.
//!
//! `tr S²` is computed as a squared Frobenius norm of an inner-product
//! matrix. The dense path forms the `n × n` products of the rows of `V`; the
//! Gram path forms the `T × T` products of its columns. Both give
//! `‖V Vᵀ‖²_F = ‖Vᵀ V‖²_F`, so the cheaper one is used.
//!
//! Parallel scheme: the lower triangle of the inner-product matrix is split
//! by row. Each row's contribution is accumulated sequentially inside its
//! task, and the per-row results are reduced sequentially in row order. The
//! result is therefore bit-identical for any number of threads.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;
use crate::sum::{compensated_sum, dot, Compensated};

/// Work (in multiply-adds) below which the inner-product kernel stays serial.
const PARALLEL_WORK_THRESHOLD: usize = 1 << 22;

/// An `n × T` panel of disturbances or residuals; column `t` is the
/// cross-section vector `ν_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisturbanceMatrix {
    values: DMatrix<f64>,
}

impl DisturbanceMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (n, t) = values.shape();
        if n < 2 || t < 2 {
            return Err(Error::Input(format!(
                "disturbance matrix must be at least 2 x 2, got {n} x {t}"
            )));
        }
        if let Some(pos) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite entry at unit {}, time {}",
                pos % n,
                pos / n
            )));
        }
        Ok(Self { values })
    }

    /// Builds the matrix from row-major data (`n` rows of length `t`).
    pub fn from_row_slice(n: usize, t: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * t {
            return Err(Error::Input(format!(
                "expected {} values for a {n} x {t} matrix, got {}",
                n * t,
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, t, data))
    }

    pub fn zeros(n: usize, t: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n, t))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn t(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    /// The cross-section vector at time `t`.
    pub fn column(&self, t: usize) -> &[f64] {
        let n = self.n();
        &self.values.as_slice()[t * n..(t + 1) * n]
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.values * c)
    }
}

/// `tr S_T` and `tr S_T²` for one panel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleTracePair {
    pub tr_s: f64,
    pub tr_s2: f64,
    pub n: usize,
    pub t: usize,
}

/// Which inner-product matrix the trace kernel forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TracePath {
    /// `n × n` products of the rows of `V`.
    Dense,
    /// `T × T` products of the columns of `V`.
    Gram,
}

impl TracePath {
    pub fn select(n: usize, t: usize) -> Self {
        if n > t {
            TracePath::Gram
        } else {
            TracePath::Dense
        }
    }
}

pub fn sample_traces(v: &DisturbanceMatrix) -> SampleTracePair {
    sample_traces_with(v, TracePath::select(v.n(), v.t()))
}

pub fn sample_traces_with(v: &DisturbanceMatrix, path: TracePath) -> SampleTracePair {
    let (diag, frob) = match path {
        TracePath::Gram => inner_product_sums(v.values()),
        TracePath::Dense => inner_product_sums(&v.values().transpose()),
    };
    let t = v.t() as f64;
    SampleTracePair {
        tr_s: diag / t,
        tr_s2: frob / (t * t),
        n: v.n(),
        t: v.t(),
    }
}

/// For the columns `c_j` of `m`, returns `(Σ_j c_j·c_j, Σ_{i,j} (c_i·c_j)²)`.
fn inner_product_sums(m: &DMatrix<f64>) -> (f64, f64) {
    let (len, cols) = m.shape();
    let data = m.as_slice();
    let col = |j: usize| &data[j * len..(j + 1) * len];
    let row_terms = |j: usize| {
        let cj = col(j);
        let mut off = Compensated::default();
        for i in 0..j {
            let g = dot(cj, col(i));
            off.add(g * g);
        }
        let d = dot(cj, cj);
        (d, d * d + 2.0 * off.value())
    };
    let per_row: Vec<(f64, f64)> = if cols * cols * len / 2 >= PARALLEL_WORK_THRESHOLD {
        (0..cols).into_par_iter().map(row_terms).collect()
    } else {
        (0..cols).map(row_terms).collect()
    };
    let mut diag = Compensated::default();
    let mut frob = Compensated::default();
    for (d, f) in per_row {
        diag.add(d);
        frob.add(f);
    }
    (diag.value(), frob.value())
}

/// How the loading directions `e_j` of a spiked covariance are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadingPolicy {
    /// `e_j` is the j-th canonical basis vector, so `Σ` is diagonal.
    Canonical,
    /// Orthonormalised Gaussian directions drawn from the given seed.
    RandomOrthonormal { seed: u64 },
}

/// Declarative description of a population covariance `Σₙ`.
#[derive(Clone, Debug, PartialEq)]
pub enum CovarianceSpec {
    /// `σ² I`.
    Identity {
        scale: f64,
    },
    /// `σ_ε² (I + Σ_j h_j e_j e_jᵀ)`.
    SpikedFactor {
        base: f64,
        spikes: Vec<f64>,
        loadings: LoadingPolicy,
    },
    Diagonal {
        eigenvalues: Vec<f64>,
    },
    Dense {
        matrix: DMatrix<f64>,
    },
}

impl CovarianceSpec {
    pub fn identity(scale: f64) -> Self {
        CovarianceSpec::Identity { scale }
    }

    pub fn spiked(base: f64, spikes: Vec<f64>) -> Self {
        CovarianceSpec::SpikedFactor {
            base,
            spikes,
            loadings: LoadingPolicy::Canonical,
        }
    }

    pub fn diagonal(eigenvalues: Vec<f64>) -> Self {
        CovarianceSpec::Diagonal { eigenvalues }
    }

    pub fn dense(matrix: DMatrix<f64>) -> Self {
        CovarianceSpec::Dense { matrix }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 1 {
            return Err(Error::Domain("dimension n must be positive".into()));
        }
        match self {
            CovarianceSpec::Identity { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::Domain(format!(
                        "identity scale must be > 0, got {scale}"
                    )));
                }
            }
            CovarianceSpec::SpikedFactor { base, spikes, .. } => {
                if !(base.is_finite() && *base > 0.0) {
                    return Err(Error::Domain(format!(
                        "idiosyncratic variance must be > 0, got {base}"
                    )));
                }
                if spikes.is_empty() {
                    return Err(Error::Domain(
                        "spiked covariance needs at least one spike".into(),
                    ));
                }
                if spikes.len() >= n {
                    return Err(Error::Domain(format!(
                        "number of spikes ({}) must be below n ({n})",
                        spikes.len()
                    )));
                }
                if let Some(h) = spikes.iter().find(|h| !(h.is_finite() && **h >= 0.0)) {
                    return Err(Error::Domain(format!(
                        "spike sizes must be finite and >= 0, got {h}"
                    )));
                }
            }
            CovarianceSpec::Diagonal { eigenvalues } => {
                if eigenvalues.len() != n {
                    return Err(Error::Domain(format!(
                        "diagonal spec has {} eigenvalues but n = {n}",
                        eigenvalues.len()
                    )));
                }
                if let Some(l) = eigenvalues.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
                    return Err(Error::Domain(format!(
                        "diagonal entries must be finite and > 0, got {l}"
                    )));
                }
            }
            CovarianceSpec::Dense { matrix } => {
                if matrix.nrows() != n || matrix.ncols() != n {
                    return Err(Error::Domain(format!(
                        "dense spec is {} x {} but n = {n}",
                        matrix.nrows(),
                        matrix.ncols()
                    )));
                }
                check_symmetric_psd(matrix)?;
            }
        }
        Ok(())
    }

    /// Whether `Σ` is diagonal in the canonical basis.
    pub fn is_diagonal(&self) -> bool {
        match self {
            CovarianceSpec::Identity { .. } | CovarianceSpec::Diagonal { .. } => true,
            CovarianceSpec::SpikedFactor {
                loadings, spikes, ..
            } => matches!(loadings, LoadingPolicy::Canonical) || spikes.iter().all(|h| *h == 0.0),
            CovarianceSpec::Dense { matrix } => {
                let (n, _) = matrix.shape();
                (0..n).all(|j| (0..n).all(|i| i == j || matrix[(i, j)] == 0.0))
            }
        }
    }

    /// The `n × r` matrix of loading directions for a spiked spec with random
    /// loadings; `None` for every other case.
    pub fn loadings(&self, n: usize) -> Result<Option<DMatrix<f64>>> {
        match self {
            CovarianceSpec::SpikedFactor {
                spikes,
                loadings: LoadingPolicy::RandomOrthonormal { seed },
                ..
            } => {
                self.validate(n)?;
                Ok(Some(random_orthonormal(n, spikes.len(), *seed)))
            }
            _ => Ok(None),
        }
    }

    /// Population eigenvalues, largest spikes first for spiked specs.
    pub fn eigenvalues(&self, n: usize) -> Result<Vec<f64>> {
        self.validate(n)?;
        Ok(match self {
            CovarianceSpec::Identity { scale } => vec![*scale; n],
            CovarianceSpec::SpikedFactor { base, spikes, .. } => {
                let mut ev: Vec<f64> = spikes.iter().map(|h| base * (1.0 + h)).collect();
                ev.resize(n, *base);
                ev
            }
            CovarianceSpec::Diagonal { eigenvalues } => eigenvalues.clone(),
            CovarianceSpec::Dense { matrix } => SymmetricEigen::new(matrix.clone())
                .eigenvalues
                .iter()
                .copied()
                .collect(),
        })
    }

    /// Dense `Σ`. Used for oracles and the general-matrix generator path.
    pub fn materialize(&self, n: usize) -> Result<DMatrix<f64>> {
        self.validate(n)?;
        Ok(match self {
            CovarianceSpec::Identity { scale } => DMatrix::identity(n, n) * *scale,
            CovarianceSpec::Diagonal { eigenvalues } => {
                DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(eigenvalues))
            }
            CovarianceSpec::SpikedFactor { base, spikes, .. } => {
                let mut m = DMatrix::identity(n, n);
                match self.loadings(n)? {
                    None => {
                        for (j, h) in spikes.iter().enumerate() {
                            m[(j, j)] += h;
                        }
                    }
                    Some(e) => {
                        for (j, h) in spikes.iter().enumerate() {
                            let ej = e.column(j);
                            m += (ej * ej.transpose()) * *h;
                        }
                    }
                }
                m * *base
            }
            CovarianceSpec::Dense { matrix } => matrix.clone(),
        })
    }

    /// Diagonal entries of `Σ` and of `Σ²`.
    fn diagonals(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            CovarianceSpec::Dense { matrix } => {
                let sq = matrix * matrix;
                Ok((
                    matrix.diagonal().iter().copied().collect(),
                    sq.diagonal().iter().copied().collect(),
                ))
            }
            CovarianceSpec::SpikedFactor { base, spikes, .. } => match self.loadings(n)? {
                None => {
                    let ev = self.eigenvalues(n)?;
                    let sq = ev.iter().map(|l| l * l).collect();
                    Ok((ev, sq))
                }
                Some(e) => {
                    let mut d1 = vec![0.0; n];
                    let mut d2 = vec![0.0; n];
                    for i in 0..n {
                        let mut a = Compensated::default();
                        let mut b = Compensated::default();
                        for (j, h) in spikes.iter().enumerate() {
                            let w = e[(i, j)] * e[(i, j)];
                            a.add(h * w);
                            b.add(((1.0 + h) * (1.0 + h) - 1.0) * w);
                        }
                        d1[i] = base * (1.0 + a.value());
                        d2[i] = base * base * (1.0 + b.value());
                    }
                    Ok((d1, d2))
                }
            },
            _ => {
                let ev = self.eigenvalues(n)?;
                let sq = ev.iter().map(|l| l * l).collect();
                Ok((ev, sq))
            }
        }
    }
}

fn check_symmetric_psd(matrix: &DMatrix<f64>) -> Result<()> {
    let n = matrix.nrows();
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain(
            "dense covariance has non-finite entries".into(),
        ));
    }
    let scale = matrix.amax().max(f64::MIN_POSITIVE);
    for j in 0..n {
        if matrix[(j, j)] <= 0.0 {
            return Err(Error::Domain(format!(
                "dense covariance has non-positive diagonal at {j}"
            )));
        }
        for i in 0..j {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Domain(format!(
                    "dense covariance is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let eig = SymmetricEigen::new(matrix.clone()).eigenvalues;
    let min = eig.min();
    if min < -1e-10 * eig.amax() {
        return Err(Error::Domain(format!(
            "dense covariance is not positive semi-definite (smallest eigenvalue {min:e})"
        )));
    }
    Ok(())
}

/// `n × r` matrix with orthonormal columns, from Gaussian vectors via QR.
pub(crate) fn random_orthonormal(n: usize, r: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng::stream_rng(seed, rng::LOADINGS_STREAM);
    let g = DMatrix::from_fn(n, r, |_, _| StandardNormal.sample(&mut rng));
    g.qr().q()
}

/// Trace functionals of `Σₙ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaTraces {
    pub tr1: f64,
    pub tr2: f64,
    pub tr3: f64,
    pub tr4: f64,
    /// `tr(Σ∘Σ) = Σᵢ Σᵢᵢ²`
    pub had11: f64,
    /// `tr(Σ∘Σ²)`
    pub had12: f64,
    /// `tr(Σ²∘Σ²)`
    pub had22: f64,
    pub n: usize,
}

impl SigmaTraces {
    /// Traces of `cΣ`.
    pub fn scaled(&self, c: f64) -> Self {
        SigmaTraces {
            tr1: self.tr1 * c,
            tr2: self.tr2 * c.powi(2),
            tr3: self.tr3 * c.powi(3),
            tr4: self.tr4 * c.powi(4),
            had11: self.had11 * c.powi(2),
            had12: self.had12 * c.powi(3),
            had22: self.had22 * c.powi(4),
            n: self.n,
        }
    }
}

pub fn sigma_traces(spec: &CovarianceSpec, n: usize) -> Result<SigmaTraces> {
    spec.validate(n)?;
    let power_sum = |ev: &[f64], k: i32| compensated_sum(ev.iter().map(|l| l.powi(k)));
    let (tr1, tr2, tr3, tr4) = match spec {
        CovarianceSpec::Identity { scale } => {
            let nf = n as f64;
            (
                nf * scale,
                nf * scale.powi(2),
                nf * scale.powi(3),
                nf * scale.powi(4),
            )
        }
        CovarianceSpec::SpikedFactor { base, spikes, .. } => {
            let rest = (n - spikes.len()) as f64;
            let tr = |k: i32| {
                base.powi(k) * (rest + compensated_sum(spikes.iter().map(|h| (1.0 + h).powi(k))))
            };
            (tr(1), tr(2), tr(3), tr(4))
        }
        CovarianceSpec::Diagonal { eigenvalues } => (
            power_sum(eigenvalues, 1),
            power_sum(eigenvalues, 2),
            power_sum(eigenvalues, 3),
            power_sum(eigenvalues, 4),
        ),
        CovarianceSpec::Dense { matrix } => {
            let sq = matrix * matrix;
            let pair = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
                compensated_sum(a.iter().zip(b.iter()).map(|(x, y)| x * y))
            };
            (
                compensated_sum(matrix.diagonal().iter().copied()),
                pair(matrix, matrix),
                pair(&sq, matrix),
                pair(&sq, &sq),
            )
        }
    };
    let (d1, d2) = spec.diagonals(n)?;
    let had = |a: &[f64], b: &[f64]| compensated_sum(a.iter().zip(b).map(|(x, y)| x * y));
    Ok(SigmaTraces {
        tr1,
        tr2,
        tr3,
        tr4,
        had11: had(&d1, &d1),
        had12: had(&d1, &d2),
        had22: had(&d2, &d2),
        n,
    })
}

/// Finite-n proxies `(tr Σ/n, tr Σ²/n, n⁻¹ Σᵢ Σᵢᵢ²)` for the η limits of the
/// ultra-large-panel power analysis.
pub fn eta_limits(spec: &CovarianceSpec, n: usize) -> Result<(f64, f64, f64)> {
    let st = sigma_traces(spec, n)?;
    let nf = n as f64;
    Ok((st.tr1 / nf, st.tr2 / nf, st.had11 / nf))
}

/// Moments `n⁻¹ tr Σⁱ`, i = 1..4, of the population spectral distribution.
pub fn theta_moments(spec: &CovarianceSpec, n: usize) -> Result<[f64; 4]> {
    let st = sigma_traces(spec, n)?;
    let nf = n as f64;
    Ok([st.tr1 / nf, st.tr2 / nf, st.tr3 / nf, st.tr4 / nf])
}

/// First two moments of the generalized Marčenko–Pastur law with aspect
/// ratio `c` and population moments `theta`: `(θ₁, θ₂ + c θ₁²)`.
pub fn mp_moments(theta: [f64; 4], c: f64) -> Result<(f64, f64)> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Domain(format!("aspect ratio must be > 0, got {c}")));
    }
    if !(theta[0].is_finite() && theta[0] > 0.0) {
        return Err(Error::Domain(format!(
            "first population moment must be > 0, got {}",
            theta[0]
        )));
    }
    Ok((theta[0], theta[1] + c * theta[0] * theta[0]))
}

/// Spectral moments of one configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSet {
    pub theta: [f64; 4],
    pub eta: (f64, f64, f64),
    pub vartheta: (f64, f64),
    pub c: f64,
}

impl MomentSet {
    pub fn from_spec(spec: &CovarianceSpec, n: usize, t: usize) -> Result<Self> {
        let c = n as f64 / t as f64;
        let theta = theta_moments(spec, n)?;
        Ok(MomentSet {
            theta,
            eta: eta_limits(spec, n)?,
            vartheta: mp_moments(theta, c)?,
            c,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::rel_close;

    mod approx_eq {
        pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
        }
    }

    #[test]
    fn identity_panel_traces() {
        let v = DisturbanceMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let tp = sample_traces(&v);
        assert_eq!((tp.tr_s, tp.tr_s2), (1.0, 0.5));
    }

    #[test]
    fn upper_triangular_panel_traces() {
        // S = [[1, .5], [.5, .5]]
        let v = DisturbanceMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        for path in [TracePath::Dense, TracePath::Gram] {
            let tp = sample_traces_with(&v, path);
            assert!(rel_close(tp.tr_s, 1.5, 1e-15));
            assert!(rel_close(tp.tr_s2, 1.75, 1e-15));
        }
    }

    #[test]
    fn rejects_non_finite_and_tiny() {
        assert!(matches!(
            DisturbanceMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]),
            Err(Error::Input(_))
        ));
        assert!(DisturbanceMatrix::zeros(1, 5).is_err());
        assert!(DisturbanceMatrix::from_row_slice(2, 2, &[1.0]).is_err());
    }

    #[test]
    fn zero_panel_has_zero_traces() {
        let tp = sample_traces(&DisturbanceMatrix::zeros(3, 4).unwrap());
        assert_eq!((tp.tr_s, tp.tr_s2), (0.0, 0.0));
    }

    #[test]
    fn path_selection() {
        assert_eq!(TracePath::select(1000, 100), TracePath::Gram);
        assert_eq!(TracePath::select(100, 100), TracePath::Dense);
        assert_eq!(TracePath::select(50, 100), TracePath::Dense);
    }

    #[test]
    fn identity_sigma_traces() {
        let st = sigma_traces(&CovarianceSpec::identity(1.0), 4).unwrap();
        for v in [st.tr1, st.tr2, st.tr3, st.tr4, st.had11, st.had12, st.had22] {
            assert_eq!(v, 4.0);
        }
    }

    #[test]
    fn two_point_diagonal_sigma_traces() {
        let st = sigma_traces(&CovarianceSpec::diagonal(vec![2.0, 1.0]), 2).unwrap();
        assert_eq!((st.tr1, st.tr2, st.tr3, st.tr4), (3.0, 5.0, 9.0, 17.0));
        assert_eq!((st.had11, st.had12, st.had22), (5.0, 9.0, 17.0));
    }

    #[test]
    fn dense_sigma_traces() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let st = sigma_traces(&CovarianceSpec::dense(m), 2).unwrap();
        let expect = [2.0, 2.5, 3.5, 5.125, 2.0, 2.5, 3.125];
        let got = [st.tr1, st.tr2, st.tr3, st.tr4, st.had11, st.had12, st.had22];
        for (g, e) in got.iter().zip(expect) {
            assert!(rel_close(*g, e, 1e-14), "{got:?}");
        }
    }

    #[test]
    fn dense_rejects_indefinite_and_asymmetric() {
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            sigma_traces(&CovarianceSpec::dense(indefinite), 2),
            Err(Error::Domain(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.2, 1.0]);
        assert!(matches!(
            sigma_traces(&CovarianceSpec::dense(asym), 2),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(CovarianceSpec::identity(0.0).validate(3).is_err());
        assert!(CovarianceSpec::spiked(1.0, vec![1.0, 2.0, 3.0])
            .validate(3)
            .is_err());
        assert!(CovarianceSpec::spiked(1.0, vec![f64::INFINITY])
            .validate(3)
            .is_err());
        assert!(CovarianceSpec::diagonal(vec![1.0, 2.0])
            .validate(3)
            .is_err());
        assert!(CovarianceSpec::diagonal(vec![1.0, 0.0, 1.0])
            .validate(3)
            .is_err());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(
            eta_limits(&CovarianceSpec::identity(1.0), 10).unwrap(),
            (1.0, 1.0, 1.0)
        );
        assert_eq!(
            eta_limits(&CovarianceSpec::identity(2.0), 10).unwrap(),
            (2.0, 4.0, 4.0)
        );
        let eta = eta_limits(&CovarianceSpec::diagonal(vec![2.0, 1.0, 1.0, 1.0]), 4).unwrap();
        assert_eq!(eta, (1.25, 1.75, 1.75));
    }

    #[test]
    fn theta_examples() {
        assert_eq!(
            theta_moments(&CovarianceSpec::identity(1.0), 7).unwrap(),
            [1.0; 4]
        );
        let half = CovarianceSpec::diagonal([vec![1.0; 5], vec![3.0; 5]].concat());
        assert_eq!(theta_moments(&half, 10).unwrap(), [2.0, 5.0, 14.0, 41.0]);
        let two = CovarianceSpec::diagonal(vec![2.0, 1.0]);
        assert_eq!(theta_moments(&two, 2).unwrap(), [1.5, 2.5, 4.5, 8.5]);
    }

    #[test]
    fn mp_moment_identities() {
        assert_eq!(mp_moments([1.0; 4], 0.5).unwrap(), (1.0, 1.5));
        assert_eq!(mp_moments([2.0, 5.0, 14.0, 41.0], 1.0).unwrap(), (2.0, 9.0));
        let (a, b) = mp_moments([1.0; 4], 1e-12).unwrap();
        assert!(rel_close(a, 1.0, 1e-12) && rel_close(b, 1.0, 1e-11));
        assert!(mp_moments([1.0; 4], 0.0).is_err());
        assert!(mp_moments([0.0, 1.0, 1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn random_loadings_are_orthonormal() {
        let e = random_orthonormal(50, 4, 9);
        let g = e.transpose() * &e;
        assert!((g - DMatrix::<f64>::identity(4, 4)).amax() < 1e-12);
    }

    #[test]
    fn moment_set_invariants() {
        let spec = CovarianceSpec::spiked(1.0, vec![3.0, 1.0]);
        let m = MomentSet::from_spec(&spec, 40, 20).unwrap();
        assert_eq!(m.c, 2.0);
        assert!(m.theta[1] >= m.theta[0] * m.theta[0]);
        assert!(m.eta.1 >= m.eta.0 * m.eta.0);
        assert_eq!(m.eta.2, m.eta.1);
    }
}
