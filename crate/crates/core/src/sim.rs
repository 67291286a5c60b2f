//! Data generation under the null and the factor-model alternatives.
//!
//! Disturbances follow `ν_t = Σ^{1/2} z_t` with i.i.d. standardized `z`. The
//! square root is applied in closed form for identity, diagonal and spiked
//! specs; only a general dense `Σ` goes through a symmetric eigendecomposition.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::kernels::{random_orthonormal, CovarianceSpec, DisturbanceMatrix, LoadingPolicy};
use crate::rng::{self, Purpose, SimRng};

/// Law of the standardized innovations `z_it` (mean 0, variance 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErrorDistribution {
    Gaussian,
    /// `(G − a)/√a` with `G ~ Gamma(a, 1)`.
    StandardizedGamma {
        shape: f64,
    },
    /// Uniform on `[−√3, √3]`.
    StandardizedUniform,
    Rademacher,
}

impl ErrorDistribution {
    /// Fourth moment `E z⁴`.
    pub fn gamma4(&self) -> f64 {
        match self {
            ErrorDistribution::Gaussian => 3.0,
            ErrorDistribution::StandardizedGamma { shape } => 3.0 + 6.0 / shape,
            ErrorDistribution::StandardizedUniform => 1.8,
            ErrorDistribution::Rademacher => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ErrorDistribution::StandardizedGamma { shape } = self {
            if !(shape.is_finite() && *shape > 0.0) {
                return Err(Error::Domain(format!(
                    "gamma shape must be > 0, got {shape}"
                )));
            }
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        Ok(match *self {
            ErrorDistribution::Gaussian => Sampler::Gaussian,
            ErrorDistribution::StandardizedGamma { shape } => Sampler::Gamma {
                gamma: Gamma::new(shape, 1.0).map_err(|e| Error::Domain(e.to_string()))?,
                shape,
                scale: shape.sqrt().recip(),
            },
            ErrorDistribution::StandardizedUniform => Sampler::Uniform,
            ErrorDistribution::Rademacher => Sampler::Rademacher,
        })
    }
}

impl fmt::Display for ErrorDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorDistribution::Gaussian => write!(f, "gaussian"),
            ErrorDistribution::StandardizedGamma { shape } => write!(f, "gamma:{shape}"),
            ErrorDistribution::StandardizedUniform => write!(f, "uniform"),
            ErrorDistribution::Rademacher => write!(f, "rademacher"),
        }
    }
}

impl FromStr for ErrorDistribution {
    type Err = Error;

    /// Accepts `gaussian`, `gamma:<shape>`, `uniform`, `rademacher`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let dist = match s.as_str() {
            "gaussian" | "normal" => ErrorDistribution::Gaussian,
            "uniform" => ErrorDistribution::StandardizedUniform,
            "rademacher" => ErrorDistribution::Rademacher,
            other => match other.strip_prefix("gamma:") {
                Some(shape) => ErrorDistribution::StandardizedGamma {
                    shape: shape
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad gamma shape '{shape}'")))?,
                },
                None => {
                    return Err(Error::Parse(format!(
                        "unknown distribution '{other}' (expected gaussian, gamma:<shape>, uniform, rademacher)"
                    )))
                }
            },
        };
        dist.validate()?;
        Ok(dist)
    }
}

/// Prepared sampler for one [`ErrorDistribution`].
#[derive(Clone, Copy, Debug)]
pub enum Sampler {
    Gaussian,
    Gamma {
        gamma: Gamma<f64>,
        shape: f64,
        scale: f64,
    },
    Uniform,
    Rademacher,
}

impl Sampler {
    pub fn draw(&self, rng: &mut SimRng) -> f64 {
        match self {
            Sampler::Gaussian => StandardNormal.sample(rng),
            Sampler::Gamma {
                gamma,
                shape,
                scale,
            } => (gamma.sample(rng) - shape) * scale,
            Sampler::Uniform => (2.0 * rng.random::<f64>() - 1.0) * 3f64.sqrt(),
            Sampler::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn fill(&self, rng: &mut SimRng, out: &mut [f64]) {
        for x in out {
            *x = self.draw(rng);
        }
    }
}

/// Draws `V = Σ^{1/2} Z`, deterministic in `(spec, dist, n, t, seed)`.
pub fn gen_disturbances(
    spec: &CovarianceSpec,
    dist: ErrorDistribution,
    n: usize,
    t: usize,
    seed: u64,
) -> Result<DisturbanceMatrix> {
    let mut rng = rng::replication_rng(seed, 0, Purpose::Disturbances);
    gen_disturbances_rng(spec, dist, n, t, &mut rng)
}

/// As [`gen_disturbances`], drawing from a caller-supplied stream.
pub fn gen_disturbances_rng(
    spec: &CovarianceSpec,
    dist: ErrorDistribution,
    n: usize,
    t: usize,
    rng: &mut SimRng,
) -> Result<DisturbanceMatrix> {
    let sqrt = CovarianceRoot::new(spec, n)?;
    gen_disturbances_root(&sqrt, dist, t, rng)
}

/// Precomputed `Σ^{1/2}` action, reusable across replications.
#[derive(Clone, Debug)]
pub enum CovarianceRoot {
    /// Row scaling by the given factors.
    Diagonal(Vec<f64>),
    /// `σ (I + E diag(s) Eᵀ)` for orthonormal `E`.
    LowRank {
        sigma: f64,
        directions: DMatrix<f64>,
        shifts: Vec<f64>,
    },
    Dense(DMatrix<f64>),
}

impl CovarianceRoot {
    pub fn new(spec: &CovarianceSpec, n: usize) -> Result<Self> {
        spec.validate(n)?;
        Ok(match spec {
            CovarianceSpec::Identity { .. } | CovarianceSpec::Diagonal { .. } => {
                CovarianceRoot::Diagonal(spec.eigenvalues(n)?.iter().map(|l| l.sqrt()).collect())
            }
            CovarianceSpec::SpikedFactor {
                base,
                spikes,
                loadings,
            } => match loadings {
                LoadingPolicy::Canonical => CovarianceRoot::Diagonal(
                    spec.eigenvalues(n)?.iter().map(|l| l.sqrt()).collect(),
                ),
                LoadingPolicy::RandomOrthonormal { .. } => CovarianceRoot::LowRank {
                    sigma: base.sqrt(),
                    directions: spec.loadings(n)?.expect("random loadings"),
                    shifts: spikes.iter().map(|h| (1.0 + h).sqrt() - 1.0).collect(),
                },
            },
            CovarianceSpec::Dense { matrix } => {
                let eig = SymmetricEigen::new(matrix.clone());
                let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
                let q = &eig.eigenvectors;
                CovarianceRoot::Dense(q * DMatrix::from_diagonal(&root) * q.transpose())
            }
        })
    }

    pub fn n(&self) -> usize {
        match self {
            CovarianceRoot::Diagonal(d) => d.len(),
            CovarianceRoot::LowRank { directions, .. } => directions.nrows(),
            CovarianceRoot::Dense(m) => m.nrows(),
        }
    }

    /// Applies the root to `z` in place.
    pub fn apply(&self, z: &mut DMatrix<f64>) {
        match self {
            CovarianceRoot::Diagonal(d) => {
                for mut col in z.column_iter_mut() {
                    for (x, s) in col.iter_mut().zip(d) {
                        *x *= s;
                    }
                }
            }
            CovarianceRoot::LowRank {
                sigma,
                directions,
                shifts,
            } => {
                let mut proj = directions.transpose() * &*z;
                for (j, s) in shifts.iter().enumerate() {
                    proj.row_mut(j).scale_mut(*s);
                }
                *z += directions * proj;
                z.scale_mut(*sigma);
            }
            CovarianceRoot::Dense(root) => {
                *z = root * &*z;
            }
        }
    }
}

pub fn gen_disturbances_root(
    root: &CovarianceRoot,
    dist: ErrorDistribution,
    t: usize,
    rng: &mut SimRng,
) -> Result<DisturbanceMatrix> {
    let n = root.n();
    if n < 2 || t < 2 {
        return Err(Error::Input(format!(
            "panel must be at least 2 x 2, got {n} x {t}"
        )));
    }
    let sampler = dist.sampler()?;
    let mut z = DMatrix::zeros(n, t);
    sampler.fill(rng, z.as_mut_slice());
    root.apply(&mut z);
    DisturbanceMatrix::new(z)
}

/// Number of factors.
#[derive(Clone, Debug, PartialEq)]
pub enum FactorCount {
    Fixed(usize),
    /// `r = ⌊τ n⌋`.
    Proportional {
        tau: f64,
    },
}

/// Spike sizes `h_j`. A single value is broadcast to every factor.
#[derive(Clone, Debug, PartialEq)]
pub enum SpikeRule {
    Constant(Vec<f64>),
    /// `h_j = d_j n^α`.
    Power {
        d: Vec<f64>,
        alpha: f64,
    },
}

/// Factor-model alternative `ν_it = Σ_j ξ_ij f_tj + ε_it`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorAlternative {
    pub count: FactorCount,
    pub spikes: SpikeRule,
    /// Factor variances `σ_j²` (broadcast when a single value is given).
    pub factor_variances: Vec<f64>,
    /// Idiosyncratic variance `σ_ε²`.
    pub idio_variance: f64,
    pub loadings: LoadingPolicy,
}

fn broadcast(values: &[f64], r: usize, what: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; r]),
        len if len == r => Ok(values.to_vec()),
        len => Err(Error::Domain(format!(
            "{what}: expected 1 or {r} values, got {len}"
        ))),
    }
}

impl FactorAlternative {
    /// Fixed number of factors with constant spikes.
    pub fn weak(spikes: Vec<f64>) -> Self {
        FactorAlternative {
            count: FactorCount::Fixed(spikes.len()),
            spikes: SpikeRule::Constant(spikes),
            factor_variances: vec![1.0],
            idio_variance: 1.0,
            loadings: LoadingPolicy::Canonical,
        }
    }

    /// `r = ⌊τ n⌋` factors, each with spike `h`.
    pub fn divergent(tau: f64, h: f64) -> Self {
        FactorAlternative {
            count: FactorCount::Proportional { tau },
            spikes: SpikeRule::Constant(vec![h]),
            factor_variances: vec![1.0],
            idio_variance: 1.0,
            loadings: LoadingPolicy::Canonical,
        }
    }

    /// `r` factors with spikes `n^α`.
    pub fn intermediate(r: usize, alpha: f64) -> Self {
        FactorAlternative {
            count: FactorCount::Fixed(r),
            spikes: SpikeRule::Power {
                d: vec![1.0],
                alpha,
            },
            factor_variances: vec![1.0],
            idio_variance: 1.0,
            loadings: LoadingPolicy::Canonical,
        }
    }

    pub fn n_factors(&self, n: usize) -> usize {
        match self.count {
            FactorCount::Fixed(r) => r,
            FactorCount::Proportional { tau } => (tau * n as f64).floor() as usize,
        }
    }

    /// Spike exponent α (0 for constant spikes).
    pub fn alpha(&self) -> f64 {
        match self.spikes {
            SpikeRule::Constant(_) => 0.0,
            SpikeRule::Power { alpha, .. } => alpha,
        }
    }

    /// τ (0 for a fixed number of factors).
    pub fn tau(&self) -> f64 {
        match self.count {
            FactorCount::Fixed(_) => 0.0,
            FactorCount::Proportional { tau } => tau,
        }
    }

    /// `4α + τ`, which decides how many moments of `z` the alternative CLT needs
    /// (sixth when ≤ 1, sixteenth otherwise).
    pub fn moment_regime(&self) -> f64 {
        4.0 * self.alpha() + self.tau()
    }

    /// Evaluated spike sizes for dimension `n`.
    pub fn spikes(&self, n: usize) -> Result<Vec<f64>> {
        let r = self.n_factors(n);
        if r == 0 {
            return Err(Error::Domain(format!(
                "factor alternative yields r = 0 at n = {n}"
            )));
        }
        if r >= n {
            return Err(Error::Domain(format!(
                "number of factors r = {r} must be below n = {n}"
            )));
        }
        if let FactorCount::Proportional { tau } = self.count {
            if !(0.0..1.0).contains(&tau) {
                return Err(Error::Domain(format!("tau must lie in [0, 1), got {tau}")));
            }
        }
        let h = match &self.spikes {
            SpikeRule::Constant(h) => broadcast(h, r, "spikes")?,
            SpikeRule::Power { d, alpha } => {
                if !(0.0..=1.0).contains(alpha) {
                    return Err(Error::Domain(format!(
                        "alpha must lie in [0, 1], got {alpha}"
                    )));
                }
                broadcast(d, r, "spike constants")?
                    .into_iter()
                    .map(|dj| dj * (n as f64).powf(*alpha))
                    .collect()
            }
        };
        if let Some(bad) = h.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::Domain(format!(
                "spike sizes must be finite and >= 0, got {bad}"
            )));
        }
        Ok(h)
    }

    /// Population covariance `σ_ε² (I + Σ_j h_j e_j e_jᵀ)`.
    pub fn covariance(&self, n: usize) -> Result<CovarianceSpec> {
        Ok(CovarianceSpec::SpikedFactor {
            base: self.idio_variance,
            spikes: self.spikes(n)?,
            loadings: self.loadings.clone(),
        })
    }
}

/// Draws disturbances by explicit factor construction: factors
/// `f_tj = σ_j z`, loadings `ξ_j = σ_ε √h_j / σ_j · e_j`, and idiosyncratic
/// errors `ε_it = σ_ε z`, all `z` i.i.d. from `dist`.
pub fn gen_factor_disturbances(
    alt: &FactorAlternative,
    dist: ErrorDistribution,
    n: usize,
    t: usize,
    seed: u64,
) -> Result<DisturbanceMatrix> {
    let mut eps_rng = rng::replication_rng(seed, 0, Purpose::Disturbances);
    let mut factor_rng = rng::replication_rng(seed, 0, Purpose::Factors);
    gen_factor_disturbances_rng(alt, dist, n, t, &mut eps_rng, &mut factor_rng)
}

pub fn gen_factor_disturbances_rng(
    alt: &FactorAlternative,
    dist: ErrorDistribution,
    n: usize,
    t: usize,
    eps_rng: &mut SimRng,
    factor_rng: &mut SimRng,
) -> Result<DisturbanceMatrix> {
    if n < 2 || t < 2 {
        return Err(Error::Input(format!(
            "panel must be at least 2 x 2, got {n} x {t}"
        )));
    }
    let h = alt.spikes(n)?;
    let r = h.len();
    if !(alt.idio_variance.is_finite() && alt.idio_variance > 0.0) {
        return Err(Error::Domain("idiosyncratic variance must be > 0".into()));
    }
    let fvar = broadcast(&alt.factor_variances, r, "factor variances")?;
    if fvar.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain("factor variances must be > 0".into()));
    }
    let sampler = dist.sampler()?;
    let sigma_eps = alt.idio_variance.sqrt();

    // loadings Ξ (n × r)
    let directions = match &alt.loadings {
        LoadingPolicy::Canonical => DMatrix::from_fn(n, r, |i, j| if i == j { 1.0 } else { 0.0 }),
        LoadingPolicy::RandomOrthonormal { seed } => random_orthonormal(n, r, *seed),
    };
    let mut xi = directions;
    for j in 0..r {
        let norm = sigma_eps * h[j].sqrt() / fvar[j].sqrt();
        xi.column_mut(j).scale_mut(norm);
    }
    // factors F (r × T)
    let mut f = DMatrix::zeros(r, t);
    sampler.fill(factor_rng, f.as_mut_slice());
    for j in 0..r {
        f.row_mut(j).scale_mut(fvar[j].sqrt());
    }
    let mut v = DMatrix::zeros(n, t);
    sampler.fill(eps_rng, v.as_mut_slice());
    v.scale_mut(sigma_eps);
    v += xi * f;
    DisturbanceMatrix::new(v)
}

/// Law of the regressors `x_itk`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RegressorLaw {
    #[default]
    Gaussian,
    /// Uniform on `[−√3, √3]`.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PanelOptions {
    pub regressors: RegressorLaw,
    /// Draw `μ_i = N(0,1) + 0.5 x̄_i1`; otherwise `μ ≡ 0`.
    pub fixed_effects: bool,
}

impl Default for PanelOptions {
    fn default() -> Self {
        PanelOptions {
            regressors: RegressorLaw::Gaussian,
            fixed_effects: true,
        }
    }
}

/// Parameters a panel was generated from.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelTruth {
    pub beta: Vec<f64>,
    pub mu: Vec<f64>,
    pub disturbances: DisturbanceMatrix,
}

/// A balanced panel `y_it = x_itᵀ β + μ_i + ν_it`.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelData {
    /// `n × T` responses.
    pub y: DMatrix<f64>,
    /// One `n × T` matrix per regressor.
    pub x: Vec<DMatrix<f64>>,
    pub truth: Option<PanelTruth>,
}

impl PanelData {
    pub fn new(y: DMatrix<f64>, x: Vec<DMatrix<f64>>) -> Result<Self> {
        let p = PanelData { y, x, truth: None };
        p.validate()?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn t(&self) -> usize {
        self.y.ncols()
    }

    pub fn k(&self) -> usize {
        self.x.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, t) = self.y.shape();
        if n < 2 || t < 2 {
            return Err(Error::Input(format!(
                "panel must be at least 2 x 2, got {n} x {t}"
            )));
        }
        if self.x.is_empty() {
            return Err(Error::Input("panel needs at least one regressor".into()));
        }
        for (j, xj) in self.x.iter().enumerate() {
            if xj.shape() != (n, t) {
                return Err(Error::Input(format!(
                    "regressor {} has shape {:?}, expected {:?}",
                    j + 1,
                    xj.shape(),
                    (n, t)
                )));
            }
        }
        let finite = self
            .y
            .iter()
            .chain(self.x.iter().flat_map(|m| m.iter()))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Input("panel contains non-finite values".into()));
        }
        Ok(())
    }
}

pub fn gen_panel(beta: &[f64], v: &DisturbanceMatrix, regressor_seed: u64) -> Result<PanelData> {
    let mut x_rng = rng::replication_rng(regressor_seed, 0, Purpose::Regressors);
    let mut mu_rng = rng::replication_rng(regressor_seed, 0, Purpose::FixedEffects);
    gen_panel_rng(beta, v, &PanelOptions::default(), &mut x_rng, &mut mu_rng)
}

pub fn gen_panel_rng(
    beta: &[f64],
    v: &DisturbanceMatrix,
    opts: &PanelOptions,
    x_rng: &mut SimRng,
    mu_rng: &mut SimRng,
) -> Result<PanelData> {
    if beta.is_empty() {
        return Err(Error::Input(
            "beta must have at least one coefficient".into(),
        ));
    }
    let (n, t) = (v.n(), v.t());
    let sampler = match opts.regressors {
        RegressorLaw::Gaussian => ErrorDistribution::Gaussian,
        RegressorLaw::Uniform => ErrorDistribution::StandardizedUniform,
    }
    .sampler()?;
    let x: Vec<DMatrix<f64>> = (0..beta.len())
        .map(|_| {
            let mut m = DMatrix::zeros(n, t);
            sampler.fill(x_rng, m.as_mut_slice());
            m
        })
        .collect();
    let mu: Vec<f64> = if opts.fixed_effects {
        (0..n)
            .map(|i| {
                let z: f64 = StandardNormal.sample(mu_rng);
                z + 0.5 * x[0].row(i).mean()
            })
            .collect()
    } else {
        vec![0.0; n]
    };
    let mut y = v.values().clone();
    for (b, xj) in beta.iter().zip(&x) {
        y += xj * *b;
    }
    for (i, m) in mu.iter().enumerate() {
        y.row_mut(i).add_scalar_mut(*m);
    }
    let panel = PanelData {
        y,
        x,
        truth: Some(PanelTruth {
            beta: beta.to_vec(),
            mu,
            disturbances: v.clone(),
        }),
    };
    panel.validate()?;
    Ok(panel)
}
