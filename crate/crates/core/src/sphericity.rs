//! John's statistic and the three sphericity tests built on it.
//!
//! All tests reject for large values of `U` (right tail).

use std::fmt;

use crate::dist::{chi2_upper_tail, normal_sf};
use crate::error::{Error, Result};
use crate::kernels::{sample_traces, SampleTracePair};
use crate::within::{gamma4_hat, gamma4_hat_standardized, WithinFit};

/// Residual mean square below this fraction of the demeaned response mean
/// square counts as a perfect fit.
const PERFECT_FIT_RATIO: f64 = 1e-20;

/// Largest χ² degrees of freedom the classic test accepts.
const MAX_CLASSIC_DF: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestVariant {
    /// Fixed-n χ² limit.
    ClassicChi2,
    /// Raw-data normal limit `TU − n → N(γ₄ − 2, 4)`.
    RawLargePanel,
    /// Residual-based test on within residuals.
    Grj,
}

impl fmt::Display for TestVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestVariant::ClassicChi2 => "classic-chi2",
            TestVariant::RawLargePanel => "raw-lpa-ulpa",
            TestVariant::Grj => "grj",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestReport {
    /// `U` (raw data) or `Û` (residuals).
    pub u: f64,
    /// The centred and scaled statistic the p-value is read from.
    pub standardized: f64,
    pub p_value: f64,
    pub variant: TestVariant,
    pub n: usize,
    pub t: usize,
    /// `n / T`.
    pub c_t: f64,
    pub gamma4_hat: Option<f64>,
    pub notes: String,
}

impl TestReport {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }

    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut out = format!(
            "variant={}\nn={}\nt={}\nc_t={}\nu={}\nstandardized={}\np_value={}\n",
            self.variant, self.n, self.t, self.c_t, self.u, self.standardized, self.p_value
        );
        if let Some(g) = self.gamma4_hat {
            out.push_str(&format!("gamma4_hat={g}\n"));
        }
        if !self.notes.is_empty() {
            out.push_str(&format!("notes={}\n", self.notes));
        }
        out
    }
}

/// `U = (n⁻¹ tr S)⁻² (n⁻¹ tr S²) − 1`.
pub fn john_u(tp: &SampleTracePair) -> Result<f64> {
    if !(tp.tr_s > 0.0) {
        return Err(Error::Domain(
            "tr S is zero: John's statistic is undefined for all-zero data".into(),
        ));
    }
    let n = tp.n as f64;
    let u = n * tp.tr_s2 / (tp.tr_s * tp.tr_s) - 1.0;
    // Cauchy–Schwarz gives U ≥ 0; clip rounding noise at exact sphericity.
    Ok(u.max(0.0))
}

fn check_dims(n: usize, t: usize) -> Result<()> {
    if n < 2 || t < 2 {
        return Err(Error::Input(format!(
            "need n >= 2 and T >= 2, got n = {n}, T = {t}"
        )));
    }
    Ok(())
}

/// Fixed-n test: `nTU/2 ~ χ²` with `n(n+1)/2 − 1` degrees of freedom.
pub fn classic_john_test(u: f64, n: usize, t: usize) -> Result<TestReport> {
    check_dims(n, t)?;
    let nf = n as f64;
    let df = nf * (nf + 1.0) / 2.0 - 1.0;
    if df > MAX_CLASSIC_DF {
        return Err(Error::Domain(format!(
            "chi-square degrees of freedom {df:e} too large for n = {n}; use the raw-lpa-ulpa or grj variant"
        )));
    }
    let tf = t as f64;
    let stat = nf * tf * u / 2.0;
    Ok(TestReport {
        u,
        standardized: tf * u - nf,
        p_value: chi2_upper_tail(stat, df),
        variant: TestVariant::ClassicChi2,
        n,
        t,
        c_t: nf / tf,
        gamma4_hat: None,
        notes: format!("df={df}"),
    })
}

/// Large-panel test on raw disturbances, identical under both regimes:
/// `(TU − n − (γ₄ − 2))/2 → N(0, 1)`.
pub fn raw_panel_test(u: f64, gamma4: f64, n: usize, t: usize) -> Result<TestReport> {
    check_dims(n, t)?;
    if !gamma4.is_finite() {
        return Err(Error::Input(format!("gamma4 must be finite, got {gamma4}")));
    }
    let (nf, tf) = (n as f64, t as f64);
    let z = (tf * u - nf - (gamma4 - 2.0)) / 2.0;
    Ok(TestReport {
        u,
        standardized: z,
        p_value: normal_sf(z),
        variant: TestVariant::RawLargePanel,
        n,
        t,
        c_t: nf / tf,
        gamma4_hat: Some(gamma4),
        notes: String::new(),
    })
}

/// Drift used to centre `TÛ − n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ResidualDrift {
    /// `c_T = n/T`.
    #[default]
    NOverT,
    /// `n/(T − 1)`, the Gaussian residual-based centring, for comparison.
    NOverTMinusOne,
}

impl ResidualDrift {
    pub fn value(self, n: usize, t: usize) -> f64 {
        match self {
            ResidualDrift::NOverT => n as f64 / t as f64,
            ResidualDrift::NOverTMinusOne => n as f64 / (t as f64 - 1.0),
        }
    }
}

/// Where the fourth moment in the GRJ centring comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Gamma4Source {
    /// Fourth moment of the residuals rescaled to unit mean square.
    #[default]
    Standardized,
    /// Plain `(nT)⁻¹ Σ ν̂⁴`.
    Raw,
    Known(f64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GrjOptions {
    pub drift: ResidualDrift,
    pub gamma4: Gamma4Source,
}

/// `J = TÛ − n − (γ̂₄ + drift − 2)`. The same expression serves every
/// `(n, T)` regime.
pub fn grj_statistic(u_hat: f64, gamma4: f64, n: usize, t: usize, drift: ResidualDrift) -> f64 {
    let (nf, tf) = (n as f64, t as f64);
    tf * u_hat - nf - (gamma4 + drift.value(n, t) - 2.0)
}

pub fn grj_test(fit: &WithinFit) -> Result<TestReport> {
    grj_test_with(fit, &GrjOptions::default())
}

pub fn grj_test_with(fit: &WithinFit, opts: &GrjOptions) -> Result<TestReport> {
    let (n, t) = (fit.n, fit.t);
    check_dims(n, t)?;
    let tp = sample_traces(&fit.residuals);
    let mean_square = tp.tr_s / n as f64;
    if !(mean_square > PERFECT_FIT_RATIO * fit.demeaned_y_scale) || !(tp.tr_s > 0.0) {
        return Err(Error::Degenerate(
            "residuals are identically zero (perfect fit); the residual-based statistic is undefined".into(),
        ));
    }
    let u_hat = john_u(&tp)?;
    let g4 = match opts.gamma4 {
        Gamma4Source::Standardized => gamma4_hat_standardized(&fit.residuals)
            .ok_or_else(|| Error::Degenerate("residuals are identically zero".into()))?,
        Gamma4Source::Raw => gamma4_hat(&fit.residuals),
        Gamma4Source::Known(g) => g,
    };
    let j = grj_statistic(u_hat, g4, n, t, opts.drift);
    let z = j / 2.0;
    let mut notes = Vec::new();
    if opts.drift == ResidualDrift::NOverTMinusOne {
        notes.push("drift=n/(T-1)");
    }
    match opts.gamma4 {
        Gamma4Source::Standardized => {}
        Gamma4Source::Raw => notes.push("gamma4=raw"),
        Gamma4Source::Known(_) => notes.push("gamma4=known"),
    }
    Ok(TestReport {
        u: u_hat,
        standardized: z,
        p_value: normal_sf(z),
        variant: TestVariant::Grj,
        n,
        t,
        c_t: n as f64 / t as f64,
        gamma4_hat: Some(g4),
        notes: notes.join(","),
    })
}
