//! Closed-form asymptotic means, variances and power functions.
//!
//! Every power function is for the one-sided test that rejects when the
//! standardized statistic exceeds the upper normal quantile `Z_α`.

use crate::dist::{normal_sf, normal_upper_quantile};
use crate::error::{Error, Result};
use crate::kernels::SigmaTraces;

/// Relative slack when checking `η₂ ≥ η₁²`-type spectrum inequalities.
const SPECTRUM_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PowerResult {
    pub power: f64,
    pub alpha: f64,
    pub scenario: String,
    /// Inputs and intermediates, in evaluation order.
    pub inputs: Vec<(String, f64)>,
}

impl PowerResult {
    fn new(power: f64, alpha: f64, scenario: &str, inputs: &[(&str, f64)]) -> Self {
        PowerResult {
            power: power.clamp(0.0, 1.0),
            alpha,
            scenario: scenario.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn to_key_values(&self) -> String {
        let mut out = format!(
            "scenario={}\npower={}\nalpha={}\n",
            self.scenario, self.power, self.alpha
        );
        for (k, v) in &self.inputs {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Weak factors, fixed count, `n/T → c`:
/// `P = 1 − Φ(Z_α − Σ h_j² / (2 c_T))`.
pub fn power_weak_lpa(h: &[f64], c_t: f64, alpha: f64) -> Result<PowerResult> {
    check_alpha(alpha)?;
    if !(c_t.is_finite() && c_t > 0.0) {
        return Err(Error::Domain(format!("c_T must be > 0, got {c_t}")));
    }
    if let Some(bad) = h.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::Domain(format!(
            "spikes must be finite and >= 0, got {bad}"
        )));
    }
    let z = normal_upper_quantile(alpha);
    let shift = h.iter().map(|x| x * x).sum::<f64>() / (2.0 * c_t);
    Ok(PowerResult::new(
        normal_sf(z - shift),
        alpha,
        "weak-s1-lpa",
        &[("c_t", c_t), ("z_alpha", z), ("mean_shift", shift)],
    ))
}

/// Weak factors, fixed count, `n/T → ∞`, in terms of the spectral limits
/// `η = (tr Σ/n, tr Σ²/n, n⁻¹ Σ Σᵢᵢ²)`.
pub fn power_weak_ulpa(
    eta: (f64, f64, f64),
    gamma4: f64,
    t: usize,
    alpha: f64,
) -> Result<PowerResult> {
    check_alpha(alpha)?;
    let (e1, e2, e3) = eta;
    if !(e1 > 0.0 && e2 > 0.0 && e3.is_finite() && gamma4.is_finite()) {
        return Err(Error::Domain(format!(
            "invalid eta limits {eta:?} or gamma4 {gamma4}"
        )));
    }
    let e1sq = e1 * e1;
    if e2 < e1sq * (1.0 - SPECTRUM_SLACK) {
        return Err(Error::Domain(format!(
            "impossible spectrum: eta2 = {e2} < eta1^2 = {e1sq}"
        )));
    }
    let z = normal_upper_quantile(alpha);
    let tf = t as f64;
    let arg = e1sq / e2 * z
        + (e1sq * (gamma4 - 2.0) - e2 - e3 * (gamma4 - 3.0)) / (2.0 * e2)
        + (e1sq - e2) * tf / (2.0 * e2);
    Ok(PowerResult::new(
        normal_sf(arg),
        alpha,
        "weak-s1-ulpa",
        &[
            ("eta1", e1),
            ("eta2", e2),
            ("eta3", e3),
            ("gamma4", gamma4),
            ("t", tf),
            ("argument", arg),
        ],
    ))
}

/// Mean and variance of `U` under a general spiked alternative
/// (`T(U − μ)/σ → N(0, 1)`), with the trace-scale intermediates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct H1StarMoments {
    pub mu: f64,
    pub sigma2: f64,
    /// `tr Σ`
    pub theta1: f64,
    /// `E tr S²`
    pub theta2: f64,
    /// `var(tr S)`
    pub omega1: f64,
    /// `cov(tr S², tr S)`
    pub omega2: f64,
    /// `var(tr S²)`
    pub omega3: f64,
    /// The variance expression evaluated exactly as typeset in the source
    /// result (`2(tr Σ)²` inside ω₁ and a `1/c_T²` prefactor). It does not
    /// reduce to the null variance 4 and is kept only for comparison.
    pub sigma2_as_printed: f64,
}

pub fn h1star_moments(st: &SigmaTraces, gamma4: f64, n: usize, t: usize) -> Result<H1StarMoments> {
    if !(st.tr1 > 0.0) {
        return Err(Error::Domain(format!(
            "tr Sigma must be > 0, got {}",
            st.tr1
        )));
    }
    if st.n != n {
        return Err(Error::Domain(format!(
            "traces are for n = {} but n = {n} was given",
            st.n
        )));
    }
    if t < 2 {
        return Err(Error::Domain("T must be at least 2".into()));
    }
    let (nf, tf) = (n as f64, t as f64);
    let c = nf / tf;
    let k = gamma4 - 3.0;
    let (tr1, tr2, tr3, tr4) = (st.tr1, st.tr2, st.tr3, st.tr4);
    let (h11, h12, h22) = (st.had11, st.had12, st.had22);

    let mu = c * (k * h11 + (tf + 1.0) * tr2) / (tr1 * tr1) + c - 1.0;

    let theta1 = tr1;
    let theta2 = (k * h11 + tr1 * tr1 + (tf + 1.0) * tr2) / tf;
    let omega1 = (k * h11 + 2.0 * tr2) / tf;
    let omega2 =
        (4.0 * tr2 * tr1 + 2.0 * k * h11 * tr1 + 2.0 * tf * k * h12 + 4.0 * tf * tr3) / tf.powi(2);
    let omega3 = (8.0 * tr2 * tr1 * tr1
        + 4.0 * k * tr1 * tr1 * h11
        + 16.0 * tf * tr1 * tr3
        + 4.0 * tf * tr2 * tr2
        + 8.0 * tf * k * h12 * tr1
        + 4.0 * tf * tf * k * h22
        + 8.0 * tf * tf * tr4)
        / tf.powi(3);

    // Delta method for U = n·x/y² − 1 with x = tr S², y = tr S, scaled by T².
    let bracket = |w1: f64| {
        let t4 = tf.powi(4);
        4.0 * t4 * theta2 * theta2 / theta1.powi(6) * w1
            - 4.0 * t4 * theta2 / theta1.powi(5) * omega2
            + t4 / theta1.powi(4) * omega3
    };
    let sigma2 = c * c * bracket(omega1);
    let omega1_printed = (k * h11 + 2.0 * tr1 * tr1) / tf;
    let sigma2_as_printed = bracket(omega1_printed) / (c * c);

    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::Domain(format!(
            "alternative variance is not positive ({sigma2:e})"
        )));
    }
    Ok(H1StarMoments {
        mu,
        sigma2,
        theta1,
        theta2,
        omega1,
        omega2,
        omega3,
        sigma2_as_printed,
    })
}

/// Divergent number of weak factors:
/// `P = 1 − Φ([2Z_α + (1+ν₄)(1 − τ⁻¹) + n(1 − B₂/B₁²)]/σ)`.
///
/// `nu4` defaults to `γ₄ − 3`. `sigma` is the standard deviation of `TU`
/// under the alternative, normally taken from [`h1star_moments`].
#[allow(clippy::too_many_arguments)]
pub fn power_s2(
    b1: f64,
    b2: f64,
    n: usize,
    tau: f64,
    gamma4: f64,
    sigma: f64,
    alpha: f64,
    nu4: Option<f64>,
) -> Result<PowerResult> {
    check_alpha(alpha)?;
    if tau == 0.0 {
        return Err(Error::Domain(
            "tau = 0 means a fixed number of factors; use the S3 power function".into(),
        ));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("tau must lie in (0, 1), got {tau}")));
    }
    if !(b1 > 0.0 && b2 >= b1 * b1 * (1.0 - SPECTRUM_SLACK)) {
        return Err(Error::Domain(format!(
            "need B1 > 0 and B2 >= B1^2, got B1 = {b1}, B2 = {b2}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    let nu4 = nu4.unwrap_or(gamma4 - 3.0);
    let z = normal_upper_quantile(alpha);
    let nf = n as f64;
    let arg = (2.0 * z + (1.0 + nu4) * (1.0 - 1.0 / tau) + nf * (1.0 - b2 / (b1 * b1))) / sigma;
    Ok(PowerResult::new(
        normal_sf(arg),
        alpha,
        "divergent-s2",
        &[
            ("b1", b1),
            ("b2", b2),
            ("n", nf),
            ("tau", tau),
            ("nu4", nu4),
            ("sigma", sigma),
            ("argument", arg),
        ],
    ))
}

/// Fixed number of intermediate (or strong) factors:
/// `P = 1 − Φ([2Z_α + n + (γ₄ − 2) − Tμ]/σ)` with `μ`, `σ` from
/// [`h1star_moments`].
pub fn power_s3(
    mu: f64,
    sigma: f64,
    n: usize,
    t: usize,
    gamma4: f64,
    alpha: f64,
) -> Result<PowerResult> {
    check_alpha(alpha)?;
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    let z = normal_upper_quantile(alpha);
    let (nf, tf) = (n as f64, t as f64);
    let arg = (2.0 * z + nf + (gamma4 - 2.0) - tf * mu) / sigma;
    Ok(PowerResult::new(
        normal_sf(arg),
        alpha,
        "intermediate-s3",
        &[
            ("mu", mu),
            ("sigma", sigma),
            ("n", nf),
            ("t", tf),
            ("gamma4", gamma4),
            ("argument", arg),
        ],
    ))
}

/// Which limiting-variance formula of the general bounded-covariance result
/// was used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuppBranch {
    /// `γ₄ = 3`, any eigenvectors.
    Gaussian,
    /// Diagonal `Σ`, any `γ₄`.
    Diagonal,
}

pub const VARTHETA_AMBIGUITY_NOTE: &str =
    "vartheta2 is the second moment of F^{c,H}, which already \
contains theta2; the centering (vartheta2 + theta2)/vartheta1^2 - 1 then equals 1 + c at Sigma = I \
instead of c, so T * center exceeds the null mean n by about T. Evaluated as stated; compare with \
Monte-Carlo before relying on it";

#[derive(Clone, Debug, PartialEq)]
pub struct SuppResult {
    pub branch: SuppBranch,
    /// `s₁²` or `s₂²`.
    pub s2: f64,
    /// `T((ϑ₂ + θ₂ [+ γ₄ − 3])/ϑ₁² − 1)`, the stated centring of `TU`.
    pub center: f64,
    pub power: f64,
    pub note: &'static str,
}

/// Limiting variance, centring and power of the raw-data John test under a
/// general bounded-norm covariance.
#[allow(clippy::too_many_arguments)]
pub fn supp_general_covariance(
    theta: [f64; 4],
    vartheta: (f64, f64),
    c: f64,
    t: usize,
    gamma4: f64,
    diagonal: bool,
    alpha: f64,
) -> Result<SuppResult> {
    check_alpha(alpha)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("c must be > 0, got {c}")));
    }
    let [_, th2, _, _] = theta;
    let (v1, v2) = vartheta;
    if !(v1 > 0.0) {
        return Err(Error::Domain(format!("vartheta1 must be > 0, got {v1}")));
    }
    let branch = if (gamma4 - 3.0).abs() <= 1e-12 {
        SuppBranch::Gaussian
    } else if diagonal {
        SuppBranch::Diagonal
    } else {
        return Err(Error::Unsupported(
            "the limiting distribution for non-Gaussian data with a non-diagonal covariance is more \
             complex, depending on the eigenvectors of Sigma_n"
                .into(),
        ));
    };
    let tf = t as f64;
    let z = normal_upper_quantile(alpha);
    let (s2, m, drift) = match branch {
        SuppBranch::Gaussian => (supp_s1_squared(theta, vartheta, c), v2 + th2, 1.0),
        SuppBranch::Diagonal => (
            supp_s2_squared(theta, vartheta, c, gamma4),
            v2 + th2 + gamma4 - 3.0,
            gamma4 - 2.0,
        ),
    };
    let center = tf * (m / (v1 * v1) - 1.0);
    let arg_num = 2.0 * z + drift + tf * (c + 1.0 - m / (v1 * v1));
    if !(s2.is_finite() && s2 > 0.0) {
        return Err(Error::Domain(format!(
            "limiting variance formula evaluates to a non-positive value ({s2:e}) for these moments"
        )));
    }
    Ok(SuppResult {
        branch,
        s2,
        center,
        power: normal_sf(arg_num / s2.sqrt()),
        note: VARTHETA_AMBIGUITY_NOTE,
    })
}

/// `s₁²`, the limiting variance of `TU` for `γ₄ = 3`.
pub fn supp_s1_squared(theta: [f64; 4], vartheta: (f64, f64), c: f64) -> f64 {
    let [th1, th2, th3, th4] = theta;
    let (v1, v2) = vartheta;
    let m = v2 + th2;
    (8.0 * th4 / c + 4.0 * th2 * th2 + 8.0 * c * th1 * th1 * th2 + 16.0 * th1 * th3) / v1.powi(4)
        - (16.0 * th3 / c + 16.0 * th1 * th2) * m / v1.powi(5)
        + 8.0 * th2 * m * m / (c * v1.powi(6))
}

/// `s₂²`, the limiting variance of `TU` for diagonal `Σ`.
pub fn supp_s2_squared(theta: [f64; 4], vartheta: (f64, f64), c: f64, gamma4: f64) -> f64 {
    let [th1, th2, th3, th4] = theta;
    let (v1, v2) = vartheta;
    let m = v2 + th2 + gamma4 - 3.0;
    (gamma4 - 1.0)
        * ((4.0 * th4 / c + 2.0 * th2 * th2 + 4.0 * c * th1 * th1 * th2 + 8.0 * th1 * th3)
            / v1.powi(4)
            + 4.0 * th2 * m * m / (c * v1.powi(6))
            - (8.0 * th3 / c + 8.0 * th1 * th2) * m / v1.powi(5))
}
