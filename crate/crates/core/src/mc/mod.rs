//! Reproducible Monte-Carlo experiments.
//!
//! Replication `r` draws every random quantity from streams keyed by
//! `(seed, r)`, so records do not depend on the thread count and adding
//! replications never changes earlier ones.

mod config;
mod diagnostics;
mod records;

pub use config::{Gamma4Choice, Generator, McConfig, Mode, Scenario, CONFIG_KEYS};
pub use diagnostics::{
    distribution_diagnostics, ks_diagnostics, Diagnostics, MIN_DIAGNOSTIC_SAMPLES,
};
pub use records::{
    fmt17, read_records, records_to_string, write_records, RepRecord, REP_CSV_HEADER,
};

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{
    eta_limits, mp_moments, sample_traces, sigma_traces, theta_moments, CovarianceSpec,
    DisturbanceMatrix,
};
use crate::power::{
    h1star_moments, power_s2, power_s3, power_weak_lpa, power_weak_ulpa, supp_general_covariance,
};
use crate::rng::{replication_rng, Purpose};
use crate::sim::{
    gen_disturbances_root, gen_factor_disturbances_rng, gen_panel_rng, CovarianceRoot,
    FactorAlternative, FactorCount, PanelOptions, SpikeRule,
};
use crate::sphericity::{grj_test_with, john_u, raw_panel_test, Gamma4Source, GrjOptions};
use crate::within::{gamma4_hat, gamma4_hat_standardized, within_ols};
use diagnostics::median;

/// Factor alternative of a scenario (`None` for null and general-cov).
pub fn scenario_alternative(cfg: &McConfig) -> Option<FactorAlternative> {
    let (count, spikes) = match cfg.scenario {
        Scenario::Null | Scenario::GeneralCov => return None,
        Scenario::WeakS1 => (
            FactorCount::Fixed(cfg.r),
            SpikeRule::Constant(cfg.h.clone()),
        ),
        Scenario::DivergentS2 => (
            FactorCount::Proportional { tau: cfg.tau },
            SpikeRule::Constant(cfg.h.clone()),
        ),
        Scenario::IntermediateS3 => (
            FactorCount::Fixed(cfg.r),
            SpikeRule::Power {
                d: cfg.d.clone(),
                alpha: cfg.spike_alpha,
            },
        ),
        Scenario::Strong => (
            FactorCount::Fixed(cfg.r),
            SpikeRule::Power {
                d: cfg.d.clone(),
                alpha: 1.0,
            },
        ),
    };
    Some(FactorAlternative {
        count,
        spikes,
        factor_variances: vec![cfg.factor_var],
        idio_variance: cfg.sigma2,
        loadings: cfg.loadings.clone(),
    })
}

/// Population covariance of the disturbances under a scenario.
pub fn scenario_covariance(cfg: &McConfig) -> Result<CovarianceSpec> {
    if !(cfg.sigma2 > 0.0) {
        return Err(Error::Domain(
            "sigma2 = 0: the covariance is identically zero".into(),
        ));
    }
    let n = cfg.effective_n();
    let spec = match cfg.scenario {
        Scenario::Null => CovarianceSpec::identity(cfg.sigma2),
        Scenario::GeneralCov => {
            let m = (cfg.general_mass * n as f64).round() as usize;
            CovarianceSpec::diagonal(
                (0..n)
                    .map(|i| {
                        if i < m {
                            cfg.general_value * cfg.sigma2
                        } else {
                            cfg.sigma2
                        }
                    })
                    .collect(),
            )
        }
        _ => scenario_alternative(cfg)
            .expect("factor scenario")
            .covariance(n)?,
    };
    spec.validate(n)?;
    Ok(spec)
}

/// Asymptotic power of the test under the configured scenario, with a note
/// when the formula carries a caveat.
pub fn theory_power(cfg: &McConfig) -> Result<(f64, Option<String>)> {
    let (n, t) = (cfg.effective_n(), cfg.t);
    let g4 = cfg.dist.gamma4();
    let spec = scenario_covariance(cfg)?;
    let s3 = |spec: &CovarianceSpec| -> Result<f64> {
        let m = h1star_moments(&sigma_traces(spec, n)?, g4, n, t)?;
        Ok(power_s3(m.mu, m.sigma2.sqrt(), n, t, g4, cfg.alpha)?.power)
    };
    Ok(match cfg.scenario {
        Scenario::Null => (cfg.alpha, None),
        Scenario::WeakS1 if cfg.ulpa_delta.is_some() => (
            power_weak_ulpa(eta_limits(&spec, n)?, g4, t, cfg.alpha)?.power,
            None,
        ),
        Scenario::WeakS1 => {
            let h = scenario_alternative(cfg)
                .expect("factor scenario")
                .spikes(n)?;
            (
                power_weak_lpa(&h, n as f64 / t as f64, cfg.alpha)?.power,
                None,
            )
        }
        Scenario::DivergentS2 => {
            let (b1, b2, _) = eta_limits(&spec, n)?;
            let sigma = h1star_moments(&sigma_traces(&spec, n)?, g4, n, t)?
                .sigma2
                .sqrt();
            (
                power_s2(b1, b2, n, cfg.tau, g4, sigma, cfg.alpha, None)?.power,
                None,
            )
        }
        Scenario::IntermediateS3 | Scenario::Strong => (s3(&spec)?, None),
        Scenario::GeneralCov => {
            let theta = theta_moments(&spec, n)?;
            let c = n as f64 / t as f64;
            let r =
                supp_general_covariance(theta, mp_moments(theta, c)?, c, t, g4, true, cfg.alpha)?;
            (r.power, Some(r.note.to_string()))
        }
    })
}

enum Source {
    Zero,
    Root(CovarianceRoot),
    Factor(FactorAlternative),
}

struct Plan<'a> {
    cfg: &'a McConfig,
    n: usize,
    source: Source,
    panel: PanelOptions,
    grj: GrjOptions,
}

impl<'a> Plan<'a> {
    fn new(cfg: &'a McConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.effective_n();
        let source = if cfg.sigma2 == 0.0 {
            Source::Zero
        } else {
            match (cfg.generator, scenario_alternative(cfg)) {
                (config::Generator::Factor, Some(alt)) => {
                    alt.spikes(n)?;
                    Source::Factor(alt)
                }
                _ => Source::Root(CovarianceRoot::new(&scenario_covariance(cfg)?, n)?),
            }
        };
        let gamma4 = match cfg.gamma4 {
            Gamma4Choice::Estimate => Gamma4Source::Standardized,
            Gamma4Choice::Plain => Gamma4Source::Raw,
            Gamma4Choice::True => Gamma4Source::Known(cfg.dist.gamma4()),
            Gamma4Choice::Known(g) => Gamma4Source::Known(g),
        };
        Ok(Plan {
            cfg,
            n,
            source,
            panel: PanelOptions {
                regressors: cfg.regressors,
                fixed_effects: cfg.fixed_effects,
            },
            grj: GrjOptions {
                drift: cfg.drift,
                gamma4,
            },
        })
    }

    fn disturbances(&self, rep: u64) -> Result<DisturbanceMatrix> {
        let (seed, t) = (self.cfg.seed, self.cfg.t);
        let mut eps = replication_rng(seed, rep, Purpose::Disturbances);
        match &self.source {
            Source::Zero => DisturbanceMatrix::zeros(self.n, t),
            Source::Root(root) => gen_disturbances_root(root, self.cfg.dist, t, &mut eps),
            Source::Factor(alt) => {
                let mut f = replication_rng(seed, rep, Purpose::Factors);
                gen_factor_disturbances_rng(alt, self.cfg.dist, self.n, t, &mut eps, &mut f)
            }
        }
    }

    fn replicate(&self, rep: u64) -> RepRecord {
        let (n, t) = (self.n, self.cfg.t);
        let v = match self.disturbances(rep) {
            Ok(v) => v,
            Err(e) => return RepRecord::failed(rep, failure_code(&e)),
        };
        let u = john_u(&sample_traces(&v));
        let mut rec = match self.cfg.mode {
            Mode::Raw => match u.and_then(|u| {
                let g4 = match self.cfg.gamma4 {
                    Gamma4Choice::Estimate => gamma4_hat_standardized(&v).unwrap_or(f64::NAN),
                    Gamma4Choice::Plain => gamma4_hat(&v),
                    Gamma4Choice::True => self.cfg.dist.gamma4(),
                    Gamma4Choice::Known(g) => g,
                };
                raw_panel_test(u, g4, n, t).map(|r| (u, g4, r))
            }) {
                Ok((u, g4, r)) => RepRecord {
                    rep,
                    u,
                    u_hat: f64::NAN,
                    gamma4_hat: g4,
                    j: 2.0 * r.standardized,
                    p_value: r.p_value,
                    gap: f64::NAN,
                    failure: None,
                },
                Err(e) => RepRecord::failed(rep, failure_code(&e)),
            },
            Mode::Residual => {
                let mut x_rng = replication_rng(self.cfg.seed, rep, Purpose::Regressors);
                let mut mu_rng = replication_rng(self.cfg.seed, rep, Purpose::FixedEffects);
                let report =
                    gen_panel_rng(&self.cfg.beta, &v, &self.panel, &mut x_rng, &mut mu_rng)
                        .and_then(|p| within_ols(&p))
                        .and_then(|fit| grj_test_with(&fit, &self.grj));
                match (u, report) {
                    (Ok(u), Ok(r)) => RepRecord {
                        rep,
                        u,
                        u_hat: r.u,
                        gamma4_hat: r.gamma4_hat.unwrap_or(f64::NAN),
                        j: 2.0 * r.standardized,
                        p_value: r.p_value,
                        gap: t as f64 * (r.u - u) - self.cfg.drift.value(n, t),
                        failure: None,
                    },
                    (Err(e), _) | (_, Err(e)) => RepRecord::failed(rep, failure_code(&e)),
                }
            }
        };
        if rec.failure.is_none() && !rec.j.is_finite() {
            rec = RepRecord::failed(rep, "non-finite-statistic".into());
        }
        rec
    }
}

fn failure_code(e: &Error) -> String {
    match e {
        Error::Degenerate(_) => "degenerate-residuals",
        Error::Domain(_) => "undefined-statistic",
        Error::Estimation(_) => "estimation-failed",
        Error::Input(_) => "invalid-input",
        _ => "error",
    }
    .to_string()
}

/// Runs every replication and returns the records in replication order.
pub fn run_replications(cfg: &McConfig) -> Result<Vec<RepRecord>> {
    let plan = Plan::new(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(|| {
        (0..cfg.reps as u64)
            .into_par_iter()
            .map(|r| plan.replicate(r))
            .collect()
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct McSummary {
    pub scenario: Scenario,
    pub mode: Mode,
    pub n: usize,
    pub t: usize,
    pub reps: usize,
    pub valid: usize,
    pub degenerate: usize,
    /// Failure code and count, sorted by code.
    pub failures: Vec<(String, usize)>,
    pub alpha: f64,
    pub rejection_rate: f64,
    pub mean_j: f64,
    pub var_j: f64,
    pub skew_j: f64,
    /// KS distance of `J/2` to N(0, 1).
    pub ks: f64,
    /// Mean of `TU − n` over replications with a defined `U`.
    pub mean_tu_minus_n: f64,
    pub gap_mean: f64,
    pub gap_median: f64,
    pub gap_median_abs: f64,
    pub theory_power: Option<f64>,
    pub theory_note: Option<String>,
    pub flags: Vec<String>,
    pub csv_path: Option<String>,
}

pub fn summarize(cfg: &McConfig, records: &[RepRecord]) -> McSummary {
    let (n, t) = (cfg.effective_n(), cfg.t);
    let valid: Vec<&RepRecord> = records.iter().filter(|r| r.is_valid()).collect();
    let mut counts = BTreeMap::new();
    for r in records.iter().filter_map(|r| r.failure.as_ref()) {
        *counts.entry(r.clone()).or_insert(0usize) += 1;
    }
    let mut flags = Vec::new();
    let js: Vec<f64> = valid.iter().map(|r| r.j).collect();
    let halves: Vec<f64> = js.iter().map(|j| j / 2.0).collect();
    let (mean_j, var_j, skew_j, ks) = match (
        distribution_diagnostics(&js),
        distribution_diagnostics(&halves),
    ) {
        (Ok(d), Ok(h)) => {
            if d.constant {
                flags.push("constant-statistic".to_string());
            }
            (d.mean, d.var, d.skew, h.ks)
        }
        _ => {
            flags.push(
                if valid.is_empty() {
                    "all-degenerate"
                } else {
                    "too-few-valid-reps"
                }
                .to_string(),
            );
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        }
    };
    let rejection_rate = if valid.is_empty() {
        f64::NAN
    } else {
        valid.iter().filter(|r| r.p_value < cfg.alpha).count() as f64 / valid.len() as f64
    };
    let tu: Vec<f64> = records
        .iter()
        .filter(|r| r.u.is_finite())
        .map(|r| t as f64 * r.u - n as f64)
        .collect();
    let gaps: Vec<f64> = valid
        .iter()
        .map(|r| r.gap)
        .filter(|g| g.is_finite())
        .collect();
    let abs_gaps: Vec<f64> = gaps.iter().map(|g| g.abs()).collect();
    let mean = |v: &[f64]| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let (theory_power, theory_note) = match theory_power(cfg) {
        Ok((p, note)) => (Some(p), note),
        Err(e) => (None, Some(format!("theory power unavailable: {e}"))),
    };
    if theory_note.is_some() {
        flags.push("theory-note".to_string());
    }
    let degenerate = records.len() - valid.len();
    if degenerate > 0 {
        flags.push("degenerate-reps-excluded".to_string());
    }
    McSummary {
        scenario: cfg.scenario,
        mode: cfg.mode,
        n,
        t,
        reps: records.len(),
        valid: valid.len(),
        degenerate,
        failures: counts.into_iter().collect(),
        alpha: cfg.alpha,
        rejection_rate,
        mean_j,
        var_j,
        skew_j,
        ks,
        mean_tu_minus_n: mean(&tu),
        gap_mean: mean(&gaps),
        gap_median: median(&gaps),
        gap_median_abs: median(&abs_gaps),
        theory_power,
        theory_note,
        flags,
        csv_path: None,
    }
}

impl McSummary {
    pub fn to_key_values(&self) -> String {
        let mut lines = vec![
            format!("scenario={}", self.scenario),
            format!(
                "mode={}",
                match self.mode {
                    Mode::Raw => "raw",
                    Mode::Residual => "residual",
                }
            ),
            format!("n={}", self.n),
            format!("t={}", self.t),
            format!("reps={}", self.reps),
            format!("valid={}", self.valid),
            format!("degenerate={}", self.degenerate),
        ];
        for (code, count) in &self.failures {
            lines.push(format!("failure.{code}={count}"));
        }
        lines.extend([
            format!("alpha={}", self.alpha),
            format!("rejection_rate={}", self.rejection_rate),
            format!("mean_J={}", self.mean_j),
            format!("var_J={}", self.var_j),
            format!("skew_J={}", self.skew_j),
            format!("ks_J_half={}", self.ks),
            format!("mean_TU_minus_n={}", self.mean_tu_minus_n),
            format!("gap_mean={}", self.gap_mean),
            format!("gap_median={}", self.gap_median),
            format!("gap_median_abs={}", self.gap_median_abs),
        ]);
        if let Some(p) = self.theory_power {
            lines.push(format!("theory_power={p}"));
        }
        if let Some(note) = &self.theory_note {
            lines.push(format!("theory_note={note}"));
        }
        if !self.flags.is_empty() {
            lines.push(format!("flags={}", self.flags.join(",")));
        }
        if let Some(p) = &self.csv_path {
            lines.push(format!("csv={p}"));
        }
        lines.join("\n") + "\n"
    }
}

pub fn run_experiment(cfg: &McConfig) -> Result<McSummary> {
    let records = run_replications(cfg)?;
    Ok(summarize(cfg, &records))
}

/// Runs the experiment and writes the per-replication CSV to `path`.
pub fn run_experiment_to_csv(cfg: &McConfig, path: impl AsRef<Path>) -> Result<McSummary> {
    let records = run_replications(cfg)?;
    let file = std::fs::File::create(path.as_ref())?;
    write_records(std::io::BufWriter::new(file), &records)?;
    let mut s = summarize(cfg, &records);
    s.csv_path = Some(path.as_ref().display().to_string());
    Ok(s)
}

/// Distribution of `T(Û − U) − c_T` at one panel size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapStats {
    pub n: usize,
    pub t: usize,
    pub reps_used: usize,
    pub mean: f64,
    pub median: f64,
    pub median_abs: f64,
}

/// Residual-gap study over panel sizes `(n, T)`.
pub fn gap_check(cfg: &McConfig, sizes: &[(usize, usize)]) -> Result<Vec<GapStats>> {
    if cfg.mode != Mode::Residual {
        return Err(Error::Config(
            "gap check needs residual mode: raw mode keeps no residuals to compare with the truth"
                .into(),
        ));
    }
    sizes
        .iter()
        .map(|&(n, t)| {
            let mut c = cfg.clone();
            c.n = n;
            c.t = t;
            c.ulpa_delta = None;
            let gaps: Vec<f64> = run_replications(&c)?
                .into_iter()
                .filter(|r| r.is_valid())
                .map(|r| r.gap)
                .collect();
            let abs: Vec<f64> = gaps.iter().map(|g| g.abs()).collect();
            Ok(GapStats {
                n,
                t,
                reps_used: gaps.len(),
                mean: if gaps.is_empty() {
                    f64::NAN
                } else {
                    gaps.iter().sum::<f64>() / gaps.len() as f64
                },
                median: median(&gaps),
                median_abs: median(&abs),
            })
        })
        .collect()
}
