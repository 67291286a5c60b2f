//! Experiment configuration: `key=value` lines, `#` comments.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels::LoadingPolicy;
use crate::sim::{ErrorDistribution, RegressorLaw};
use crate::sphericity::ResidualDrift;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Null,
    WeakS1,
    DivergentS2,
    IntermediateS3,
    Strong,
    GeneralCov,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Null,
        Scenario::WeakS1,
        Scenario::DivergentS2,
        Scenario::IntermediateS3,
        Scenario::Strong,
        Scenario::GeneralCov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Null => "null",
            Scenario::WeakS1 => "weak-s1",
            Scenario::DivergentS2 => "divergent-s2",
            Scenario::IntermediateS3 => "intermediate-s3",
            Scenario::Strong => "strong",
            Scenario::GeneralCov => "general-cov",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!(
                    "unknown scenario '{s}'; valid scenarios: {}",
                    valid.join(", ")
                ))
            })
    }
}

/// Which statistic each replication computes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// John's test on the true disturbances.
    Raw,
    /// GRJ test on within residuals of a simulated regression.
    #[default]
    Residual,
}

/// Disturbance construction for factor scenarios.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Generator {
    /// `V = Σ^{1/2} Z`.
    #[default]
    Sqrt,
    /// Explicit loadings, factors and idiosyncratic errors.
    Factor,
}

/// Fourth-moment input for the centring of `J`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Gamma4Choice {
    /// Standardized sample fourth moment (of residuals, or of `V` in raw mode).
    #[default]
    Estimate,
    /// Plain `(nT)⁻¹ Σ v⁴`.
    Plain,
    /// The fourth moment of the generating distribution.
    True,
    Known(f64),
}

impl FromStr for Gamma4Choice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimate" => Ok(Gamma4Choice::Estimate),
            "plain" => Ok(Gamma4Choice::Plain),
            "true" => Ok(Gamma4Choice::True),
            other => {
                let v = other.strip_prefix("known:").unwrap_or(other);
                v.parse::<f64>().map(Gamma4Choice::Known).map_err(|_| {
                    Error::Config(format!(
                        "gamma4 must be estimate, plain, true or a number, got '{s}'"
                    ))
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub t: usize,
    /// When set, `n = ⌈T^δ⌉`.
    pub ulpa_delta: Option<f64>,
    pub reps: usize,
    pub seed: u64,
    pub dist: ErrorDistribution,
    pub alpha: f64,
    /// Number of factors (weak, intermediate and strong scenarios).
    pub r: usize,
    /// Factor fraction for the divergent scenario.
    pub tau: f64,
    /// Spike sizes (weak and divergent scenarios); one value is broadcast.
    pub h: Vec<f64>,
    /// Spike constants `d_j` in `h_j = d_j n^α`.
    pub d: Vec<f64>,
    pub spike_alpha: f64,
    /// Idiosyncratic (base) variance. Zero produces identically zero
    /// disturbances, so every replication is degenerate.
    pub sigma2: f64,
    pub factor_var: f64,
    pub loadings: LoadingPolicy,
    pub generator: Generator,
    pub k: usize,
    pub beta: Vec<f64>,
    pub mode: Mode,
    pub regressors: RegressorLaw,
    pub fixed_effects: bool,
    /// Share of eigenvalues set to `general_value` in the general-cov scenario.
    pub general_mass: f64,
    pub general_value: f64,
    pub gamma4: Gamma4Choice,
    pub drift: ResidualDrift,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            scenario: Scenario::Null,
            n: 100,
            t: 100,
            ulpa_delta: None,
            reps: 1000,
            seed: 1,
            dist: ErrorDistribution::Gaussian,
            alpha: 0.05,
            r: 1,
            tau: 0.2,
            h: vec![2.0],
            d: vec![1.0],
            spike_alpha: 0.6,
            sigma2: 1.0,
            factor_var: 1.0,
            loadings: LoadingPolicy::Canonical,
            generator: Generator::Sqrt,
            k: 1,
            beta: vec![1.0],
            mode: Mode::Residual,
            regressors: RegressorLaw::Gaussian,
            fixed_effects: true,
            general_mass: 0.5,
            general_value: 2.0,
            gamma4: Gamma4Choice::Estimate,
            drift: ResidualDrift::NOverT,
            threads: 0,
        }
    }
}

pub const CONFIG_KEYS: [&str; 28] = [
    "scenario",
    "n",
    "t",
    "ulpa_delta",
    "reps",
    "seed",
    "dist",
    "alpha",
    "r",
    "tau",
    "h",
    "d",
    "spike_alpha",
    "sigma2",
    "factor_var",
    "loadings",
    "generator",
    "k",
    "beta",
    "mode",
    "regressors",
    "fixed_effects",
    "general_mass",
    "general_value",
    "gamma4",
    "drift",
    "threads",
    "csv",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| num::<f64>(key, v.trim()))
        .collect()
}

impl McConfig {
    /// Parses a configuration file body, starting from the defaults.
    /// Returns the config and the optional `csv` output path.
    pub fn parse(text: &str) -> Result<(Self, Option<String>)> {
        let mut cfg = McConfig::default();
        let mut csv = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected key=value, got '{line}'",
                    lineno + 1
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "csv" {
                csv = Some(value.to_string());
            } else {
                cfg.set(key, value)
                    .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip(e))))?;
            }
        }
        cfg.validate()?;
        Ok((cfg, csv))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<(Self, Option<String>)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "scenario" => self.scenario = value.parse()?,
            "n" => self.n = num(key, value)?,
            "t" | "T" => self.t = num(key, value)?,
            "ulpa_delta" => self.ulpa_delta = Some(num(key, value)?),
            "reps" => self.reps = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "dist" => self.dist = value.parse()?,
            "alpha" => self.alpha = num(key, value)?,
            "r" => self.r = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "h" => self.h = list(key, value)?,
            "d" => self.d = list(key, value)?,
            "spike_alpha" => self.spike_alpha = num(key, value)?,
            "sigma2" => self.sigma2 = num(key, value)?,
            "factor_var" => self.factor_var = num(key, value)?,
            "loadings" => {
                self.loadings = match value {
                    "canonical" => LoadingPolicy::Canonical,
                    v => match v.strip_prefix("random:") {
                        Some(s) => LoadingPolicy::RandomOrthonormal { seed: num(key, s)? },
                        None => {
                            return Err(Error::Config(format!(
                                "loadings must be canonical or random:<seed>, got '{v}'"
                            )))
                        }
                    },
                }
            }
            "generator" => {
                self.generator = match value {
                    "sqrt" => Generator::Sqrt,
                    "factor" => Generator::Factor,
                    v => {
                        return Err(Error::Config(format!(
                            "generator must be sqrt or factor, got '{v}'"
                        )))
                    }
                }
            }
            "k" => {
                self.k = num(key, value)?;
                if self.beta.len() != self.k {
                    self.beta = vec![1.0; self.k];
                }
            }
            "beta" => {
                self.beta = list(key, value)?;
                self.k = self.beta.len();
            }
            "mode" => {
                self.mode = match value {
                    "raw" => Mode::Raw,
                    "residual" => Mode::Residual,
                    v => {
                        return Err(Error::Config(format!(
                            "mode must be raw or residual, got '{v}'"
                        )))
                    }
                }
            }
            "regressors" => {
                self.regressors = match value {
                    "gaussian" => RegressorLaw::Gaussian,
                    "uniform" => RegressorLaw::Uniform,
                    v => {
                        return Err(Error::Config(format!(
                            "regressors must be gaussian or uniform, got '{v}'"
                        )))
                    }
                }
            }
            "fixed_effects" => self.fixed_effects = num(key, value)?,
            "general_mass" => self.general_mass = num(key, value)?,
            "general_value" => self.general_value = num(key, value)?,
            "gamma4" => self.gamma4 = value.parse()?,
            "drift" => {
                self.drift = match value {
                    "n/t" | "n/T" => ResidualDrift::NOverT,
                    "n/(t-1)" | "n/(T-1)" => ResidualDrift::NOverTMinusOne,
                    v => {
                        return Err(Error::Config(format!(
                            "drift must be n/t or n/(t-1), got '{v}'"
                        )))
                    }
                }
            }
            "threads" => self.threads = num(key, value)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown key '{other}'; valid keys: {}",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Cross-section dimension after applying the ULPA rule.
    pub fn effective_n(&self) -> usize {
        match self.ulpa_delta {
            // guard against T^δ landing a hair above an integer
            Some(delta) => ((self.t as f64).powf(delta) - 1e-9).ceil() as usize,
            None => self.n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.reps < 1 {
            return bad("reps must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if let Some(delta) = self.ulpa_delta {
            if !(delta > 1.0 && delta < 2.0) {
                return bad(format!("ulpa_delta must lie in (1, 2), got {delta}"));
            }
        }
        let n = self.effective_n();
        if n < 2 || self.t < 2 {
            return bad(format!(
                "panel must be at least 2 x 2, got {n} x {}",
                self.t
            ));
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return bad(format!("sigma2 must be >= 0, got {}", self.sigma2));
        }
        if !(self.factor_var.is_finite() && self.factor_var > 0.0) {
            return bad(format!("factor_var must be > 0, got {}", self.factor_var));
        }
        if self.k == 0 || self.beta.len() != self.k {
            return bad(format!(
                "k = {} does not match beta of length {}",
                self.k,
                self.beta.len()
            ));
        }
        if self.mode == Mode::Residual && self.t < 3 {
            return bad("residual mode needs T >= 3".into());
        }
        if self.scenario == Scenario::GeneralCov
            && !((0.0..=1.0).contains(&self.general_mass) && self.general_value > 0.0)
        {
            return bad("general_mass must lie in [0, 1] and general_value must be > 0".into());
        }
        self.dist.validate().map_err(|e| Error::Config(strip(e)))
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) | Error::Domain(m) | Error::Input(m) | Error::Parse(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_lists() {
        let (cfg, csv) = McConfig::parse(
            "# null run\nscenario = weak-s1\nn=50 # inline\nt=60\nh=1.5,2\nr=2\ndist=gamma:4\nmode=raw\ncsv=out.csv\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario, Scenario::WeakS1);
        assert_eq!((cfg.n, cfg.t, cfg.r), (50, 60, 2));
        assert_eq!(cfg.h, vec![1.5, 2.0]);
        assert_eq!(
            cfg.dist,
            ErrorDistribution::StandardizedGamma { shape: 4.0 }
        );
        assert_eq!(cfg.mode, Mode::Raw);
        assert_eq!(csv.as_deref(), Some("out.csv"));
    }

    #[test]
    fn unknown_scenario_lists_valid_ones() {
        let err = McConfig::parse("scenario=bogus\n").unwrap_err().to_string();
        for s in Scenario::ALL {
            assert!(err.contains(s.name()), "{err}");
        }
        assert!(McConfig::parse("colour=red\n")
            .unwrap_err()
            .to_string()
            .contains("unknown key"));
    }

    #[test]
    fn ulpa_rule() {
        let (cfg, _) = McConfig::parse("t=100\nulpa_delta=1.5\n").unwrap();
        assert_eq!(cfg.effective_n(), 1000);
        assert!(McConfig::parse("ulpa_delta=2.5\n").is_err());
    }

    #[test]
    fn invalid_values() {
        assert!(McConfig::parse("reps=0\n").is_err());
        assert!(McConfig::parse("alpha=1\n").is_err());
        assert!(McConfig::parse("n=1\n").is_err());
        assert!(McConfig::parse("k=2\nbeta=1\n").is_ok());
        assert!(McConfig::parse("no equals sign\n").is_err());
    }

    #[test]
    fn gamma4_choices() {
        assert_eq!(
            "known:4.5".parse::<Gamma4Choice>().unwrap(),
            Gamma4Choice::Known(4.5)
        );
        assert_eq!(
            "3".parse::<Gamma4Choice>().unwrap(),
            Gamma4Choice::Known(3.0)
        );
        assert_eq!("true".parse::<Gamma4Choice>().unwrap(), Gamma4Choice::True);
        assert!("sometimes".parse::<Gamma4Choice>().is_err());
    }
}
