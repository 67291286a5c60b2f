//! Command-line surface.
//!
//! Exit codes: 0 success, 1 error, 2 the test rejected sphericity.
//! Output is `key=value` lines.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::kernels::{
    eta_limits, mp_moments, sample_traces, sigma_traces, theta_moments, CovarianceSpec,
    DisturbanceMatrix, LoadingPolicy,
};
use crate::mc::{run_experiment, run_experiment_to_csv, McConfig};
use crate::panel_csv::{read_panel_file, write_panel_file};
use crate::power::{
    h1star_moments, power_s2, power_s3, power_weak_lpa, power_weak_ulpa, supp_general_covariance,
    PowerResult,
};
use crate::rng::{replication_rng, Purpose};
use crate::sim::{gen_disturbances, gen_panel_rng, ErrorDistribution, PanelOptions};
use crate::sphericity::{
    classic_john_test, grj_test_with, john_u, raw_panel_test, Gamma4Source, GrjOptions,
};
use crate::validate::{run_all, run_criterion, Hooks};
use crate::within::{gamma4_hat_standardized, within_ols};

pub const SEED_ENV: &str = "PANEL_SPHERICITY_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REJECT: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "panel-sphericity",
    version,
    about = "John's sphericity test for large fixed-effects panels"
)]
pub struct Cli {
    /// Master seed; overrides the environment and config files.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Test a panel CSV for spherical disturbances.
    Test(TestArgs),
    /// Run a Monte-Carlo experiment from a config file.
    Simulate(SimulateArgs),
    /// Evaluate an asymptotic power or moment formula.
    Power(PowerArgs),
    /// Run the built-in acceptance suite.
    Validate(ValidateArgs),
    /// Write a simulated panel CSV.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    /// Residual-based test on within residuals of `y` on `x`.
    Grj,
    /// Large-panel test treating `y` as observed disturbances.
    Raw,
    /// χ² test treating `y` as observed disturbances.
    Classic,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    /// Balanced panel CSV with header `unit,time,y,x1,...,xk`.
    pub path: PathBuf,
    #[arg(long, value_enum, default_value = "grj")]
    pub variant: VariantArg,
    /// Significance level; the exit code is 2 when `p < alpha`.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// `estimate` or `known:<value>`.
    #[arg(long, default_value = "estimate")]
    pub gamma4: String,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// `key=value` lines; `#` starts a comment.
    pub config: PathBuf,
    /// Overrides `reps=` in the config.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Per-replication CSV output; overrides `csv=` in the config.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Formula {
    /// Weak factors, `n/T → c`.
    S1,
    /// Weak factors, `n/T → ∞`.
    Ulpa,
    /// Mean and variance of `U` under a spiked alternative.
    H1star,
    /// Divergent number of factors.
    S2,
    /// Fixed number of intermediate or strong factors.
    S3,
    /// General bounded covariance.
    Supp,
}

#[derive(Args, Debug)]
pub struct PowerArgs {
    #[arg(long, value_enum)]
    pub formula: Formula,
    /// `identity[:s]`, `diag:v1,v2,...` (`vxk` repeats v k times),
    /// `spiked:base:h1,h2,...[:random:<seed>]` or `twopoint:mass:value`.
    #[arg(long, default_value = "identity")]
    pub sigma: String,
    /// Cross-section dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Time dimension.
    #[arg(long)]
    pub t: Option<usize>,
    /// Fourth moment of the innovations.
    #[arg(long, default_value_t = 3.0)]
    pub gamma4: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Spike sizes for the S1 formula.
    #[arg(long, value_delimiter = ',')]
    pub h: Vec<f64>,
    /// `n/T` for the S1 formula; falls back to `--n`/`--t`, then 1.
    #[arg(long = "c-t")]
    pub c_t: Option<f64>,
    /// Growth exponent of the factor count in the S2 formula.
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Run only these criteria (1-10).
    #[arg(long, value_delimiter = ',')]
    pub criterion: Vec<u8>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub t: usize,
    /// Slope coefficients, one regressor each.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub beta: Vec<f64>,
    /// `gaussian`, `gamma:<shape>`, `uniform` or `rademacher`.
    #[arg(long, default_value = "gaussian")]
    pub dist: String,
    /// Disturbance covariance, as for `power --sigma`.
    #[arg(long, default_value = "identity")]
    pub sigma: String,
    /// Identically zero disturbances.
    #[arg(long)]
    pub noiseless: bool,
    /// Destination CSV.
    #[arg(long)]
    pub out: PathBuf,
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }
}

/// Parses and runs a command line (including the program name), reading the
/// fallback seed from the environment.
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run_with_env_seed(args, std::env::var(SEED_ENV).ok())
}

pub fn run_with_env_seed<I, S>(args: I, env_seed: Option<String>) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_ERROR,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome::ok(text)
            };
        }
    };
    match dispatch(cli, env_seed) {
        Ok(o) => o,
        Err(e) => Outcome {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

/// Flag, then environment, then the caller's fallback.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, fallback: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        Some(v) => v.trim().parse().map_err(|_| {
            Error::Config(format!("{SEED_ENV} must be an unsigned integer, got '{v}'"))
        }),
        None => Ok(fallback),
    }
}

fn dispatch(cli: Cli, env_seed: Option<String>) -> Result<Outcome> {
    let env = env_seed.as_deref();
    match cli.command {
        Command::Test(a) => cmd_test(&a),
        Command::Simulate(a) => cmd_simulate(&a, cli.seed, env),
        Command::Power(a) => cmd_power(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::Generate(a) => cmd_generate(&a, resolve_seed(cli.seed, env, 1)?),
    }
}

fn parse_gamma4_flag(s: &str) -> Result<Option<f64>> {
    if s == "estimate" {
        return Ok(None);
    }
    s.strip_prefix("known:")
        .and_then(|v| v.parse::<f64>().ok())
        .map(Some)
        .ok_or_else(|| {
            Error::Config(format!(
                "--gamma4 must be estimate or known:<value>, got '{s}'"
            ))
        })
}

pub fn cmd_test(a: &TestArgs) -> Result<Outcome> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Error::Config(format!(
            "--alpha must lie in (0, 1), got {}",
            a.alpha
        )));
    }
    let known = parse_gamma4_flag(&a.gamma4)?;
    let panel = read_panel_file(&a.path)?.panel;
    let report = match a.variant {
        VariantArg::Grj => {
            let fit = within_ols(&panel)?;
            let gamma4 = known.map_or(Gamma4Source::Standardized, Gamma4Source::Known);
            grj_test_with(
                &fit,
                &GrjOptions {
                    gamma4,
                    ..GrjOptions::default()
                },
            )?
        }
        VariantArg::Raw | VariantArg::Classic => {
            let v = DisturbanceMatrix::new(panel.y.clone())?;
            let u = john_u(&sample_traces(&v))?;
            if let VariantArg::Classic = a.variant {
                classic_john_test(u, v.n(), v.t())?
            } else {
                let g4 = match known {
                    Some(g) => g,
                    None => gamma4_hat_standardized(&v).ok_or_else(|| {
                        Error::Degenerate("observations are identically zero".into())
                    })?,
                };
                let mut r = raw_panel_test(u, g4, v.n(), v.t())?;
                r.gamma4_hat = Some(g4);
                r
            }
        }
    };
    let rejects = report.rejects(a.alpha);
    let mut out = report.to_key_values();
    let _ = writeln!(out, "alpha={}\nreject={rejects}", a.alpha);
    Ok(Outcome {
        code: if rejects { EXIT_REJECT } else { EXIT_OK },
        stdout: out,
        stderr: String::new(),
    })
}

pub fn cmd_simulate(
    a: &SimulateArgs,
    seed_flag: Option<u64>,
    env: Option<&str>,
) -> Result<Outcome> {
    let (mut cfg, csv) = McConfig::from_file(&a.config)?;
    cfg.seed = resolve_seed(seed_flag, env, cfg.seed)?;
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(t) = a.threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    let csv = a.csv.clone().or_else(|| {
        csv.map(|p| {
            let p = PathBuf::from(p);
            match a.config.parent() {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p,
            }
        })
    });
    let summary = match csv {
        Some(path) => run_experiment_to_csv(&cfg, path)?,
        None => run_experiment(&cfg)?,
    };
    Ok(Outcome::ok(format!(
        "seed={}\n{}",
        cfg.seed,
        summary.to_key_values()
    )))
}

/// Parses a covariance description. Returns the spec and the dimension it
/// fixes, if any.
pub fn parse_sigma(s: &str, n: Option<usize>) -> Result<(CovarianceSpec, usize)> {
    let bad = || Error::Config(format!("cannot parse covariance '{s}'"));
    let need_n = || n.ok_or_else(|| Error::Config(format!("covariance '{s}' needs --n")));
    let mut parts = s.splitn(5, ':');
    let kind = parts.next().unwrap_or("");
    let list = |text: &str| -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for item in text.split(',') {
            match item.split_once('x') {
                Some((v, k)) => {
                    let v: f64 = v.trim().parse().map_err(|_| bad())?;
                    let k: usize = k.trim().parse().map_err(|_| bad())?;
                    out.extend(std::iter::repeat_n(v, k));
                }
                None => out.push(item.trim().parse().map_err(|_| bad())?),
            }
        }
        Ok(out)
    };
    let (spec, dim) = match kind {
        "identity" => {
            let scale = match parts.next() {
                Some(v) => v.parse().map_err(|_| bad())?,
                None => 1.0,
            };
            (CovarianceSpec::identity(scale), need_n()?)
        }
        "diag" => {
            let ev = list(parts.next().ok_or_else(bad)?)?;
            let len = ev.len();
            if let Some(n) = n {
                if n != len {
                    return Err(Error::Config(format!(
                        "diag lists {len} eigenvalues but --n is {n}"
                    )));
                }
            }
            (CovarianceSpec::diagonal(ev), len)
        }
        "spiked" => {
            let base = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let spikes = list(parts.next().ok_or_else(bad)?)?;
            let loadings = match (parts.next(), parts.next()) {
                (None, _) => LoadingPolicy::Canonical,
                (Some("random"), Some(seed)) => LoadingPolicy::RandomOrthonormal {
                    seed: seed.parse().map_err(|_| bad())?,
                },
                _ => return Err(bad()),
            };
            (
                CovarianceSpec::SpikedFactor {
                    base,
                    spikes,
                    loadings,
                },
                need_n()?,
            )
        }
        "twopoint" => {
            let mass: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let value: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let n = need_n()?;
            let m = (mass * n as f64).round() as usize;
            (
                CovarianceSpec::diagonal((0..n).map(|i| if i < m { value } else { 1.0 }).collect()),
                n,
            )
        }
        _ => return Err(bad()),
    };
    spec.validate(dim)?;
    Ok((spec, dim))
}

fn kv(pairs: &[(&str, f64)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn power_output(r: &PowerResult) -> String {
    r.to_key_values()
}

pub fn cmd_power(a: &PowerArgs) -> Result<Outcome> {
    let t_or = |what: &str| {
        a.t.ok_or_else(|| Error::Config(format!("--formula {what} needs --t")))
    };
    let out = match a.formula {
        Formula::S1 => {
            let c = match (a.c_t, a.n, a.t) {
                (Some(c), _, _) => c,
                (None, Some(n), Some(t)) => n as f64 / t as f64,
                _ => 1.0,
            };
            let h = if a.h.is_empty() {
                vec![0.0]
            } else {
                a.h.clone()
            };
            power_output(&power_weak_lpa(&h, c, a.alpha)?)
        }
        Formula::Ulpa => {
            let (spec, n) = parse_sigma(&a.sigma, a.n)?;
            let eta = eta_limits(&spec, n)?;
            power_output(&power_weak_ulpa(eta, a.gamma4, t_or("ulpa")?, a.alpha)?)
        }
        Formula::H1star => {
            let (spec, n) = parse_sigma(&a.sigma, a.n)?;
            let t = t_or("h1star")?;
            let st = sigma_traces(&spec, n)?;
            let m = h1star_moments(&st, a.gamma4, n, t)?;
            let mut out = kv(&[
                ("n", n as f64),
                ("t", t as f64),
                ("gamma4", a.gamma4),
                ("mu", m.mu),
                ("T_mu", t as f64 * m.mu),
                ("null_center", n as f64 + a.gamma4 - 2.0),
                ("sigma2", m.sigma2),
                ("sigma2_as_printed", m.sigma2_as_printed),
                ("theta1", m.theta1),
                ("theta2", m.theta2),
                ("omega1", m.omega1),
                ("omega2", m.omega2),
                ("omega3", m.omega3),
            ]);
            let (e1, e2, e3) = eta_limits(&spec, n)?;
            out.push_str(&kv(&[("eta1", e1), ("eta2", e2), ("eta3", e3)]));
            out
        }
        Formula::S2 => {
            let (spec, n) = parse_sigma(&a.sigma, a.n)?;
            let t = t_or("s2")?;
            let tau = a
                .tau
                .ok_or_else(|| Error::Config("--formula s2 needs --tau".into()))?;
            let (b1, b2, _) = eta_limits(&spec, n)?;
            let sigma = h1star_moments(&sigma_traces(&spec, n)?, a.gamma4, n, t)?
                .sigma2
                .sqrt();
            power_output(&power_s2(b1, b2, n, tau, a.gamma4, sigma, a.alpha, None)?)
        }
        Formula::S3 => {
            let (spec, n) = parse_sigma(&a.sigma, a.n)?;
            let t = t_or("s3")?;
            let m = h1star_moments(&sigma_traces(&spec, n)?, a.gamma4, n, t)?;
            power_output(&power_s3(m.mu, m.sigma2.sqrt(), n, t, a.gamma4, a.alpha)?)
        }
        Formula::Supp => {
            let (spec, n) = parse_sigma(&a.sigma, a.n)?;
            let t = t_or("supp")?;
            let c = n as f64 / t as f64;
            let theta = theta_moments(&spec, n)?;
            let vt = mp_moments(theta, c)?;
            let r =
                supp_general_covariance(theta, vt, c, t, a.gamma4, spec.is_diagonal(), a.alpha)?;
            let mut out = format!("scenario=general-cov\nbranch={:?}\n", r.branch);
            out.push_str(&kv(&[
                ("power", r.power),
                ("alpha", a.alpha),
                ("s2", r.s2),
                ("center", r.center),
                ("c", c),
                ("theta1", theta[0]),
                ("theta2", theta[1]),
                ("theta3", theta[2]),
                ("theta4", theta[3]),
                ("vartheta1", vt.0),
                ("vartheta2", vt.1),
            ]));
            let _ = writeln!(out, "note={}", r.note);
            out
        }
    };
    Ok(Outcome::ok(out))
}

pub fn cmd_validate(a: &ValidateArgs) -> Result<Outcome> {
    let hooks = Hooks::default();
    let results = if a.criterion.is_empty() {
        run_all(&hooks)
    } else {
        a.criterion
            .iter()
            .map(|id| run_criterion(*id, &hooks))
            .collect::<Result<Vec<_>>>()?
    };
    let mut out = String::new();
    for r in &results {
        let _ = writeln!(out, "{r}");
    }
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.id.to_string())
        .collect();
    let _ = writeln!(
        out,
        "passed={}/{}",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        Ok(Outcome::ok(out))
    } else {
        let _ = writeln!(out, "failed={}", failed.join(","));
        Ok(Outcome {
            code: EXIT_ERROR,
            stdout: out,
            stderr: String::new(),
        })
    }
}

pub fn cmd_generate(a: &GenerateArgs, seed: u64) -> Result<Outcome> {
    let dist: ErrorDistribution = a.dist.parse()?;
    let v = if a.noiseless {
        DisturbanceMatrix::zeros(a.n, a.t)?
    } else {
        let (spec, n) = parse_sigma(&a.sigma, Some(a.n))?;
        gen_disturbances(&spec, dist, n, a.t, seed)?
    };
    let mut x_rng = replication_rng(seed, 0, Purpose::Regressors);
    let mut mu_rng = replication_rng(seed, 0, Purpose::FixedEffects);
    let panel = gen_panel_rng(
        &a.beta,
        &v,
        &PanelOptions::default(),
        &mut x_rng,
        &mut mu_rng,
    )?;
    write_panel_file(&a.out, &panel)?;
    Ok(Outcome::ok(format!(
        "path={}\nn={}\nt={}\nk={}\nseed={seed}\n",
        a.out.display(),
        panel.n(),
        panel.t(),
        panel.k()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> Outcome {
        let mut full = vec!["panel-sphericity"];
        full.extend_from_slice(args);
        run_with_env_seed(full, None)
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(3), Some("9"), 1).unwrap(), 3);
        assert_eq!(resolve_seed(None, Some("9"), 1).unwrap(), 9);
        assert_eq!(resolve_seed(None, None, 1).unwrap(), 1);
        assert!(resolve_seed(None, Some("nine"), 1).is_err());
    }

    #[test]
    fn sigma_strings() {
        let (s, n) = parse_sigma("diag:2,1x3", None).unwrap();
        assert_eq!(n, 4);
        assert_eq!(eta_limits(&s, n).unwrap(), (1.25, 1.75, 1.75));
        assert!(parse_sigma("identity", None).is_err());
        assert_eq!(parse_sigma("identity:2", Some(5)).unwrap().1, 5);
        assert!(parse_sigma("spiked:1:3,2", Some(10))
            .unwrap()
            .0
            .is_diagonal());
        assert!(!parse_sigma("spiked:1:3,2:random:4", Some(10))
            .unwrap()
            .0
            .is_diagonal());
        assert!(parse_sigma("spiked:1:3:bogus", Some(10)).is_err());
        assert!(parse_sigma("twopoint:0.5:3", Some(10))
            .unwrap()
            .0
            .is_diagonal());
        assert!(parse_sigma("diag:1,2", Some(3)).is_err());
        assert!(parse_sigma("wobbly", Some(3)).is_err());
    }

    #[test]
    fn power_examples() {
        let o = call(&["power", "--formula", "s1", "--h", "0", "--alpha", "0.05"]);
        assert_eq!(o.code, 0);
        assert!(o.stdout.contains("power=0.05"), "{}", o.stdout);

        let o = call(&[
            "power",
            "--formula",
            "h1star",
            "--sigma",
            "identity",
            "--n",
            "100",
            "--t",
            "50",
            "--gamma4",
            "4",
        ]);
        let get = |k: &str| -> f64 {
            o.stdout
                .lines()
                .find_map(|l| l.strip_prefix(&format!("{k}=")))
                .unwrap()
                .parse()
                .unwrap()
        };
        assert!((get("T_mu") - get("null_center")).abs() < 1e-9);

        let o = call(&[
            "power",
            "--formula",
            "ulpa",
            "--sigma",
            "diag:2,1,1,1",
            "--t",
            "100",
        ]);
        assert!(o.stdout.contains("power=0.9999"), "{}", o.stdout);

        let o = call(&[
            "power",
            "--formula",
            "supp",
            "--sigma",
            "spiked:1:3:random:7",
            "--n",
            "20",
            "--t",
            "20",
            "--gamma4",
            "4",
        ]);
        assert_eq!(o.code, 1);
        assert!(
            o.stderr.contains("depending on the eigenvectors"),
            "{}",
            o.stderr
        );
    }

    #[test]
    fn usage_errors_exit_one_and_help_exits_zero() {
        assert_eq!(call(&["frobnicate"]).code, 1);
        assert_eq!(call(&["--help"]).code, 0);
        assert_eq!(call(&["power", "--formula", "s3", "--n", "10"]).code, 1);
    }
}
