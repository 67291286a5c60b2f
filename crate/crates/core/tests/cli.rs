use std::path::Path;
use std::process::{Command, Output};

use panel_sphericity::dist::chi2_upper_tail;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_panel-sphericity"));
    c.env_remove("PANEL_SPHERICITY_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in\n{text}"))
        .parse()
        .unwrap()
}

fn generate(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name).display().to_string();
    let mut args = vec!["generate", "--out", path.as_str()];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn null_panel_test_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), "a.csv", &["--n", "100", "--t", "100", "--seed", "42"]);
    let b = generate(dir.path(), "b.csv", &["--n", "100", "--t", "100", "--seed", "42"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let first = run(&["test", &a]);
    let second = run(&["test", &a]);
    assert!(matches!(first.status.code(), Some(0) | Some(2)));
    assert_eq!(first.stdout, second.stdout);
    let p = value(&stdout(&first), "p_value");
    assert!(p > 0.0 && p < 1.0);
    assert!(stdout(&first).contains("variant=grj"));
}

#[test]
fn noiseless_panel_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "flat.csv", &["--n", "20", "--t", "10", "--noiseless"]);
    let o = run(&["test", &path]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("perfect fit"));
}

#[test]
fn classic_variant_matches_chi2_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.csv");
    std::fs::write(&path, "unit,time,y,x1\n1,1,1,0\n1,2,2,1\n1,3,-1,0\n2,1,0.5,1\n2,2,3,0\n2,3,1,1\n").unwrap();
    let o = run(&["test", path.to_str().unwrap(), "--variant", "classic"]);
    assert_eq!(o.status.code(), Some(0));
    // U from y treated as disturbances: S = V Vᵀ / T
    let (r1, r2) = ([1.0, 2.0, -1.0], [0.5, 3.0, 1.0]);
    let dot = |a: &[f64; 3], b: &[f64; 3]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / 3.0;
    let (s11, s12, s22) = (dot(&r1, &r1), dot(&r1, &r2), dot(&r2, &r2));
    let tr = s11 + s22;
    let tr2 = s11 * s11 + 2.0 * s12 * s12 + s22 * s22;
    let u = 2.0 * tr2 / (tr * tr) - 1.0;
    let expected = chi2_upper_tail(2.0 * 3.0 * u / 2.0, 2.0);
    let p = value(&stdout(&o), "p_value");
    assert!((p - expected).abs() < 1e-12, "{p} vs {expected}");
}

#[test]
fn rejection_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "spiked.csv", &["--n", "60", "--t", "60", "--sigma", "spiked:1:25"]);
    let o = run(&["test", &path]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("reject=true"));
}

#[test]
fn unbalanced_panel_names_cell() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gap.csv");
    std::fs::write(&path, "unit,time,y,x1\na,1,1,0\na,2,2,1\nb,1,0.5,1\n").unwrap();
    let o = run(&["test", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unit=b, time=2"));
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.cfg");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn simulate_threads_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "# small null run\nscenario=null\nn=40\nt=30\nreps=120\nseed=7\n");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let oa = run(&["simulate", &cfg, "--threads", "1", "--csv", a.to_str().unwrap()]);
    let ob = run(&["simulate", &cfg, "--threads", "8", "--csv", b.to_str().unwrap()]);
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(ob.status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("rep,U,U_hat,gamma4_hat,J,p_value,gap\n"));
    assert_eq!(text.lines().count(), 121);
    let s = stdout(&oa);
    let rate = value(&s, "rejection_rate");
    assert!((0.0..=1.0).contains(&rate));
}

#[test]
fn seed_flag_beats_environment_beats_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario=null\nn=20\nt=20\nreps=40\nseed=3\n");
    let s = |o: Output| value(&stdout(&o), "seed");
    assert_eq!(s(run(&["simulate", &cfg])), 3.0);
    let env = bin().args(["simulate", &cfg]).env("PANEL_SPHERICITY_SEED", "11").output().unwrap();
    assert_eq!(s(env), 11.0);
    let both = bin()
        .args(["simulate", &cfg, "--seed", "19"])
        .env("PANEL_SPHERICITY_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(s(both), 19.0);
}

#[test]
fn weak_scenario_reports_theory_power() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario=weak-s1\nh=2\nn=100\nt=100\nreps=50\n");
    let o = run(&["simulate", &cfg]);
    assert!((value(&stdout(&o), "theory_power") - 0.6388).abs() < 1e-4);
}

#[test]
fn unknown_scenario_lists_valid_ones() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario=sideways\n");
    let o = run(&["simulate", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("weak-s1") && err.contains("general-cov"), "{err}");
}

#[test]
fn power_formulas() {
    let o = run(&["power", "--formula", "s1", "--h", "0", "--alpha", "0.05"]);
    assert!((value(&stdout(&o), "power") - 0.05).abs() < 1e-12);
    let o = run(&["power", "--formula", "h1star", "--sigma", "identity", "--n", "80", "--t", "40", "--gamma4", "3"]);
    let s = stdout(&o);
    assert!((value(&s, "T_mu") - 81.0).abs() < 1e-9);
    let o = run(&["power", "--formula", "ulpa", "--sigma", "diag:2,1,1,1", "--t", "100"]);
    assert!((value(&stdout(&o), "power") - 0.99996).abs() < 1e-5);
}

#[test]
fn validate_single_criterion() {
    let o = run(&["validate", "--criterion", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("criterion 10 PASS"));
    assert!(s.contains("passed=1/1"));
}
