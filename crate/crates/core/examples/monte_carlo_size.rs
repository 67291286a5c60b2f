//! Small Monte Carlo size study driven by a config string.
//!
//! `cargo run --release --example monte_carlo_size`

use panel_sphericity::mc::{run_experiment, McConfig};

const CONFIG: &str = "\
# null model with skewed errors
scenario=null
n=60
t=40
reps=400
seed=2024
dist=gamma:4
alpha=0.05
";

fn main() -> panel_sphericity::Result<()> {
    let (cfg, _) = McConfig::parse(CONFIG)?;
    let s = run_experiment(&cfg)?;
    print!("{}", s.to_key_values());
    let se = (0.05f64 * 0.95 / s.valid as f64).sqrt();
    println!("nominal band: 0.05 +/- {:.4}", 3.0 * se);
    Ok(())
}
