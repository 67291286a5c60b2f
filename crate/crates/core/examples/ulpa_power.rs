//! Power when n grows faster than T: a covariance whose spectrum is not flat
//! is detected with probability tending to one as T grows.
//!
//! `cargo run --example ulpa_power`

use panel_sphericity::power::power_weak_ulpa;
use panel_sphericity::{eta_limits, CovarianceSpec};

fn main() -> panel_sphericity::Result<()> {
    // Half the units have variance 1.2, the rest 1.
    let n = 10_000;
    let ev: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.2 } else { 1.0 }).collect();
    let eta = eta_limits(&CovarianceSpec::diagonal(ev), n)?;
    println!("eta={eta:?}");
    for t in [10, 50, 100, 200, 400, 800] {
        let p = power_weak_ulpa(eta, 3.0, t, 0.05)?;
        println!("T={t:<4} power={:.4}", p.power);
    }
    Ok(())
}
