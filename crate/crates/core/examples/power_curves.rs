//! Asymptotic power against weak, divergent and intermediate factors.
//!
//! `cargo run --example power_curves`

use panel_sphericity::mc::{theory_power, McConfig};
use panel_sphericity::power::power_weak_lpa;

fn main() -> panel_sphericity::Result<()> {
    println!("weak factor, c_T = 1");
    for h in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
        let p = power_weak_lpa(&[h], 1.0, 0.05)?;
        println!("  h={h:<4} power={:.4}", p.power);
    }

    // Factor scenarios reuse the Monte Carlo configuration, so the curve is
    // exactly what `simulate` reports as `theory_power`.
    for (label, body) in [
        ("divergent factors, tau = 0.2", "scenario=divergent-s2\ntau=0.2\nh=1\n"),
        ("one intermediate factor, spike n^0.4", "scenario=intermediate-s3\nr=1\nspike_alpha=0.4\n"),
    ] {
        println!("{label}");
        for n in [50, 100, 200, 400] {
            let (cfg, _) = McConfig::parse(&format!("{body}n={n}\nt={n}\n"))?;
            println!("  n=T={n:<4} power={:.4}", theory_power(&cfg)?.0);
        }
    }
    Ok(())
}
