//! How far the residual statistic drifts from the raw one as the panel grows.
//!
//! `cargo run --release --example gap_study`

use panel_sphericity::mc::{gap_check, McConfig};

fn main() -> panel_sphericity::Result<()> {
    let (cfg, _) = McConfig::parse("scenario=null\nreps=100\nseed=9\nk=2\n")?;
    for g in gap_check(&cfg, &[(25, 25), (50, 50), (100, 100), (200, 200)])? {
        println!(
            "n={:<4} T={:<4} reps={:<4} mean={:+.4} median={:+.4} median|gap|={:.4}",
            g.n, g.t, g.reps_used, g.mean, g.median, g.median_abs
        );
    }
    Ok(())
}
