//! Residual-based test on a simulated fixed-effects panel, under the null
//! and under a single weak factor.
//!
//! `cargo run --example grj_test`

use panel_sphericity::{
    gen_disturbances, gen_panel, grj_test, within_ols, CovarianceSpec, ErrorDistribution,
};

fn main() -> panel_sphericity::Result<()> {
    let (n, t) = (150, 60);
    for (label, spec) in [
        ("null", CovarianceSpec::identity(2.0)),
        ("one spike h=6", CovarianceSpec::spiked(2.0, vec![6.0])),
    ] {
        let v = gen_disturbances(&spec, ErrorDistribution::Gaussian, n, t, 5)?;
        let panel = gen_panel(&[0.5, -1.0], &v, 6)?;
        let fit = within_ols(&panel)?;
        let r = grj_test(&fit)?;
        println!("== {label}");
        println!("beta_hat={:?}", fit.beta_hat);
        print!("{}", r.to_key_values());
        println!("reject_5pct={}", r.rejects(0.05));
    }
    Ok(())
}
