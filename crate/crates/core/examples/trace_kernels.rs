//! Sample and population trace functionals.
//!
//! `cargo run --example trace_kernels`

use panel_sphericity::kernels::{sample_traces_with, TracePath};
use panel_sphericity::{
    gen_disturbances, sigma_traces, CovarianceSpec, ErrorDistribution, MomentSet,
};

fn main() -> panel_sphericity::Result<()> {
    let spec = CovarianceSpec::spiked(1.0, vec![4.0, 1.5]);
    let (n, t) = (200, 50);

    let st = sigma_traces(&spec, n)?;
    println!("population: tr1={} tr2={} tr3={} tr4={}", st.tr1, st.tr2, st.tr3, st.tr4);

    let v = gen_disturbances(&spec, ErrorDistribution::Gaussian, n, t, 11)?;
    // n > T, so the Gram path works on the T x T matrix.
    let gram = sample_traces_with(&v, TracePath::Gram);
    let dense = sample_traces_with(&v, TracePath::Dense);
    println!("sample tr S   gram={} dense={}", gram.tr_s, dense.tr_s);
    println!("sample tr S^2 gram={} dense={}", gram.tr_s2, dense.tr_s2);

    let m = MomentSet::from_spec(&spec, n, t)?;
    println!("theta={:?}", m.theta);
    println!("eta={:?} vartheta={:?} c={}", m.eta, m.vartheta, m.c);
    Ok(())
}
