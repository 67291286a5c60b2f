use crate::dist::normal_cdf;
use crate::error::{Error, Result};
use crate::sum::compensated_sum;

pub const MIN_DIAGNOSTIC_SAMPLES: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub count: usize,
    pub mean: f64,
    /// Sample variance (divisor `count − 1`).
    pub var: f64,
    pub skew: f64,
    /// Two-sided Kolmogorov–Smirnov distance to N(0, 1).
    pub ks: f64,
    /// All samples equal; `skew` is NaN.
    pub constant: bool,
}

pub fn distribution_diagnostics(samples: &[f64]) -> Result<Diagnostics> {
    ks_diagnostics(samples, normal_cdf)
}

/// As [`distribution_diagnostics`] with a caller-supplied reference CDF.
pub fn ks_diagnostics(samples: &[f64], cdf: fn(f64) -> f64) -> Result<Diagnostics> {
    let count = samples.len();
    if count < MIN_DIAGNOSTIC_SAMPLES {
        return Err(Error::Diagnostic(format!(
            "need at least {MIN_DIAGNOSTIC_SAMPLES} samples, got {count}"
        )));
    }
    if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::Diagnostic(format!("non-finite sample {bad}")));
    }
    let nf = count as f64;
    let mean = compensated_sum(samples.iter().copied()) / nf;
    let m2 = compensated_sum(samples.iter().map(|x| (x - mean).powi(2)));
    let m3 = compensated_sum(samples.iter().map(|x| (x - mean).powi(3))) / nf;
    let var = m2 / (nf - 1.0);
    let constant = samples.iter().all(|x| *x == samples[0]);
    let pop_var = m2 / nf;
    let skew = if constant {
        f64::NAN
    } else {
        m3 / pop_var.powf(1.5)
    };

    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let ks = sorted.iter().enumerate().fold(0.0f64, |d, (i, x)| {
        let f = cdf(*x);
        d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
    });
    Ok(Diagnostics {
        count,
        mean,
        var,
        skew,
        ks,
        constant,
    })
}

pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::sim::ErrorDistribution;

    #[test]
    fn normal_draws_pass_ks() {
        let mut rng = stream_rng(5, 0);
        let mut xs = vec![0.0; 100_000];
        ErrorDistribution::Gaussian
            .sampler()
            .unwrap()
            .fill(&mut rng, &mut xs);
        let d = distribution_diagnostics(&xs).unwrap();
        assert!(d.ks < 0.01, "{}", d.ks);
        assert!(d.mean.abs() < 0.02 && (d.var - 1.0).abs() < 0.02 && d.skew.abs() < 0.03);
    }

    #[test]
    fn shifted_draws_fail_ks() {
        let mut rng = stream_rng(5, 1);
        let mut xs = vec![0.0; 2000];
        ErrorDistribution::Gaussian
            .sampler()
            .unwrap()
            .fill(&mut rng, &mut xs);
        xs.iter_mut().for_each(|x| *x += 0.5);
        assert!(distribution_diagnostics(&xs).unwrap().ks > 0.1);
    }

    #[test]
    fn constant_and_short_samples() {
        let d = distribution_diagnostics(&[1.5; 40]).unwrap();
        assert!(d.constant && d.var == 0.0 && d.skew.is_nan());
        assert!((d.ks - normal_cdf(1.5)).abs() < 1e-15);
        assert!(matches!(
            distribution_diagnostics(&[0.0; 29]),
            Err(Error::Diagnostic(_))
        ));
    }

    #[test]
    fn ks_of_exact_quantiles_is_half_step() {
        let n = 200;
        let xs: Vec<f64> = (0..n)
            .map(|i| -crate::dist::normal_upper_quantile((i as f64 + 0.5) / n as f64))
            .collect();
        let d = distribution_diagnostics(&xs).unwrap();
        assert!((d.ks - 0.5 / n as f64).abs() < 1e-9);
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
