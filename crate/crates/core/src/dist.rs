//! Normal and χ² distribution functions.

use libm::erfc;
use statrs::function::gamma::gamma_ur;
use std::f64::consts::SQRT_2;

/// Standard normal CDF Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Upper tail `1 − Φ(x)`, accurate far into the right tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Upper tail of the χ² distribution with `df` degrees of freedom.
pub fn chi2_upper_tail(x: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma_ur(df / 2.0, x / 2.0)
}

/// Upper quantile `Z_α` with `1 − Φ(Z_α) = α`, by bisection to adjacent doubles.
pub fn normal_upper_quantile(alpha: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if normal_sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Regularized lower incomplete gamma by its power series; independent of statrs.
    fn gamma_lr_series(a: f64, x: f64) -> f64 {
        let mut term = 1.0 / a;
        let mut sum = term;
        for k in 1..2000 {
            term *= x / (a + k as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        let ln_gamma_a = statrs::function::gamma::ln_gamma(a);
        (a * x.ln() - x - ln_gamma_a).exp() * sum
    }

    #[test]
    fn normal_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.6448536269514722) - 0.95).abs() < 1e-12);
        assert!((normal_cdf(-1.959963984540054) - 0.025).abs() < 1e-12);
        assert!((normal_sf(8.0) - 6.220960574271785e-16).abs() < 1e-27);
        for x in [-3.0, -0.5, 0.0, 1.0, 2.5] {
            assert!((normal_cdf(x) + normal_sf(x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let z = normal_upper_quantile(0.05);
        assert!((z - 1.6448536269514722).abs() < 1e-10);
        assert!((normal_cdf(z) - 0.95).abs() < 1e-12);
        assert!((normal_upper_quantile(0.5)).abs() < 1e-11);
    }

    #[test]
    fn chi2_tail_values() {
        assert_eq!(chi2_upper_tail(0.0, 3.0), 1.0);
        assert_eq!(chi2_upper_tail(f64::INFINITY, 3.0), 0.0);
        assert!((chi2_upper_tail(5.991464547107979, 2.0) - 0.05).abs() < 1e-12);
        // df = 2 is exponential: exp(-x/2)
        for x in [0.1, 1.0, 7.5, 30.0] {
            assert!((chi2_upper_tail(x, 2.0) - (-x / 2.0f64).exp()).abs() < 1e-14);
        }
        for (x, df) in [(3.0, 5.0), (10.0, 14.0), (50.0, 44.0), (0.5, 1.0)] {
            let series = 1.0 - gamma_lr_series(df / 2.0, x / 2.0);
            assert!((chi2_upper_tail(x, df) - series).abs() < 1e-10, "{x} {df}");
        }
    }
}
