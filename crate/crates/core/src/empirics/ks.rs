use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Result, TcaError};
use crate::format::sig6;
use crate::scalar::Scalar;
use crate::stochastic::DistributionSpec;

const SERIES_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    /// `p_value < 0.01`.
    pub rejected_at_1pct: bool,
    pub count: usize,
}

impl KsReport {
    pub fn write_csv_row<W: Write>(&self, w: &mut csv::Writer<W>, label: &str) -> Result<()> {
        w.write_record([
            label.to_string(),
            sig6(self.statistic),
            sig6(self.p_value),
            self.rejected_at_1pct.to_string(),
            self.count.to_string(),
        ])?;
        Ok(())
    }
}

/// `P(K > λ)` for the Kolmogorov distribution.
///
/// Uses `2 Σ (-1)^{j-1} e^{-2 j² λ²}` for `λ ≥ 1.18` and the Jacobi-theta
/// form `1 - √(2π)/λ Σ e^{-(2j-1)² π² / (8 λ²)}` below, each truncated once
/// a term drops under `1e-10`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        let a = -PI * PI / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for j in 1.. {
            let k = (2 * j - 1) as f64;
            let t = (a * k * k).exp();
            s += t;
            if t < SERIES_EPS {
                break;
            }
        }
        1.0 - (2.0 * PI).sqrt() / lambda * s
    } else {
        let a = -2.0 * lambda * lambda;
        let mut s = 0.0;
        let mut sign = 1.0;
        for j in 1.. {
            let jf = j as f64;
            let t = (a * jf * jf).exp();
            s += sign * t;
            sign = -sign;
            if t < SERIES_EPS {
                break;
            }
        }
        2.0 * s
    };
    p.clamp(0.0, 1.0)
}

/// One-sample two-sided Kolmogorov-Smirnov test against a fully specified
/// distribution; the p-value is the asymptotic `P(K > √n D)`.
pub fn ks_test<T: Scalar>(sample: &[T], dist: &DistributionSpec<T>) -> Result<KsReport> {
    let n = sample.len();
    if n < 35 {
        return Err(TcaError::Insufficient(format!(
            "KS test needs at least 35 values, got {n}"
        )));
    }
    dist.validate()?;
    let mut x: Vec<f64> = sample.iter().map(|v| v.as_f64()).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(TcaError::Domain("sample contains non-finite values".to_string()));
    }
    x.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &v) in x.iter().enumerate() {
        let f = dist.cdf_f64(v);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let p_value = kolmogorov_sf(nf.sqrt() * d);
    Ok(KsReport {
        statistic: d,
        p_value,
        rejected_at_1pct: p_value < 0.01,
        count: n,
    })
}

/// Root of `CDF_a - CDF_b` in `bracket` by bisection to width `1e-10`.
pub fn cdf_intersection<T: Scalar>(a: &DistributionSpec<T>, b: &DistributionSpec<T>, bracket: (T, T)) -> Result<T> {
    a.validate()?;
    b.validate()?;
    let (mut lo, mut hi) = (bracket.0.as_f64(), bracket.1.as_f64());
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(TcaError::invalid(format!(
            "bracket must be finite with lo < hi, got [{lo}, {hi}]"
        )));
    }
    let g = |x: f64| a.cdf_f64(x) - b.cdf_f64(x);
    let (glo, ghi) = (g(lo), g(hi));
    let no_root = || TcaError::NoRoot {
        what: "CDF difference".to_string(),
        lo: bracket.0.as_f64(),
        hi: bracket.1.as_f64(),
    };
    if glo == 0.0 && ghi == 0.0 {
        return Err(no_root());
    }
    if glo == 0.0 {
        return Ok(T::of(lo));
    }
    if ghi == 0.0 {
        return Ok(T::of(hi));
    }
    if glo.signum() == ghi.signum() {
        return Err(no_root());
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(T::of(mid));
        }
        if gm.signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(T::of(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{sample, substream};
    use approx::assert_abs_diff_eq;

    fn unit_t5() -> DistributionSpec<f64> {
        DistributionSpec::StudentT {
            mu: 0.0,
            sigma: 0.6f64.sqrt(),
            nu: 5.0,
        }
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Standard table values of the Kolmogorov distribution.
        assert_abs_diff_eq!(kolmogorov_sf(1.3581), 0.05, epsilon = 1e-4);
        assert_abs_diff_eq!(kolmogorov_sf(1.6276), 0.01, epsilon = 1e-4);
        assert_abs_diff_eq!(kolmogorov_sf(1.2238), 0.10, epsilon = 1e-4);
        assert_abs_diff_eq!(kolmogorov_sf(0.8276), 0.50, epsilon = 1e-3);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        assert!(kolmogorov_sf(10.0) < 1e-10);
        // Both series agree where they meet.
        let lo = {
            let l = 1.18f64;
            let s: f64 = (1..50)
                .map(|j| (-((2 * j - 1) as f64).powi(2) * PI * PI / (8.0 * l * l)).exp())
                .sum();
            1.0 - (2.0 * PI).sqrt() / l * s
        };
        assert_abs_diff_eq!(lo, kolmogorov_sf(1.18), epsilon = 1e-10);
    }

    #[test]
    fn ks_statistic_by_hand() {
        // Uniform-like sample against N(0,1): compare with a direct sweep.
        let x: Vec<f64> = (0..40).map(|i| -2.0 + 0.1 * i as f64).collect();
        let d = DistributionSpec::standard_normal();
        let r = ks_test(&x, &d).unwrap();
        let mut best = 0.0f64;
        for (i, &v) in x.iter().enumerate() {
            let f = d.cdf(v);
            best = best
                .max(((i + 1) as f64 / 40.0 - f).abs())
                .max((f - i as f64 / 40.0).abs());
        }
        assert_abs_diff_eq!(r.statistic, best, epsilon = 1e-15);
        assert_eq!(r.rejected_at_1pct, r.p_value < 0.01);
        assert!(ks_test(&x[..10], &d).is_err());
    }

    #[test]
    fn ks_detects_wrong_distribution() {
        let x: Vec<f64> = sample(&unit_t5(), 20_000, substream(21, 0)).unwrap();
        let r = ks_test(&x, &DistributionSpec::Gaussian { mu: 0.5, sigma: 1.0 }).unwrap();
        assert!(r.rejected_at_1pct);
        let r = ks_test(&x, &unit_t5()).unwrap();
        assert!(r.p_value > 0.001);
    }

    #[test]
    fn intersection_of_normal_and_t5() {
        let n = DistributionSpec::standard_normal();
        let r = cdf_intersection(&n, &unit_t5(), (-4.0, -1.0)).unwrap();
        assert_abs_diff_eq!(r, -1.89, epsilon = 0.02);
        let m = cdf_intersection(&n, &unit_t5(), (1.0, 4.0)).unwrap();
        assert_abs_diff_eq!(m, -r, epsilon = 1e-9);
        assert!(matches!(
            cdf_intersection(&n, &n, (-4.0, -1.0)),
            Err(TcaError::NoRoot { .. })
        ));
        assert!(cdf_intersection(&n, &unit_t5(), (-1.0, -0.5)).is_err());
    }
}
