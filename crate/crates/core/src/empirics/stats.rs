use std::io::Write;

use serde::Serialize;

use crate::error::{Result, TcaError};
use crate::format::sig6;
use crate::scalar::Scalar;

/// First four sample moments. `std` is the unbiased estimate; `kurtosis` is
/// non-excess (3 for a Gaussian).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub count: usize,
}

impl MomentReport {
    /// `name,value` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "value"])?;
        w.write_record(["mean", &sig6(self.mean)])?;
        w.write_record(["std", &sig6(self.std)])?;
        w.write_record(["skewness", &sig6(self.skewness)])?;
        w.write_record(["kurtosis", &sig6(self.kurtosis)])?;
        w.write_record(["count", &self.count.to_string()])?;
        w.flush()?;
        Ok(())
    }
}

/// Skewness and kurtosis are the standardized central moments
/// `m3 / m2^{3/2}` and `m4 / m2²` with population (`1/n`) normalisation.
pub fn moments<T: Scalar>(sample: &[T]) -> Result<MomentReport> {
    let n = sample.len();
    if n < 4 {
        return Err(TcaError::Insufficient(format!(
            "moments need at least 4 values, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = sample.iter().map(|v| v.as_f64()).sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in sample {
        let d = v.as_f64() - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    if !m2.is_finite() {
        return Err(TcaError::Domain("sample contains non-finite values".to_string()));
    }
    let std = (m2 / (nf - 1.0)).sqrt();
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, f64::NAN)
    };
    Ok(MomentReport {
        mean,
        std,
        skewness,
        kurtosis,
        count: n,
    })
}

/// Unbiased mean and variance.
pub(crate) fn mean_var<T: Scalar>(sample: &[T]) -> (T, T) {
    let n = T::of_usize(sample.len());
    let mean = sample.iter().copied().sum::<T>() / n;
    let ss: T = sample.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - T::one()))
}

fn fraction<T: Scalar>(sample: &[T], pred: impl Fn(T) -> bool) -> T {
    if sample.is_empty() {
        return T::nan();
    }
    T::of_usize(sample.iter().filter(|&&c| pred(c)).count()) / T::of_usize(sample.len())
}

/// Empirical CDF at `threshold`: the fraction of entries `≤ threshold`.
pub fn tail_probability<T: Scalar>(sample: &[T], threshold: T) -> T {
    fraction(sample, |c| c <= threshold)
}

/// Fraction of entries with `|c| ≤ |threshold|`.
pub fn body_probability<T: Scalar>(sample: &[T], threshold: T) -> T {
    let b = threshold.abs();
    fraction(sample, |c| c.abs() <= b)
}

/// Fraction of entries with `c ≤ -|threshold|` or `c ≥ |threshold|`.
pub fn two_tail_probability<T: Scalar>(sample: &[T], threshold: T) -> T {
    let b = threshold.abs();
    fraction(sample, |c| c <= -b || c >= b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinRule {
    /// Width `2 · IQR · n^{-1/3}` anchored at the sample minimum.
    FreedmanDiaconis,
    /// Fixed-width bins `[origin + i·width, origin + (i+1)·width)`.
    Width { origin: f64, width: f64 },
    /// `bins` equal-width bins spanning `[min, max]`.
    Count(usize),
}

/// Half-open bins `[edges[i], edges[i+1])`; the last bin also holds the
/// sample maximum when it falls on the upper edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `left,right,count` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["left", "right", "count"])?;
        for (i, c) in self.counts.iter().enumerate() {
            w.write_record([sig6(self.edges[i]), sig6(self.edges[i + 1]), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

const MAX_BINS: usize = 100_000;

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn histogram<T: Scalar>(sample: &[T], rule: BinRule) -> Result<Histogram> {
    if sample.is_empty() {
        return Err(TcaError::Insufficient("histogram of an empty sample".to_string()));
    }
    let mut v: Vec<f64> = sample.iter().map(|x| x.as_f64()).collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(TcaError::Domain("sample contains non-finite values".to_string()));
    }
    v.sort_by(f64::total_cmp);
    let (min, max) = (v[0], v[v.len() - 1]);
    let (origin, width) = match rule {
        BinRule::Width { origin, width } => {
            if !(width > 0.0) || !width.is_finite() || !origin.is_finite() {
                return Err(TcaError::invalid(format!("bin width must be positive, got {width}")));
            }
            (origin + ((min - origin) / width).floor() * width, width)
        }
        BinRule::Count(bins) => {
            if bins == 0 {
                return Err(TcaError::invalid("histogram needs at least one bin"));
            }
            let span = max - min;
            (min, if span > 0.0 { span / bins as f64 } else { 1.0 })
        }
        BinRule::FreedmanDiaconis => {
            let iqr = quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25);
            let w = 2.0 * iqr * (v.len() as f64).powf(-1.0 / 3.0);
            let span = max - min;
            let w = if w > 0.0 {
                w.max(span / MAX_BINS as f64)
            } else if span > 0.0 {
                span
            } else {
                1.0
            };
            (min, w)
        }
    };
    let bins = match rule {
        BinRule::Count(b) => b,
        _ => (((max - origin) / width).floor() as usize + 1).clamp(1, MAX_BINS),
    };
    let edges: Vec<f64> = (0..=bins).map(|i| origin + i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for x in v {
        let i = (((x - origin) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{sample, substream, DistributionSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn moments_of_small_samples() {
        let m = moments(&[-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert_eq!(m.mean, 0.0);
        assert_abs_diff_eq!(m.std, (4.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(m.kurtosis, 1.0, epsilon = 1e-15);
        assert!(moments(&[-1.0, 1.0]).is_err());
        let (mean, var) = mean_var(&[-1.0, 1.0]);
        assert_eq!((mean, var), (0.0, 2.0));
    }

    #[test]
    fn gaussian_moments() {
        let d = DistributionSpec::standard_normal();
        let x: Vec<f64> = sample(&d, 1_000_000, substream(3, 0)).unwrap();
        let m = moments(&x).unwrap();
        assert!(m.skewness.abs() < 0.01, "{}", m.skewness);
        assert!((m.kurtosis - 3.0).abs() < 0.03, "{}", m.kurtosis);
    }

    #[test]
    fn student_t_kurtosis() {
        // Excess kurtosis is 6/(ν-4). At ν = 10 the eighth moment exists and
        // the sample kurtosis of 10^6 draws has standard error near 0.025.
        let d = DistributionSpec::StudentT {
            mu: 0.0,
            sigma: 0.8f64.sqrt(),
            nu: 10.0,
        };
        let x: Vec<f64> = sample(&d, 1_000_000, substream(4, 0)).unwrap();
        let m = moments(&x).unwrap();
        assert!((m.kurtosis - 4.0).abs() < 0.15, "{}", m.kurtosis);
        // At ν = 5 the estimator has infinite variance; only heaviness is stable.
        let d = DistributionSpec::StudentT {
            mu: 0.0,
            sigma: 0.6f64.sqrt(),
            nu: 5.0,
        };
        let x: Vec<f64> = sample(&d, 1_000_000, substream(4, 0)).unwrap();
        let m = moments(&x).unwrap();
        assert!(m.kurtosis > 6.0, "{}", m.kurtosis);
        assert!((m.std - 1.0).abs() < 0.01, "{}", m.std);
    }

    #[test]
    fn probabilities() {
        let s = [-2.0, -1.0, 0.0, 1.0];
        assert_eq!(tail_probability(&s, -0.5), 0.5);
        assert_eq!(tail_probability(&s, -1.0), 0.5);
        assert_eq!(tail_probability(&s, f64::INFINITY), 1.0);
        let s = [-2.0, 0.0, 2.0];
        assert_abs_diff_eq!(body_probability(&s, 1.0), 1.0 / 3.0);
        assert_abs_diff_eq!(two_tail_probability(&s, 1.0), 2.0 / 3.0);
        assert_abs_diff_eq!(body_probability(&s, 0.0), 1.0 / 3.0);
        assert_eq!(two_tail_probability(&[-1.0, 1.0], 0.5), 1.0);
        assert!(tail_probability::<f64>(&[], 0.0).is_nan());
    }

    #[test]
    fn gaussian_tail_matches_cdf() {
        let d = DistributionSpec::Gaussian { mu: -0.71, sigma: 0.44 };
        let x: Vec<f64> = sample(&d, 1_000_000, substream(5, 0)).unwrap();
        let p = tail_probability(&x, -1.0);
        let expect = d.cdf(-1.0);
        assert_abs_diff_eq!(expect, 0.25492, epsilon = 1e-5);
        assert!((p - expect).abs() < 0.0015, "{p} vs {expect}");
    }

    #[test]
    fn histogram_rules() {
        let h = histogram(
            &[0.0, 0.4, 0.9],
            BinRule::Width {
                origin: 0.0,
                width: 1.0,
            },
        )
        .unwrap();
        assert_eq!(h.counts, vec![3]);
        assert_eq!(h.edges, vec![0.0, 1.0]);
        let h = histogram(
            &[0.0, 1.0],
            BinRule::Width {
                origin: 0.0,
                width: 1.0,
            },
        )
        .unwrap();
        assert_eq!(h.counts, vec![1, 1]);
        let h = histogram(&[0.0, 1.0, 2.0, 3.0], BinRule::Count(2)).unwrap();
        assert_eq!(h.counts, vec![2, 2]);
        let h = histogram(&[5.0; 10], BinRule::FreedmanDiaconis).unwrap();
        assert_eq!(h.counts, vec![10]);
        assert!(histogram::<f64>(&[], BinRule::FreedmanDiaconis).is_err());
    }

    #[test]
    fn freedman_diaconis_width() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let h = histogram(&x, BinRule::FreedmanDiaconis).unwrap();
        let expect = 2.0 * 0.5 * 1000f64.powf(-1.0 / 3.0);
        assert_abs_diff_eq!(h.edges[1] - h.edges[0], expect, epsilon = 1e-12);
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        moments(&[1.0, 2.0, 3.0, 4.0]).unwrap().write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("name,value\nmean,2.5\n"));
        let mut buf = Vec::new();
        histogram(
            &[0.5],
            BinRule::Width {
                origin: 0.0,
                width: 1.0,
            },
        )
        .unwrap()
        .write_csv(&mut buf)
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "left,right,count\n0,1,1\n");
    }

    proptest! {
        #[test]
        fn histogram_conserves_count(x in prop::collection::vec(-1e3f64..1e3, 1..300)) {
            let h = histogram(&x, BinRule::FreedmanDiaconis).unwrap();
            prop_assert_eq!(h.total(), x.len());
            prop_assert_eq!(h.edges.len(), h.counts.len() + 1);
        }

        #[test]
        fn tail_probability_is_monotone(x in prop::collection::vec(-5.0f64..5.0, 1..100), a in -6.0f64..6.0, b in -6.0f64..6.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(tail_probability(&x, lo) <= tail_probability(&x, hi));
        }

        #[test]
        fn body_and_two_tail_partition(x in prop::collection::vec(-5.0f64..5.0, 1..100), c in 0.01f64..5.0) {
            prop_assume!(x.iter().all(|v| v.abs() != c));
            prop_assert!((body_probability(&x, c) + two_tail_probability(&x, c) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn kurtosis_at_least_one(x in prop::collection::vec(-5.0f64..5.0, 4..60)) {
            let m = moments(&x).unwrap();
            prop_assume!(m.std > 1e-9);
            prop_assert!(m.kurtosis >= 1.0 - 1e-9);
        }
    }
}
