use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::{beta::beta_reg, erf::erf, gamma::ln_gamma};

use super::SeededStream;
use crate::domain::ReturnDist;
use crate::error::{Result, TcaError};
use crate::scalar::Scalar;

/// Location-scale family used both for generating shocks and for fitting
/// simulated costs.
///
/// For `StudentT`, `sigma` is the scale parameter of the density
/// `Γ((ν+1)/2) / (σ √(νπ) Γ(ν/2)) · [(ν + z²)/ν]^{-(ν+1)/2}`, `z = (x-μ)/σ`;
/// the standard deviation is `σ √(ν/(ν-2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DistributionSpec<T> {
    Gaussian { mu: T, sigma: T },
    StudentT { mu: T, sigma: T, nu: T },
}

impl<T: Scalar> DistributionSpec<T> {
    pub fn standard_normal() -> Self {
        DistributionSpec::Gaussian {
            mu: T::zero(),
            sigma: T::one(),
        }
    }

    /// Zero-mean shocks matching a scenario's return distribution.
    pub fn from_returns(r: &ReturnDist<T>) -> Self {
        match *r {
            ReturnDist::Gaussian => Self::standard_normal(),
            ReturnDist::StudentT { nu, scale } => DistributionSpec::StudentT {
                mu: T::zero(),
                sigma: scale,
                nu: T::of(nu as f64),
            },
        }
    }

    pub fn mean(&self) -> T {
        match *self {
            DistributionSpec::Gaussian { mu, .. } | DistributionSpec::StudentT { mu, .. } => mu,
        }
    }

    /// Standard deviation (not the scale parameter).
    pub fn std_dev(&self) -> T {
        match *self {
            DistributionSpec::Gaussian { sigma, .. } => sigma,
            DistributionSpec::StudentT { sigma, nu, .. } => sigma * (nu / (nu - T::of(2.0))).sqrt(),
        }
    }

    /// `sigma > 0`; `nu > 2` so that the variance exists.
    pub fn validate(&self) -> Result<()> {
        let mut out = Vec::new();
        let (mu, sigma) = match *self {
            DistributionSpec::Gaussian { mu, sigma } => (mu, sigma),
            DistributionSpec::StudentT { mu, sigma, nu } => {
                if !nu.is_finite() || nu <= T::of(2.0) {
                    out.push(format!("nu must be finite and above 2, got {nu}"));
                }
                (mu, sigma)
            }
        };
        if !mu.is_finite() {
            out.push(format!("mu must be finite, got {mu}"));
        }
        if !sigma.is_finite() || sigma <= T::zero() {
            out.push(format!("sigma must be positive, got {sigma}"));
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(TcaError::Validation(out))
        }
    }

    pub fn pdf(&self, x: T) -> T {
        T::of(self.ln_pdf_f64(x.as_f64()).exp())
    }

    pub(crate) fn ln_pdf_f64(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::Gaussian { mu, sigma } => {
                let s = sigma.as_f64();
                let z = (x - mu.as_f64()) / s;
                -0.5 * z * z - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            DistributionSpec::StudentT { mu, sigma, nu } => {
                let (s, n) = (sigma.as_f64(), nu.as_f64());
                let z = (x - mu.as_f64()) / s;
                ln_gamma(0.5 * (n + 1.0))
                    - ln_gamma(0.5 * n)
                    - s.ln()
                    - 0.5 * (n * std::f64::consts::PI).ln()
                    - 0.5 * (n + 1.0) * (1.0 + z * z / n).ln()
            }
        }
    }

    /// Gaussian via `erf`; Student-t via the regularised incomplete beta
    /// function `I_{ν/(ν+z²)}(ν/2, 1/2)`.
    pub fn cdf(&self, x: T) -> T {
        T::of(self.cdf_f64(x.as_f64()))
    }

    pub(crate) fn cdf_f64(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::Gaussian { mu, sigma } => {
                let z = (x - mu.as_f64()) / sigma.as_f64();
                if z.is_infinite() {
                    return if z > 0.0 { 1.0 } else { 0.0 };
                }
                0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
            }
            DistributionSpec::StudentT { mu, sigma, nu } => {
                let n = nu.as_f64();
                let z = (x - mu.as_f64()) / sigma.as_f64();
                if z.is_infinite() {
                    return if z > 0.0 { 1.0 } else { 0.0 };
                }
                let tail = 0.5 * beta_reg(0.5 * n, 0.5, n / (n + z * z));
                if z < 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
        }
    }

    /// One draw. Student-t is `Z / sqrt(V/ν)` with `Z` standard normal and
    /// `V` chi-square(ν), then scaled and shifted.
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R, chi: Option<&ChiSquared<f64>>) -> f64 {
        match *self {
            DistributionSpec::Gaussian { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mu.as_f64() + sigma.as_f64() * z
            }
            DistributionSpec::StudentT { mu, sigma, nu } => {
                let z: f64 = rng.sample(StandardNormal);
                let v = chi.expect("chi-square sampler").sample(rng);
                mu.as_f64() + sigma.as_f64() * z / (v / nu.as_f64()).sqrt()
            }
        }
    }

    pub(crate) fn chi_sampler(&self) -> Result<Option<ChiSquared<f64>>> {
        match *self {
            DistributionSpec::Gaussian { .. } => Ok(None),
            DistributionSpec::StudentT { nu, .. } => ChiSquared::new(nu.as_f64())
                .map(Some)
                .map_err(|e| TcaError::Domain(format!("chi-square({nu}): {e}"))),
        }
    }

    /// Fills `out` with i.i.d. draws from `rng`. All normals are drawn before
    /// any chi-square variate, so a Student-t row shares its numerators with
    /// the Gaussian row of the same stream.
    pub(crate) fn fill<R: Rng + ?Sized>(&self, rng: &mut R, chi: Option<&ChiSquared<f64>>, out: &mut [T]) {
        match *self {
            DistributionSpec::Gaussian { .. } => {
                for slot in out.iter_mut() {
                    *slot = T::of(self.draw(rng, chi));
                }
            }
            DistributionSpec::StudentT { mu, sigma, nu } => {
                let chi = chi.expect("chi-square sampler");
                let z: Vec<f64> = (0..out.len()).map(|_| rng.sample(StandardNormal)).collect();
                for (slot, z) in out.iter_mut().zip(z) {
                    let v = chi.sample(rng);
                    *slot = T::of(mu.as_f64() + sigma.as_f64() * z / (v / nu.as_f64()).sqrt());
                }
            }
        }
    }
}

/// `count` i.i.d. draws from `dist` using `stream`.
pub fn sample<T: Scalar>(dist: &DistributionSpec<T>, count: usize, stream: SeededStream) -> Result<Vec<T>> {
    dist.validate()?;
    if count == 0 {
        return Err(TcaError::invalid("sample count must be at least 1"));
    }
    let chi = dist.chi_sampler()?;
    let mut rng = stream.rng();
    let mut out = vec![T::zero(); count];
    dist.fill(&mut rng, chi.as_ref(), &mut out);
    Ok(out)
}
