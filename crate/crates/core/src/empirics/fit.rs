use argmin::core::{CostFunction, Error as ArgminError, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use super::stats::moments;
use crate::error::{Result, TcaError};
use crate::scalar::Scalar;
use crate::stochastic::DistributionSpec;

/// Lower bound on the fitted degrees of freedom.
pub const MIN_NU: f64 = 2.01;

const CHUNK: usize = 8192;
const MAX_ITERS: u64 = 5000;
const REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult<T> {
    pub dist: DistributionSpec<T>,
    pub log_likelihood: f64,
    pub converged: bool,
}

/// Log-likelihood of `sample` under `dist`, summed in fixed-size chunks so
/// the result does not depend on thread scheduling.
pub fn log_likelihood<T: Scalar>(sample: &[T], dist: &DistributionSpec<T>) -> f64 {
    let partial: Vec<f64> = sample
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(|x| dist.ln_pdf_f64(x.as_f64())).sum::<f64>())
        .collect();
    partial.iter().sum()
}

/// Mean and unbiased standard deviation, so that the fit reproduces
/// [`moments`](super::moments) exactly.
pub fn fit_gaussian<T: Scalar>(sample: &[T]) -> Result<FitResult<T>> {
    if sample.len() < 10 {
        return Err(TcaError::Insufficient(format!(
            "gaussian fit needs at least 10 values, got {}",
            sample.len()
        )));
    }
    let m = moments(sample)?;
    if !(m.std > 0.0) {
        return Err(TcaError::Degenerate("gaussian fit of a constant sample".to_string()));
    }
    let dist = DistributionSpec::Gaussian {
        mu: T::of(m.mean),
        sigma: T::of(m.std),
    };
    Ok(FitResult {
        dist,
        log_likelihood: log_likelihood(sample, &dist),
        converged: true,
    })
}

/// Mean negative log-likelihood of a Student-t over
/// `θ = (μ, ln σ, ln(ν - MIN_NU))`, which keeps every iterate in bounds.
struct TNegLogLik<'a> {
    x: &'a [f64],
}

fn unpack(theta: &[f64]) -> (f64, f64, f64) {
    (theta[0], theta[1].exp(), MIN_NU + theta[2].exp())
}

impl CostFunction for TNegLogLik<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Self::Param) -> std::result::Result<f64, ArgminError> {
        let (mu, sigma, nu) = unpack(theta);
        if !(sigma > 0.0) || !sigma.is_finite() || !nu.is_finite() {
            return Ok(f64::INFINITY);
        }
        let norm =
            ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - sigma.ln() - 0.5 * (nu * std::f64::consts::PI).ln();
        let half = 0.5 * (nu + 1.0);
        let partial: Vec<f64> = self
            .x
            .par_chunks(CHUNK)
            .map(|c| {
                c.iter()
                    .map(|&v| {
                        let z = (v - mu) / sigma;
                        (z * z / nu).ln_1p()
                    })
                    .sum::<f64>()
            })
            .collect();
        let n = self.x.len() as f64;
        let ll = n * norm - half * partial.iter().sum::<f64>();
        Ok(if ll.is_finite() { -ll / n } else { f64::INFINITY })
    }
}

/// Student-t maximum likelihood by Nelder-Mead, started from moment
/// matching: `ν = 4 + 6 / excess kurtosis` (clamped to `[2.5, 100]`) and
/// `σ = std √((ν-2)/ν)`. `converged` is false when the iteration cap is hit
/// first; the best point found is returned either way.
pub fn fit_student_t<T: Scalar>(sample: &[T]) -> Result<FitResult<T>> {
    if sample.len() < 50 {
        return Err(TcaError::Insufficient(format!(
            "student-t fit needs at least 50 values, got {}",
            sample.len()
        )));
    }
    let m = moments(sample)?;
    if !(m.std > 0.0) {
        return Err(TcaError::Degenerate("student-t fit of a constant sample".to_string()));
    }
    let excess = m.kurtosis - 3.0;
    let nu0 = if excess > 0.0 {
        (4.0 + 6.0 / excess).clamp(2.5, 100.0)
    } else {
        100.0
    };
    let sigma0 = m.std * ((nu0 - 2.0) / nu0).sqrt();
    let x: Vec<f64> = sample.iter().map(|v| v.as_f64()).collect();
    let problem = TNegLogLik { x: &x };

    let theta0 = vec![m.mean, sigma0.ln(), (nu0 - MIN_NU).ln()];
    let f0 = problem.cost(&theta0).map_err(|e| TcaError::Domain(e.to_string()))?;
    let mut simplex = vec![theta0.clone()];
    for (i, step) in [0.1 * m.std, 0.1, 0.3].into_iter().enumerate() {
        let mut p = theta0.clone();
        p[i] += step;
        simplex.push(p);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(REL_TOL * f0.abs().max(1.0))
        .map_err(|e| TcaError::Domain(e.to_string()))?;
    let res = Executor::new(problem, solver)
        .configure(|s| s.max_iters(MAX_ITERS))
        .run()
        .map_err(|e| TcaError::Domain(format!("student-t fit failed: {e}")))?;
    let state = res.state();
    let best = state
        .get_best_param()
        .cloned()
        .ok_or_else(|| TcaError::Domain("student-t fit produced no estimate".to_string()))?;
    let converged = matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::SolverConverged)
    );
    let (mu, sigma, nu) = unpack(&best);
    let dist = DistributionSpec::StudentT {
        mu: T::of(mu),
        sigma: T::of(sigma),
        nu: T::of(nu),
    };
    Ok(FitResult {
        dist,
        log_likelihood: -state.get_best_cost() * x.len() as f64,
        converged: converged && dist.validate().is_ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{sample, substream};
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_fit_reproduces_moments() {
        let d = DistributionSpec::Gaussian { mu: -0.71, sigma: 0.44 };
        let x: Vec<f64> = sample(&d, 1_000_000, substream(11, 0)).unwrap();
        let f = fit_gaussian(&x).unwrap();
        let m = moments(&x).unwrap();
        match f.dist {
            DistributionSpec::Gaussian { mu, sigma } => {
                assert_eq!((mu, sigma), (m.mean, m.std));
                assert_abs_diff_eq!(mu, -0.71, epsilon = 0.01);
                assert_abs_diff_eq!(sigma, 0.44, epsilon = 0.01);
            }
            _ => unreachable!(),
        }
        assert!(f.converged);
    }

    #[test]
    fn degenerate_and_short_samples() {
        assert!(matches!(fit_gaussian(&[1.0; 20]), Err(TcaError::Degenerate(_))));
        assert!(fit_gaussian(&[1.0, 2.0, 3.0]).is_err());
        assert!(fit_student_t(&[0.5; 100]).is_err());
        assert!(fit_student_t(&(0..20).map(f64::from).collect::<Vec<_>>()).is_err());
    }

    #[test]
    fn t_fit_recovers_degrees_of_freedom() {
        let d = DistributionSpec::StudentT {
            mu: 0.0,
            sigma: 1.0,
            nu: 5.0,
        };
        let x: Vec<f64> = sample(&d, 1_000_000, substream(12, 0)).unwrap();
        let f = fit_student_t(&x).unwrap();
        assert!(f.converged);
        match f.dist {
            DistributionSpec::StudentT { mu, sigma, nu } => {
                assert!((nu - 5.0).abs() < 0.3, "nu = {nu}");
                assert_abs_diff_eq!(mu, 0.0, epsilon = 0.01);
                assert_abs_diff_eq!(sigma, 1.0, epsilon = 0.02);
            }
            _ => unreachable!(),
        }
        assert_abs_diff_eq!(
            f.log_likelihood,
            log_likelihood(&x, &f.dist),
            epsilon = 1e-6 * f.log_likelihood.abs()
        );
    }

    #[test]
    fn t_fit_beats_gaussian_on_heavy_tails() {
        let d = DistributionSpec::StudentT {
            mu: 1.0,
            sigma: 0.5,
            nu: 4.0,
        };
        let x: Vec<f64> = sample(&d, 20_000, substream(13, 0)).unwrap();
        let t = fit_student_t(&x).unwrap();
        let g = fit_gaussian(&x).unwrap();
        assert!(t.log_likelihood > g.log_likelihood);
    }

    #[test]
    fn likelihood_is_thread_independent() {
        let x: Vec<f64> = sample(&DistributionSpec::standard_normal(), 50_000, substream(14, 0)).unwrap();
        let a = fit_student_t(&x).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| fit_student_t(&x).unwrap());
        assert_eq!(a, b);
    }
}
