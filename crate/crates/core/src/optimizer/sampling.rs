use crate::domain::ExecutionStrategy;
use crate::error::{Result, TcaError};
use crate::scalar::Scalar;
use crate::stochastic::{radical_inverse, MAX_HALTON_DIM, PRIMES};

/// Cap on raw quasi-random points drawn while looking for candidates.
pub const DEFAULT_MAX_RAW: u64 = 10_000_000;

/// Accepted schedules plus how many raw points it took to find them.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet<T> {
    pub strategies: Vec<ExecutionStrategy<T>>,
    pub raw_drawn: u64,
}

impl<T> CandidateSet<T> {
    pub fn accepted(&self) -> usize {
        self.strategies.len()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.raw_drawn == 0 {
            0.0
        } else {
            self.strategies.len() as f64 / self.raw_drawn as f64
        }
    }
}

/// `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Fewest points a quadratic surface in `dim` free coordinates can be fitted to.
pub fn min_fit_size(dim: usize) -> usize {
    2 * binomial(dim + 2, 2)
}

/// First `q_target` points of the Halton sequence in `[0, N]^{K-1}` whose
/// coordinates sum to at most `N`, each completed with `n_K = N - Σ`.
///
/// Deterministic. Stops early with fewer points once `max_raw` raw points have
/// been drawn, and fails if that leaves too few to fit a quadratic surface.
pub fn sample_strategies<T: Scalar>(
    intervals: usize,
    total_shares: T,
    q_target: usize,
    max_raw: u64,
) -> Result<CandidateSet<T>> {
    if intervals < 2 {
        return Err(TcaError::invalid(format!(
            "candidate sampling needs K >= 2, got {intervals}"
        )));
    }
    let dim = intervals - 1;
    if dim > MAX_HALTON_DIM {
        return Err(TcaError::invalid(format!(
            "candidate sampling supports K <= {}, got {intervals}",
            MAX_HALTON_DIM + 1
        )));
    }
    if q_target == 0 {
        return Err(TcaError::invalid("q_target must be at least 1"));
    }
    if !(total_shares > T::zero()) {
        return Err(TcaError::invalid(format!(
            "order size must be positive, got {total_shares}"
        )));
    }
    let n = total_shares.as_f64();
    let mut strategies = Vec::with_capacity(q_target);
    let mut point = vec![0.0; dim];
    let mut raw = 0u64;
    while strategies.len() < q_target && raw < max_raw {
        raw += 1;
        let mut sum = 0.0;
        let mut inside = true;
        for (d, slot) in point.iter_mut().enumerate() {
            *slot = n * radical_inverse(raw, PRIMES[d]);
            sum += *slot;
            if sum > n {
                inside = false;
                break;
            }
        }
        if inside {
            let free: Vec<T> = point.iter().map(|&v| T::of(v)).collect();
            strategies.push(ExecutionStrategy::from_free_coords(&free, total_shares));
        }
    }
    let needed = min_fit_size(dim).min(q_target);
    if strategies.len() < needed {
        return Err(TcaError::Insufficient(format!(
            "only {} of {} raw points fell inside the simplex for K = {intervals} (acceptance ~ 1/{}!); \
             a fit needs {needed}. Beyond K = 11 the raw budget Q needs to be larger than 10^8",
            strategies.len(),
            raw,
            dim
        )));
    }
    Ok(CandidateSet {
        strategies,
        raw_drawn: raw,
    })
}
