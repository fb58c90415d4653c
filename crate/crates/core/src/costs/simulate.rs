use rayon::prelude::*;

use super::{expected_cost_ac, PathCost};
use crate::domain::{validate, Dynamics, ExecutionStrategy, OrderSpec, ReturnDist, ScenarioSpec};
use crate::error::{Result, TcaError};
use crate::impact::geometric_impacts;
use crate::scalar::Scalar;
use crate::stochastic::{DistributionSpec, SeededStream};

/// Shocks `χ` for `paths × intervals` simulations, stored row-major with one
/// row per path.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMatrix<T> {
    paths: usize,
    intervals: usize,
    data: Vec<T>,
}

impl<T: Scalar> NoiseMatrix<T> {
    /// Row `i` is drawn from `substream(master_seed, i)`.
    pub fn generate(returns: &ReturnDist<T>, paths: usize, intervals: usize, master_seed: u64) -> Result<Self> {
        Self::build(returns, paths, intervals, |i| SeededStream::new(master_seed, i as u64))
    }

    /// Independent noise for candidate `candidate`; row `i` is drawn from
    /// `SeededStream::for_candidate(master_seed, candidate, i)`.
    pub fn for_candidate(
        returns: &ReturnDist<T>,
        paths: usize,
        intervals: usize,
        master_seed: u64,
        candidate: u64,
    ) -> Result<Self> {
        Self::build(returns, paths, intervals, |i| {
            SeededStream::for_candidate(master_seed, candidate, i as u64)
        })
    }

    fn build<F>(returns: &ReturnDist<T>, paths: usize, intervals: usize, stream: F) -> Result<Self>
    where
        F: Fn(usize) -> SeededStream + Sync,
    {
        if paths == 0 || intervals == 0 {
            return Err(TcaError::invalid(format!(
                "noise matrix needs at least one path and one interval, got {paths}x{intervals}"
            )));
        }
        let dist = DistributionSpec::from_returns(returns);
        dist.validate()?;
        let chi = dist.chi_sampler()?;
        let mut data = vec![T::zero(); paths * intervals];
        data.par_chunks_mut(intervals).enumerate().for_each(|(i, row)| {
            let mut rng = stream(i).rng();
            dist.fill(&mut rng, chi.as_ref(), row);
        });
        Ok(NoiseMatrix { paths, intervals, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let intervals = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || intervals == 0 || rows.iter().any(|r| r.len() != intervals) {
            return Err(TcaError::invalid("noise rows must be nonempty and of equal length"));
        }
        Ok(NoiseMatrix {
            paths: rows.len(),
            intervals,
            data: rows.concat(),
        })
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.intervals..(i + 1) * self.intervals]
    }

    pub fn rows(&self) -> impl IndexedParallelIterator<Item = &[T]> {
        self.data.par_chunks(self.intervals)
    }
}

/// Per-path cost of a fixed schedule, with every noise-independent term
/// precomputed.
#[derive(Debug, Clone, PartialEq)]
pub enum CostKernel<T> {
    /// `c = base + Σ_k w_k χ_k`, `base = E[c]`, `w_k = ξ σ √Δt x_k / N`.
    Arithmetic { base: T, weights: Vec<T> },
    /// `c = scale [(1/N) Σ_k n_k Π_{j≤k}(1 + I_j + vol χ_j) - 1]`, `scale = ξ p_0`.
    Geometric {
        shares: Vec<T>,
        impacts: Vec<T>,
        vol: T,
        scale: T,
        total_shares: T,
    },
}

impl<T: Scalar> CostKernel<T> {
    pub fn new(order: &OrderSpec<T>, strategy: &ExecutionStrategy<T>, scenario: &ScenarioSpec<T>) -> Result<Self> {
        validate(order, strategy, scenario)?;
        let vol = scenario.params.sigma * order.dt.sqrt();
        Ok(match scenario.dynamics {
            Dynamics::ArithmeticAc => {
                let w = order.xi() * vol / order.total_shares;
                CostKernel::Arithmetic {
                    base: expected_cost_ac(order, strategy, &scenario.params),
                    weights: strategy.remaining_unchecked().into_iter().map(|x| w * x).collect(),
                }
            }
            Dynamics::GeometricPropagator => CostKernel::Geometric {
                shares: strategy.shares().to_vec(),
                impacts: geometric_impacts(order, strategy, scenario)?,
                vol,
                scale: order.xi() * scenario.params.p0,
                total_shares: order.total_shares,
            },
        })
    }

    pub fn intervals(&self) -> usize {
        match self {
            CostKernel::Arithmetic { weights, .. } => weights.len(),
            CostKernel::Geometric { shares, .. } => shares.len(),
        }
    }

    /// Cost for one row of shocks; `noise.len()` must equal `intervals()`.
    pub fn evaluate(&self, noise: &[T]) -> PathCost<T> {
        debug_assert_eq!(noise.len(), self.intervals());
        match self {
            CostKernel::Arithmetic { base, weights } => PathCost {
                value: *base + weights.iter().zip(noise).map(|(&w, &c)| w * c).sum::<T>(),
                degenerate: false,
            },
            CostKernel::Geometric {
                shares,
                impacts,
                vol,
                scale,
                total_shares,
            } => {
                let mut growth = T::one();
                let mut acc = T::zero();
                let mut degenerate = false;
                for ((&n, &imp), &chi) in shares.iter().zip(impacts).zip(noise) {
                    let f = T::one() + imp + *vol * chi;
                    degenerate |= f <= T::zero();
                    growth = growth * f;
                    acc = acc + n * growth;
                }
                PathCost {
                    value: *scale * (acc / *total_shares - T::one()),
                    degenerate,
                }
            }
        }
    }

    /// Costs of every row, in row order, and the number of degenerate rows.
    pub fn evaluate_all(&self, noise: &NoiseMatrix<T>) -> Result<(Vec<T>, usize)> {
        if noise.intervals() != self.intervals() {
            return Err(TcaError::invalid(format!(
                "noise has {} columns, schedule has {} intervals",
                noise.intervals(),
                self.intervals()
            )));
        }
        let per_path: Vec<PathCost<T>> = noise.rows().map(|r| self.evaluate(r)).collect();
        let degenerate = per_path.iter().filter(|c| c.degenerate).count();
        let costs: Vec<T> = per_path.into_iter().map(|c| c.value).collect();
        if costs.iter().any(|c| !c.is_finite()) {
            return Err(TcaError::Degenerate("simulated cost is not finite".to_string()));
        }
        Ok((costs, degenerate))
    }
}

/// Empirical cost distribution of one schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSample<T> {
    pub costs: Vec<T>,
    pub path_count: usize,
    pub master_seed: u64,
    pub scenario: String,
    /// Paths on which the geometric price crossed zero; they are kept in `costs`.
    pub degenerate_paths: usize,
}

/// Simulates `path_count` costs of `strategy`; path `i` uses
/// `substream(master_seed, i)`, so the result does not depend on the number
/// of worker threads.
pub fn simulate_cost_sample<T: Scalar>(
    order: &OrderSpec<T>,
    strategy: &ExecutionStrategy<T>,
    scenario: &ScenarioSpec<T>,
    path_count: usize,
    master_seed: u64,
) -> Result<CostSample<T>> {
    let kernel = CostKernel::new(order, strategy, scenario)?;
    let noise = NoiseMatrix::generate(&scenario.returns, path_count, order.intervals, master_seed)?;
    let (costs, degenerate_paths) = kernel.evaluate_all(&noise)?;
    Ok(CostSample {
        costs,
        path_count,
        master_seed,
        scenario: scenario.fingerprint(),
        degenerate_paths,
    })
}
