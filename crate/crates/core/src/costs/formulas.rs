use serde::{Deserialize, Serialize};

use crate::domain::{Dynamics, ExecutionStrategy, MarketParams, OrderSpec, ScenarioSpec};
use crate::error::{Result, TcaError};
use crate::impact::{geometric_impacts, perm_impact, temp_impact, PricePath};
#[cfg(test)]
use crate::impact::{simulate_path_ac, simulate_path_geometric};
use crate::scalar::Scalar;

/// One execution: `shares` done at `price` during interval `k` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fill<T> {
    pub k: usize,
    pub shares: T,
    pub price: T,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FillSequence<T> {
    pub fills: Vec<Fill<T>>,
}

impl<T: Scalar> FillSequence<T> {
    pub fn new(fills: Vec<Fill<T>>) -> Self {
        FillSequence { fills }
    }

    /// Fills of a schedule executed at the model prices of `path`.
    pub fn from_path(strategy: &ExecutionStrategy<T>, path: &PricePath<T>) -> Self {
        let fills = strategy
            .shares()
            .iter()
            .zip(&path.prices)
            .enumerate()
            .map(|(i, (&shares, &price))| Fill {
                k: i + 1,
                shares,
                price,
            })
            .collect();
        FillSequence { fills }
    }

    pub fn total_shares(&self) -> T {
        self.fills.iter().map(|f| f.shares).sum()
    }

    pub fn notional(&self) -> T {
        self.fills.iter().map(|f| f.shares * f.price).sum()
    }

    pub fn violations(&self, total_shares: Option<T>) -> Vec<String> {
        let mut out = Vec::new();
        if self.fills.is_empty() {
            out.push("fill sequence is empty".to_string());
        }
        for f in &self.fills {
            if !f.shares.is_finite() || !f.price.is_finite() {
                out.push(format!("non-finite fill in interval {}", f.k));
            } else if f.shares < T::zero() {
                out.push(format!("negative fill of {} shares in interval {}", f.shares, f.k));
            }
        }
        if let Some(n) = total_shares {
            let sum = self.total_shares();
            if (sum - n).abs() > T::sum_tolerance() * n.abs() {
                out.push(format!("fills sum to {sum}, order size is {n}"));
            }
        }
        out
    }

    /// Reads `k,shares,price` CSV with a header row.
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            k: usize,
            shares: f64,
            price: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut fills = Vec::new();
        for rec in rdr.deserialize::<Row>() {
            let r = rec?;
            fills.push(Fill {
                k: r.k,
                shares: T::of(r.shares),
                price: T::of(r.price),
            });
        }
        Ok(FillSequence { fills })
    }
}

/// Implementation-shortfall cost `ξ [(1/N) Σ n_k p_k - p_0]`.
pub fn cost_is<T: Scalar>(fills: &FillSequence<T>, p0: T, xi: T, total_shares: T) -> Result<T> {
    if !(total_shares > T::zero()) || !total_shares.is_finite() {
        return Err(TcaError::invalid(format!(
            "order size must be positive, got {total_shares}"
        )));
    }
    Ok(xi * (fills.notional() / total_shares - p0))
}

/// Cost of one simulated path and whether that path was degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCost<T> {
    pub value: T,
    pub degenerate: bool,
}

/// Closed-form arithmetic-dynamics cost
/// `(ξ/N) [Σ_k {σ√Δt χ_k - Δt g(n_k/Δt)} x_k - Σ_k n_k h(n_k/Δt)]`.
pub fn cost_ac_closed<T: Scalar>(
    order: &OrderSpec<T>,
    strategy: &ExecutionStrategy<T>,
    params: &MarketParams<T>,
    noise: &[T],
) -> Result<T> {
    if noise.len() != order.intervals || strategy.len() != order.intervals {
        return Err(TcaError::invalid(format!(
            "need {} noise values and allocations, got {} and {}",
            order.intervals,
            noise.len(),
            strategy.len()
        )));
    }
    let xi = order.xi();
    let dt = order.dt;
    let vol = params.sigma * dt.sqrt();
    let x = strategy.remaining_unchecked();
    let mut drift = T::zero();
    let mut spread = T::zero();
    for ((&n, &chi), &xk) in strategy.shares().iter().zip(noise).zip(&x) {
        let rate = n / dt;
        drift = drift + (vol * chi - dt * perm_impact(xi, params, rate)) * xk;
        spread = spread + n * temp_impact(xi, params, rate);
    }
    Ok(xi / order.total_shares * (drift - spread))
}

/// Geometric-dynamics cost `ξ p_0 [(1/N) Σ_k n_k Π_{j≤k}(1 + I(n_j) + ζ_j) - 1]`.
pub fn cost_geometric<T: Scalar>(
    order: &OrderSpec<T>,
    strategy: &ExecutionStrategy<T>,
    scenario: &ScenarioSpec<T>,
    noise: &[T],
) -> Result<PathCost<T>> {
    if scenario.dynamics != Dynamics::GeometricPropagator {
        return Err(TcaError::invalid("geometric cost needs geometric dynamics"));
    }
    if noise.len() != order.intervals || strategy.len() != order.intervals {
        return Err(TcaError::invalid(format!(
            "need {} noise values and allocations, got {} and {}",
            order.intervals,
            noise.len(),
            strategy.len()
        )));
    }
    let impacts = geometric_impacts(order, strategy, scenario)?;
    let vol = scenario.params.sigma * order.dt.sqrt();
    let mut growth = T::one();
    let mut acc = T::zero();
    let mut degenerate = false;
    for ((&n, &imp), &chi) in strategy.shares().iter().zip(&impacts).zip(noise) {
        let f = T::one() + imp + vol * chi;
        degenerate |= f <= T::zero();
        growth = growth * f;
        acc = acc + n * growth;
    }
    Ok(PathCost {
        value: order.xi() * scenario.params.p0 * (acc / order.total_shares - T::one()),
        degenerate,
    })
}

/// `E[c] = -(ξ/N) Σ_k {x_k Δt g(n_k/Δt) + n_k h(n_k/Δt)}`.
pub fn expected_cost_ac<T: Scalar>(
    order: &OrderSpec<T>,
    strategy: &ExecutionStrategy<T>,
    params: &MarketParams<T>,
) -> T {
    let xi = order.xi();
    let dt = order.dt;
    let x = strategy.remaining_unchecked();
    let total: T = strategy
        .shares()
        .iter()
        .zip(&x)
        .map(|(&n, &xk)| {
            let rate = n / dt;
            xk * dt * perm_impact(xi, params, rate) + n * temp_impact(xi, params, rate)
        })
        .sum();
    -xi / order.total_shares * total
}

/// `V[c] = (σ² Δt / N²) Σ_k x_k²` for unit-variance shocks.
pub fn variance_ac<T: Scalar>(order: &OrderSpec<T>, strategy: &ExecutionStrategy<T>, params: &MarketParams<T>) -> T {
    let x = strategy.remaining_unchecked();
    let ss: T = x.iter().map(|&v| v * v).sum();
    params.sigma * params.sigma * order.dt / (order.total_shares * order.total_shares) * ss
}

/// Cost of a simulated path through the implementation-shortfall definition;
/// used to cross-check the closed forms.
#[cfg(test)]
pub(crate) fn path_cost_is<T: Scalar>(
    order: &OrderSpec<T>,
    strategy: &ExecutionStrategy<T>,
    scenario: &ScenarioSpec<T>,
    noise: &[T],
) -> Result<T> {
    let path = match scenario.dynamics {
        Dynamics::ArithmeticAc => simulate_path_ac(order, strategy, &scenario.params, noise)?,
        Dynamics::GeometricPropagator => simulate_path_geometric(order, strategy, scenario, noise)?,
    };
    cost_is(
        &FillSequence::from_path(strategy, &path),
        scenario.params.p0,
        order.xi(),
        order.total_shares,
    )
}
