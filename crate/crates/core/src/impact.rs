//! Impact functions and price-path simulation for the two dynamics families.

use crate::domain::{ExecutionStrategy, ImpactKind, MarketParams, OrderSpec, ScenarioSpec};
use crate::error::{Result, TcaError};
use crate::scalar::Scalar;

/// Permanent impact `g(x) = ξ γ x` of trading rate `x`.
#[inline]
pub fn perm_impact<T: Scalar>(xi: T, params: &MarketParams<T>, rate: T) -> T {
    xi * params.gamma * rate
}

/// Temporary impact `h(x) = ξ (ε + η x)` of trading rate `x`.
#[inline]
pub fn temp_impact<T: Scalar>(xi: T, params: &MarketParams<T>, rate: T) -> T {
    xi * (params.epsilon + params.eta * rate)
}

/// Relative price move `I(n_k)` caused by executing `shares` in interval
/// `k` (1-based) under a propagator kernel.
///
/// * `LinExp`: `-ξ γ n e^{-ρ k Δt}`
/// * `LinPow`: `-ξ γ n (k Δt)^{-ρ}`
/// * `Sqrt`:   `-ξ γ √n`
pub fn propagator_impact<T: Scalar>(
    kind: ImpactKind,
    xi: T,
    params: &MarketParams<T>,
    shares: T,
    k: usize,
    dt: T,
) -> Result<T> {
    if shares < T::zero() || !shares.is_finite() {
        return Err(TcaError::Domain(format!(
            "executed shares must be nonnegative, got {shares}"
        )));
    }
    let t = T::of_usize(k) * dt;
    match kind {
        ImpactKind::LinExp => Ok(-xi * params.gamma * shares * (-params.rho * t).exp()),
        ImpactKind::LinPow => {
            if t <= T::zero() {
                return Err(TcaError::Domain(format!("power-law kernel needs k*dt > 0, got {t}")));
            }
            Ok(-xi * params.gamma * shares * t.powf(-params.rho))
        }
        ImpactKind::Sqrt => Ok(-xi * params.gamma * shares.sqrt()),
        ImpactKind::AcLinear => Err(TcaError::Domain(
            "linear AC impact is not a propagator kernel".to_string(),
        )),
    }
}

/// Simulated prices `p_1..p_K` and the shocks that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath<T> {
    pub prices: Vec<T>,
    pub noise: Vec<T>,
    /// Set when some multiplicative factor `1 + I + ζ` was nonpositive, i.e.
    /// the geometric price crossed zero. Always false for arithmetic paths.
    pub degenerate: bool,
}

fn check_noise<T>(order_k: usize, strategy: &ExecutionStrategy<T>, noise: &[T]) -> Result<()>
where
    T: Scalar,
{
    if strategy.len() != order_k {
        return Err(TcaError::invalid(format!(
            "strategy has {} intervals, order has {order_k}",
            strategy.len()
        )));
    }
    if noise.len() != order_k {
        return Err(TcaError::invalid(format!(
            "noise has {} entries, expected {order_k}",
            noise.len()
        )));
    }
    Ok(())
}

/// Arithmetic dynamics:
/// `p_k = p_0 + Σ_{j<k} [σ √Δt χ_j - Δt g(n_j/Δt)] - h(n_k/Δt)`.
///
/// Prices may go negative; they are returned as computed.
pub fn simulate_path_ac<T: Scalar>(
    order: &OrderSpec<T>,
    strategy: &ExecutionStrategy<T>,
    params: &MarketParams<T>,
    noise: &[T],
) -> Result<PricePath<T>> {
    check_noise(order.intervals, strategy, noise)?;
    let xi = order.xi();
    let dt = order.dt;
    let vol = params.sigma * dt.sqrt();
    let mut drift = T::zero();
    let mut prices = Vec::with_capacity(order.intervals);
    for (&n, &chi) in strategy.shares().iter().zip(noise) {
        let rate = n / dt;
        prices.push(params.p0 + drift - temp_impact(xi, params, rate));
        drift = drift + vol * chi - dt * perm_impact(xi, params, rate);
    }
    Ok(PricePath {
        prices,
        noise: noise.to_vec(),
        degenerate: false,
    })
}

/// Geometric propagator dynamics `p_k = p_{k-1} (1 + I(n_k) + ζ_k)` with
/// `ζ_k = σ √Δt χ_k`.
pub fn simulate_path_geometric<T: Scalar>(
    order: &OrderSpec<T>,
    strategy: &ExecutionStrategy<T>,
    scenario: &ScenarioSpec<T>,
    noise: &[T],
) -> Result<PricePath<T>> {
    check_noise(order.intervals, strategy, noise)?;
    let factors = geometric_impacts(order, strategy, scenario)?;
    let vol = scenario.params.sigma * order.dt.sqrt();
    let mut p = scenario.params.p0;
    let mut degenerate = false;
    let mut prices = Vec::with_capacity(order.intervals);
    for (&imp, &chi) in factors.iter().zip(noise) {
        let f = T::one() + imp + vol * chi;
        degenerate |= f <= T::zero();
        p = p * f;
        prices.push(p);
    }
    Ok(PricePath {
        prices,
        noise: noise.to_vec(),
        degenerate,
    })
}

/// Deterministic impacts `I(n_1)..I(n_K)` of a schedule.
pub(crate) fn geometric_impacts<T: Scalar>(
    order: &OrderSpec<T>,
    strategy: &ExecutionStrategy<T>,
    scenario: &ScenarioSpec<T>,
) -> Result<Vec<T>> {
    let xi = order.xi();
    strategy
        .shares()
        .iter()
        .enumerate()
        .map(|(i, &n)| propagator_impact(scenario.impact, xi, &scenario.params, n, i + 1, order.dt))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ReturnDist, Side};
    use approx::assert_abs_diff_eq;

    fn params(gamma: f64, eta: f64, epsilon: f64, sigma: f64) -> MarketParams<f64> {
        MarketParams {
            p0: 1.0,
            sigma,
            gamma,
            eta,
            epsilon,
            rho: 0.5,
        }
    }

    #[test]
    fn permanent_impact_examples() {
        assert_eq!(perm_impact(1.0, &params(1.0, 1.0, 0.0, 1.0), 0.5), 0.5);
        assert_eq!(perm_impact(1.0, &params(1.0, 1.0, 0.0, 1.0), 0.0), 0.0);
        assert_eq!(perm_impact(-1.0, &params(2.0, 1.0, 0.0, 1.0), 1.0), -2.0);
    }

    #[test]
    fn temporary_impact_examples() {
        assert_eq!(temp_impact(1.0, &params(1.0, 1.0, 1.0, 1.0), 1.0), 2.0);
        assert_eq!(temp_impact(1.0, &params(1.0, 1.0, 0.0, 1.0), 0.0), 0.0);
        assert_eq!(temp_impact(1.0, &params(1.0, 1.0, 0.0, 1.0), 0.65), 0.65);
    }

    #[test]
    fn propagator_examples() {
        let p = params(1.0, 1.0, 0.0, 1.0);
        let v = propagator_impact(ImpactKind::LinExp, 1.0, &p, 1.0, 1, 1.0).unwrap();
        assert_abs_diff_eq!(v, -(-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, -0.60653, epsilon = 1e-5);
        let v = propagator_impact(ImpactKind::Sqrt, 1.0, &p, 0.25, 1, 1.0).unwrap();
        assert_eq!(v, -0.5);
        let v = propagator_impact(ImpactKind::LinPow, 1.0, &p, 1.0, 4, 1.0).unwrap();
        assert_abs_diff_eq!(v, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn propagator_domain_errors() {
        let p = params(1.0, 1.0, 0.0, 1.0);
        assert!(propagator_impact(ImpactKind::LinPow, 1.0, &p, 1.0, 0, 1.0).is_err());
        assert!(propagator_impact(ImpactKind::LinExp, 1.0, &p, -0.1, 1, 1.0).is_err());
        assert!(propagator_impact(ImpactKind::AcLinear, 1.0, &p, 0.1, 1, 1.0).is_err());
    }

    #[test]
    fn ac_path_examples() {
        let order = OrderSpec::<f64>::unit_sell(2);
        let s = ExecutionStrategy::from_shares(vec![0.5, 0.5]);
        let path = simulate_path_ac(&order, &s, &params(1.0, 1.0, 1.0, 0.0), &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(path.prices[0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(path.prices[1], -1.0, epsilon = 1e-15);
        let path = simulate_path_ac(&order, &s, &params(1.0, 1.0, 0.0, 0.0), &[0.3, -2.0]).unwrap();
        assert_abs_diff_eq!(path.prices[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(path.prices[1], 0.0, epsilon = 1e-15);
        let idle = ExecutionStrategy::from_shares(vec![0.0, 0.0]);
        let path = simulate_path_ac(&order, &idle, &params(1.0, 1.0, 0.0, 0.0), &[1.0, 1.0]).unwrap();
        assert_eq!(path.prices, vec![1.0, 1.0]);
    }

    #[test]
    fn ac_path_is_affine_in_noise() {
        let order = OrderSpec::<f64>::new(Side::Buy, 1.0, 2.0, 4);
        let s = ExecutionStrategy::from_shares(vec![0.4, 0.3, 0.2, 0.1]);
        let p = params(0.7, 0.4, 0.1, 1.3);
        let base = [0.2, -0.5, 1.1, 0.3];
        let p0 = simulate_path_ac(&order, &s, &p, &base).unwrap();
        let h = 1e-3;
        for j in 0..4 {
            let mut bumped = base;
            bumped[j] += h;
            let p1 = simulate_path_ac(&order, &s, &p, &bumped).unwrap();
            for k in 0..4 {
                let slope = (p1.prices[k] - p0.prices[k]) / h;
                let expect = if j < k { p.sigma * order.dt.sqrt() } else { 0.0 };
                assert_abs_diff_eq!(slope, expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn geometric_path_examples() {
        let sc = ScenarioSpec::geometric(ImpactKind::LinExp, ReturnDist::Gaussian)
            .with_params(MarketParams::baseline().with_sigma(0.0));
        let path = simulate_path_geometric(
            &OrderSpec::unit_sell(1),
            &ExecutionStrategy::from_shares(vec![1.0]),
            &sc,
            &[0.0],
        )
        .unwrap();
        assert_abs_diff_eq!(path.prices[0], 1.0 - (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(path.prices[0], 0.39347, epsilon = 1e-5);

        let mut zero = sc;
        zero.params.gamma = 0.0;
        let path = simulate_path_geometric(
            &OrderSpec::unit_sell(3),
            &ExecutionStrategy::from_shares(vec![0.2, 0.3, 0.5]),
            &zero,
            &[0.4, -1.0, 2.0],
        )
        .unwrap();
        assert_eq!(path.prices, vec![1.0; 3]);

        let sq = ScenarioSpec::geometric(ImpactKind::Sqrt, ReturnDist::Gaussian)
            .with_params(MarketParams::baseline().with_sigma(0.0));
        let path = simulate_path_geometric(
            &OrderSpec::unit_sell(2),
            &ExecutionStrategy::from_shares(vec![0.5, 0.5]),
            &sq,
            &[0.0, 0.0],
        )
        .unwrap();
        let f = 1.0 - 0.5f64.sqrt();
        assert_abs_diff_eq!(path.prices[0], f, epsilon = 1e-15);
        assert_abs_diff_eq!(path.prices[1], f * f, epsilon = 1e-15);
        assert_abs_diff_eq!(path.prices[1], 0.08579, epsilon = 1e-5);
    }

    #[test]
    fn geometric_noise_free_product() {
        let sc = ScenarioSpec::geometric(ImpactKind::LinExp, ReturnDist::Gaussian);
        let order = OrderSpec::<f64>::unit_sell(4);
        let n = [0.1, 0.4, 0.3, 0.2];
        let path =
            simulate_path_geometric(&order, &ExecutionStrategy::from_shares(n.to_vec()), &sc, &[0.0; 4]).unwrap();
        let expect: f64 = n
            .iter()
            .enumerate()
            .map(|(i, v)| 1.0 - v * (-0.5 * (i + 1) as f64).exp())
            .product();
        assert_abs_diff_eq!(path.prices[3], expect, epsilon = 1e-15);
    }

    #[test]
    fn later_execution_decays_more() {
        let sc = ScenarioSpec::geometric(ImpactKind::LinExp, ReturnDist::Gaussian);
        let order = OrderSpec::<f64>::unit_sell(2);
        let early =
            simulate_path_geometric(&order, &ExecutionStrategy::from_shares(vec![1.0, 0.0]), &sc, &[0.0; 2]).unwrap();
        let late =
            simulate_path_geometric(&order, &ExecutionStrategy::from_shares(vec![0.0, 1.0]), &sc, &[0.0; 2]).unwrap();
        assert!((1.0 - late.prices[1]) < (1.0 - early.prices[1]));
    }

    #[test]
    fn degenerate_paths_are_flagged_not_clipped() {
        let sc = ScenarioSpec::geometric(ImpactKind::LinExp, ReturnDist::Gaussian);
        let order = OrderSpec::<f64>::unit_sell(2);
        let s = ExecutionStrategy::from_shares(vec![0.5, 0.5]);
        let path = simulate_path_geometric(&order, &s, &sc, &[-3.0, 0.0]).unwrap();
        assert!(path.degenerate);
        assert!(path.prices[0] < 0.0);
        let ok = simulate_path_geometric(&order, &s, &sc, &[0.1, 0.0]).unwrap();
        assert!(!ok.degenerate);
    }

    #[test]
    fn noise_length_is_checked() {
        let order = OrderSpec::<f64>::unit_sell(2);
        let s = ExecutionStrategy::from_shares(vec![0.5, 0.5]);
        assert!(simulate_path_ac(&order, &s, &MarketParams::baseline(), &[0.0]).is_err());
    }
}
