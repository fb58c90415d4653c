//! Orders, schedules, market parameters and scenario descriptions.
//!
//! Every type here is a plain value: construct, validate, then share freely
//! between threads.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TcaError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    /// Sign convention for costs: -1 for a buy, +1 for a sell.
    #[inline]
    pub fn xi<T: Scalar>(self) -> T {
        match self {
            Side::Buy => -T::one(),
            Side::Sell => T::one(),
        }
    }
}

/// The parent order being scheduled over `intervals` equal slices of `horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderSpec<T> {
    pub side: Side,
    pub total_shares: T,
    pub horizon: T,
    pub intervals: usize,
    pub dt: T,
}

impl<T: Scalar> OrderSpec<T> {
    /// Builds an order with `dt = horizon / intervals`.
    pub fn new(side: Side, total_shares: T, horizon: T, intervals: usize) -> Self {
        let dt = if intervals == 0 {
            T::nan()
        } else {
            horizon / T::of_usize(intervals)
        };
        OrderSpec {
            side,
            total_shares,
            horizon,
            intervals,
            dt,
        }
    }

    /// Unit sell order with unit time steps, the normalisation used in all
    /// reference results.
    pub fn unit_sell(intervals: usize) -> Self {
        Self::new(Side::Sell, T::one(), T::of_usize(intervals), intervals)
    }

    #[inline]
    pub fn xi(&self) -> T {
        self.side.xi()
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.total_shares.is_finite() || self.total_shares <= T::zero() {
            out.push(format!(
                "total_shares must be positive and finite, got {}",
                self.total_shares
            ));
        }
        if !self.horizon.is_finite() || self.horizon <= T::zero() {
            out.push(format!("horizon must be positive and finite, got {}", self.horizon));
        }
        if self.intervals == 0 {
            out.push("intervals must be at least 1".to_string());
        }
        if !self.dt.is_finite() || self.dt <= T::zero() {
            out.push(format!("dt must be positive and finite, got {}", self.dt));
        } else if self.intervals > 0 && self.horizon.is_finite() {
            let product = self.dt * T::of_usize(self.intervals);
            let tol = T::of(1e-12).max(T::epsilon() * T::of(8.0));
            if (product - self.horizon).abs() > tol * self.horizon.abs() {
                out.push(format!(
                    "intervals * dt = {} does not match horizon {}",
                    product, self.horizon
                ));
            }
        }
        out
    }
}

/// Market and impact-model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams<T> {
    pub p0: T,
    pub sigma: T,
    pub gamma: T,
    pub eta: T,
    pub epsilon: T,
    pub rho: T,
}

impl<T: Scalar> MarketParams<T> {
    /// gamma = eta = sigma = p0 = 1, rho = 1/2, epsilon = 0.
    pub fn baseline() -> Self {
        MarketParams {
            p0: T::one(),
            sigma: T::one(),
            gamma: T::one(),
            eta: T::one(),
            epsilon: T::zero(),
            rho: T::of(0.5),
        }
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let named = [
            ("p0", self.p0),
            ("sigma", self.sigma),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("epsilon", self.epsilon),
            ("rho", self.rho),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                out.push(format!("{name} must be finite, got {v}"));
            }
        }
        if self.p0.is_finite() && self.p0 <= T::zero() {
            out.push(format!("p0 must be positive, got {}", self.p0));
        }
        if self.sigma < T::zero() {
            out.push(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        if self.epsilon < T::zero() {
            out.push(format!("epsilon must be nonnegative, got {}", self.epsilon));
        }
        if self.rho < T::zero() {
            out.push(format!("rho must be nonnegative, got {}", self.rho));
        }
        out
    }
}

/// Shares executed in each interval, `n_1..n_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExecutionStrategy<T> {
    shares: Vec<T>,
}

impl<T: Scalar> ExecutionStrategy<T> {
    /// Wraps a share vector without checking it; see [`validate`].
    pub fn from_shares(shares: Vec<T>) -> Self {
        ExecutionStrategy { shares }
    }

    /// Wraps and validates against `total_shares`.
    pub fn new(shares: Vec<T>, total_shares: T) -> Result<Self> {
        let s = Self::from_shares(shares);
        let v = strategy_violations(&s, total_shares);
        if v.is_empty() {
            Ok(s)
        } else {
            Err(TcaError::Validation(v))
        }
    }

    /// Rebuilds a full schedule from its first `K-1` entries, setting
    /// `n_K = N - sum`.
    pub fn from_free_coords(free: &[T], total_shares: T) -> Self {
        let mut shares = free.to_vec();
        let used: T = free.iter().copied().sum();
        shares.push((total_shares - used).max(T::zero()));
        Self::from_shares(shares)
    }

    #[inline]
    pub fn shares(&self) -> &[T] {
        &self.shares
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.shares.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    pub fn total(&self) -> T {
        self.shares.iter().copied().sum()
    }

    /// `x_k`, the shares still unexecuted after interval `k`, for `k = 1..K`.
    ///
    /// Computed as tail sums so that `x_K = 0` holds exactly; equals
    /// `N - sum_{j<=k} n_j` whenever the schedule is valid.
    pub fn remaining(&self, total_shares: T) -> Result<Vec<T>> {
        let v = strategy_violations(self, total_shares);
        if !v.is_empty() {
            return Err(TcaError::Validation(v));
        }
        Ok(self.remaining_unchecked())
    }

    pub(crate) fn remaining_unchecked(&self) -> Vec<T> {
        let k = self.shares.len();
        let mut x = vec![T::zero(); k];
        let mut acc = T::zero();
        for i in (0..k).rev() {
            x[i] = acc;
            acc = acc + self.shares[i];
        }
        x
    }
}

/// Convenience free function mirroring [`ExecutionStrategy::remaining`].
pub fn remaining_shares<T: Scalar>(strategy: &ExecutionStrategy<T>, total_shares: T) -> Result<Vec<T>> {
    strategy.remaining(total_shares)
}

/// Uniform schedule `n_k = N / K`.
pub fn twap_strategy<T: Scalar>(order: &OrderSpec<T>) -> ExecutionStrategy<T> {
    let k = order.intervals.max(1);
    let each = order.total_shares / T::of_usize(k);
    ExecutionStrategy::from_shares(vec![each; k])
}

fn strategy_violations<T: Scalar>(s: &ExecutionStrategy<T>, total: T) -> Vec<String> {
    let mut out = Vec::new();
    if s.shares.is_empty() {
        out.push("strategy has no intervals".to_string());
        return out;
    }
    if s.shares.iter().any(|v| !v.is_finite()) {
        out.push("non-finite allocation".to_string());
        return out;
    }
    if let Some((k, v)) = s.shares.iter().enumerate().find(|(_, v)| **v < T::zero()) {
        out.push(format!("negative allocation: n_{} = {}", k + 1, v));
    }
    let sum = s.total();
    let tol = T::sum_tolerance() * total.abs().max(T::min_positive_value());
    if sum - total > tol {
        out.push(format!("sum exceeds N: {sum} > {total}"));
    } else if total - sum > tol {
        out.push(format!("sum falls short of N: {sum} < {total}"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityKind {
    /// Mean-variance with closed-form moments (arithmetic dynamics only).
    AcAnalytic,
    /// Mean-variance with simulated moments.
    AcNumeric,
    /// Expected cost plus lower-tail probability `P(c <= c_tilde)`.
    Dm,
    /// Expected cost plus both tails beyond `|c_tilde|`, each weighted lambda/2.
    TwoTail,
    /// Expected cost plus the body probability `P(|c| <= |c_tilde|)`.
    Body,
}

impl UtilityKind {
    pub fn needs_threshold(self) -> bool {
        matches!(self, UtilityKind::Dm | UtilityKind::TwoTail | UtilityKind::Body)
    }

    pub fn name(self) -> &'static str {
        match self {
            UtilityKind::AcAnalytic => "ac_analytic",
            UtilityKind::AcNumeric => "ac_numeric",
            UtilityKind::Dm => "dm",
            UtilityKind::TwoTail => "two_tail",
            UtilityKind::Body => "body",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec<T> {
    pub kind: UtilityKind,
    pub lambda: T,
    #[serde(default)]
    pub c_tilde: T,
}

impl<T: Scalar> UtilitySpec<T> {
    pub fn new(kind: UtilityKind, lambda: T, c_tilde: T) -> Self {
        UtilitySpec { kind, lambda, c_tilde }
    }

    pub fn ac_analytic(lambda: T) -> Self {
        Self::new(UtilityKind::AcAnalytic, lambda, T::zero())
    }

    pub fn ac_numeric(lambda: T) -> Self {
        Self::new(UtilityKind::AcNumeric, lambda, T::zero())
    }

    pub fn dm(lambda: T, c_tilde: T) -> Self {
        Self::new(UtilityKind::Dm, lambda, c_tilde)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.lambda.is_finite() || self.lambda < T::zero() || self.lambda > T::one() {
            out.push(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        if !self.c_tilde.is_finite() {
            out.push(format!("c_tilde must be finite, got {}", self.c_tilde));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    /// Additive price moves with lagged permanent and instantaneous temporary impact.
    ArithmeticAc,
    /// Multiplicative moves `p_k = p_{k-1} (1 + I(n_k) + zeta_k)`.
    GeometricPropagator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpactKind {
    AcLinear,
    LinExp,
    LinPow,
    Sqrt,
}

impl ImpactKind {
    pub fn name(self) -> &'static str {
        match self {
            ImpactKind::AcLinear => "ac_linear",
            ImpactKind::LinExp => "linexp",
            ImpactKind::LinPow => "linpow",
            ImpactKind::Sqrt => "sqrt",
        }
    }
}

/// Distribution of the standardised return shocks `chi_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ReturnDist<T> {
    Gaussian,
    StudentT { nu: u32, scale: T },
}

impl<T: Scalar> ReturnDist<T> {
    /// Student-t scaled to unit standard deviation: `scale = sqrt((nu-2)/nu)`.
    pub fn unit_variance_t(nu: u32) -> Self {
        let n = T::of(nu as f64);
        ReturnDist::StudentT {
            nu,
            scale: ((n - T::of(2.0)) / n).sqrt(),
        }
    }

    /// Variance of a single shock.
    pub fn variance(&self) -> T {
        match *self {
            ReturnDist::Gaussian => T::one(),
            ReturnDist::StudentT { nu, scale } => {
                let n = T::of(nu as f64);
                scale * scale * n / (n - T::of(2.0))
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            ReturnDist::Gaussian => "gaussian".to_string(),
            ReturnDist::StudentT { nu, scale } => format!("student_t(nu={nu},scale={scale})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec<T> {
    pub dynamics: Dynamics,
    pub impact: ImpactKind,
    pub returns: ReturnDist<T>,
    pub params: MarketParams<T>,
}

impl<T: Scalar> ScenarioSpec<T> {
    pub fn new(dynamics: Dynamics, impact: ImpactKind, returns: ReturnDist<T>, params: MarketParams<T>) -> Self {
        ScenarioSpec {
            dynamics,
            impact,
            returns,
            params,
        }
    }

    /// Arithmetic dynamics, linear impact, Gaussian shocks, baseline parameters.
    pub fn arithmetic_gaussian() -> Self {
        Self::new(
            Dynamics::ArithmeticAc,
            ImpactKind::AcLinear,
            ReturnDist::Gaussian,
            MarketParams::baseline(),
        )
    }

    pub fn geometric(impact: ImpactKind, returns: ReturnDist<T>) -> Self {
        Self::new(Dynamics::GeometricPropagator, impact, returns, MarketParams::baseline())
    }

    /// The four reference set-ups for cost distributions:
    /// 1. arithmetic, Gaussian; 2. arithmetic, t(5) with unit scale;
    /// 3. geometric LinExp, Gaussian; 4. geometric LinExp, t(5) with unit scale.
    pub fn preset(n: u8) -> Option<Self> {
        let t5 = ReturnDist::StudentT { nu: 5, scale: T::one() };
        match n {
            1 => Some(Self::arithmetic_gaussian()),
            2 => Some(Self {
                returns: t5,
                ..Self::arithmetic_gaussian()
            }),
            3 => Some(Self::geometric(ImpactKind::LinExp, ReturnDist::Gaussian)),
            4 => Some(Self::geometric(ImpactKind::LinExp, t5)),
            _ => None,
        }
    }

    pub fn with_params(mut self, params: MarketParams<T>) -> Self {
        self.params = params;
        self
    }

    pub fn with_returns(mut self, returns: ReturnDist<T>) -> Self {
        self.returns = returns;
        self
    }

    /// Short identifier written into output provenance lines.
    pub fn fingerprint(&self) -> String {
        let p = &self.params;
        format!(
            "{}/{}/{}/p0={},sigma={},gamma={},eta={},epsilon={},rho={}",
            match self.dynamics {
                Dynamics::ArithmeticAc => "arithmetic",
                Dynamics::GeometricPropagator => "geometric",
            },
            self.impact.name(),
            self.returns.name(),
            p.p0,
            p.sigma,
            p.gamma,
            p.eta,
            p.epsilon,
            p.rho
        )
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = self.params.violations();
        match (self.dynamics, self.impact) {
            (Dynamics::ArithmeticAc, ImpactKind::AcLinear) => {}
            (Dynamics::GeometricPropagator, ImpactKind::LinExp | ImpactKind::LinPow | ImpactKind::Sqrt) => {}
            (d, i) => out.push(format!("impact {i:?} cannot be used with {d:?} dynamics")),
        }
        if let ReturnDist::StudentT { nu, scale } = self.returns {
            if nu < 3 {
                out.push(format!("student-t returns need nu >= 3, got {nu}"));
            }
            if !scale.is_finite() || scale <= T::zero() {
                out.push(format!("student-t scale must be positive, got {scale}"));
            }
        }
        out
    }
}

/// Collects every invariant violation across the three inputs.
pub fn validate<T: Scalar>(
    order: &OrderSpec<T>,
    strategy: &ExecutionStrategy<T>,
    scenario: &ScenarioSpec<T>,
) -> Result<()> {
    let mut out = order.violations();
    if strategy.len() != order.intervals {
        out.push(format!(
            "strategy has {} intervals, order has {}",
            strategy.len(),
            order.intervals
        ));
    }
    out.extend(strategy_violations(strategy, order.total_shares));
    out.extend(scenario.violations());
    if out.is_empty() {
        Ok(())
    } else {
        Err(TcaError::Validation(out))
    }
}

/// Order and strategy checks only, for callers without a scenario.
pub fn validate_strategy<T: Scalar>(order: &OrderSpec<T>, strategy: &ExecutionStrategy<T>) -> Result<()> {
    let mut out = order.violations();
    if strategy.len() != order.intervals {
        out.push(format!(
            "strategy has {} intervals, order has {}",
            strategy.len(),
            order.intervals
        ));
    }
    out.extend(strategy_violations(strategy, order.total_shares));
    if out.is_empty() {
        Ok(())
    } else {
        Err(TcaError::Validation(out))
    }
}
