use crate::costs::{expected_cost_ac, variance_ac, CostKernel, NoiseMatrix};
use crate::domain::{validate, Dynamics, ExecutionStrategy, OrderSpec, ScenarioSpec, UtilityKind, UtilitySpec};
use crate::empirics::{body_probability, mean_var, tail_probability, two_tail_probability};
use crate::error::{Result, TcaError};
use crate::scalar::Scalar;

/// `value = -(1-λ)·expected_cost + λ·risk`; lower is better.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityEvaluation<T> {
    pub value: T,
    pub expected_cost: T,
    pub risk: T,
    pub strategy: ExecutionStrategy<T>,
    /// Zero for the analytic utility.
    pub path_count: usize,
    pub master_seed: u64,
}

pub(crate) fn combine<T: Scalar>(lambda: T, expected_cost: T, risk: T) -> T {
    -(T::one() - lambda) * expected_cost + lambda * risk
}

pub(crate) fn check_spec<T: Scalar>(spec: &UtilitySpec<T>, scenario: &ScenarioSpec<T>) -> Result<()> {
    let v = spec.violations();
    if !v.is_empty() {
        return Err(TcaError::Validation(v));
    }
    if spec.kind == UtilityKind::AcAnalytic && scenario.dynamics != Dynamics::ArithmeticAc {
        return Err(TcaError::invalid(
            "the analytic AC utility needs arithmetic dynamics; use ac_numeric instead",
        ));
    }
    Ok(())
}

/// Analytic `(E, V)`; `V` is scaled by the shock variance so that heavy-tailed
/// shocks with the same scale carry their true variance.
pub(crate) fn analytic_terms<T: Scalar>(
    order: &OrderSpec<T>,
    strategy: &ExecutionStrategy<T>,
    scenario: &ScenarioSpec<T>,
) -> (T, T) {
    (
        expected_cost_ac(order, strategy, &scenario.params),
        variance_ac(order, strategy, &scenario.params) * scenario.returns.variance(),
    )
}

/// `(E, R)` of a cost sample for a sample-based utility.
pub(crate) fn sample_terms<T: Scalar>(spec: &UtilitySpec<T>, costs: &[T]) -> (T, T) {
    let (mean, var) = mean_var(costs);
    let two = T::of(2.0);
    let risk = match spec.kind {
        UtilityKind::AcAnalytic | UtilityKind::AcNumeric => var,
        UtilityKind::Dm => tail_probability(costs, spec.c_tilde),
        UtilityKind::TwoTail => two_tail_probability(costs, spec.c_tilde) / two,
        UtilityKind::Body => body_probability(costs, spec.c_tilde),
    };
    (mean, risk)
}

/// Utility of one schedule. The analytic AC utility uses the closed-form
/// moments; every other kind simulates `path_count` paths with path `i`
/// drawn from `substream(master_seed, i)`.
pub fn evaluate_utility<T: Scalar>(
    spec: &UtilitySpec<T>,
    order: &OrderSpec<T>,
    strategy: &ExecutionStrategy<T>,
    scenario: &ScenarioSpec<T>,
    path_count: usize,
    master_seed: u64,
) -> Result<UtilityEvaluation<T>> {
    check_spec(spec, scenario)?;
    validate(order, strategy, scenario)?;
    let (expected_cost, risk, path_count) = if spec.kind == UtilityKind::AcAnalytic {
        let (e, v) = analytic_terms(order, strategy, scenario);
        (e, v, 0)
    } else {
        if path_count < 2 {
            return Err(TcaError::invalid(format!("need at least 2 paths, got {path_count}")));
        }
        let noise = NoiseMatrix::generate(&scenario.returns, path_count, order.intervals, master_seed)?;
        let (costs, _) = CostKernel::new(order, strategy, scenario)?.evaluate_all(&noise)?;
        let (e, r) = sample_terms(spec, &costs);
        (e, r, path_count)
    };
    Ok(UtilityEvaluation {
        value: combine(spec.lambda, expected_cost, risk),
        expected_cost,
        risk,
        strategy: strategy.clone(),
        path_count,
        master_seed,
    })
}
