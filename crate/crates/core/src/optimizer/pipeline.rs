use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::minimize::{minimize_surface, multistart, projected_descent};
use super::sampling::{sample_strategies, CandidateSet, DEFAULT_MAX_RAW};
use super::surface::{fit_poly_surface, PolySurface};
use super::utility::{analytic_terms, check_spec, combine, sample_terms};
use crate::costs::{CostKernel, NoiseMatrix};
use crate::domain::{validate, Dynamics, ExecutionStrategy, OrderSpec, ScenarioSpec, UtilityKind, UtilitySpec};
use crate::error::{Result, TcaError};
use crate::scalar::Scalar;

const GD_MAX_ITERS: usize = 1000;
const FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptMethod {
    /// Projected gradient descent on the utility itself, central differences.
    #[serde(alias = "gd")]
    GD,
    /// Best evaluated candidate.
    #[serde(alias = "mc")]
    MC,
    /// Best point of the fitted surface over a dense probe set.
    #[serde(alias = "fitmc", alias = "fit_mc")]
    FitMC,
    /// Projected gradient descent on the fitted surface.
    #[serde(alias = "fitgd", alias = "fit_gd")]
    FitGD,
}

impl OptMethod {
    pub const ALL: [OptMethod; 4] = [OptMethod::GD, OptMethod::MC, OptMethod::FitMC, OptMethod::FitGD];

    pub fn name(self) -> &'static str {
        match self {
            OptMethod::GD => "GD",
            OptMethod::MC => "MC",
            OptMethod::FitMC => "FitMC",
            OptMethod::FitGD => "FitGD",
        }
    }

    fn needs_surface(self) -> bool {
        matches!(self, OptMethod::FitMC | OptMethod::FitGD)
    }
}

/// How much work an optimisation may do.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    /// Target number of accepted candidate schedules.
    pub q_target: usize,
    pub path_count: usize,
    /// Degree of the fitted surface, 2 or 3.
    pub degree: usize,
    pub master_seed: u64,
    /// Share one noise matrix across all candidates.
    #[serde(default = "yes")]
    pub crn: bool,
    #[serde(default = "default_max_raw")]
    pub max_raw: u64,
}

fn yes() -> bool {
    true
}

fn default_max_raw() -> u64 {
    DEFAULT_MAX_RAW
}

impl Budget {
    /// 100 candidates for K = 2, 200 for K = 3, `100 (K-1)` beyond; `10^4`
    /// paths and a quadratic surface for arithmetic dynamics, `1.5·10^4`
    /// paths and a cubic surface for geometric dynamics.
    pub fn default_for(intervals: usize, dynamics: Dynamics) -> Self {
        let (path_count, degree) = match dynamics {
            Dynamics::ArithmeticAc => (10_000, 2),
            Dynamics::GeometricPropagator => (15_000, 3),
        };
        Budget {
            q_target: match intervals {
                0..=2 => 100,
                3 => 200,
                k => 100 * (k - 1),
            },
            path_count,
            degree,
            master_seed: 1,
            crn: true,
            max_raw: DEFAULT_MAX_RAW,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn violations(&self, simulated: bool) -> Vec<String> {
        let mut out = Vec::new();
        if self.q_target == 0 {
            out.push("q_target must be at least 1".to_string());
        }
        if simulated && self.path_count < 2 {
            out.push(format!("path_count must be at least 2, got {}", self.path_count));
        }
        if !(2..=3).contains(&self.degree) {
            out.push(format!("degree must be 2 or 3, got {}", self.degree));
        }
        if self.max_raw == 0 {
            out.push("max_raw must be at least 1".to_string());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub candidates: usize,
    pub raw_drawn: u64,
    pub gd_iterations: usize,
    pub surface_rmse: Option<f64>,
    /// Surface value at the returned schedule.
    pub predicted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult<T> {
    pub method: OptMethod,
    pub strategy: ExecutionStrategy<T>,
    /// Utility of `strategy` on the shared noise matrix (or in closed form).
    pub utility: T,
    pub expected_cost: T,
    pub risk: T,
    pub diagnostics: Diagnostics,
}

/// Every method's optimum plus the candidate data they were derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct OptReport<T> {
    pub results: Vec<OptResult<T>>,
    pub candidates: Vec<ExecutionStrategy<T>>,
    pub values: Vec<T>,
    pub surface: Option<PolySurface>,
}

impl<T: Scalar> OptReport<T> {
    pub fn result(&self, method: OptMethod) -> Option<&OptResult<T>> {
        self.results.iter().find(|r| r.method == method)
    }
}

/// Noise and bookkeeping shared by every evaluation in one run.
struct Evaluator<'a, T> {
    order: &'a OrderSpec<T>,
    scenario: &'a ScenarioSpec<T>,
    budget: Budget,
    /// `None` when only the analytic utility is needed.
    noise: Option<NoiseMatrix<T>>,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    fn new(order: &'a OrderSpec<T>, scenario: &'a ScenarioSpec<T>, budget: Budget, simulated: bool) -> Result<Self> {
        let noise = if simulated {
            Some(NoiseMatrix::generate(
                &scenario.returns,
                budget.path_count,
                order.intervals,
                budget.master_seed,
            )?)
        } else {
            None
        };
        Ok(Evaluator {
            order,
            scenario,
            budget,
            noise,
        })
    }

    fn costs(&self, strategy: &ExecutionStrategy<T>, candidate: Option<u64>) -> Result<Vec<T>> {
        let kernel = CostKernel::new(self.order, strategy, self.scenario)?;
        let base = self.noise.as_ref().expect("simulated evaluator");
        match candidate {
            Some(j) if !self.budget.crn => {
                let own = NoiseMatrix::for_candidate(
                    &self.scenario.returns,
                    self.budget.path_count,
                    self.order.intervals,
                    self.budget.master_seed,
                    j,
                )?;
                Ok(kernel.evaluate_all(&own)?.0)
            }
            _ => Ok(kernel.evaluate_all(base)?.0),
        }
    }

    /// `(E, R)` of `strategy` on the shared noise.
    fn terms(&self, spec: &UtilitySpec<T>, strategy: &ExecutionStrategy<T>) -> Result<(T, T)> {
        if spec.kind == UtilityKind::AcAnalytic {
            validate(self.order, strategy, self.scenario)?;
            Ok(analytic_terms(self.order, strategy, self.scenario))
        } else {
            Ok(sample_terms(spec, &self.costs(strategy, None)?))
        }
    }

    fn utility_at(&self, spec: &UtilitySpec<T>, free: &[f64]) -> f64 {
        let s = from_free(free, self.order.total_shares);
        match self.terms(spec, &s) {
            Ok((e, r)) => combine(spec.lambda, e, r).as_f64(),
            Err(_) => f64::INFINITY,
        }
    }
}

fn from_free<T: Scalar>(free: &[f64], total: T) -> ExecutionStrategy<T> {
    let f: Vec<T> = free.iter().map(|&v| T::of(v)).collect();
    ExecutionStrategy::from_free_coords(&f, total)
}

fn free_coords<T: Scalar>(s: &ExecutionStrategy<T>) -> Vec<f64> {
    s.shares()[..s.len() - 1].iter().map(|v| v.as_f64()).collect()
}

/// Candidates with either closed-form terms or their simulated cost samples.
enum PoolData<T> {
    Analytic(Vec<(T, T)>),
    Simulated(Vec<Vec<T>>),
}

struct Pool<T> {
    set: CandidateSet<T>,
    data: PoolData<T>,
}

impl<T: Scalar> Pool<T> {
    fn build(ev: &Evaluator<'_, T>, analytic: bool) -> Result<Self> {
        let set = sample_strategies(
            ev.order.intervals,
            ev.order.total_shares,
            ev.budget.q_target,
            ev.budget.max_raw,
        )?;
        let data = if analytic {
            PoolData::Analytic(
                set.strategies
                    .iter()
                    .map(|s| analytic_terms(ev.order, s, ev.scenario))
                    .collect(),
            )
        } else {
            let samples: Result<Vec<Vec<T>>> = set
                .strategies
                .par_iter()
                .enumerate()
                .map(|(j, s)| ev.costs(s, Some(j as u64)))
                .collect();
            PoolData::Simulated(samples?)
        };
        Ok(Pool { set, data })
    }

    fn terms(&self, spec: &UtilitySpec<T>) -> Vec<(T, T)> {
        match &self.data {
            PoolData::Analytic(t) => t.clone(),
            PoolData::Simulated(s) => s.par_iter().map(|c| sample_terms(spec, c)).collect(),
        }
    }

    fn values(&self, spec: &UtilitySpec<T>) -> Vec<T> {
        self.terms(spec)
            .into_iter()
            .map(|(e, r)| combine(spec.lambda, e, r))
            .collect()
    }
}

fn fit_values<T: Scalar>(pool: &Pool<T>, values: &[T], degree: usize) -> Result<PolySurface> {
    let pts: Vec<Vec<f64>> = pool.set.strategies.iter().map(free_coords).collect();
    let y: Vec<f64> = values.iter().map(|v| v.as_f64()).collect();
    fit_poly_surface(&pts, &y, degree)
}

fn finish<T: Scalar>(
    ev: &Evaluator<'_, T>,
    spec: &UtilitySpec<T>,
    method: OptMethod,
    strategy: ExecutionStrategy<T>,
    diagnostics: Diagnostics,
) -> Result<OptResult<T>> {
    let (e, r) = ev.terms(spec, &strategy)?;
    Ok(OptResult {
        method,
        utility: combine(spec.lambda, e, r),
        expected_cost: e,
        risk: r,
        strategy,
        diagnostics,
    })
}

fn check_inputs<T: Scalar>(
    spec: &UtilitySpec<T>,
    order: &OrderSpec<T>,
    scenario: &ScenarioSpec<T>,
    budget: &Budget,
) -> Result<()> {
    check_spec(spec, scenario)?;
    let mut v = order.violations();
    v.extend(scenario.violations());
    v.extend(budget.violations(spec.kind != UtilityKind::AcAnalytic));
    if v.is_empty() {
        Ok(())
    } else {
        Err(TcaError::Validation(v))
    }
}

fn solve<T: Scalar>(
    methods: &[OptMethod],
    spec: &UtilitySpec<T>,
    ev: &Evaluator<'_, T>,
    pool: &Pool<T>,
    values: &[T],
) -> Result<(Vec<OptResult<T>>, Option<PolySurface>)> {
    let order = ev.order;
    let base = Diagnostics {
        candidates: pool.set.accepted(),
        raw_drawn: pool.set.raw_drawn,
        ..Diagnostics::default()
    };
    let surface = if methods.iter().any(|m| m.needs_surface()) {
        Some(fit_values(pool, values, ev.budget.degree)?)
    } else {
        None
    };
    let mut results = Vec::with_capacity(methods.len());
    for &method in methods {
        let mut diag = base.clone();
        let strategy = match method {
            OptMethod::MC => {
                let mut best = 0;
                for (j, v) in values.iter().enumerate() {
                    if *v < values[best] {
                        best = j;
                    }
                }
                pool.set.strategies[best].clone()
            }
            OptMethod::FitMC => {
                let s = surface.as_ref().expect("surface fitted");
                diag.surface_rmse = Some(s.rmse);
                let probes = sample_strategies(
                    order.intervals,
                    order.total_shares,
                    10 * ev.budget.q_target,
                    ev.budget.max_raw,
                )?;
                let scores: Vec<f64> = probes.strategies.par_iter().map(|p| s.value(&free_coords(p))).collect();
                let mut best = 0;
                for (j, v) in scores.iter().enumerate() {
                    if *v < scores[best] {
                        best = j;
                    }
                }
                diag.predicted = Some(scores[best]);
                probes.strategies[best].clone()
            }
            OptMethod::FitGD => {
                let s = surface.as_ref().expect("surface fitted");
                diag.surface_rmse = Some(s.rmse);
                let m = minimize_surface(s, order.total_shares)?;
                diag.predicted = Some(m.predicted);
                diag.gd_iterations = m.iterations;
                m.strategy
            }
            OptMethod::GD => {
                let n = order.total_shares.as_f64();
                let d = order.intervals - 1;
                let h = FD_STEP * n;
                let f = |x: &[f64]| ev.utility_at(spec, x);
                let grad = |x: &[f64], g: &mut [f64]| {
                    let sum: f64 = x.iter().sum();
                    for i in 0..d {
                        let mut up = x.to_vec();
                        let mut down = x.to_vec();
                        if sum + h <= n {
                            up[i] += h;
                        }
                        if x[i] >= h {
                            down[i] -= h;
                        }
                        let width = up[i] - down[i];
                        g[i] = if width > 0.0 { (f(&up) - f(&down)) / width } else { 0.0 };
                    }
                };
                let twap = vec![n / order.intervals as f64; d];
                let r = projected_descent(f, grad, &twap, n, GD_MAX_ITERS);
                diag.gd_iterations = r.iterations;
                from_free(&r.x, order.total_shares)
            }
        };
        results.push(finish(ev, spec, method, strategy, diag)?);
    }
    Ok((results, surface))
}

/// Runs each method in `methods` on one shared candidate set and noise
/// matrix. Results are bit-identical for a given budget regardless of the
/// number of worker threads.
pub fn optimize_methods<T: Scalar>(
    methods: &[OptMethod],
    spec: &UtilitySpec<T>,
    order: &OrderSpec<T>,
    scenario: &ScenarioSpec<T>,
    budget: &Budget,
) -> Result<OptReport<T>> {
    check_inputs(spec, order, scenario, budget)?;
    let analytic = spec.kind == UtilityKind::AcAnalytic;
    let ev = Evaluator::new(order, scenario, *budget, !analytic)?;
    if order.intervals == 1 {
        let only = ExecutionStrategy::from_shares(vec![order.total_shares]);
        let results = methods
            .iter()
            .map(|&m| finish(&ev, spec, m, only.clone(), Diagnostics::default()))
            .collect::<Result<Vec<_>>>()?;
        let value = results
            .first()
            .map_or_else(|| Ok(T::zero()), |r| Ok::<_, TcaError>(r.utility))?;
        return Ok(OptReport {
            results,
            candidates: vec![only],
            values: vec![value],
            surface: None,
        });
    }
    let pool = Pool::build(&ev, analytic)?;
    let values = pool.values(spec);
    let (results, surface) = solve(methods, spec, &ev, &pool, &values)?;
    Ok(OptReport {
        results,
        candidates: pool.set.strategies,
        values,
        surface,
    })
}

pub fn optimize<T: Scalar>(
    method: OptMethod,
    spec: &UtilitySpec<T>,
    order: &OrderSpec<T>,
    scenario: &ScenarioSpec<T>,
    budget: &Budget,
) -> Result<OptResult<T>> {
    let mut report = optimize_methods(&[method], spec, order, scenario, budget)?;
    Ok(report.results.remove(0))
}

/// Exact minimiser of the analytic mean-variance utility, by multi-start
/// projected descent on the closed-form moments. Needs no candidate
/// sampling, so it works for any `K`.
pub fn ac_optimal_strategy<T: Scalar>(
    order: &OrderSpec<T>,
    scenario: &ScenarioSpec<T>,
    lambda: T,
) -> Result<ExecutionStrategy<T>> {
    let spec = UtilitySpec::ac_analytic(lambda);
    check_spec(&spec, scenario)?;
    let mut v = order.violations();
    v.extend(scenario.violations());
    if !v.is_empty() {
        return Err(TcaError::Validation(v));
    }
    let n = order.total_shares.as_f64();
    if order.intervals == 1 {
        return Ok(ExecutionStrategy::from_shares(vec![order.total_shares]));
    }
    let f = |x: &[f64]| {
        let (e, var) = analytic_terms(order, &from_free(x, order.total_shares), scenario);
        combine(lambda, e, var).as_f64()
    };
    // Central differences are exact up to rounding on a quadratic.
    let h = 1e-5 * n;
    let grad = |x: &[f64], g: &mut [f64]| {
        let mut y = x.to_vec();
        for i in 0..x.len() {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            g[i] = (up - down) / (2.0 * h);
        }
    };
    let d = multistart(f, grad, order.intervals - 1, n);
    Ok(from_free(&d.x, order.total_shares))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint<T> {
    pub lambda: T,
    /// `-E[c]`.
    pub impact_term: T,
    pub risk_term: T,
    pub utility: T,
    pub strategy: ExecutionStrategy<T>,
}

/// FitGD optimum of `spec.kind` (with threshold `spec.c_tilde`) for each
/// `λ` in `lambdas`, sharing one candidate set and noise matrix.
pub fn efficient_frontier<T: Scalar>(
    spec: &UtilitySpec<T>,
    order: &OrderSpec<T>,
    scenario: &ScenarioSpec<T>,
    lambdas: &[T],
    budget: &Budget,
) -> Result<Vec<FrontierPoint<T>>> {
    let grid: Vec<(T, T)> = lambdas.iter().map(|&l| (l, spec.c_tilde)).collect();
    Ok(grid_optima(spec.kind, order, scenario, &grid, budget)?
        .into_iter()
        .zip(lambdas)
        .map(|(r, &lambda)| FrontierPoint {
            lambda,
            impact_term: -r.expected_cost,
            risk_term: r.risk,
            utility: r.utility,
            strategy: r.strategy,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapCell<T> {
    pub lambda: T,
    pub c_tilde: T,
    pub result: OptResult<T>,
}

/// FitGD optima over the grid `lambdas × thresholds`, row-major in `λ`.
pub fn strategy_map<T: Scalar>(
    kind: UtilityKind,
    order: &OrderSpec<T>,
    scenario: &ScenarioSpec<T>,
    lambdas: &[T],
    thresholds: &[T],
    budget: &Budget,
) -> Result<Vec<MapCell<T>>> {
    let grid: Vec<(T, T)> = lambdas
        .iter()
        .flat_map(|&l| thresholds.iter().map(move |&c| (l, c)))
        .collect();
    Ok(grid_optima(kind, order, scenario, &grid, budget)?
        .into_iter()
        .zip(grid)
        .map(|(result, (lambda, c_tilde))| MapCell {
            lambda,
            c_tilde,
            result,
        })
        .collect())
}

fn grid_optima<T: Scalar>(
    kind: UtilityKind,
    order: &OrderSpec<T>,
    scenario: &ScenarioSpec<T>,
    grid: &[(T, T)],
    budget: &Budget,
) -> Result<Vec<OptResult<T>>> {
    if grid.is_empty() {
        return Err(TcaError::invalid("parameter grid is empty"));
    }
    for &(l, c) in grid {
        check_inputs(&UtilitySpec::new(kind, l, c), order, scenario, budget)?;
    }
    let analytic = kind == UtilityKind::AcAnalytic;
    let ev = Evaluator::new(order, scenario, *budget, !analytic)?;
    if order.intervals == 1 {
        return grid
            .iter()
            .map(|&(l, c)| {
                let only = ExecutionStrategy::from_shares(vec![order.total_shares]);
                finish(
                    &ev,
                    &UtilitySpec::new(kind, l, c),
                    OptMethod::FitGD,
                    only,
                    Diagnostics::default(),
                )
            })
            .collect();
    }
    let pool = Pool::build(&ev, analytic)?;
    grid.iter()
        .map(|&(l, c)| {
            let spec = UtilitySpec::new(kind, l, c);
            let values = pool.values(&spec);
            Ok(solve(&[OptMethod::FitGD], &spec, &ev, &pool, &values)?.0.remove(0))
        })
        .collect()
}
