use std::path::{Path, PathBuf};

use serde::Deserialize;
use tca_core::domain::{Dynamics, ImpactKind, MarketParams, OrderSpec, ReturnDist, ScenarioSpec, Side, UtilitySpec};
use tca_core::optimizer::{Budget, DEFAULT_MAX_RAW};

use crate::error::CliError;

/// The JSON run description. Every key is optional; unknown keys are errors.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub order: OrderConfig,
    #[serde(default)]
    pub scenario: ScenarioChoice,
    #[serde(default)]
    pub utility: Option<UtilityChoice>,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub master_seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderConfig {
    #[serde(default = "default_side")]
    pub side: Side,
    #[serde(default = "one")]
    pub total_shares: f64,
    /// Defaults to one time unit per interval.
    #[serde(default)]
    pub horizon: Option<f64>,
    pub intervals: usize,
}

fn default_side() -> Side {
    Side::Sell
}

fn one() -> f64 {
    1.0
}

impl Default for OrderConfig {
    fn default() -> Self {
        OrderConfig {
            side: Side::Sell,
            total_shares: 1.0,
            horizon: None,
            intervals: 2,
        }
    }
}

impl OrderConfig {
    pub fn build(&self) -> OrderSpec<f64> {
        let horizon = self.horizon.unwrap_or(self.intervals as f64);
        OrderSpec::new(self.side, self.total_shares, horizon, self.intervals)
    }
}

/// A preset number 1-4 or a full scenario object.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ScenarioChoice {
    Preset(u8),
    Custom(ScenarioConfig),
}

impl Default for ScenarioChoice {
    fn default() -> Self {
        ScenarioChoice::Preset(1)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dynamics: Dynamics,
    pub impact: ImpactKind,
    #[serde(default = "gaussian")]
    pub returns: ReturnDist<f64>,
    #[serde(default)]
    pub params: ParamsConfig,
}

fn gaussian() -> ReturnDist<f64> {
    ReturnDist::Gaussian
}

/// Market parameters; omitted fields take the baseline values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub p0: Option<f64>,
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub eta: Option<f64>,
    pub epsilon: Option<f64>,
    pub rho: Option<f64>,
}

impl ParamsConfig {
    fn build(&self) -> MarketParams<f64> {
        let b = MarketParams::baseline();
        MarketParams {
            p0: self.p0.unwrap_or(b.p0),
            sigma: self.sigma.unwrap_or(b.sigma),
            gamma: self.gamma.unwrap_or(b.gamma),
            eta: self.eta.unwrap_or(b.eta),
            epsilon: self.epsilon.unwrap_or(b.epsilon),
            rho: self.rho.unwrap_or(b.rho),
        }
    }
}

impl ScenarioChoice {
    pub fn build(&self) -> Result<ScenarioSpec<f64>, CliError> {
        match self {
            ScenarioChoice::Preset(n) => ScenarioSpec::preset(*n)
                .ok_or_else(|| CliError::config(format!("scenario preset must be 1-4, got {n}"))),
            ScenarioChoice::Custom(c) => Ok(ScenarioSpec::new(c.dynamics, c.impact, c.returns, c.params.build())),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum UtilityChoice {
    One(UtilitySpec<f64>),
    Many(Vec<UtilitySpec<f64>>),
}

impl UtilityChoice {
    pub fn specs(&self) -> Vec<UtilitySpec<f64>> {
        match self {
            UtilityChoice::One(u) => vec![*u],
            UtilityChoice::Many(v) => v.clone(),
        }
    }
}

/// Overrides on top of the defaults chosen from K and the dynamics.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub q_target: Option<usize>,
    pub path_count: Option<usize>,
    pub degree: Option<usize>,
    pub crn: Option<bool>,
    pub max_raw: Option<u64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub candidates: Option<usize>,
    pub degree: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Everything a command needs, validated.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub order: OrderSpec<f64>,
    pub scenario: ScenarioSpec<f64>,
    pub utilities: Vec<UtilitySpec<f64>>,
    pub budget: Budget,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn resolve(&self, o: &Overrides) -> Result<Resolved, CliError> {
        let order = self.order.build();
        let scenario = self.scenario.build()?;
        let utilities = self.utility.as_ref().map(UtilityChoice::specs).unwrap_or_default();
        let defaults = Budget::default_for(order.intervals, scenario.dynamics);
        let budget = Budget {
            q_target: o.candidates.or(self.budget.q_target).unwrap_or(defaults.q_target),
            path_count: o.paths.or(self.budget.path_count).unwrap_or(defaults.path_count),
            degree: o.degree.or(self.budget.degree).unwrap_or(defaults.degree),
            master_seed: o.seed.or(self.master_seed).unwrap_or(defaults.master_seed),
            crn: self.budget.crn.unwrap_or(true),
            max_raw: self.budget.max_raw.unwrap_or(DEFAULT_MAX_RAW),
        };
        let output_dir = o
            .out
            .clone()
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));

        let mut problems = order.violations();
        problems.extend(scenario.violations());
        for u in &utilities {
            problems.extend(u.violations());
        }
        problems.extend(budget.violations(true));
        if !problems.is_empty() {
            return Err(CliError::config(problems.join("; ")));
        }
        Ok(Resolved {
            order,
            scenario,
            utilities,
            budget,
            output_dir,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig, serde_json::Error> {
        serde_json::from_str(s)
    }

    #[test]
    fn full_document() {
        let c = parse(
            r#"{
                "order": {"side": "buy", "total_shares": 2, "intervals": 3},
                "scenario": {"dynamics": "geometric_propagator", "impact": "lin_exp",
                             "returns": {"kind": "student_t", "nu": 5, "scale": 0.7},
                             "params": {"sigma": 0.2}},
                "utility": [{"kind": "dm", "lambda": 0.3, "c_tilde": -1}, {"kind": "ac_numeric", "lambda": 0.5}],
                "budget": {"q_target": 50, "crn": false},
                "output_dir": "x",
                "master_seed": 9
            }"#,
        )
        .unwrap();
        let r = c.resolve(&Overrides::default()).unwrap();
        assert_eq!(r.order.side, Side::Buy);
        assert_eq!(r.order.dt, 1.0);
        assert_eq!(r.scenario.params.sigma, 0.2);
        assert_eq!(r.scenario.params.gamma, 1.0);
        assert_eq!(r.utilities.len(), 2);
        assert_eq!(r.budget.q_target, 50);
        assert!(!r.budget.crn);
        assert_eq!(r.budget.path_count, 15_000);
        assert_eq!(r.budget.master_seed, 9);
    }

    #[test]
    fn flags_override_file() {
        let c = parse(r#"{"order": {"intervals": 2}, "scenario": 1, "master_seed": 4, "budget": {"path_count": 99}}"#)
            .unwrap();
        let o = Overrides {
            seed: Some(7),
            paths: Some(500),
            candidates: Some(30),
            degree: Some(3),
            out: Some(PathBuf::from("y")),
        };
        let r = c.resolve(&o).unwrap();
        assert_eq!(r.budget.master_seed, 7);
        assert_eq!(r.budget.path_count, 500);
        assert_eq!(r.budget.q_target, 30);
        assert_eq!(r.budget.degree, 3);
        assert_eq!(r.output_dir, PathBuf::from("y"));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(parse(r#"{"orders": {}}"#).is_err());
        assert!(parse(r#"{"budget": {"paths": 3}}"#).is_err());
        let c = parse(r#"{"budget": {"path_count": 0}}"#).unwrap();
        assert!(c.resolve(&Overrides::default()).is_err());
        let c = parse(r#"{"scenario": 7}"#).unwrap();
        assert!(c.resolve(&Overrides::default()).is_err());
        let c = parse(r#"{"utility": {"kind": "dm", "lambda": 1.5}}"#).unwrap();
        assert!(c.resolve(&Overrides::default()).is_err());
    }
}
