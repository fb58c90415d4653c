use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tca_core::costs::{
    benchmark_price, cost_vs_benchmark, simulate_cost_sample, BenchmarkKind, FillSequence, MarketTape,
};
use tca_core::domain::{twap_strategy, Dynamics, ExecutionStrategy, ScenarioSpec, Side, UtilityKind, UtilitySpec};
use tca_core::empirics::{fit_gaussian, fit_student_t, histogram, ks_test, moments, BinRule, FitResult};
use tca_core::format::sig6;
use tca_core::optimizer::{
    ac_optimal_strategy, efficient_frontier, optimize_methods, strategy_map, write_candidates_csv, write_results_csv,
    OptMethod,
};
use tca_core::stochastic::DistributionSpec;

use crate::config::Resolved;
use crate::error::CliError;

/// Fewest paths the Student-t fit accepts.
const MIN_SIMULATE_PATHS: usize = 50;
const DEFAULT_SCHEDULE_LAMBDA: f64 = 0.3;

pub const DEFAULT_FRONTIER_LAMBDAS: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
pub const DEFAULT_MAP_LAMBDAS: [f64; 5] = [0.0, 0.3, 0.5, 0.7, 1.0];
pub const DEFAULT_MAP_THRESHOLDS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// Which schedule `simulate` prices.
#[derive(Debug, Clone)]
pub enum Schedule {
    /// Mean-variance optimum of the arithmetic model with the scenario's parameters.
    AcOptimal,
    Twap,
    Shares(Vec<f64>),
}

struct Provenance {
    seed: String,
    paths: usize,
    scenario: String,
}

impl Provenance {
    fn line(&self) -> String {
        format!(
            "# seed={}, paths={}, scenario={}\n",
            self.seed, self.paths, self.scenario
        )
    }
}

fn create(dir: &Path, name: &str, prov: &Provenance) -> Result<BufWriter<File>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    w.write_all(prov.line().as_bytes())?;
    Ok(w)
}

fn finish(mut w: BufWriter<File>) -> Result<(), CliError> {
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::runtime(e.to_string())
}

fn share_headers(k: usize) -> impl Iterator<Item = String> {
    (1..=k).map(|i| format!("n_{i}"))
}

fn first_utility(r: &Resolved, command: &str) -> Result<UtilitySpec<f64>, CliError> {
    r.utilities
        .first()
        .copied()
        .ok_or_else(|| CliError::config(format!("{command} needs a utility in the config")))
}

fn schedule_strategy(r: &Resolved, schedule: &Schedule) -> Result<ExecutionStrategy<f64>, CliError> {
    match schedule {
        Schedule::Twap => Ok(twap_strategy(&r.order)),
        Schedule::Shares(v) => {
            Ok(ExecutionStrategy::new(v.clone(), r.order.total_shares).map_err(|e| CliError::config(e.to_string()))?)
        }
        Schedule::AcOptimal => {
            let lambda = r.utilities.first().map_or(DEFAULT_SCHEDULE_LAMBDA, |u| u.lambda);
            let arithmetic = ScenarioSpec::arithmetic_gaussian().with_params(r.scenario.params);
            Ok(ac_optimal_strategy(&r.order, &arithmetic, lambda)?)
        }
    }
}

fn fit_row(label: &str, fit: &FitResult<f64>) -> Vec<String> {
    let (mu, sigma, nu) = match fit.dist {
        DistributionSpec::Gaussian { mu, sigma } => (mu, sigma, String::new()),
        DistributionSpec::StudentT { mu, sigma, nu } => (mu, sigma, sig6(nu)),
    };
    vec![
        label.to_string(),
        sig6(mu),
        sig6(sigma),
        nu,
        sig6(fit.log_likelihood),
        fit.converged.to_string(),
    ]
}

/// Simulates the cost distribution of one schedule and writes the sample,
/// its histogram, moments, Gaussian and Student-t fits and KS tests.
pub fn simulate(r: &Resolved, schedule: &Schedule) -> Result<Vec<PathBuf>, CliError> {
    if r.budget.path_count < MIN_SIMULATE_PATHS {
        return Err(CliError::config(format!(
            "simulate needs at least {MIN_SIMULATE_PATHS} paths, got {}",
            r.budget.path_count
        )));
    }
    let strategy = schedule_strategy(r, schedule)?;
    let sample = simulate_cost_sample(
        &r.order,
        &strategy,
        &r.scenario,
        r.budget.path_count,
        r.budget.master_seed,
    )?;
    let costs = &sample.costs;
    let m = moments(costs)?;
    let hist = histogram(costs, BinRule::FreedmanDiaconis)?;
    let gauss = fit_gaussian(costs)?;
    let student = fit_student_t(costs)?;
    let ks_gauss = ks_test(costs, &gauss.dist)?;
    let ks_student = ks_test(costs, &student.dist)?;

    let prov = Provenance {
        seed: r.budget.master_seed.to_string(),
        paths: r.budget.path_count,
        scenario: r.scenario.fingerprint(),
    };
    let dir = &r.output_dir;

    let mut w = create(dir, "costs.csv", &prov)?;
    writeln!(w, "cost")?;
    for c in costs {
        writeln!(w, "{}", sig6(*c))?;
    }
    finish(w)?;

    let mut w = create(dir, "hist.csv", &prov)?;
    hist.write_csv(&mut w)?;
    finish(w)?;

    let mut w = create(dir, "moments.csv", &prov)?;
    m.write_csv(&mut w)?;
    finish(w)?;

    let mut w = create(dir, "fits.csv", &prov)?;
    {
        let mut c = csv::Writer::from_writer(&mut w);
        c.write_record(["distribution", "mu", "sigma", "nu", "log_likelihood", "converged"])
            .map_err(csv_err)?;
        c.write_record(fit_row("gaussian", &gauss)).map_err(csv_err)?;
        c.write_record(fit_row("student_t", &student)).map_err(csv_err)?;
        c.flush()?;
    }
    finish(w)?;

    let mut w = create(dir, "ks.csv", &prov)?;
    {
        let mut c = csv::Writer::from_writer(&mut w);
        c.write_record(["fit", "statistic", "p_value", "rejected_at_1pct", "count"])
            .map_err(csv_err)?;
        ks_gauss.write_csv_row(&mut c, "gaussian")?;
        ks_student.write_csv_row(&mut c, "student_t")?;
        c.flush()?;
    }
    finish(w)?;

    println!("schedule: {}", fmt_shares(strategy.shares()));
    println!(
        "mean {}  std {}  skewness {}  kurtosis {}",
        sig6(m.mean),
        sig6(m.std),
        sig6(m.skewness),
        sig6(m.kurtosis)
    );
    println!(
        "KS gaussian p={} ({}), student_t p={} ({})",
        sig6(ks_gauss.p_value),
        verdict(ks_gauss.rejected_at_1pct),
        sig6(ks_student.p_value),
        verdict(ks_student.rejected_at_1pct)
    );
    Ok(["costs.csv", "hist.csv", "moments.csv", "fits.csv", "ks.csv"]
        .iter()
        .map(|f| dir.join(f))
        .collect())
}

fn verdict(rejected: bool) -> &'static str {
    if rejected {
        "rejected at 1%"
    } else {
        "not rejected at 1%"
    }
}

fn fmt_shares(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| sig6(*x)).collect();
    format!("({})", parts.join(", "))
}

fn paths_used(r: &Resolved, spec: &UtilitySpec<f64>) -> usize {
    if spec.kind == UtilityKind::AcAnalytic {
        0
    } else {
        r.budget.path_count
    }
}

/// Runs the requested methods for every configured utility.
pub fn optimize(r: &Resolved, methods: &[OptMethod]) -> Result<Vec<PathBuf>, CliError> {
    if r.utilities.is_empty() {
        return Err(CliError::config("optimize needs a utility in the config"));
    }
    let mut written = Vec::new();
    for (i, spec) in r.utilities.iter().enumerate() {
        let dir = if r.utilities.len() == 1 {
            r.output_dir.clone()
        } else {
            r.output_dir.join(format!("u{}_{}", i + 1, spec.kind.name()))
        };
        let report = optimize_methods(methods, spec, &r.order, &r.scenario, &r.budget)?;
        let prov = Provenance {
            seed: r.budget.master_seed.to_string(),
            paths: paths_used(r, spec),
            scenario: r.scenario.fingerprint(),
        };

        let mut w = create(&dir, "candidates.csv", &prov)?;
        write_candidates_csv(&report, &mut w)?;
        finish(w)?;

        let mut w = create(&dir, "surface.csv", &prov)?;
        match &report.surface {
            Some(s) => s.write_csv(&mut w)?,
            None => writeln!(w, "monomial,coefficient,raw_coefficient")?,
        }
        finish(w)?;

        let mut w = create(&dir, "result.csv", &prov)?;
        write_results_csv(&report.results, &mut w)?;
        finish(w)?;

        println!(
            "{} lambda={} c_tilde={}",
            spec.kind.name(),
            sig6(spec.lambda),
            sig6(spec.c_tilde)
        );
        for res in &report.results {
            println!(
                "  {:<6} {}  U={}",
                res.method.name(),
                fmt_shares(res.strategy.shares()),
                sig6(res.utility)
            );
        }
        for f in ["candidates.csv", "surface.csv", "result.csv"] {
            written.push(dir.join(f));
        }
    }
    Ok(written)
}

fn check_lambdas(lambdas: &[f64]) -> Result<(), CliError> {
    if lambdas.is_empty() {
        return Err(CliError::config("lambda grid is empty"));
    }
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(CliError::config(format!("lambda must lie in [0, 1], got {l}")));
    }
    Ok(())
}

/// FitGD optimum and its two utility terms for each risk aversion.
pub fn frontier(r: &Resolved, lambdas: &[f64]) -> Result<Vec<PathBuf>, CliError> {
    check_lambdas(lambdas)?;
    let spec = first_utility(r, "frontier")?;
    let points = efficient_frontier(&spec, &r.order, &r.scenario, lambdas, &r.budget)?;
    let prov = Provenance {
        seed: r.budget.master_seed.to_string(),
        paths: paths_used(r, &spec),
        scenario: r.scenario.fingerprint(),
    };
    let mut w = create(&r.output_dir, "frontier.csv", &prov)?;
    {
        let mut c = csv::Writer::from_writer(&mut w);
        let header: Vec<String> = ["lambda", "impact_term", "risk_term"]
            .map(String::from)
            .into_iter()
            .chain(share_headers(r.order.intervals))
            .collect();
        c.write_record(&header).map_err(csv_err)?;
        for p in &points {
            let row: Vec<String> = [p.lambda, p.impact_term, p.risk_term]
                .into_iter()
                .chain(p.strategy.shares().iter().copied())
                .map(sig6)
                .collect();
            c.write_record(&row).map_err(csv_err)?;
        }
        c.flush()?;
    }
    finish(w)?;
    for p in &points {
        println!(
            "lambda={:<4} impact={} risk={} {}",
            sig6(p.lambda),
            sig6(p.impact_term),
            sig6(p.risk_term),
            fmt_shares(p.strategy.shares())
        );
    }
    Ok(vec![r.output_dir.join("frontier.csv")])
}

/// FitGD optima over a risk-aversion by threshold grid.
pub fn map(r: &Resolved, lambdas: &[f64], thresholds: &[f64]) -> Result<Vec<PathBuf>, CliError> {
    check_lambdas(lambdas)?;
    if thresholds.is_empty() {
        return Err(CliError::config("threshold grid is empty"));
    }
    let kind = r.utilities.first().map_or(UtilityKind::Dm, |u| u.kind);
    if !kind.needs_threshold() {
        return Err(CliError::config(format!(
            "map varies the cost threshold, which {} does not use",
            kind.name()
        )));
    }
    let cells = strategy_map(kind, &r.order, &r.scenario, lambdas, thresholds, &r.budget)?;
    let prov = Provenance {
        seed: r.budget.master_seed.to_string(),
        paths: r.budget.path_count,
        scenario: r.scenario.fingerprint(),
    };
    let mut w = create(&r.output_dir, "map.csv", &prov)?;
    {
        let mut c = csv::Writer::from_writer(&mut w);
        let header: Vec<String> = ["lambda", "c_tilde"]
            .map(String::from)
            .into_iter()
            .chain(share_headers(r.order.intervals))
            .collect();
        c.write_record(&header).map_err(csv_err)?;
        for cell in &cells {
            let row: Vec<String> = [cell.lambda, cell.c_tilde]
                .into_iter()
                .chain(cell.result.strategy.shares().iter().copied())
                .map(sig6)
                .collect();
            c.write_record(&row).map_err(csv_err)?;
        }
        c.flush()?;
    }
    finish(w)?;
    for cell in &cells {
        println!(
            "lambda={:<4} c_tilde={:<5} {}",
            sig6(cell.lambda),
            sig6(cell.c_tilde),
            fmt_shares(cell.result.strategy.shares())
        );
    }
    Ok(vec![r.output_dir.join("map.csv")])
}

/// Inputs of the benchmark command.
#[derive(Debug, Clone)]
pub struct BenchmarkJob {
    pub fills: PathBuf,
    pub tape: PathBuf,
    pub kind: BenchmarkKind<f64>,
    pub side: Side,
    pub total_shares: f64,
    pub open: Option<f64>,
    pub close: Option<f64>,
    pub start: Option<f64>,
    pub out: Option<PathBuf>,
}

fn open_input(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))
}

/// Signed cost of recorded fills against a benchmark computed from a market tape.
pub fn benchmark(job: &BenchmarkJob) -> Result<Option<PathBuf>, CliError> {
    let fills = FillSequence::<f64>::read_csv(open_input(&job.fills)?)
        .map_err(|e| CliError::config(format!("{}: {e}", job.fills.display())))?;
    let mut tape = MarketTape::<f64>::read_csv(open_input(&job.tape)?)
        .map_err(|e| CliError::config(format!("{}: {e}", job.tape.display())))?;
    if let Some(p) = job.open {
        tape = tape.with_open(p);
    }
    if let Some(p) = job.close {
        tape = tape.with_close(p);
    }
    if let Some(p) = job.start {
        tape = tape.with_start(p);
    }
    let xi = match job.side {
        Side::Sell => 1.0,
        Side::Buy => -1.0,
    };
    let price = benchmark_price(job.kind, &tape)?;
    let cost = cost_vs_benchmark(&fills, &tape, job.kind, xi, job.total_shares)?;
    println!(
        "benchmark {} price {} cost {}",
        job.kind.name(),
        sig6(price),
        sig6(cost)
    );
    let Some(dir) = &job.out else {
        return Ok(None);
    };
    let prov = Provenance {
        seed: "none".to_string(),
        paths: 0,
        scenario: format!("benchmark/{}", job.kind.name()),
    };
    let mut w = create(dir, "benchmark.csv", &prov)?;
    writeln!(w, "benchmark,side,total_shares,price,cost")?;
    writeln!(
        w,
        "{},{},{},{},{}",
        job.kind.name(),
        match job.side {
            Side::Sell => "sell",
            Side::Buy => "buy",
        },
        sig6(job.total_shares),
        sig6(price),
        sig6(cost)
    )?;
    finish(w)?;
    Ok(Some(dir.join("benchmark.csv")))
}

/// One-line summary of a resolved run, printed before any work starts.
pub fn describe(r: &Resolved) -> String {
    format!(
        "K={} N={} {} dynamics, seed {}",
        r.order.intervals,
        sig6(r.order.total_shares),
        match r.scenario.dynamics {
            Dynamics::ArithmeticAc => "arithmetic",
            Dynamics::GeometricPropagator => "geometric",
        },
        r.budget.master_seed
    )
}
