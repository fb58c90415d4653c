mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tca_core::costs::BenchmarkKind;
use tca_core::domain::Side;
use tca_core::optimizer::OptMethod;

use commands::{BenchmarkJob, Schedule};
use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "tcalab",
    version,
    about = "Transaction-cost simulation and execution-schedule optimisation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated price paths; overrides `budget.path_count`.
    #[arg(long)]
    paths: Option<usize>,
    /// Candidate schedules; overrides `budget.q_target`.
    #[arg(long)]
    candidates: Option<usize>,
    /// Surface degree, 2 or 3; overrides `budget.degree`.
    #[arg(long)]
    degree: Option<usize>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ScheduleArg {
    Ac,
    Twap,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodArg {
    Gd,
    Mc,
    FitMc,
    FitGd,
}

impl From<MethodArg> for OptMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Gd => OptMethod::GD,
            MethodArg::Mc => OptMethod::MC,
            MethodArg::FitMc => OptMethod::FitMC,
            MethodArg::FitGd => OptMethod::FitGD,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum KindArg {
    Twap,
    Vwap,
    Pwp,
    Mo,
    Mc,
    Is,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SideArg {
    Sell,
    Buy,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the cost distribution of a schedule and fit it.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Mean-variance optimal schedule (at the first utility's lambda, else 0.3) or TWAP.
        #[arg(long, value_enum, default_value = "ac")]
        schedule: ScheduleArg,
        /// Explicit schedule n_1,...,n_K; takes precedence over --schedule.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        shares: Option<Vec<f64>>,
    },
    /// Optimise the schedule with every method.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Subset of methods to run.
        #[arg(long, value_enum, value_delimiter = ',')]
        methods: Option<Vec<MethodArg>>,
    },
    /// Efficient frontier over a risk-aversion grid.
    Frontier {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Optimal schedules over a risk-aversion by threshold grid.
    Map {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        thresholds: Option<Vec<f64>>,
    },
    /// Cost of recorded fills against a market benchmark.
    Benchmark {
        /// CSV with columns k,shares,price.
        #[arg(long)]
        fills: PathBuf,
        /// CSV with columns k,price,volume.
        #[arg(long)]
        tape: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Participation rate for PWP.
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, value_enum, default_value = "sell")]
        side: SideArg,
        /// Order size N.
        #[arg(long = "shares")]
        total_shares: f64,
        /// Opening price; defaults to the first tape price.
        #[arg(long)]
        open: Option<f64>,
        /// Closing price; defaults to the last tape price.
        #[arg(long)]
        close: Option<f64>,
        /// Arrival price; defaults to the first tape price.
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve(common: &Common) -> Result<config::Resolved, CliError> {
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let r = cfg.resolve(&Overrides {
        seed: common.seed,
        paths: common.paths,
        candidates: common.candidates,
        degree: common.degree,
        out: common.out.clone(),
    })?;
    eprintln!("{}", commands::describe(&r));
    Ok(r)
}

fn run(command: Command) -> Result<Vec<PathBuf>, CliError> {
    match command {
        Command::Simulate {
            common,
            schedule,
            shares,
        } => {
            let r = resolve(&common)?;
            let schedule = match (shares, schedule) {
                (Some(v), _) => Schedule::Shares(v),
                (None, ScheduleArg::Ac) => Schedule::AcOptimal,
                (None, ScheduleArg::Twap) => Schedule::Twap,
            };
            commands::simulate(&r, &schedule)
        }
        Command::Optimize { common, methods } => {
            let r = resolve(&common)?;
            let methods: Vec<OptMethod> = match methods {
                Some(m) => m.into_iter().map(OptMethod::from).collect(),
                None => OptMethod::ALL.to_vec(),
            };
            commands::optimize(&r, &methods)
        }
        Command::Frontier { common, lambdas } => {
            let r = resolve(&common)?;
            let lambdas = lambdas.unwrap_or_else(|| commands::DEFAULT_FRONTIER_LAMBDAS.to_vec());
            commands::frontier(&r, &lambdas)
        }
        Command::Map {
            common,
            lambdas,
            thresholds,
        } => {
            let r = resolve(&common)?;
            let lambdas = lambdas.unwrap_or_else(|| commands::DEFAULT_MAP_LAMBDAS.to_vec());
            let thresholds = thresholds.unwrap_or_else(|| commands::DEFAULT_MAP_THRESHOLDS.to_vec());
            commands::map(&r, &lambdas, &thresholds)
        }
        Command::Benchmark {
            fills,
            tape,
            kind,
            rate,
            side,
            total_shares,
            open,
            close,
            start,
            out,
        } => {
            let kind = match (kind, rate) {
                (KindArg::Pwp, Some(rate)) => BenchmarkKind::Pwp { rate },
                (KindArg::Pwp, None) => return Err(CliError::config("pwp needs --rate")),
                (_, Some(_)) => return Err(CliError::config("--rate only applies to pwp")),
                (KindArg::Twap, None) => BenchmarkKind::Twap,
                (KindArg::Vwap, None) => BenchmarkKind::Vwap,
                (KindArg::Mo, None) => BenchmarkKind::Mo,
                (KindArg::Mc, None) => BenchmarkKind::Mc,
                (KindArg::Is, None) => BenchmarkKind::Is,
            };
            let job = BenchmarkJob {
                fills,
                tape,
                kind,
                side: match side {
                    SideArg::Sell => Side::Sell,
                    SideArg::Buy => Side::Buy,
                },
                total_shares,
                open,
                close,
                start,
                out,
            };
            Ok(commands::benchmark(&job)?.into_iter().collect())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
