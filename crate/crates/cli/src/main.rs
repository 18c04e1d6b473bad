use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hostsim::arrivals::{load_trace, ArrivalError, ClipPolicy};
use hostsim::bounds::{theoretical_bound, BoundInputs, BoundKind};
use hostsim::model::horizon_cost;
use hostsim::oracles::offline_optimal_dp;
use hostsim::report::format_number;
use hostsim::runner::{run_experiment, ExperimentConfig, ModelConfig, RunnerError};

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "hostsim", about = "Edge service-hosting simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write per-trial and aggregate CSVs.
    Run { config: PathBuf },
    /// Print the offline optimal schedule and cost of a request trace.
    Oracle {
        #[arg(long)]
        trace: PathBuf,
        /// JSON file with `ladder` and `params` (single c and M).
        #[arg(long)]
        config: PathBuf,
        /// Reject counts above kappa instead of clipping them.
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate a closed-form bound, e.g. `bounds ftpl-adv --T 1000 --K 2 ...`.
    Bounds {
        which: String,
        /// `--symbol value` pairs; `--config <json>` fills K, alpha2, kappa, c, M and the ladder.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
    /// Print the version.
    Version,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.to_string(),
        }
    }
}

impl From<RunnerError> for Failure {
    fn from(e: RunnerError) -> Self {
        Self {
            code: if e.is_io() { EXIT_IO } else { EXIT_CONFIG },
            message: e.to_string(),
        }
    }
}

impl From<ArrivalError> for Failure {
    fn from(e: ArrivalError) -> Self {
        Self {
            code: if matches!(e, ArrivalError::Io { .. }) {
                EXIT_IO
            } else {
                EXIT_CONFIG
            },
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => run(config),
        Command::Oracle {
            trace,
            config,
            strict,
        } => oracle(trace, config, strict),
        Command::Bounds { which, args } => bounds(&which, &args),
        Command::Version => {
            println!("hostsim {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(path: PathBuf) -> Result<(), Failure> {
    let config = ExperimentConfig::from_file(&path)?;
    let out = run_experiment(&config)?;
    println!("{}", out.trials_csv.display());
    println!("{}", out.aggregate_csv.display());
    Ok(())
}

fn oracle(trace: PathBuf, config: PathBuf, strict: bool) -> Result<(), Failure> {
    let model = ModelConfig::from_file(&config)?;
    let clip = if strict {
        ClipPolicy::Reject
    } else {
        ClipPolicy::Clip
    };
    let arrivals = load_trace(&trace, model.params.kappa, clip)?;
    let (schedule, cost) = offline_optimal_dp(&arrivals, &model.ladder, &model.params);
    let parts = horizon_cost(&schedule, &arrivals, &model.ladder, &model.params)
        .map_err(Failure::config)?;
    println!("cost {}", format_number(cost));
    println!("rent {}", format_number(parts.rent));
    println!("service {}", format_number(parts.service));
    println!("fetch {}", format_number(parts.fetch));
    let levels: Vec<String> = schedule.levels().iter().map(|l| l.to_string()).collect();
    println!("schedule {}", levels.join(","));
    Ok(())
}

fn bounds(which: &str, args: &[String]) -> Result<(), Failure> {
    let kind: BoundKind = which.parse().map_err(Failure::config)?;
    let mut inputs = BoundInputs::default();
    let mut explicit = Vec::new();
    let mut rest = args.iter();
    while let Some(flag) = rest.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| Failure::config(format!("expected --symbol, got {flag:?}")))?;
        let value = rest
            .next()
            .ok_or_else(|| Failure::config(format!("missing value for --{key}")))?;
        if key == "config" {
            let model = ModelConfig::from_file(&PathBuf::from(value))?;
            inputs.kappa.get_or_insert(model.params.kappa);
            inputs.m.get_or_insert(model.params.m);
            inputs.c.get_or_insert(model.params.c);
            inputs = inputs.with_ladder(model.ladder);
            continue;
        }
        let v: f64 = value
            .parse()
            .map_err(|_| Failure::config(format!("--{key}: not a number: {value:?}")))?;
        explicit.push((key.to_string(), v));
    }
    for (key, v) in explicit {
        if !inputs.set(&key, v) {
            return Err(Failure::config(format!("unknown symbol --{key}")));
        }
    }
    let value = theoretical_bound(kind, &inputs).map_err(Failure::config)?;
    println!("{kind} = {}", format_number(value));
    for symbol in kind.symbols() {
        match inputs.get(symbol) {
            Some(v) => println!("  {symbol} = {}", format_number(v)),
            None if *symbol == "ladder" => {
                if let Some(ladder) = &inputs.ladder {
                    let levels: Vec<String> = ladder
                        .levels()
                        .iter()
                        .map(|l| format!("({}, {})", format_number(l.alpha), format_number(l.g)))
                        .collect();
                    println!("  ladder = {}", levels.join(" "));
                }
            }
            None => {}
        }
    }
    Ok(())
}
