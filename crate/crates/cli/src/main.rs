mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use stoprule::check::run_checks;
use stoprule::numeric::Probability;
use stoprule::policy::solve_instance;
use stoprule::{
    bound_b, compute_thresholds, compute_value_curves, make_extremal_instance, oracle_optimal_value, simulate_win_probability,
    solve_odds, verify_odds_bounds, verify_reduction, DiscreteInstance, EngineConfig, OddsVector, ProblemInstance, SimConfig,
    ThresholdPolicy,
};

use config::FileConfig;
use report::{CliError, Format, Report, Table, EXIT_CHECK_FAILED, EXIT_NUMERICAL, EXIT_VALIDATION};

#[derive(Parser)]
#[command(name = "stoprule", version, about = "Best-choice stopping with independent, non-identical observations")]
struct Cli {
    /// Output format; csv is available for `bounds` and `thresholds`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// JSON file supplying defaults for unset flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal last-success rule for independent indicators.
    SolveOdds {
        /// Comma-separated success probabilities.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required_unless_present = "file", conflicts_with = "file")]
        p: Vec<f64>,
        /// JSON file of the form {"p": [...]}.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Table of b_n = (1 - 1/n)^(n-1).
    Bounds {
        #[arg(long, default_value_t = 20)]
        n_max: usize,
    },
    /// Optimal win probability and thresholds of a continuous instance.
    Value {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Critical values x_k* (CSV by default).
    Thresholds {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Two-point reduction and the value comparison.
    Reduce {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Exact optimum of a finite-support instance.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Monte Carlo win rate of the computed threshold rule.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Instance file for the extremal family.
    Extremal {
        #[arg(long)]
        n: usize,
    },
    /// Randomized property suite; exits 1 on any violation.
    Check {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
    },
}

fn load_instance(path: &Path) -> Result<ProblemInstance, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read instance {}: {e}", path.display())))?;
    Ok(ProblemInstance::from_json(&text)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OddsFile {
    p: Vec<f64>,
}

fn solve_odds_report(p: Vec<f64>, file: Option<PathBuf>) -> Result<Report, CliError> {
    let p = match file {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<OddsFile>(&text)
                .map_err(|e| CliError::usage(format!("invalid odds file {}: {e}", path.display())))?
                .p
        }
        None => p,
    };
    let odds = OddsVector::new(p)?;
    let sol = solve_odds(&odds);
    let bounds = verify_odds_bounds(&odds);
    Ok(Report::json(json!({
        "s": sol.s,
        "v": sol.v,
        "sum_odds": sol.sum_odds,
        "bound_b": bounds.bound_b,
        "bound_applicable": bounds.applicable,
        "bound_holds": bounds.bound_holds,
        "exceeds_inv_e": bounds.exceeds_inv_e,
        "reversed_cumulative": sol.reversed_cumulative,
        "crossing_index": sol.crossing_index,
        "v_reversed": sol.v_reversed,
    })))
}

fn bounds_report(n_max: usize) -> Result<Report, CliError> {
    if n_max == 0 {
        return Err(stoprule::Error::Domain("n-max must be >= 1".into()).into());
    }
    let rows = (1..=n_max)
        .map(|n| Ok((n, bound_b(n)?)))
        .collect::<stoprule::Result<Vec<_>>>()?;
    Ok(Report {
        json: Value::Array(rows.iter().map(|(n, b)| json!({"n": n, "b_n": b})).collect()),
        table: Some(Table {
            header: vec!["n", "b_n"],
            rows: rows.iter().map(|(n, b)| vec![json!(n), json!(b)]).collect(),
        }),
        exit: 0,
    })
}

fn anomaly_exit(policy: &ThresholdPolicy) -> u8 {
    if policy.has_anomaly() {
        EXIT_NUMERICAL
    } else {
        0
    }
}

fn value_report(inst: &ProblemInstance, cfg: &EngineConfig) -> Result<Report, CliError> {
    let sol = solve_instance(inst, cfg)?;
    let mut json = json!({
        "n": inst.len(),
        "value": sol.value,
        "bound_b": bound_b(inst.len())?,
        "thresholds": sol.policy.thresholds,
    });
    if sol.policy.has_anomaly() {
        json["anomalies"] = json!(sol.policy.anomalies);
    }
    Ok(Report {
        exit: anomaly_exit(&sol.policy),
        json,
        table: None,
    })
}

fn thresholds_report(inst: &ProblemInstance, cfg: &EngineConfig) -> Result<Report, CliError> {
    let curves = compute_value_curves(inst, cfg)?;
    let policy = compute_thresholds(&curves, cfg)?;
    let rows: Vec<(usize, f64)> = policy.thresholds.iter().enumerate().map(|(i, &x)| (i + 1, x)).collect();
    let mut json = json!({
        "thresholds": rows.iter().map(|(k, x)| json!({"k": k, "x_star": x})).collect::<Vec<_>>(),
    });
    if policy.has_anomaly() {
        json["anomalies"] = json!(policy.anomalies);
    }
    Ok(Report {
        exit: anomaly_exit(&policy),
        json,
        table: Some(Table {
            header: vec!["k", "x_star"],
            rows: rows.iter().map(|(k, x)| vec![json!(k), json!(x)]).collect(),
        }),
    })
}

fn oracle_report(inst: &ProblemInstance) -> Result<Report, CliError> {
    let d = DiscreteInstance::from_problem(inst)?;
    let json = match d.to_exact() {
        Ok(exact) => {
            let r = oracle_optimal_value(&exact)?;
            json!({ "value": r.value.to_f64(), "exact": true, "value_rational": r.value.to_string(), "stop_sets": r.stop_sets })
        }
        Err(stoprule::Error::Capacity { .. }) => {
            let r = oracle_optimal_value(&d)?;
            json!({ "value": r.value, "exact": false, "stop_sets": r.stop_sets })
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Report::json(json))
}

fn simulate_report(inst: &ProblemInstance, engine: &EngineConfig, sim: &SimConfig) -> Result<Report, CliError> {
    let sol = solve_instance(inst, engine)?;
    let r = simulate_win_probability(inst, &sol.policy, sim)?;
    Ok(Report {
        json: json!({
            "estimate": r.estimate,
            "stderr": r.stderr,
            "ci95": [r.ci95.0, r.ci95.1],
            "trials": r.trials,
            "seed": r.seed,
            "wins": r.wins,
            "thresholds": sol.policy.thresholds,
        }),
        table: None,
        exit: anomaly_exit(&sol.policy),
    })
}

fn run(cli: Cli) -> Result<(Report, Format), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let default_format = match cli.command {
        Command::Thresholds { .. } => Format::Csv,
        _ => Format::Json,
    };
    let format = cli.format.or(file.format).unwrap_or(default_format);

    let report = match cli.command {
        Command::SolveOdds { p, file: odds_file } => solve_odds_report(p, odds_file)?,
        Command::Bounds { n_max } => bounds_report(n_max)?,
        Command::Value { instance, grid } => value_report(&load_instance(&instance)?, &file.engine(grid))?,
        Command::Thresholds { instance, grid } => thresholds_report(&load_instance(&instance)?, &file.engine(grid))?,
        Command::Reduce { instance, grid } => {
            let r = verify_reduction(&load_instance(&instance)?, &file.engine(grid))?;
            let mut json = serde_json::to_value(&r).expect("report serializes");
            json["gap"] = json!(r.gap());
            Report::json(json)
        }
        Command::Oracle { instance } => oracle_report(&load_instance(&instance)?)?,
        Command::Simulate { instance, trials, seed, grid } => {
            simulate_report(&load_instance(&instance)?, &file.engine(grid), &file.simulation(trials, seed))?
        }
        Command::Extremal { n } => {
            Report::json(serde_json::from_str(&make_extremal_instance(n)?.to_json()).expect("instance json parses"))
        }
        Command::Check { seed, instances, grid } => {
            let cfg = file.check(seed, instances, grid);
            cfg.engine.validate()?;
            let r = run_checks(&cfg)?;
            Report {
                exit: if r.passed { 0 } else { EXIT_CHECK_FAILED },
                json: serde_json::to_value(&r).expect("report serializes"),
                table: None,
            }
        }
    };
    Ok((report, format))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("STOPRULE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("STOPRULE_THREADS must be a nonnegative integer, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads()
        .and_then(|_| run(cli))
        .and_then(|(report, format)| Ok((report.render(format)?, report.exit)));
    match outcome {
        Ok((text, exit)) => {
            print!("{text}");
            ExitCode::from(exit)
        }
        Err(e) => {
            eprintln!("{}", serde_json::to_string_pretty(&e.to_json()).expect("error serializes"));
            ExitCode::from(if e.exit == 0 { EXIT_VALIDATION } else { e.exit })
        }
    }
}
