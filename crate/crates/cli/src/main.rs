// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use satreg::verify::{run_suite, FaultInjection, Suite};

use commands::{CliError, CliResult, RunOptions, Status, EXIT_CONFIG, EXIT_FAILURE};
use config::ExperimentConfig;

/// Saturated output regulation: feedforward design, simulation and checks.
#[derive(Parser, Debug)]
#[command(name = "satreg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-loop transfer values P_c^κ(λ), P_d^κ(λ).
    Transfer(RunArgs),
    /// Feedforward coefficients and the linear-regime margin.
    Regulate(RunArgs),
    /// Closed-loop simulation with trajectory and metrics export.
    Simulate(RunArgs),
    /// Reference measured from the disturbance response.
    MeasureDisturbance(RunArgs),
    /// Property suites with measured values against thresholds.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Abort when the linear-regime margin is not positive.
    #[arg(long)]
    strict: bool,
    /// Repeat the run for each value, e.g. `kappa=1,2,3` or `model.modes=10,20`.
    #[arg(long, value_name = "PARAM=LIST")]
    sweep: Option<String>,
    /// Also write the simulation model in the plain-text matrix format.
    #[arg(long)]
    export_model: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fault {
    /// Perturb Π before the regulator residuals are evaluated.
    CorruptPi,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// saturation, signals, state-space, models, regulator, simulator or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, value_enum)]
    inject_fault: Option<Fault>,
    /// Directory for `verify.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

type Runner = fn(&ExperimentConfig, &Path, &RunOptions) -> CliResult<Status>;

fn load_table(path: &Path) -> CliResult<toml::Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("cannot read {}: {e}", path.display())))?;
    text.parse::<toml::Table>()
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn parse_config(table: toml::Table, path: &Path) -> CliResult<ExperimentConfig> {
    ExperimentConfig::deserialize_table(table)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", path.display())))
}

/// A sweep value is read as a TOML value, falling back to a bare string.
fn sweep_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> CliResult<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| CliError::new(EXIT_CONFIG, "empty sweep parameter"))?;
    let mut current = table;
    for part in parts {
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry.as_table_mut().ok_or_else(|| {
            CliError::new(
                EXIT_CONFIG,
                format!("sweep parameter {key}: '{part}' is not a table"),
            )
        })?;
    }
    current.insert(last.to_string(), value);
    Ok(())
}

fn parse_sweep(spec: &str) -> CliResult<(String, Vec<String>)> {
    let (param, list) = spec.split_once('=').ok_or_else(|| {
        CliError::new(
            EXIT_CONFIG,
            format!("--sweep expects PARAM=v1,v2,..., got '{spec}'"),
        )
    })?;
    let values: Vec<String> = list
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if param.trim().is_empty() || values.is_empty() {
        return Err(CliError::new(
            EXIT_CONFIG,
            format!("--sweep expects PARAM=v1,v2,..., got '{spec}'"),
        ));
    }
    Ok((param.trim().to_string(), values))
}

fn report(result: CliResult<Status>, label: &str) -> u8 {
    match result {
        Ok(status) => status.code(),
        Err(e) => {
            if label.is_empty() {
                eprintln!("error: {}", e.message);
            } else {
                eprintln!("[{label}] error: {}", e.message);
            }
            e.code
        }
    }
}

fn run_experiment(args: &RunArgs, runner: Runner) -> u8 {
    let base_dir = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let table = match load_table(&args.config) {
        Ok(t) => t,
        Err(e) => return report(Err(e), ""),
    };
    let Some(sweep) = &args.sweep else {
        let opts = RunOptions {
            out: args.out.clone(),
            strict: args.strict,
            export_model: args.export_model,
            label: String::new(),
        };
        return report(
            parse_config(table, &args.config).and_then(|cfg| runner(&cfg, &base_dir, &opts)),
            "",
        );
    };

    let (param, values) = match parse_sweep(sweep) {
        Ok(p) => p,
        Err(e) => return report(Err(e), ""),
    };
    // Validate every point before starting any run.
    let mut points = Vec::with_capacity(values.len());
    for raw in &values {
        let label = format!("{param}={raw}");
        let mut t = table.clone();
        let cfg = set_dotted(&mut t, &param, sweep_value(raw))
            .and_then(|_| parse_config(t, &args.config));
        match cfg {
            Ok(cfg) => points.push((label, cfg)),
            Err(e) => return report(Err(e), &label),
        }
    }
    let codes: Vec<u8> = std::thread::scope(|scope| {
        let handles: Vec<_> = points
            .iter()
            .map(|(label, cfg)| {
                let opts = RunOptions {
                    out: args.out.join(label.replace(['/', '\\'], "_")),
                    strict: args.strict,
                    export_model: args.export_model,
                    label: label.clone(),
                };
                let base_dir = &base_dir;
                scope.spawn(move || report(runner(cfg, base_dir, &opts), &opts.label))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or(EXIT_FAILURE))
            .collect()
    });
    codes.into_iter().max().unwrap_or(0)
}

#[derive(Serialize)]
struct CheckRecord {
    suite: String,
    name: String,
    measured: f64,
    threshold: f64,
    passed: bool,
}

fn run_verify(args: &VerifyArgs) -> u8 {
    let suite = match args.suite.parse::<Suite>() {
        Ok(s) => s,
        Err(e) => return report(Err(e.into()), ""),
    };
    let faults = FaultInjection {
        corrupt_pi: matches!(args.inject_fault, Some(Fault::CorruptPi)),
    };
    let results = match run_suite(suite, faults) {
        Ok(r) => r,
        Err(e) => return report(Err(e.into()), ""),
    };
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} checks, {} failed", results.len(), failed);
    if let Some(out) = &args.out {
        let records: Vec<CheckRecord> = results
            .iter()
            .map(|r| CheckRecord {
                suite: r.suite.to_string(),
                name: r.name.clone(),
                measured: r.measured,
                threshold: r.threshold,
                passed: r.passed,
            })
            .collect();
        let written = std::fs::create_dir_all(out).and_then(|_| {
            let text = serde_json::to_string_pretty(&records).expect("check records serialize");
            std::fs::write(out.join("verify.json"), text + "\n")
        });
        if let Err(e) = written {
            return report(Err(e.into()), "");
        }
    }
    if failed == 0 {
        0
    } else {
        EXIT_FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Transfer(args) => run_experiment(args, commands::transfer),
        Command::Regulate(args) => run_experiment(args, commands::regulate),
        Command::Simulate(args) => run_experiment(args, commands::simulate),
        Command::MeasureDisturbance(args) => run_experiment(args, commands::measure_disturbance),
        Command::Verify(args) => run_verify(args),
    };
    ExitCode::from(code)
}
