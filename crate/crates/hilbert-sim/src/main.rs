//! Command-line front end: validate and run configurations, print the
//! elastica shooting oracle, and sweep one parameter over several values.
//!
//! Exit codes: 0 success, 1 configuration/validation error, 2 solver or
//! runtime error. Diagnostics go to standard error; run data goes to files
//! (the oracle subcommand prints its table to standard output).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hilbert_body::config::{parse_config, set_param, sweepable_keys, SimConfig};
use hilbert_body::driver::run;
use hilbert_body::elastica::{shooting_oracle, ElasticaProblem, StretchModel};
use hilbert_body::output::{write_failure_meta, write_outputs};
use hilbert_body::{Error, MaterialGrid};

#[derive(Parser)]
#[command(
    name = "hilbert-sim",
    version,
    about = "Quasi-static elastic sheet with a quantum fibre at every node"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write snapshots, summary, config echo, and
    /// run metadata into the output directory.
    Run(RunArgs),
    /// Parse and validate a configuration; writes nothing.
    Validate(ValidateArgs),
    /// Independent verification tools.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Run one configuration repeatedly with a parameter swept over a list
    /// of values, one output directory per value.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.directory from the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Print the inextensible pendulum-shooting equilibrium as CSV
    /// (node,s,theta,x,z) on standard output.
    Elastica(OracleArgs),
}

#[derive(Args)]
struct OracleArgs {
    /// End-to-end distance as a fraction of the sheet length.
    #[arg(long)]
    d: f64,
    /// Node count (odd, at least 7).
    #[arg(long, default_value_t = 101)]
    n: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// Configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Dotted parameter key, e.g. coupling.beta.
    #[arg(long)]
    param: String,
    /// Comma-separated list of values.
    #[arg(long)]
    values: String,
    /// Base output directory (overrides output.directory from the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> ExitCode {
    if err.is_validation() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Oracle(OracleCommand::Elastica(args)) => cmd_oracle(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn cmd_validate(args: ValidateArgs) -> ExitCode {
    match parse_config(&args.config) {
        Ok(_) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            exit_code_for(&err)
        }
    }
}

fn run_one(config: &SimConfig, out_dir: &PathBuf) -> Result<(), Error> {
    let started = hilbert_body::driver::now_rfc3339();
    match run(config) {
        Ok(record) => {
            write_outputs(&record, config, out_dir)?;
            Ok(())
        }
        Err(err) => {
            // Leave a trace of the failed run next to any partial outputs.
            let _ = write_failure_meta(out_dir, &started, &err.to_string());
            Err(err)
        }
    }
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let config = match parse_config(&args.config) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("{err}");
            return exit_code_for(&err);
        }
    };
    let out_dir = args
        .out
        .unwrap_or_else(|| PathBuf::from(&config.output.directory));
    match run_one(&config, &out_dir) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            exit_code_for(&err)
        }
    }
}

fn cmd_oracle(args: OracleArgs) -> ExitCode {
    let result = (|| -> Result<String, Error> {
        let grid = MaterialGrid::new(args.n, 1.0)?;
        let problem = ElasticaProblem::uniform(grid.clone(), 1.0, 1000.0, args.d)?;
        let solution = shooting_oracle(&problem, StretchModel::Inextensible)?;
        let mut out = String::from("node,s,theta,x,z\n");
        for i in 0..args.n {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                i,
                grid.coord(i),
                solution.placement.theta[i],
                solution.placement.x[i],
                solution.placement.z[i],
            ));
        }
        Ok(out)
    })();
    match result {
        Ok(csv) => {
            print!("{csv}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{err}");
            exit_code_for(&err)
        }
    }
}

fn cmd_sweep(args: SweepArgs) -> ExitCode {
    let base = match parse_config(&args.config) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("{err}");
            return exit_code_for(&err);
        }
    };
    if !sweepable_keys().contains_key(args.param.as_str()) {
        eprintln!(
            "`{}` is not a sweepable parameter; known keys:\n  {}",
            args.param,
            sweepable_keys()
                .keys()
                .cloned()
                .collect::<Vec<_>>()
                .join("\n  ")
        );
        return ExitCode::from(1);
    }
    let values: Vec<&str> = args
        .values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        eprintln!("--values must list at least one value");
        return ExitCode::from(1);
    }
    let base_out = args
        .out
        .unwrap_or_else(|| PathBuf::from(&base.output.directory));
    for value in values {
        let mut config = base.clone();
        if let Err(err) = set_param(&mut config, &args.param, value) {
            eprintln!("{err}");
            return exit_code_for(&err);
        }
        let subdir = base_out.join(format!("{}={}", args.param.replace('.', "_"), value));
        eprintln!("sweep: {} = {value} -> {}", args.param, subdir.display());
        if let Err(err) = run_one(&config, &subdir) {
            eprintln!("{err}");
            return exit_code_for(&err);
        }
    }
    ExitCode::SUCCESS
}
