use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sdr_core::commands::{cmd_analyze, cmd_compare, cmd_eval, cmd_multi, cmd_rank, Summary};
use sdr_core::config::RunConfig;
use sdr_core::Error;

/// Seed-driven document ranking experiments.
#[derive(Parser)]
#[command(name = "sdr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set lambda=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-seed leave-one-out runs.
    Rank(ConfigArgs),
    /// Multi-seed runs with oracle single-seed baselines.
    Multi(ConfigArgs),
    /// Relevant-vs-irrelevant similarity and term commonality per topic.
    Analyze(ConfigArgs),
    /// Evaluate a TREC run file.
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [10, 100, 1000])]
        cutoffs: Vec<usize>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paired t-tests between two metric CSVs.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        labels: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(args: &ConfigArgs) -> sdr_core::Result<RunConfig> {
    let env: HashMap<String, String> = std::env::vars().collect();
    RunConfig::load(args.config.as_deref(), &env, &args.overrides)
}

fn print_summary(summary: &Summary) {
    println!(
        "{}",
        serde_json::to_string_pretty(summary).expect("summary is serialisable")
    );
}

fn emit(bytes: &[u8], out: Option<&Path>) {
    if out.is_none() {
        let _ = std::io::stdout().write_all(bytes);
    }
}

fn run(cli: Cli) -> sdr_core::Result<()> {
    match cli.command {
        Command::Rank(args) => print_summary(&cmd_rank(&load_config(&args)?)?),
        Command::Multi(args) => print_summary(&cmd_multi(&load_config(&args)?)?),
        Command::Analyze(args) => print_summary(&cmd_analyze(&load_config(&args)?)?),
        Command::Eval {
            run,
            qrels,
            cutoffs,
            out,
        } => emit(
            &cmd_eval(&run, &qrels, &cutoffs, out.as_deref())?,
            out.as_deref(),
        ),
        Command::Compare { a, b, labels, out } => {
            let labels = labels.as_ref().map(|l| (l[0].as_str(), l[1].as_str()));
            emit(
                &cmd_compare(&a, &b, labels, out.as_deref())?,
                out.as_deref(),
            )
        }
    }
    Ok(())
}

fn error_summary(e: &Error) -> serde_json::Value {
    let mut v = serde_json::json!({
        "status": "error",
        "kind": e.kind(),
        "message": e.to_string(),
    });
    if let Error::Config { field, .. } = e {
        v["field"] = serde_json::Value::String(field.clone());
    }
    v
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SDR_LOG", "info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_summary(&e));
            ExitCode::from(if matches!(e, Error::Config { .. }) {
                2
            } else {
                1
            })
        }
    }
}
