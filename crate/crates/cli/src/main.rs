//! `corrshap` — Shapley attributions with a multicollinearity correction.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or model error, 3 numerical
//! error (singular coalition, degenerate variance, infeasible correlation).

mod commands;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "corrshap",
    about = "Monte-Carlo Shapley attributions with a multicollinearity correction",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every estimating subcommand.
#[derive(Args, Clone)]
struct CommonOpts {
    /// Input CSV (header row required, numeric cells)
    #[arg(long)]
    data: PathBuf,
    /// Target column name
    #[arg(long)]
    target: String,
    /// Columns to treat as pre-encoded categorical (comma-separated)
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// Model family: linear | logistic | tree | forest | knn
    #[arg(long, default_value = "forest")]
    model: String,
    /// Model hyperparameter, KEY=VALUE (repeatable)
    #[arg(long = "model-opt")]
    model_opt: Vec<String>,
    /// Monte-Carlo iterations per estimate
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// mcc | nmcc | both
    #[arg(long, default_value = "both")]
    mode: String,
    /// Worker threads for estimation (any value gives identical results)
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | md
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Per-feature attributions for one instance
    Explain {
        #[command(flatten)]
        common: CommonOpts,
        /// Row index of the instance to explain
        #[arg(long, default_value_t = 0)]
        instance: usize,
        /// Explain only this feature (default: all features)
        #[arg(long)]
        feature: Option<String>,
        /// Also export the corrected-mode adjustment plan as CSV
        #[arg(long)]
        plan_out: Option<PathBuf>,
    },
    /// Attribution of a feature group treated as one player
    ExplainGroup {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 0)]
        instance: usize,
        /// Coalition feature names, comma-separated
        #[arg(long, value_delimiter = ',', required = true)]
        features: Vec<String>,
    },
    /// Clone experiment: inject a near-perfect copy of a feature, refit, and
    /// compare corrected/uncorrected attributions across both arms
    Scenario1 {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        feature: String,
        /// Clone noise relative to the feature's standard deviation
        #[arg(long, default_value_t = 0.01)]
        clone_noise: f64,
    },
    /// Correlated-set experiment: compare models fit with and without a
    /// correlated feature set
    Scenario2 {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        feature: String,
        /// Correlated columns removed in the reduced arm (comma-separated)
        #[arg(long, value_delimiter = ',', required = true)]
        correlated: Vec<String>,
    },
    /// Coalition experiment with paired clone injection
    Combination {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_delimiter = ',', required = true)]
        features: Vec<String>,
        #[arg(long, default_value_t = 0.01)]
        clone_noise: f64,
    },
    /// Wall-clock comparison of corrected vs uncorrected estimation
    Bench {
        /// Synthetic feature widths to benchmark
        #[arg(long, value_delimiter = ',', default_values_t = vec![10usize, 100, 1000])]
        widths: Vec<usize>,
        #[arg(long, default_value = "forest")]
        model: String,
        #[arg(long = "model-opt")]
        model_opt: Vec<String>,
        #[arg(long, default_value_t = 10_000)]
        iterations: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Generate a synthetic CSV dataset with controlled correlations
    Synth {
        #[arg(long, default_value_t = 200)]
        rows: usize,
        /// Number of feature columns (a target column y is appended)
        #[arg(long, default_value_t = 6)]
        width: usize,
        /// Correlation block "i,j,...:rho" (repeatable)
        #[arg(long = "block")]
        blocks: Vec<String>,
        /// linear | step
        #[arg(long, default_value = "step")]
        target_fn: String,
        /// Target weights, comma-separated (padded with zeros)
        #[arg(long, value_delimiter = ',')]
        weights: Vec<f64>,
        /// Target noise standard deviation
        #[arg(long, default_value_t = 0.5)]
        noise: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_model_opts(pairs: &[String]) -> Result<BTreeMap<String, String>, commands::CliError> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        match pair.split_once('=') {
            Some((k, v)) => {
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
            None => {
                return Err(commands::CliError::Usage(format!(
                    "--model-opt expects KEY=VALUE, got '{pair}'"
                )))
            }
        }
    }
    Ok(map)
}

fn run(cli: Cli) -> Result<(), commands::CliError> {
    match cli.command {
        Command::Explain {
            common,
            instance,
            feature,
            plan_out,
        } => {
            let opts = parse_model_opts(&common.model_opt)?;
            commands::explain(&common, &opts, instance, feature.as_deref(), plan_out.as_deref())
        }
        Command::ExplainGroup {
            common,
            instance,
            features,
        } => {
            let opts = parse_model_opts(&common.model_opt)?;
            commands::explain_group(&common, &opts, instance, &features)
        }
        Command::Scenario1 {
            common,
            feature,
            clone_noise,
        } => {
            let opts = parse_model_opts(&common.model_opt)?;
            commands::scenario1(&common, &opts, &feature, clone_noise)
        }
        Command::Scenario2 {
            common,
            feature,
            correlated,
        } => {
            let opts = parse_model_opts(&common.model_opt)?;
            commands::scenario2(&common, &opts, &feature, &correlated)
        }
        Command::Combination {
            common,
            features,
            clone_noise,
        } => {
            let opts = parse_model_opts(&common.model_opt)?;
            commands::combination(&common, &opts, &features, clone_noise)
        }
        Command::Bench {
            widths,
            model,
            model_opt,
            iterations,
            seed,
            repeats,
            workers,
            out,
            format,
        } => {
            let opts = parse_model_opts(&model_opt)?;
            commands::bench(
                &widths, &model, &opts, iterations, seed, repeats, workers,
                out.as_deref(), &format,
            )
        }
        Command::Synth {
            rows,
            width,
            blocks,
            target_fn,
            weights,
            noise,
            seed,
            out,
        } => commands::synth(rows, width, &blocks, &target_fn, &weights, noise, seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not errors
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
