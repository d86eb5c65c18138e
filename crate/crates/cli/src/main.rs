// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

//! `dpcusum` command-line tool.
//!
//! Exit codes: 0 on success, 2 on invalid input or configuration (one JSON
//! line on stderr), 3 when a run completes but fails its check (privacy audit
//! above the limit, or too many censored runs).

mod commands;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "dpcusum", version, about = "Differentially private CUSUM experiments")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON experiment config
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed [default: the config's seed, else 0]
    #[arg(long, global = true, env = "DPCUSUM_SEED", value_name = "U64")]
    pub seed: Option<u64>,
    /// Monte Carlo trials per estimate
    #[arg(long, global = true, value_name = "N")]
    pub trials: Option<u64>,
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Output file [default: stdout]
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Accept estimates with more than 1% of runs censored at the horizon
    #[arg(long, global = true)]
    pub allow_censoring: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the threshold whose ARL lower bound equals gamma
    Calibrate(CalibrateArgs),
    /// Estimate the average run length (no change)
    Arl(SimArgs),
    /// Estimate the worst-case average detection delay (change at time 0)
    Wadd(SimArgs),
    /// ARL and WADD for every detector and threshold; writes CSV
    Sweep(SimArgs),
    /// Effective privacy factor h over (epsilon, delta) for Gaussian shifts; writes CSV
    Heatmap(HeatmapArgs),
    /// Empirical privacy audit of DP-CUSUM on a Bernoulli stream
    Audit(AuditArgs),
    /// WADD of each detector at common ARL values
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Target average run length
    #[arg(long)]
    pub gamma: f64,
    /// Privacy level
    #[arg(long)]
    pub epsilon: f64,
    /// Sensitivity of the LLR (Δ or A_δ)
    #[arg(long = "delta-sens")]
    pub delta_sens: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model family: laplace_shift, gaussian_shift or bernoulli_shift
    #[arg(long, value_name = "KIND")]
    pub model: Option<String>,
    /// Post-change mean of a shift model
    #[arg(long)]
    pub mu: Option<f64>,
    /// Pre-change success probability (bernoulli_shift)
    #[arg(long)]
    pub p0: Option<f64>,
    /// Post-change success probability (bernoulli_shift)
    #[arg(long)]
    pub p1: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Detector: cusum, dp_cusum, delta_dp_cusum or online_pcpd (replaces the config's detectors)
    #[arg(long, value_name = "NAME")]
    pub variant: Option<String>,
    /// Privacy level of the detector
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Failure probability for A_δ
    #[arg(long)]
    pub delta: Option<f64>,
    /// Window size of online_pcpd
    #[arg(long)]
    pub window: Option<usize>,
    /// Thresholds, comma separated
    #[arg(long = "b", value_delimiter = ',', allow_negative_numbers = true, value_name = "B")]
    pub thresholds: Vec<f64>,
    /// Target ARL; calibrates b when no thresholds are given
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Censoring horizon [default: max(10^6, 100·gamma)]
    #[arg(long)]
    pub horizon: Option<u64>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    /// Gaussian shift means, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub mu: Vec<f64>,
    /// Cells per axis
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Stream as a string of 0 and 1
    #[arg(long)]
    pub stream: Option<String>,
    /// Index of the flipped entry; omit to audit the stream against itself
    #[arg(long)]
    pub neighbor: Option<usize>,
    /// Privacy level
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Threshold
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Independent noise realizations
    #[arg(long)]
    pub draws: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Existing sweep CSV to compare instead of running a sweep
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Common ARL values, comma separated
    #[arg(long = "arl-grid", value_delimiter = ',')]
    pub arl_grid: Vec<f64>,
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    Invalid(dpcusum::Error),
    Usage(String),
    Check(String),
}

impl From<dpcusum::Error> for Failure {
    fn from(e: dpcusum::Error) -> Self {
        Failure::Invalid(e)
    }
}

impl Failure {
    fn report(&self) -> ExitCode {
        use dpcusum::Error as E;
        let (kind, message, code) = match self {
            Failure::Invalid(e) => {
                let kind = match e {
                    E::InvalidInput(_) => "invalid_input",
                    E::InvalidModel(_) => "invalid_model",
                    E::Config(_) => "config",
                    E::AlreadyStopped(_) => "already_stopped",
                    E::OutOfDomain(_) => "out_of_domain",
                    E::Io(_) => "io",
                };
                (kind, e.to_string(), 2)
            }
            Failure::Usage(m) => ("usage", m.clone(), 2),
            Failure::Check(m) => ("check_failed", m.clone(), 3),
        };
        let line = serde_json::json!({ "error": kind, "message": message.replace('\n', " ") });
        eprintln!("{line}");
        ExitCode::from(code)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            return Failure::Usage(first.trim_start_matches("error: ").to_string()).report();
        }
    };
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Failure::Usage("--jobs must be at least 1".into()).report();
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .expect("thread pool is configured once");
    }
    let g = &cli.global;
    let result = match &cli.command {
        Command::Calibrate(a) => commands::calibrate(g, a),
        Command::Arl(a) => commands::estimate(g, a, dpcusum::harness::Metric::Arl),
        Command::Wadd(a) => commands::estimate(g, a, dpcusum::harness::Metric::Wadd),
        Command::Sweep(a) => commands::sweep(g, a),
        Command::Heatmap(a) => commands::heatmap(g, a),
        Command::Audit(a) => commands::audit(g, a),
        Command::Compare(a) => commands::compare(g, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
