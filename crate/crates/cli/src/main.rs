mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RawConfig;
use failure::Failure;

#[derive(Parser)]
#[command(name = "kuramoto", version, about = "Kuramoto oscillator experiments on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory; writes a trace CSV and a summary JSON.
    Simulate(Options),
    /// Critical-coupling bounds for a graph and frequency vector.
    Bounds(Options),
    /// Solve for the phase-locked fixed point at one coupling.
    Fixedpoint(Options),
    /// Empirical locking threshold by bisection.
    Threshold(Options),
    /// Laplacian spectrum.
    Spectrum(Options),
    /// Grid of couplings times replicates; one CSV row per pair.
    Sweep(Options),
}

/// Command-line values override those read from `--config`.
#[derive(Args, Debug, Default)]
struct Options {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge-list path or `gen:<complete|path|cycle|star>:<N>`.
    #[arg(long)]
    graph: Option<String>,
    /// `zero`, `normal:<sigma>`, `values:<v1,v2,...>` or a file of numbers.
    #[arg(long)]
    omega: Option<String>,
    /// Coupling `<val>` or range `<lo>:<hi>[:<steps>]`.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; results go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RK4 step.
    #[arg(long)]
    h: Option<f64>,
    /// Integration horizon; defaults to 50·N/(K·λ₂).
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Record every n-th step in traces.
    #[arg(long = "record-every")]
    record_every: Option<usize>,
    /// Initial phases: `random` (uniform in ±π/4) or `zero`.
    #[arg(long)]
    theta0: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads for sweeps and threshold grids.
    #[arg(long)]
    jobs: Option<usize>,
    /// Bisection width for `threshold`.
    #[arg(long = "tol-k")]
    tol_k: Option<f64>,
    /// Samples for the weighted-pseudoinverse norm estimate.
    #[arg(long = "infnorm-samples")]
    infnorm_samples: Option<usize>,
    /// Stdout format for tabular results: `json` or `csv`.
    #[arg(long)]
    format: Option<String>,
}

impl Options {
    fn raw(&self) -> Result<RawConfig, Failure> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::from_file(path)?,
            None => RawConfig::default(),
        };
        let overrides: [(&str, Option<String>); 14] = [
            ("graph", self.graph.clone()),
            ("omega", self.omega.clone()),
            ("k", self.k.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("h", self.h.map(|v| v.to_string())),
            ("t_end", self.t_end.map(|v| v.to_string())),
            ("record_every", self.record_every.map(|v| v.to_string())),
            ("theta0", self.theta0.clone()),
            ("replicates", self.replicates.map(|v| v.to_string())),
            ("jobs", self.jobs.map(|v| v.to_string())),
            ("tol_k", self.tol_k.map(|v| v.to_string())),
            ("infnorm_samples", self.infnorm_samples.map(|v| v.to_string())),
            ("format", self.format.clone()),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                raw.set(key, v);
            }
        }
        Ok(raw)
    }
}

type Handler = fn(&config::ExperimentConfig) -> Result<(), Failure>;

fn run(cli: Cli) -> Result<(), Failure> {
    let (command, options): (Handler, &Options) = match &cli.command {
        Command::Simulate(o) => (commands::simulate, o),
        Command::Bounds(o) => (commands::bounds, o),
        Command::Fixedpoint(o) => (commands::fixedpoint, o),
        Command::Threshold(o) => (commands::threshold, o),
        Command::Spectrum(o) => (commands::spectrum_cmd, o),
        Command::Sweep(o) => (commands::sweep, o),
    };
    let cfg = options.raw()?.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Failure::config(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    pool.install(|| command(&cfg))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kuramoto: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
