use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rowstoch_cli::commands::{cmd_plot, cmd_run, cmd_spectral, cmd_sweep, SweepSpec};
use rowstoch_cli::verify::{cmd_verify, VerifyOptions};
use rowstoch_cli::{Algorithm, CliError, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "rowstoch", version, about = "Distributed optimization over directed graphs with row-stochastic weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment; writes trace.csv and summary.json.
    Run(Common),
    /// Run several (algorithm, step) series; writes per-series traces and comparison.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated constant step sizes.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        alphas: Vec<f64>,
        /// Comma-separated algorithms.
        #[arg(long, value_delimiter = ',', default_value = "proposed,subgradient_push")]
        algorithms: Vec<Algorithm>,
        /// Comma-separated diminishing-step constants for subgradient_push.
        #[arg(long, value_delimiter = ',')]
        push_steps: Vec<f64>,
        /// Also write comparison.svg.
        #[arg(long)]
        plot: bool,
    },
    /// Check every invariant on the configuration; writes verify.json.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Scale the weight matrix by 1.1 before checking.
        #[arg(long)]
        corrupt_weights: bool,
    },
    /// Print network constants and the step-size bound as JSON.
    Spectral(Common),
    /// Render trace CSVs as a log-scale SVG (plot.svg in --out).
    Plot {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset: paper-logistic (default) or quadratic.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Diminishing-step constant for subgradient_push.
    #[arg(long)]
    push_step: Option<f64>,
    /// Data-generation seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::preset(self.preset.as_deref().unwrap_or("paper-logistic"))?,
        };
        if let Some(a) = self.algorithm {
            config.algorithm = a;
        }
        if let Some(a) = self.alpha {
            config.alpha = a;
        }
        if let Some(a) = self.push_step {
            config.push_step = a;
        }
        if let Some(seed) = self.seed {
            config.set_seed(seed);
        }
        if let Some(m) = self.max_iters {
            config.max_iters = m;
        }
        if let Some(r) = self.record_every {
            config.record_every = r;
        }
        if let Some(out) = &self.out {
            config.out = out.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn dispatch(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Run(common) => {
            let config = common.resolve()?;
            let summary = cmd_run(&config)?;
            let f = &summary.final_record;
            println!(
                "{} alpha={} k={} residual={:e} relative={:e}",
                summary.algorithm, summary.step, f.k, f.residual2, summary.relative_residual
            );
            match (&summary.rate, &summary.rate_error) {
                (Some(r), _) => println!("rate: mu_hat={} M_hat={} r^2={}", r.mu_hat, r.m_hat, r.r_squared),
                (None, Some(e)) => println!("rate: {e}"),
                _ => {}
            }
            println!("wrote {}", config.out.display());
        }
        Command::Sweep { common, alphas, algorithms, push_steps, plot } => {
            let base = common.resolve()?;
            let report = cmd_sweep(&SweepSpec { base, algorithms, alphas, push_steps, plot })?;
            for s in &report.series {
                match &s.error {
                    None => println!("{:<32} final={:e}", s.label, s.final_residual.unwrap_or(f64::NAN)),
                    Some(e) => println!("{:<32} FAILED: {e}", s.label),
                }
            }
            println!("wrote {}", report.comparison.display());
        }
        Command::Verify { common, corrupt_weights } => {
            let config = common.resolve()?;
            let report = cmd_verify(&config, &VerifyOptions { corrupt_weights, probe_seed: 0 })?;
            for line in report.summary_lines() {
                println!("{line}");
            }
            if let Some(e) = &report.empirical_step {
                println!("empirical step (doubling search, not guaranteed): {:e}", e.alpha);
            }
            if !report.passed {
                eprintln!("failed checks: {}", report.failed.join(", "));
                return Ok(ExitCode::from(1));
            }
        }
        Command::Spectral(common) => {
            let config = common.resolve()?;
            print_json(&cmd_spectral(&config)?)?;
        }
        Command::Plot { traces, out } => {
            let path = cmd_plot(&traces, &out)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rowstoch: {e}");
            ExitCode::from(2)
        }
    }
}
