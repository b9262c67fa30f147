use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gffwalk::harness::{run_experiment, ExperimentConfig};
use gffwalk::{Error, Result};

#[derive(Parser)]
#[command(name = "gffwalk", version, about = "Seeded experiments on exponentiated Gaussian free field networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file with experiment settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Linear solver tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Field coupling constant.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Comma-separated scales.
    #[arg(long, global = true, value_delimiter = ',')]
    n: Option<Vec<u32>>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    SampleField,
    Resistance,
    DualityCheck,
    Quantiles,
    MeshCompare,
    AnnulusRatio,
    ExitTime,
    LqgMoments,
    IdentitySuite,
    WalkTrace,
    WalkConsistency,
}

impl Command {
    fn experiment(self) -> &'static str {
        match self {
            Command::SampleField => "sample-field",
            Command::Resistance => "resistance",
            Command::DualityCheck => "duality-median",
            Command::Quantiles => "quantile-table",
            Command::MeshCompare => "mesh-compare",
            Command::AnnulusRatio => "annulus-ratio",
            Command::ExitTime => "exit-time-scaling",
            Command::LqgMoments => "lqg-moments",
            Command::IdentitySuite => "identity-suite",
            Command::WalkTrace => "walk-trace",
            Command::WalkConsistency => "walk-consistency",
        }
    }

    /// Experiments whose outcome depends on γ being below an unspecified threshold.
    fn needs_gamma(self) -> bool {
        matches!(
            self,
            Command::DualityCheck | Command::Quantiles | Command::MeshCompare | Command::AnnulusRatio | Command::ExitTime
        )
    }
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    let name = cli.command.experiment();
    let (mut c, file_gamma) = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let table: toml::Table = toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            (ExperimentConfig::from_toml_for(&text, Some(name))?, table.contains_key("gamma"))
        }
        None => (ExperimentConfig::for_experiment(name)?, false),
    };
    if cli.command.needs_gamma() && cli.gamma.is_none() && !file_gamma {
        return Err(Error::Config(format!("{name} requires gamma via --gamma or the config file")));
    }
    if let Some(v) = cli.seed {
        c.seed = v;
    }
    if let Some(v) = cli.replicas {
        c.replicas = v;
    }
    if let Some(v) = &cli.out {
        c.output_dir = v.clone();
    }
    if let Some(v) = cli.tol {
        c.tol = v;
    }
    if let Some(v) = cli.gamma {
        c.gamma = v;
    }
    if let Some(v) = &cli.n {
        c.n_list = v.clone();
    }
    c.validate()?;
    Ok(c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let c = match config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if c.gamma > 0.5 {
        eprintln!("warning: gamma = {} is above 0.5; tightness is only expected for small gamma", c.gamma);
    }
    match run_experiment(&c) {
        Ok(report) => {
            for a in &report.assertions {
                let kind = if a.hard { "hard" } else { "stat" };
                let verdict = if a.passed { "pass" } else { "FAIL" };
                println!("{verdict} [{kind}] {}: {:.4e} (threshold {:.4e})", a.name, a.value, a.threshold);
            }
            println!("wrote {}", c.output_dir.display());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
