//! Seeded, replica-parallel experiments with JSON, CSV and plot-data output.

mod config;
mod experiments;
mod stats;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::field::io::write_sample;
use crate::field::{sample_field, FieldSample, GridSpec, KernelKind, KernelSpec, LatticeBox};
use crate::network::{build_network, Network};
use crate::rng::mix64;

pub use config::{ExperimentConfig, Geometry, Thresholds, ZetaRule, EXPERIMENTS};
pub use stats::{
    binomial_ci, bootstrap_ci, estimate_quantiles, mean_sd_se, ols_slope, quantile_lower, quantile_table, QuantileRow,
    QuantileTable, BOOTSTRAP_RESAMPLES, Z95,
};

/// One line of `detail.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetailRow {
    pub experiment: String,
    pub n: u32,
    pub zeta: u32,
    pub gamma: f64,
    pub replica: u64,
    pub stat: String,
    pub value: f64,
    pub seed: u64,
}

/// A checked claim; only hard assertions decide the exit status.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub hard: bool,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub sample_size: Option<u64>,
    pub ci: Option<[f64; 2]>,
    pub detail: String,
}

impl Assertion {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: impl Into<String>, hard: bool, value: f64, threshold: f64) -> Self {
        Assertion {
            name: name.into(),
            hard,
            passed: value <= threshold,
            value,
            threshold,
            sample_size: None,
            ci: None,
            detail: String::new(),
        }
    }

    pub fn with_samples(mut self, n: u64) -> Self {
        self.sample_size = Some(n);
        self
    }

    pub fn with_ci(mut self, ci: [f64; 2]) -> Self {
        self.ci = Some(ci);
        self
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

/// Two-column plot data.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub name: String,
    pub columns: [String; 2],
    pub points: Vec<(f64, f64)>,
}

/// Extra output files.
#[derive(Debug, Clone)]
pub enum Artifact {
    /// Written as `<stem>.toml` and `<stem>.f64`.
    Field(String, FieldSample),
    Text(String, String),
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub summary: Map<String, Value>,
    pub assertions: Vec<Assertion>,
    pub rows: Vec<DetailRow>,
    pub plots: Vec<PlotData>,
    pub artifacts: Vec<Artifact>,
}

impl ExperimentReport {
    fn new(config: &ExperimentConfig) -> Self {
        ExperimentReport {
            config: config.clone(),
            summary: Map::new(),
            assertions: Vec::new(),
            rows: Vec::new(),
            plots: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    /// True when every hard assertion passed.
    pub fn passed(&self) -> bool {
        self.assertions.iter().filter(|a| a.hard).all(|a| a.passed)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    /// Values of `stat` at scale `n`, in replica order.
    pub fn values(&self, n: u32, stat: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.n == n && r.stat == stat).map(|r| r.value).collect()
    }

    fn row(&mut self, n: u32, zeta: u32, gamma: f64, replica: u64, stat: impl Into<String>, value: f64, seed: u64) {
        self.rows.push(DetailRow {
            experiment: self.config.experiment.clone(),
            n,
            zeta,
            gamma,
            replica,
            stat: stat.into(),
            value,
            seed,
        });
    }

    fn assert(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    fn plot(&mut self, name: &str, x: &str, y: &str, points: Vec<(f64, f64)>) {
        self.plots.push(PlotData { name: name.into(), columns: [x.into(), y.into()], points });
    }

    pub fn to_json(&self) -> Value {
        json!({
            "experiment": self.config.experiment,
            "status": if self.passed() { "pass" } else { "fail" },
            "config": self.config,
            "summary": self.summary,
            "assertions": self.assertions,
            "environment": {
                "version": env!("CARGO_PKG_VERSION"),
                "threads": rayon::current_num_threads(),
                "os": std::env::consts::OS,
                "arch": std::env::consts::ARCH,
            },
        })
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "experiment,n,zeta,gamma,replica,stat,value,seed")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{},{},{},{}", r.experiment, r.n, r.zeta, r.gamma, r.replica, r.stat, r.value, r.seed)?;
        }
        Ok(())
    }

    /// Writes `report.json`, `detail.csv`, one `.dat` file per plot and the artifacts into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(&self.to_json()).map_err(|e| Error::Data(e.to_string()))?;
        fs::write(dir.join("report.json"), json + "\n")?;
        let mut w = BufWriter::new(fs::File::create(dir.join("detail.csv"))?);
        self.write_csv(&mut w)?;
        w.flush()?;
        for p in &self.plots {
            let mut w = BufWriter::new(fs::File::create(dir.join(format!("{}.dat", p.name)))?);
            writeln!(w, "# {} {}", p.columns[0], p.columns[1])?;
            for (x, y) in &p.points {
                writeln!(w, "{x} {y}")?;
            }
            w.flush()?;
        }
        for a in &self.artifacts {
            match a {
                Artifact::Field(stem, sample) => write_sample(sample, &dir.join(stem))?,
                Artifact::Text(name, text) => fs::write(dir.join(name), text)?,
            }
        }
        Ok(())
    }
}

/// Runs the configured experiment and returns its report without writing files.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut report = ExperimentReport::new(config);
    match config.experiment.as_str() {
        "duality-median" => experiments::duality_median(&mut report)?,
        "quantile-table" => experiments::quantile_table(&mut report)?,
        "mesh-compare" => experiments::mesh_compare(&mut report)?,
        "annulus-ratio" => experiments::annulus_ratio(&mut report)?,
        "exit-time-scaling" => experiments::exit_time_scaling(&mut report)?,
        "lqg-moments" => experiments::lqg_moments(&mut report)?,
        "identity-suite" => experiments::identity_suite(&mut report)?,
        "walk-consistency" => experiments::walk_consistency(&mut report)?,
        "sample-field" => experiments::sample_fields(&mut report)?,
        "resistance" => experiments::resistances(&mut report)?,
        "walk-trace" => experiments::walk_trace(&mut report)?,
        other => return Err(Error::Config(format!("unknown experiment '{other}'"))),
    }
    Ok(report)
}

/// Runs the experiment and writes its outputs to `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let report = run(config)?;
    report.write(&config.output_dir)?;
    Ok(report)
}

/// Seed of replica `r`'s field; shared by every scale and mesh so that runs are coupled.
pub fn field_seed(config: &ExperimentConfig, replica: u64) -> u64 {
    mix64(config.seed, replica)
}

/// Lattice spacings covering `length` at scale `n`, mesh `zeta`.
pub fn cells(length: f64, n: u32, zeta: u32) -> Result<i64> {
    let c = (length * f64::from(zeta) * 2f64.powi(n as i32)).round() as i64;
    if c < 1 {
        return Err(Error::Config(format!("length {length} is below one lattice spacing at n = {n}, zeta = {zeta}")));
    }
    Ok(c)
}

fn kernel(config: &ExperimentConfig, n: u32) -> Result<KernelSpec> {
    match config.kernel {
        KernelKind::FullHeatKernel => KernelSpec::full(0, n),
        KernelKind::Truncated => KernelSpec::truncated(0, n),
    }
}

/// Field sample on `bounds` and the network it induces.
pub fn environment(config: &ExperimentConfig, n: u32, zeta: u32, bounds: LatticeBox, gamma: f64, seed: u64) -> Result<(FieldSample, Network)> {
    let grid = GridSpec::new(n, zeta, bounds)?;
    let sample = sample_field(&grid, &kernel(config, n)?, seed, false)?;
    let net = build_network(&sample, gamma, bounds)?;
    Ok((sample, net))
}

/// Applies `f` to every replica in parallel; failures are reported together with their indices.
pub fn par_replicas<T: Send>(count: u64, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = (0..count).into_par_iter().map(&f).collect();
    let mut out = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(e) => failures.push(format!("replica {i}: {e}")),
        }
    }
    if failures.is_empty() {
        Ok(out)
    } else {
        let count = failures.len();
        failures.truncate(5);
        Err(Error::Replicas { count, detail: failures.join("; ") })
    }
}

#[cfg(test)]
mod tests;
