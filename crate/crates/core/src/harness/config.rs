//! Experiment configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{default_zeta, KernelKind};

/// Registered experiment names.
pub const EXPERIMENTS: [&str; 11] = [
    "duality-median",
    "quantile-table",
    "mesh-compare",
    "annulus-ratio",
    "exit-time-scaling",
    "lqg-moments",
    "identity-suite",
    "walk-consistency",
    "sample-field",
    "resistance",
    "walk-trace",
];

/// Mesh multiplier per scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZetaRule {
    /// `"ceil-sqrt-n"`.
    Named(String),
    /// One value for every scale, or one per entry of `n_list`.
    Explicit(Vec<u32>),
}

impl Default for ZetaRule {
    fn default() -> Self {
        ZetaRule::Named("ceil-sqrt-n".into())
    }
}

/// Geometry of the experiments; lengths are in units of the unit box unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Geometry {
    /// Self-dual rectangle height in cells; overrides `height` when set.
    pub k: Option<u32>,
    /// Self-dual rectangle height.
    pub height: f64,
    /// Half-height of the mesh-comparison box.
    pub half_height: f64,
    /// Width to height ratio of the mesh-comparison box.
    pub aspect: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    /// Half-side of the exit-time domain.
    pub box_radius: f64,
    /// Half-side of the walk-consistency domain.
    pub walk_radius: f64,
    /// Half-sides of the boxes whose measures are reported.
    pub lqg_radii: Vec<f64>,
    /// Mesh multipliers compared by mesh-compare.
    pub mesh_zetas: Vec<u32>,
    /// Probabilities for quantile tables.
    pub p_list: Vec<f64>,
    /// Roughness values for the identity suite.
    pub gamma_list: Vec<f64>,
    /// Walks per environment for Monte Carlo moments.
    pub walk_samples: u64,
    /// Walks per environment for exit measures.
    pub measure_samples: u64,
    /// Resampling points for curve distances.
    pub resolution: usize,
    /// Moment order for the negative moment.
    pub negative_moment: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            k: None,
            height: 0.25,
            half_height: 0.25,
            aspect: 1.0,
            r_inner: 0.125,
            r_outer: 0.25,
            box_radius: 1.0,
            walk_radius: 0.25,
            lqg_radii: vec![0.25, 0.0625],
            mesh_zetas: vec![2, 3],
            p_list: vec![0.25],
            gamma_list: vec![0.0, 0.2],
            walk_samples: 10_000,
            measure_samples: 100_000,
            resolution: 512,
            negative_moment: 0.1,
        }
    }
}

/// Pass/fail thresholds for the statistical and bounded-range assertions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Half-width of the accepted band around 1/2 for `P(R ≤ 1)`.
    pub median_band: f64,
    /// Standard errors allowed between Monte Carlo and exact values.
    pub se_multiple: f64,
    pub lambda_max: f64,
    pub mesh_quantile: f64,
    pub mesh_bound: f64,
    pub exit_range: f64,
    /// Total variation bound; `None` uses three times the statistical scale.
    pub total_variation: Option<f64>,
    /// Allowed factor between moment ratios at box scales two apart.
    pub moment_factor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            median_band: 0.03,
            se_multiple: 4.0,
            lambda_max: 5.0,
            mesh_quantile: 0.9,
            mesh_bound: 1.0,
            exit_range: 1.5,
            total_variation: None,
            moment_factor: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub n_list: Vec<u32>,
    pub zeta_rule: ZetaRule,
    /// Permits `ζ < ⌈√n⌉`.
    pub allow_small_zeta: bool,
    pub gamma: f64,
    pub replicas: u64,
    pub seed: u64,
    pub tol: f64,
    pub output_dir: PathBuf,
    pub kernel: KernelKind,
    pub geometry: Geometry,
    pub thresholds: Thresholds,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: String::new(),
            n_list: vec![2, 3, 4, 5, 6],
            zeta_rule: ZetaRule::default(),
            allow_small_zeta: false,
            gamma: 0.2,
            replicas: 500,
            seed: 1,
            tol: 1e-10,
            output_dir: PathBuf::from("out"),
            kernel: KernelKind::FullHeatKernel,
            geometry: Geometry::default(),
            thresholds: Thresholds::default(),
        }
    }
}

impl ExperimentConfig {
    /// Defaults for a registered experiment.
    pub fn for_experiment(name: &str) -> Result<Self> {
        if !EXPERIMENTS.contains(&name) {
            return Err(Error::Config(format!("unknown experiment '{name}'")));
        }
        let mut c = ExperimentConfig { experiment: name.into(), ..Default::default() };
        match name {
            "duality-median" => {
                c.n_list = vec![4];
                c.geometry.k = Some(8);
                c.replicas = 2000;
            }
            "quantile-table" => c.n_list = vec![3, 4, 5, 6],
            "mesh-compare" => c.n_list = vec![4],
            "annulus-ratio" => c.n_list = vec![3, 4, 5],
            "exit-time-scaling" => {
                c.n_list = vec![3, 4, 5, 6];
                c.replicas = 20;
            }
            "lqg-moments" => {
                c.n_list = vec![3, 4, 5];
                c.gamma = 0.3;
                c.replicas = 10_000;
            }
            "identity-suite" => {
                c.n_list = vec![2, 3, 4];
                c.replicas = 34;
            }
            "walk-consistency" => {
                c.n_list = vec![3, 4];
                c.replicas = 10;
            }
            "sample-field" | "resistance" | "walk-trace" => {
                c.n_list = vec![4];
                c.replicas = 1;
            }
            _ => {}
        }
        Ok(c)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        ExperimentConfig::from_toml_for(text, None)
    }

    /// Parses `text`; `experiment` fills or must match the file's `experiment` key.
    pub fn from_toml_for(text: &str, experiment: Option<&str>) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        match (table.get("experiment").and_then(|v| v.as_str()), experiment) {
            (Some(a), Some(b)) if a != b => return Err(Error::Config(format!("config is for '{a}', not '{b}'"))),
            (None, Some(b)) => {
                table.insert("experiment".into(), b.into());
            }
            (None, None) => return Err(Error::Config("config names no experiment".into())),
            _ => {}
        }
        let name = table["experiment"].as_str().ok_or_else(|| Error::Config("experiment must be a string".into()))?.to_string();
        let base = ExperimentConfig::for_experiment(&name)?;
        // registry defaults fill what the file leaves out
        let mut merged = toml::Table::try_from(&base).map_err(|e| Error::Parse(e.to_string()))?;
        merge(&mut merged, table);
        let c: ExperimentConfig = merged.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path, experiment: Option<&str>) -> Result<Self> {
        ExperimentConfig::from_toml_for(&std::fs::read_to_string(path)?, experiment)
    }

    /// Mesh multiplier for `n_list[i]`.
    pub fn zeta(&self, i: usize) -> Result<u32> {
        let n = *self.n_list.get(i).ok_or_else(|| Error::Config(format!("no scale at position {i}")))?;
        match &self.zeta_rule {
            ZetaRule::Named(s) if s == "ceil-sqrt-n" => Ok(default_zeta(n)),
            ZetaRule::Named(s) => Err(Error::Config(format!("unknown zeta rule '{s}'"))),
            ZetaRule::Explicit(v) if v.len() == 1 => Ok(v[0]),
            ZetaRule::Explicit(v) => v.get(i).copied().ok_or_else(|| Error::Config("zeta list shorter than n_list".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return bad(format!("unknown experiment '{}'", self.experiment));
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n == 0 || n > 12) {
            return bad("n_list must hold scales in 1..=12".into());
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma = {} must be finite and non-negative", self.gamma));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-6) {
            return bad(format!("tol = {} outside (0, 1e-6]", self.tol));
        }
        if let ZetaRule::Explicit(v) = &self.zeta_rule {
            if v.is_empty() || (v.len() != 1 && v.len() != self.n_list.len()) {
                return bad("zeta list must hold one value or one per scale".into());
            }
        }
        for i in 0..self.n_list.len() {
            let z = self.zeta(i)?;
            if z == 0 {
                return bad("zeta must be positive".into());
            }
            if !self.allow_small_zeta && z < default_zeta(self.n_list[i]) {
                return bad(format!("zeta = {z} below ceil(sqrt({})) without allow_small_zeta", self.n_list[i]));
            }
        }
        let g = &self.geometry;
        let lengths = [g.height, g.half_height, g.aspect, g.r_inner, g.r_outer, g.box_radius, g.walk_radius];
        if lengths.iter().any(|&x| !(x > 0.0 && x.is_finite())) || g.lqg_radii.iter().any(|&x| !(x > 0.0)) {
            return bad("geometry lengths must be positive".into());
        }
        if g.k == Some(0) {
            return bad("k must be positive".into());
        }
        if g.r_inner >= g.r_outer {
            return bad("r_inner must be below r_outer".into());
        }
        if g.p_list.iter().any(|&p| !(p > 0.0 && p < 0.5)) {
            return bad("probabilities must lie in (0, 1/2)".into());
        }
        if g.mesh_zetas.len() < 2 || g.mesh_zetas.contains(&0) {
            return bad("mesh_zetas needs at least two positive values".into());
        }
        if g.walk_samples == 0 || g.measure_samples == 0 || g.resolution < 2 {
            return bad("walk sample counts must be positive and resolution at least 2".into());
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for name in EXPERIMENTS {
            ExperimentConfig::for_experiment(name).unwrap().validate().unwrap();
        }
        assert!(ExperimentConfig::for_experiment("nope").is_err());
    }

    #[test]
    fn file_values_override_registry_defaults() {
        let c = ExperimentConfig::from_toml_str(
            "experiment = \"duality-median\"\nreplicas = 10\n[geometry]\nk = 4\n[thresholds]\nmedian_band = 0.1\n",
        )
        .unwrap();
        assert_eq!(c.replicas, 10);
        assert_eq!(c.n_list, vec![4]);
        assert_eq!(c.geometry.k, Some(4));
        assert_eq!(c.geometry.height, 0.25);
        assert_eq!(c.thresholds.median_band, 0.1);
    }

    #[test]
    fn rejects_invalid_settings() {
        let e = |s: &str| ExperimentConfig::from_toml_str(s).unwrap_err();
        assert!(matches!(e("experiment = \"resistance\"\nreplicas = 0\n"), Error::Config(_)));
        assert!(matches!(e("experiment = \"resistance\"\nzeta_rule = [1]\nn_list = [4]\n"), Error::Config(_)));
        assert!(matches!(e("experiment = \"resistance\"\nbogus = 1\n"), Error::Parse(_)));
        assert!(matches!(e("experiment = \"nothing\"\n"), Error::Config(_)));
        let ok = ExperimentConfig::from_toml_str("experiment = \"resistance\"\nzeta_rule = [1]\nn_list = [4]\nallow_small_zeta = true\n");
        assert!(ok.is_ok());
    }

    #[test]
    fn zeta_rules() {
        let mut c = ExperimentConfig::for_experiment("quantile-table").unwrap();
        assert_eq!((0..4).map(|i| c.zeta(i).unwrap()).collect::<Vec<_>>(), vec![2, 2, 3, 3]);
        c.zeta_rule = ZetaRule::Explicit(vec![4]);
        assert_eq!(c.zeta(3).unwrap(), 4);
        c.zeta_rule = ZetaRule::Explicit(vec![2, 3, 4, 5]);
        assert_eq!(c.zeta(2).unwrap(), 4);
    }
}
