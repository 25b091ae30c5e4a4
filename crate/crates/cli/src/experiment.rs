//! Sweep and scaling study files.

use std::path::{Path, PathBuf};

use neuropt_core::runtime::{RunConfig, SCALING_REPS};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// How much each run of a sweep writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Logging {
    /// `summary.json` only.
    #[default]
    Summary,
    /// Adds `trace.csv` and `spikes.csv`.
    Trace,
    /// Adds per-step core states in `states.csv`.
    FullState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[serde(alias = "lin")]
    NeuroptLin,
    #[serde(alias = "izh")]
    NeuroptIzh,
    #[serde(alias = "hyb")]
    NeuroptHyb,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::NeuroptLin => "neuropt-lin",
            Preset::NeuroptIzh => "neuropt-izh",
            Preset::NeuroptHyb => "neuropt-hyb",
        }
    }

    pub fn config(self, function: &str, dimension: usize, seed: u64) -> RunConfig {
        match self {
            Preset::NeuroptLin => RunConfig::neuropt_lin(function, dimension, seed),
            Preset::NeuroptIzh => RunConfig::neuropt_izh(function, dimension, seed),
            Preset::NeuroptHyb => RunConfig::neuropt_hyb(function, dimension, seed),
        }
    }
}

/// A variant is a named preset or a full template configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Variant {
    Preset(Preset),
    Custom { name: String, config: Box<RunConfig> },
}

impl Variant {
    pub fn name(&self) -> &str {
        match self {
            Variant::Preset(p) => p.name(),
            Variant::Custom { name, .. } => name,
        }
    }

    /// The template with problem and seeds replaced. The problem instance
    /// follows the run seed, as in the presets.
    pub fn instantiate(&self, function: &str, dimension: usize, seed: u64) -> RunConfig {
        match self {
            Variant::Preset(p) => p.config(function, dimension, seed),
            Variant::Custom { config, .. } => {
                let mut cfg = (**config).clone();
                cfg.problem.function = function.to_string();
                cfg.problem.dimension = dimension;
                cfg.problem.shift_seed = seed;
                cfg.seed = seed;
                cfg
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub functions: Vec<String>,
    pub dimensions: Vec<usize>,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    #[serde(default)]
    pub logging: Logging,
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub variant: String,
    pub config: RunConfig,
    pub dir: PathBuf,
}

impl ExperimentSpec {
    /// The cartesian product of functions, dimensions, variants and seeds,
    /// each checked to resolve.
    pub fn expand(&self) -> Result<Vec<SweepRun>, CliError> {
        for (what, empty) in [
            ("functions", self.functions.is_empty()),
            ("dimensions", self.dimensions.is_empty()),
            ("variants", self.variants.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ] {
            if empty {
                return Err(CliError::Config(format!("sweep lists no {what}")));
            }
        }
        let mut runs = Vec::new();
        for variant in &self.variants {
            for function in &self.functions {
                for &d in &self.dimensions {
                    for &seed in &self.seeds {
                        let mut config = variant.instantiate(function, d, seed);
                        config.record_states = self.logging == Logging::FullState;
                        config
                            .resolve()
                            .map_err(|e| CliError::Config(format!("{} {function} d={d} seed={seed}: {e}", variant.name())))?;
                        let dir = self
                            .out
                            .join(variant.name())
                            .join(function)
                            .join(format!("d{d}"))
                            .join(format!("seed{seed}"));
                        runs.push(SweepRun {
                            variant: variant.name().to_string(),
                            config,
                            dir,
                        });
                    }
                }
            }
        }
        Ok(runs)
    }
}

fn default_reps() -> usize {
    SCALING_REPS
}

fn default_steps() -> u64 {
    100
}

fn default_out() -> PathBuf {
    PathBuf::from(".")
}

/// Timing study over population sizes and dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSpec {
    /// Template; size, dimension, budget and seed are replaced per run.
    pub base: RunConfig,
    pub units: Vec<usize>,
    pub dimensions: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_steps")]
    pub steps: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl ScaleSpec {
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.units
            .iter()
            .flat_map(|&n| self.dimensions.iter().map(move |&d| (n, d)))
            .collect()
    }
}

/// Reads a JSON document; any failure is a configuration error.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(variants: &str) -> ExperimentSpec {
        serde_json::from_str(&format!(
            r#"{{"functions": ["sphere", "rastrigin"], "dimensions": [2, 3], "variants": {variants},
                "seeds": [1, 2, 3], "out": "sweep", "logging": "trace"}}"#
        ))
        .unwrap()
    }

    #[test]
    fn product_of_all_axes() {
        let runs = spec(r#"["lin", "neuropt-hyb"]"#).expand().unwrap();
        assert_eq!(runs.len(), 2 * 2 * 2 * 3);
        assert_eq!(runs[0].dir, PathBuf::from("sweep/neuropt-lin/sphere/d2/seed1"));
        assert!(runs[23].config.hybrid.is_some());
        assert_eq!(runs[23].config.seed, 3);
        assert_eq!(runs[23].config.problem.dimension, 3);
    }

    #[test]
    fn custom_variants_keep_their_template() {
        let mut template = RunConfig::neuropt_lin("sphere", 2, 0);
        template.units = 12;
        let v = serde_json::json!([{ "name": "small", "config": template }]);
        let runs = spec(&v.to_string()).expand().unwrap();
        assert!(runs.iter().all(|r| r.config.units == 12 && r.variant == "small"));
        assert_eq!(runs[6].config.problem.function, "rastrigin");
    }

    #[test]
    fn invalid_cells_are_rejected_up_front() {
        let mut s = spec(r#"["lin"]"#);
        s.functions.push("nope".into());
        assert!(matches!(s.expand(), Err(CliError::Config(_))));
        s.functions.clear();
        assert!(matches!(s.expand(), Err(CliError::Config(_))));
    }

    #[test]
    fn logging_names() {
        let l: Logging = serde_json::from_str("\"full-state\"").unwrap();
        assert_eq!(l, Logging::FullState);
    }

    #[test]
    fn scale_defaults() {
        let s: ScaleSpec = serde_json::from_value(serde_json::json!({
            "base": RunConfig::neuropt_lin("sphere", 2, 0),
            "units": [30, 60],
            "dimensions": [2, 10],
        }))
        .unwrap();
        assert_eq!(s.reps, SCALING_REPS);
        assert_eq!(s.cells(), vec![(30, 2), (30, 10), (60, 2), (60, 10)]);
    }
}
