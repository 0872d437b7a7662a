use std::path::{Path, PathBuf};

use clap::Args;
use g2t_core::TreeFormat;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Settings that shape every artifact. Serialized verbatim into each
/// output file's provenance block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<String>,
    pub sample_size: usize,
    pub order: usize,
    pub alpha: f64,
    pub temperature: f64,
    pub gen_count: usize,
    pub seed: Option<u64>,
    pub constrained: bool,
    pub schema_only: bool,
    pub format: TreeFormat,
    pub atom_budget: usize,
    pub fraction_min: f64,
    pub fraction_max: f64,
    pub max_len: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            sample_size: 5000,
            order: 4,
            alpha: 0.01,
            temperature: 1.0,
            gen_count: 1000,
            seed: None,
            constrained: true,
            schema_only: false,
            format: TreeFormat::Json,
            atom_budget: g2t_core::constrain::DEFAULT_ATOM_BUDGET,
            fraction_min: 0.05,
            fraction_max: 0.5,
            max_len: 4096,
        }
    }
}

/// Partial config as read from a TOML file; absent keys keep defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    dataset: Option<String>,
    sample_size: Option<usize>,
    order: Option<usize>,
    alpha: Option<f64>,
    temperature: Option<f64>,
    gen_count: Option<usize>,
    seed: Option<u64>,
    constrained: Option<bool>,
    schema_only: Option<bool>,
    format: Option<TreeFormat>,
    atom_budget: Option<usize>,
    fraction_min: Option<f64>,
    fraction_max: Option<f64>,
    max_len: Option<usize>,
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with RunConfig keys; flags take precedence.
    #[arg(long, value_name = "FILE", global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Molecules sampled from the corpus at ingest.
    #[arg(long, global = true)]
    pub sample_size: Option<usize>,
    /// n-gram order k.
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Add-alpha smoothing constant.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    /// Number of molecules to generate.
    #[arg(long = "n", global = true)]
    pub gen_count: Option<usize>,
    /// Mask sampling with the full token automaton (default).
    #[arg(long, global = true, overrides_with = "unconstrained")]
    pub constrained: bool,
    /// Sample from the model alone.
    #[arg(long, global = true, overrides_with = "constrained")]
    pub unconstrained: bool,
    /// Keep grammar constraints but drop valence and ring-closure checks.
    #[arg(long, global = true)]
    pub schema_only: bool,
    #[arg(long, global = true, value_parser = parse_format)]
    pub format: Option<TreeFormat>,
    #[arg(long, global = true)]
    pub atom_budget: Option<usize>,
    #[arg(long, global = true)]
    pub fraction_min: Option<f64>,
    #[arg(long, global = true)]
    pub fraction_max: Option<f64>,
    /// Token cap for unconstrained sampling.
    #[arg(long, global = true)]
    pub max_len: Option<usize>,
    /// Worker threads for batch stages (does not affect outputs).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

fn parse_format(s: &str) -> std::result::Result<TreeFormat, String> {
    s.parse()
}

impl ConfigArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self, dataset: Option<&Path>) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let file: ConfigFile =
                toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            macro_rules! take {
                ($($f:ident),*) => { $( if let Some(v) = file.$f { cfg.$f = v; } )* };
            }
            take!(
                sample_size,
                order,
                alpha,
                temperature,
                gen_count,
                constrained,
                schema_only,
                format,
                atom_budget,
                fraction_min,
                fraction_max,
                max_len
            );
            cfg.dataset = file.dataset.or(cfg.dataset);
            cfg.seed = file.seed.or(cfg.seed);
        }
        macro_rules! flag {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        flag!(
            sample_size,
            order,
            alpha,
            temperature,
            gen_count,
            format,
            atom_budget,
            fraction_min,
            fraction_max,
            max_len
        );
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if self.constrained {
            cfg.constrained = true;
        }
        if self.unconstrained {
            cfg.constrained = false;
        }
        if self.schema_only {
            cfg.schema_only = true;
        }
        if let Some(d) = dataset {
            cfg.dataset = Some(d.display().to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sample_size", self.sample_size),
            ("gen_count", self.gen_count),
            ("atom_budget", self.atom_budget),
            ("max_len", self.max_len),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(CliError::config(format!("{name} must be positive")));
            }
        }
        if !(2..=g2t_core::genmodel::MAX_ORDER).contains(&self.order) {
            return Err(CliError::config(format!("order must be in 2..={}", g2t_core::genmodel::MAX_ORDER)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(CliError::config("alpha must be positive"));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(CliError::config("temperature must be positive"));
        }
        if !(0.0 <= self.fraction_min && self.fraction_min <= self.fraction_max && self.fraction_max <= 1.0) {
            return Err(CliError::config("need 0 <= fraction_min <= fraction_max <= 1"));
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| CliError::config("--seed is required for this command"))
    }
}
