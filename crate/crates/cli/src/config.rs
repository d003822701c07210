//! Experiment configuration: defaults, `key = value` files and command-line
//! overrides, applied in that order.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use qtransition::Experiment;
use qtransition::{Grid1D, SimParams, TwoGaussianConfig};

use crate::error::{CliError, Result};

pub const OUTPUT_ROOT_ENV: &str = "QTRANSITION_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_DIR: &str = "qtransition-out";
pub const DEFAULT_EPSILONS: [f64; 6] = [0.0, 0.02, 0.05, 0.2, 0.6, 1.0];

/// Two-packet interference experiment in natural units (`hbar = m = sigma = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub epsilon: Vec<f64>,
    pub d_over_sigma: f64,
    pub t_final_units: f64,
    pub grid_extent_over_sigma: f64,
    pub grid_points: usize,
    pub dt_safety: f64,
    pub amp_floor_rel: f64,
    /// Empty means "only `t_final_units`".
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            epsilon: vec![1.0],
            d_over_sigma: 3.0,
            t_final_units: 20.0,
            grid_extent_over_sigma: 80.0,
            grid_points: 4096,
            dt_safety: 0.5,
            amp_floor_rel: 1e-8,
            snapshot_times: Vec::new(),
        }
    }
}

/// Flags shared by every experiment subcommand. Names match the config keys.
#[derive(Debug, Clone, Default, Args)]
#[command(rename_all = "snake_case")]
pub struct ConfigArgs {
    /// Degree(s) of quantumness, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub epsilon: Option<Vec<f64>>,
    #[arg(long)]
    pub d_over_sigma: Option<f64>,
    /// Final time in units of m sigma^2 / hbar
    #[arg(long)]
    pub t_final_units: Option<f64>,
    /// Grid half-extent in units of sigma
    #[arg(long)]
    pub grid_extent_over_sigma: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub dt_safety: Option<f64>,
    #[arg(long)]
    pub amp_floor_rel: Option<f64>,
    /// Extra output times, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub snapshot_times: Option<Vec<f64>>,
    /// `key = value` file applied before the flags
    #[arg(long, conflicts_with = "replay")]
    pub config: Option<PathBuf>,
    /// Re-run the configuration recorded in a manifest
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Output directory (default: $QTRANSITION_OUTPUT_ROOT or ./qtransition-out)
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    /// Defaults (or the replayed manifest), then the config file, then flags.
    pub fn resolve(&self, defaults: ExperimentConfig) -> Result<ExperimentConfig> {
        let mut cfg = match &self.replay {
            Some(path) => crate::output::read_manifest_config(path)?,
            None => defaults,
        };
        if let Some(path) = &self.config {
            apply_file(&mut cfg, path)?;
        }
        if let Some(v) = &self.epsilon {
            cfg.epsilon = v.clone();
        }
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { cfg.$field = v; }
            )*};
        }
        take!(d_over_sigma, t_final_units, grid_extent_over_sigma, grid_points, dt_safety, amp_floor_rel);
        if let Some(v) = &self.snapshot_times {
            cfg.snapshot_times = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn output_root(&self) -> PathBuf {
        resolve_output_dir(self.output_dir.as_deref())
    }
}

pub fn resolve_output_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root),
        _ => PathBuf::from(DEFAULT_OUTPUT_DIR),
    }
}

fn parse_list(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}")))
        .collect()
}

fn apply_file(cfg: &mut ExperimentConfig, path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    apply_text(cfg, &text).map_err(|(line, message)| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}

/// Applies `key = value` lines; `#` starts a comment. Errors carry the
/// 1-based line number.
pub fn apply_text(cfg: &mut ExperimentConfig, text: &str) -> std::result::Result<(), (usize, String)> {
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| (line_no, format!("expected `key = value`, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let num = |v: &str| v.parse::<f64>().map_err(|e| (line_no, format!("{key}: {e}")));
        match key {
            "epsilon" => cfg.epsilon = parse_list(value).map_err(|m| (line_no, m))?,
            "snapshot_times" => cfg.snapshot_times = parse_list(value).map_err(|m| (line_no, m))?,
            "d_over_sigma" => cfg.d_over_sigma = num(value)?,
            "t_final_units" => cfg.t_final_units = num(value)?,
            "grid_extent_over_sigma" => cfg.grid_extent_over_sigma = num(value)?,
            "grid_points" => {
                cfg.grid_points = value
                    .parse()
                    .map_err(|e| (line_no, format!("grid_points: {e}")))?
            }
            "dt_safety" => cfg.dt_safety = num(value)?,
            "amp_floor_rel" => cfg.amp_floor_rel = num(value)?,
            other => return Err((line_no, format!("unknown key {other:?}"))),
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_empty() {
            return Err(CliError::Config("epsilon list is empty".into()));
        }
        if let Some(e) = self.epsilon.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(CliError::Config(format!("epsilon {e} outside [0, 1]")));
        }
        if !(self.t_final_units >= 0.0) || !self.t_final_units.is_finite() {
            return Err(CliError::Config(format!(
                "t_final_units must be nonnegative, got {}",
                self.t_final_units
            )));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.t_final_units))
        {
            return Err(CliError::Config(format!(
                "snapshot time {t} outside [0, {}]",
                self.t_final_units
            )));
        }
        Ok(())
    }

    /// Output times, sorted, always ending with `t_final_units`.
    pub fn output_times(&self) -> Vec<f64> {
        let mut times = self.snapshot_times.clone();
        times.push(self.t_final_units);
        times.sort_by(|a, b| a.partial_cmp(b).expect("validated times"));
        times.dedup();
        times
    }

    /// Same configuration restricted to one degree of quantumness.
    pub fn single(&self, epsilon: f64) -> Self {
        Self {
            epsilon: vec![epsilon],
            ..self.clone()
        }
    }

    pub fn params(&self, epsilon: f64) -> Result<SimParams> {
        Ok(SimParams::natural(epsilon)?
            .with_dt_safety(self.dt_safety)?
            .with_amp_floor_rel(self.amp_floor_rel)?)
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Ok(Grid1D::symmetric(self.grid_extent_over_sigma, self.grid_points)?)
    }

    pub fn two_gaussians(&self, epsilon: f64) -> Result<TwoGaussianConfig> {
        Ok(TwoGaussianConfig::new(self.d_over_sigma, 1.0, self.params(epsilon)?)?)
    }

    pub fn experiment(&self, epsilon: f64) -> Result<Experiment> {
        Ok(Experiment {
            config: self.two_gaussians(epsilon)?,
            grid: self.grid()?,
            t_final: self.t_final_units,
        })
    }
}

/// Drops repeated values, keeping first occurrences; returns the removed ones.
pub fn dedup_epsilons(list: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut kept: Vec<f64> = Vec::with_capacity(list.len());
    let mut dropped = Vec::new();
    for &e in list {
        if kept.contains(&e) {
            dropped.push(e);
        } else {
            kept.push(e);
        }
    }
    (kept, dropped)
}

/// Directory-safe label of a number, e.g. `0.02` or `1`.
pub fn label(value: f64) -> String {
    format!("{value}")
}
