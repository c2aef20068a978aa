//! Run configuration: a TOML or JSON file overridden by command-line flags.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// CSV tables.
    Tabular,
    /// JSON documents.
    Structured,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Zero,
    Pi,
}

/// Every setting is optional here; [`Settings::resolve`] fills defaults.
#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    /// Operator file (JSON).
    #[arg(long)]
    pub operator: Option<PathBuf>,
    /// Built-in operator instead of a file (see `verify --help`).
    #[arg(long)]
    pub fixture: Option<String>,
    /// Cell-function file (JSON).
    #[arg(long)]
    pub function: Option<PathBuf>,
    /// Built-in function: `step` or `bump`.
    #[arg(long)]
    pub function_fixture: Option<String>,
    /// Quasimomentum for `spectrum` and `census`.
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t_nodes: Option<usize>,
    /// Fourier truncation `|p| ≤ K`.
    #[arg(long = "K")]
    #[serde(rename = "K", alias = "k")]
    pub k: Option<usize>,
    /// Half-width of the windows at 0 and π.
    #[arg(long)]
    pub h: Option<f64>,
    /// Excision half-width around singular quasimomenta.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Largest |k| used by the growth probe and the paired windows.
    #[arg(long)]
    pub k_max: Option<i64>,
    /// Reconstruction window (−p, p).
    #[arg(long)]
    pub p: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Absolute eigenvalue gap that flags a degeneracy candidate.
    #[arg(long)]
    pub gap_tol: Option<f64>,
    /// Largest classification window around a singular quasimomentum.
    #[arg(long)]
    pub window: Option<f64>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Disk index threshold; defaults to the smallest one for which the disks separate.
    #[arg(long)]
    pub n0: Option<usize>,
    /// Previously exported band table (JSON) to use instead of recomputing.
    #[arg(long)]
    pub bands: Option<PathBuf>,
    /// Approximate quadrature nodes per period for the expansion.
    #[arg(long)]
    pub quad_nodes: Option<usize>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
        }
    }

    /// Flags in `top` win over values from `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        overlay!(
            self, top, operator, fixture, function, function_fixture, t, t_min, t_max, t_nodes, k, h, epsilon, k_max, p, out, format, gap_tol,
            window, family, n0, bands, quad_nodes
        )
    }
}

/// Largest admissible window half-width.
pub const H_MAX: f64 = 1.0 / (15.0 * PI);

/// Resolved settings with defaults applied and validated.
#[derive(Clone, Debug)]
pub struct Settings {
    pub raw: RunConfig,
    pub t: Option<f64>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub t_nodes: usize,
    pub k: usize,
    pub h: f64,
    pub epsilon: f64,
    pub k_max: Option<i64>,
    pub p: f64,
    pub out: PathBuf,
    pub format: Format,
    pub gap_tol: f64,
    pub window: f64,
    pub family: Family,
    pub quad_nodes: Option<usize>,
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("--{name} must be a positive number, got {v}")))
    }
}

impl Settings {
    pub fn resolve(raw: RunConfig) -> Result<Self, CliError> {
        let h = positive("h", raw.h.unwrap_or(0.02))?;
        if h >= H_MAX {
            return Err(CliError::Config(format!("--h must be below 1/(15π) ≈ {H_MAX:.6}, got {h}")));
        }
        let k = raw.k.unwrap_or(16);
        if k == 0 {
            return Err(CliError::Config("--K must be at least 1".into()));
        }
        let t_nodes = raw.t_nodes.unwrap_or(201);
        if t_nodes < 2 {
            return Err(CliError::Config(format!("--t-nodes must be at least 2, got {t_nodes}")));
        }
        if let (Some(a), Some(b)) = (raw.t_min, raw.t_max) {
            if b <= a {
                return Err(CliError::Config(format!("--t-max ({b}) must exceed --t-min ({a})")));
            }
        }
        if let Some(km) = raw.k_max {
            if km < 1 {
                return Err(CliError::Config(format!("--k-max must be at least 1, got {km}")));
            }
        }
        if raw.quad_nodes == Some(0) {
            return Err(CliError::Config("--quad-nodes must be positive".into()));
        }
        Ok(Self {
            t: raw.t,
            t_min: raw.t_min,
            t_max: raw.t_max,
            t_nodes,
            k,
            h,
            epsilon: positive("epsilon", raw.epsilon.unwrap_or(0.002))?,
            k_max: raw.k_max,
            p: positive("p", raw.p.unwrap_or(2.0))?,
            out: raw.out.clone().unwrap_or_else(|| PathBuf::from("out")),
            format: raw.format.unwrap_or(Format::Structured),
            gap_tol: positive("gap-tol", raw.gap_tol.unwrap_or(0.5))?,
            window: positive("window", raw.window.unwrap_or(1e-3))?,
            family: raw.family.unwrap_or(Family::Zero),
            quad_nodes: raw.quad_nodes,
            raw,
        })
    }

    /// Uniform grid on `[t_min, t_max]` with the given defaults.
    pub fn grid(&self, default: (f64, f64)) -> Vec<f64> {
        let a = self.t_min.unwrap_or(default.0);
        let b = self.t_max.unwrap_or(default.1);
        let n = self.t_nodes;
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }
}
