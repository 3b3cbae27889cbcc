//! Run configuration: JSON schema, presets and validation.
//!
//! A configuration is a JSON object; every field is optional.
//!
//! ```json
//! {
//!   "params":   { "c0": 1.0, "lambda0": 1.0, "x0": 0.0 },
//!   "profile":  { "kind": "power_law", "beta": 0.5, "t_ref": 1.0 },
//!   "rate":     { "mode": "proportional" },
//!   "times":    [0.5, 1.0, 2.0],
//!   "n_paths":  100000,
//!   "base_seed": 1
//! }
//! ```
//!
//! `profile.kind` is one of `constant`, `power_law` (`beta`, optional `t_ref`,
//! default 1), `exponential_decay` (`gamma`), `piecewise_constant`
//! (`breakpoints`, `values` with one more entry than `breakpoints`) or
//! `tabulated` (`samples` as `[t, w]` pairs starting at `t = 0`).
//!
//! `rate.mode` is `proportional` (`λ = λ₀w`), `constant` (`λ = λ₀`) or
//! `explicit` (`samples` as `[t, λ]` pairs, linearly interpolated).
//!
//! Remaining fields and defaults:
//!
//! | field | default | used by |
//! |---|---|---|
//! | `alpha` | 1 | charfun |
//! | `grid` `{x_min, x_max, n_cells, cfl}` | fitted to the support, 2000 cells, cfl 1 | pde |
//! | `n_bins` | 200 | simulate |
//! | `density_points` | 801 | density |
//! | `k_max` | chosen from the tail of `p̂` | charfun |
//! | `n_k` | 16384 | charfun |
//! | `mollifier_cells` | 2 (`null` disables) | charfun |
//! | `heavy_tail_study` | false | charfun |
//! | `fit_window` `[t_lo, t_hi]` | all times | msd |
//! | `mc_overlay` | false | msd |
//! | `convergence` (list of cell counts) | none | pde |
//! | `out` | `teleswim-out` | all |
//!
//! Layers are merged in order: preset, `--config` file, command-line flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use teleswim_core::fractional::FractionalParams;
use teleswim_core::pde::GridSpec;
use teleswim_core::profiles::{ProfileSpec, RateSpec};
use teleswim_core::{RateProfile, TelegraphParams, TimeProfile};

use crate::CliError;

const PAPER_CLASSICAL: &str = include_str!("../presets/paper-classical.json");
const LIGHT_SWITCH: &str = include_str!("../presets/light-switch.json");
const POWER_LAW: &str = include_str!("../presets/power-law.json");

pub const PRESETS: &str = "paper-classical, light-switch, power-law-<beta>";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_params")]
    pub params: TelegraphParams,
    #[serde(default = "default_profile")]
    pub profile: ProfileSpec,
    #[serde(default)]
    pub rate: RateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_bins")]
    pub n_bins: usize,
    #[serde(default = "default_points")]
    pub density_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<f64>,
    #[serde(default = "default_n_k")]
    pub n_k: usize,
    #[serde(default = "default_mollifier")]
    pub mollifier_cells: Option<f64>,
    #[serde(default)]
    pub heavy_tail_study: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
    #[serde(default)]
    pub mc_overlay: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<Vec<usize>>,
    #[serde(default = "default_out")]
    pub out: String,
}

fn default_params() -> TelegraphParams {
    TelegraphParams {
        c0: 1.0,
        lambda0: 1.0,
        x0: 0.0,
    }
}

fn default_profile() -> ProfileSpec {
    ProfileSpec {
        kind: "constant".into(),
        ..ProfileSpec::default()
    }
}

fn default_times() -> Vec<f64> {
    vec![1.0]
}

fn default_paths() -> usize {
    100_000
}

fn default_bins() -> usize {
    200
}

fn default_points() -> usize {
    801
}

fn default_n_k() -> usize {
    1 << 14
}

fn default_mollifier() -> Option<f64> {
    Some(2.0)
}

fn default_out() -> String {
    "teleswim-out".into()
}

/// Values given on the command line; they override every other layer.
#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub out: Option<PathBuf>,
}

fn preset(name: &str) -> Result<Value, CliError> {
    let parse = |text: &str| serde_json::from_str::<Value>(text).expect("bundled preset is valid JSON");
    match name {
        "paper-classical" => Ok(parse(PAPER_CLASSICAL)),
        "light-switch" => Ok(parse(LIGHT_SWITCH)),
        _ => {
            let beta = name
                .strip_prefix("power-law-")
                .and_then(|b| b.parse::<f64>().ok())
                .filter(|b| b.is_finite())
                .ok_or_else(|| CliError::Config(format!("unknown preset '{name}' (available: {PRESETS})")))?;
            let mut value = parse(POWER_LAW);
            value["profile"]["beta"] = Value::from(beta);
            Ok(value)
        }
    }
}

/// Recursively overlays `top` on `base`; objects merge key by key, anything
/// else is replaced.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

pub fn load(preset_name: Option<&str>, config_text: Option<&str>, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut value = Value::Object(Default::default());
    if let Some(name) = preset_name {
        merge(&mut value, preset(name)?);
    }
    if let Some(text) = config_text {
        let file: Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config JSON: {e}")))?;
        if !file.is_object() {
            return Err(CliError::Config("config must be a JSON object".into()));
        }
        merge(&mut value, file);
    }
    let mut config: RunConfig =
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    if let Some(seed) = overrides.seed {
        config.base_seed = seed;
    }
    if let Some(paths) = overrides.paths {
        config.n_paths = paths;
    }
    if let Some(out) = &overrides.out {
        config.out = out.to_string_lossy().into_owned();
    }
    Ok(config)
}

/// Validated configuration with the library objects built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub params: TelegraphParams,
    pub profile: TimeProfile,
    pub rate: RateProfile,
}

impl Resolved {
    pub fn new(config: RunConfig) -> Result<Self, CliError> {
        let bad = |e: teleswim_core::Error| CliError::Config(e.to_string());
        config.params.validate().map_err(bad)?;
        let profile = TimeProfile::try_from(&config.profile).map_err(bad)?;
        let rate = config.rate.build(config.params.lambda0).map_err(bad)?;
        if config.times.is_empty() {
            return Err(CliError::Config("'times' must list at least one time".into()));
        }
        if config.times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(CliError::Config("'times' must be finite and nonnegative".into()));
        }
        if config.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("'times' must be strictly ascending".into()));
        }
        if config.n_paths == 0 {
            return Err(CliError::Config("'n_paths' must be at least 1".into()));
        }
        if config.n_bins < 2 {
            return Err(CliError::Config("'n_bins' must be at least 2".into()));
        }
        if config.density_points < 3 {
            return Err(CliError::Config("'density_points' must be at least 3".into()));
        }
        if let Some(grid) = &config.grid {
            grid.validate().map_err(bad)?;
        }
        if let Some(alpha) = config.alpha {
            FractionalParams::new(alpha, config.params).map_err(bad)?;
        }
        if config.n_k < 64 || !config.n_k.is_multiple_of(2) {
            return Err(CliError::Config("'n_k' must be even and at least 64".into()));
        }
        if let Some(k) = config.k_max {
            if !(k > 0.0) || !k.is_finite() {
                return Err(CliError::Config("'k_max' must be positive".into()));
            }
        }
        if let Some(m) = config.mollifier_cells {
            if !(m > 0.0) || !m.is_finite() {
                return Err(CliError::Config("'mollifier_cells' must be positive or null".into()));
            }
        }
        if let Some([lo, hi]) = config.fit_window {
            if !(lo > 0.0 && hi > lo) {
                return Err(CliError::Config("'fit_window' must satisfy 0 < t_lo < t_hi".into()));
            }
        }
        if let Some(cells) = &config.convergence {
            if cells.len() < 3 || cells.windows(2).any(|w| w[1] < w[0]) {
                return Err(CliError::Config(
                    "'convergence' needs at least three nondecreasing cell counts".into(),
                ));
            }
        }
        // Every requested time must be reachable by the profile and the rate.
        for &t in &config.times {
            profile.tau(t).map_err(bad)?;
            rate.lambda(&profile, t).map_err(bad)?;
        }
        Ok(Self {
            params: config.params,
            profile,
            rate,
            config,
        })
    }

    pub fn t_max(&self) -> f64 {
        *self.config.times.last().expect("validated non-empty")
    }
}
