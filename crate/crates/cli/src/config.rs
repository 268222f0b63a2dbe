//! Run configuration: a TOML file with `[params]`, `[grid]` and `[time]`
//! tables, optional experiment blocks, and `--set key=value` overrides.

use std::path::Path;

use nalgebra::Vector3;
use serde::Deserialize;

use rfpk_core::kinetic::physics::juttner_scaled_radial;
use rfpk_core::{DistributionField, MomentumGrid3, PhysicalParams};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub m: f64,
    pub c: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub n: usize,
    pub p_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeBlock {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    /// Rows are written every this many steps.
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

/// Initial law, always normalized to unit mass.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Juttner,
    ShiftedJuttner {
        p_shift: [f64; 3],
    },
    Gaussian {
        sigma: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    /// `J(p - s) + J(p + s)`.
    DoubleBump {
        p_shift: [f64; 3],
    },
}

impl Default for Initial {
    fn default() -> Self {
        Initial::ShiftedJuttner { p_shift: [1.0, 0.0, 0.0] }
    }
}

impl Initial {
    /// Profile `f(p)` up to normalization.
    pub fn profile(&self, params: &PhysicalParams, p: &Vector3<f64>) -> f64 {
        let j = |q: Vector3<f64>| juttner_scaled_radial(params, q.norm());
        match self {
            Initial::Juttner => j(*p),
            Initial::ShiftedJuttner { p_shift } => j(p - Vector3::from(*p_shift)),
            Initial::Gaussian { sigma, center } => {
                (-(p - Vector3::from(*center)).norm_squared() / (2.0 * sigma * sigma)).exp()
            }
            Initial::DoubleBump { p_shift } => {
                let s = Vector3::from(*p_shift);
                j(p - s) + j(p + s)
            }
        }
    }

    /// Unit-mass density field sampled at cell centres.
    pub fn field(&self, params: &PhysicalParams, grid: MomentumGrid3) -> Result<DistributionField, CliError> {
        let raw = DistributionField::from_fn(grid, |p| self.profile(params, p))?;
        let mass = raw.mass();
        if !(mass > 0.0) {
            return Err(CliError::Config("initial data has no mass on the grid".into()));
        }
        Ok(DistributionField::density(
            grid,
            raw.values().iter().map(|v| v / mass).collect(),
        )?)
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Initial::Gaussian { sigma, .. } = self {
            if !(*sigma > 0.0 && sigma.is_finite()) {
                return Err(CliError::Config(format!("initial.sigma must be > 0, got {sigma}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CSweepBlock {
    pub values: Vec<f64>,
    /// Radial shells for the isotropic solves.
    #[serde(default = "default_shells")]
    pub shells: usize,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    /// Spacing of the output times over which the sup is taken.
    #[serde(default = "default_output_interval")]
    pub output_interval: f64,
}

fn default_shells() -> usize {
    4000
}

fn default_r_max() -> f64 {
    20.0
}

fn default_output_interval() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    pub n_particles: usize,
    pub dt: f64,
    pub seed: u64,
    /// Comparison times; defaults to the end time.
    #[serde(default)]
    pub snapshots: Vec<f64>,
    /// Also compare both methods with the exact classical kernel.
    #[serde(default)]
    pub ou_reference: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    #[serde(default)]
    pub t_min: f64,
    #[serde(default = "infinity")]
    pub t_max: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn infinity() -> f64 {
    f64::INFINITY
}

fn default_floor() -> f64 {
    1e-13
}

impl Default for FitBlock {
    fn default() -> Self {
        Self {
            t_min: 0.0,
            t_max: f64::INFINITY,
            floor: default_floor(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesBlock {
    #[serde(default = "default_beta_y")]
    pub beta_y: f64,
}

fn default_beta_y() -> f64 {
    0.5
}

impl Default for RatesBlock {
    fn default() -> Self {
        Self { beta_y: default_beta_y() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    #[serde(default = "default_kernel_beta")]
    pub beta: f64,
    #[serde(default = "default_probes")]
    pub probes: Vec<f64>,
    #[serde(default = "default_alpha_shrink")]
    pub alpha_shrink: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_kernel_seed")]
    pub seed: u64,
}

fn default_kernel_beta() -> f64 {
    1.0
}

fn default_probes() -> Vec<f64> {
    vec![0.5, 2.0]
}

/// `1` exhibits the unbounded growth of the undamped ratio; the bound needs `α < 1`.
fn default_alpha_shrink() -> f64 {
    0.5
}

fn default_samples() -> usize {
    2000
}

fn default_kernel_seed() -> u64 {
    7
}

impl Default for KernelBlock {
    fn default() -> Self {
        Self {
            beta: default_kernel_beta(),
            probes: default_probes(),
            alpha_shrink: default_alpha_shrink(),
            samples: default_samples(),
            seed: default_kernel_seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsBlock,
    pub grid: GridBlock,
    pub time: TimeBlock,
    #[serde(default)]
    pub initial: Initial,
    pub c_sweep: Option<CSweepBlock>,
    pub mc: Option<McBlock>,
    #[serde(default)]
    pub fit: FitBlock,
    #[serde(default)]
    pub rates: RatesBlock,
    #[serde(default)]
    pub kernel: KernelBlock,
}

impl RunConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    pub fn physical_params(&self) -> Result<PhysicalParams, CliError> {
        PhysicalParams::new(self.params.m, self.params.c, self.params.theta)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn momentum_grid(&self) -> Result<MomentumGrid3, CliError> {
        MomentumGrid3::new(self.grid.n, self.grid.p_max).map_err(|e| CliError::Config(e.to_string()))
    }

    fn validate(&self) -> Result<(), CliError> {
        self.physical_params()?;
        self.momentum_grid()?;
        let t = &self.time;
        if !(t.t_final > 0.0 && t.t_final.is_finite() && t.dt > 0.0 && t.dt.is_finite()) {
            return Err(CliError::Config(format!(
                "time.T and time.dt must be > 0, got T = {}, dt = {}",
                t.t_final, t.dt
            )));
        }
        self.initial.validate()?;
        if let Some(sweep) = &self.c_sweep {
            if sweep.values.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
                return Err(CliError::Config("c_sweep.values must be positive".into()));
            }
            if sweep.values.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Config("c_sweep.values must be strictly ascending".into()));
            }
            if sweep.shells < 2 || !(sweep.r_max > 0.0) || !(sweep.output_interval > 0.0) {
                return Err(CliError::Config("c_sweep needs shells >= 2, r_max > 0, output_interval > 0".into()));
            }
        }
        if let Some(mc) = &self.mc {
            if mc.n_particles == 0 || !(mc.dt > 0.0 && mc.dt.is_finite()) {
                return Err(CliError::Config("mc needs n_particles >= 1 and dt > 0".into()));
            }
            if mc.snapshots.iter().any(|s| !(*s > 0.0 && *s <= t.t_final)) {
                return Err(CliError::Config("mc.snapshots must lie in (0, time.T]".into()));
            }
        }
        if !(self.rates.beta_y > 0.0) {
            return Err(CliError::Config("rates.beta_y must be > 0".into()));
        }
        if !(self.fit.t_max > self.fit.t_min) {
            return Err(CliError::Config("fit.t_max must exceed fit.t_min".into()));
        }
        Ok(())
    }
}

/// Applies `a.b.c=value`, parsing `value` as a TOML literal and falling back
/// to a bare string.
fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {item:?} is not key=value")))?;
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("override key {key:?} is malformed")));
    }
    let mut node = table;
    for part in &path[..path.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override {key:?} descends into a non-table")))?;
    }
    node.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}
