//! Flat `key = value` run configuration.
//!
//! Keys follow the parameter table (`dt`, `R`, `N`, `l`, ...). Angles are in
//! degrees here and nowhere else.

use std::path::Path;

use thiserror::Error;
use toml::{Table, Value};

use super::sweep::SweepGrid;
use crate::analysis::FnWeight;
use crate::dynamics::SimParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

/// Everything a run needs: model parameters, counting policy, seed and grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SimParams,
    pub fn_weight: FnWeight,
    /// Seed of a single `simulate` trial.
    pub seed: u64,
    pub grid: SweepGrid,
}

impl Default for RunConfig {
    fn default() -> Self {
        let params = SimParams::default();
        let grid = SweepGrid::single(&params, 1, 0);
        RunConfig {
            params,
            fn_weight: FnWeight::default(),
            seed: 0,
            grid,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

fn bad(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn number(key: &str, v: &Value) -> Result<f64, ConfigError> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(key, "expected a number")),
    }
}

fn count(key: &str, v: &Value) -> Result<u64, ConfigError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(bad(key, "expected a non-negative integer")),
    }
}

fn numbers(key: &str, v: &Value) -> Result<Vec<f64>, ConfigError> {
    match v {
        Value::Array(items) => items.iter().map(|x| number(key, x)).collect(),
        other => Ok(vec![number(key, other)?]),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut p = SimParams::default();
    let mut fn_weight = FnWeight::default();
    let mut seed = 0u64;
    let mut base_seed = None;
    let mut trials = 1usize;
    let (mut cva_values, mut t_grm_values, mut t_loom_values) = (None, None, None);

    for (key, v) in &table {
        let k = key.as_str();
        match k {
            "dt" => p.dt = number(k, v)?,
            "R" => p.arena = number(k, v)?,
            "N" => p.n_agents = count(k, v)? as usize,
            "l" => p.body_length = number(k, v)?,
            "d_eye" => p.d_eye = number(k, v)?,
            "v_min" => p.v_min = number(k, v)?,
            "v_max" => p.v_max = number(k, v)?,
            "P01" => p.p01 = number(k, v)?,
            "T_loom" => p.t_loom = number(k, v)?,
            "T_grm" => p.t_grm = number(k, v)?,
            "CVA_deg" => p.cva = number(k, v)?.to_radians(),
            "theta_i_deg" => p.theta_i = number(k, v)?.to_radians(),
            "delta_sigma_deg" => p.delta_sigma = number(k, v)?.to_radians(),
            "lambda_sigma" => p.lambda_sigma = number(k, v)?,
            "n_points" => p.n_points = count(k, v)? as usize,
            "horizon_steps" => p.horizon_steps = count(k, v)? as usize,
            "collision_distance" => p.collision_distance = number(k, v)?,
            "extrapolation_horizon" => p.extrapolation_horizon = number(k, v)?,
            "fn_per_collision" => {
                fn_weight = FnWeight::from_count(count(k, v)?).ok_or_else(|| bad(k, "must be 1 or 2"))?
            }
            "seed" => seed = count(k, v)?,
            "base_seed" => base_seed = Some(count(k, v)?),
            "trials" => trials = count(k, v)? as usize,
            "CVA_deg_values" => cva_values = Some(numbers(k, v)?),
            "T_grm_values" => t_grm_values = Some(numbers(k, v)?),
            "T_loom_values" => t_loom_values = Some(numbers(k, v)?),
            _ => return Err(ConfigError::UnknownKey(key.clone())),
        }
    }
    p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

    let grid = SweepGrid {
        cva_values: cva_values.unwrap_or_else(|| vec![p.cva.to_degrees()]),
        t_grm_values: t_grm_values.unwrap_or_else(|| vec![p.t_grm]),
        t_loom_values: t_loom_values.unwrap_or_else(|| vec![p.t_loom]),
        trials_per_cell: trials,
        base_seed: base_seed.unwrap_or(seed),
    };
    grid.validate()?;
    Ok(RunConfig {
        params: p,
        fn_weight,
        seed,
        grid,
    })
}
