//! Run configuration: a JSON file merged with command-line overrides.
//!
//! Keys may be nested (`{"grid": {"R": 10}}`) or dotted (`{"grid.R": 10}`).
//! Anything outside [`KEYS`] is rejected.

use hermite_core::basis::SpatialGrid;
use hermite_core::gamma::{BanachModel, TimeGrid};
use serde_json::{Map, Value};
use std::fmt;
use std::path::Path;

pub const KEYS: [&str; 12] = [
    "n", "K", "d", "q", "grid.R", "grid.h", "time.tmin", "time.tmax", "time.N", "quad.Q", "mc.M", "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config key `{}`: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Every field is optional; commands fall back to their own defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub q: Option<f64>,
    pub grid_r: Option<f64>,
    pub grid_h: Option<f64>,
    pub tmin: Option<f64>,
    pub tmax: Option<f64>,
    pub time_n: Option<usize>,
    pub quad_q: Option<usize>,
    pub mc_m: Option<usize>,
    pub seed: Option<u64>,
}

fn flatten(prefix: &str, map: &Map<String, Value>, out: &mut Vec<(String, Value)>) {
    for (k, v) in map {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(inner) => flatten(&key, inner, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn real(key: &str, v: &Value) -> Result<f64, ConfigError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError::new(key, format!("expected a number, found {v}")))
}

fn count(key: &str, v: &Value) -> Result<usize, ConfigError> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| ConfigError::new(key, format!("expected a non-negative integer, found {v}")))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::new("", format!("malformed JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(ConfigError::new("", "expected a JSON object"));
        };
        let mut entries = Vec::new();
        flatten("", &map, &mut entries);
        let mut cfg = RunConfig::default();
        for (key, v) in &entries {
            match key.as_str() {
                "n" => cfg.n = Some(count(key, v)?),
                "K" => cfg.k = Some(count(key, v)?),
                "d" => cfg.d = Some(count(key, v)?),
                "q" => cfg.q = Some(real(key, v)?),
                "grid.R" => cfg.grid_r = Some(real(key, v)?),
                "grid.h" => cfg.grid_h = Some(real(key, v)?),
                "time.tmin" => cfg.tmin = Some(real(key, v)?),
                "time.tmax" => cfg.tmax = Some(real(key, v)?),
                "time.N" => cfg.time_n = Some(count(key, v)?),
                "quad.Q" => cfg.quad_q = Some(count(key, v)?),
                "mc.M" => cfg.mc_m = Some(count(key, v)?),
                "seed" => cfg.seed = Some(v.as_u64().ok_or_else(|| ConfigError::new(key, "expected a 64-bit unsigned integer"))?),
                _ => return Err(ConfigError::new(key, "unknown key")),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fields set in `other` win.
    pub fn merged(&self, other: &RunConfig) -> RunConfig {
        RunConfig {
            n: other.n.or(self.n),
            k: other.k.or(self.k),
            d: other.d.or(self.d),
            q: other.q.or(self.q),
            grid_r: other.grid_r.or(self.grid_r),
            grid_h: other.grid_h.or(self.grid_h),
            tmin: other.tmin.or(self.tmin),
            tmax: other.tmax.or(self.tmax),
            time_n: other.time_n.or(self.time_n),
            quad_q: other.quad_q.or(self.quad_q),
            mc_m: other.mc_m.or(self.mc_m),
            seed: other.seed.or(self.seed),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0) => Err(ConfigError::new(key, format!("must be positive, found {x}"))),
            _ => Ok(()),
        };
        let at_least = |key: &str, v: Option<usize>, min: usize| match v {
            Some(x) if x < min => Err(ConfigError::new(key, format!("must be at least {min}, found {x}"))),
            _ => Ok(()),
        };
        at_least("n", self.n, 1)?;
        at_least("d", self.d, 1)?;
        at_least("time.N", self.time_n, 2)?;
        at_least("quad.Q", self.quad_q, 1)?;
        at_least("mc.M", self.mc_m, 2)?;
        if let Some(q) = self.q {
            if !(q >= 1.0) {
                return Err(ConfigError::new("q", format!("must be at least 1, found {q}")));
            }
        }
        positive("grid.R", self.grid_r)?;
        positive("grid.h", self.grid_h)?;
        positive("time.tmin", self.tmin)?;
        positive("time.tmax", self.tmax)?;
        if let (Some(a), Some(b)) = (self.tmin, self.tmax) {
            if a >= b {
                return Err(ConfigError::new("time.tmax", format!("must exceed time.tmin ({a}), found {b}")));
            }
        }
        Ok(())
    }

    pub fn n_or(&self, default: usize) -> usize {
        self.n.unwrap_or(default)
    }

    pub fn k_or(&self, default: usize) -> usize {
        self.k.unwrap_or(default)
    }

    pub fn seed_or(&self, default: u64) -> u64 {
        self.seed.unwrap_or(default)
    }

    pub fn samples_or(&self, default: usize) -> usize {
        self.mc_m.unwrap_or(default)
    }

    pub fn nodes_or(&self, default: usize) -> usize {
        self.quad_q.unwrap_or(default)
    }

    /// Banach model `ℓ^q(ℝ^d)`, scalar by default.
    pub fn model(&self) -> Result<BanachModel, ConfigError> {
        BanachModel::new(self.d.unwrap_or(1), self.q.unwrap_or(2.0)).map_err(|e| ConfigError::new("q", e.to_string()))
    }

    /// Configured grid, or the given fallback when neither `grid.R` nor `grid.h` is set.
    pub fn grid_or(&self, dim: usize, fallback: SpatialGrid) -> Result<SpatialGrid, ConfigError> {
        if self.grid_r.is_none() && self.grid_h.is_none() {
            return Ok(fallback);
        }
        let r = self.grid_r.unwrap_or(fallback.half_width());
        let h = self.grid_h.unwrap_or(fallback.spacing());
        SpatialGrid::new(r, h, dim).map_err(|e| ConfigError::new("grid.h", e.to_string()))
    }

    /// Configured time grid, filling unset fields from `fallback`.
    pub fn times_or(&self, fallback: TimeGrid) -> Result<TimeGrid, ConfigError> {
        if self.tmin.is_none() && self.tmax.is_none() && self.time_n.is_none() {
            return Ok(fallback);
        }
        TimeGrid::new(
            self.tmin.unwrap_or(fallback.t_min()),
            self.tmax.unwrap_or(fallback.t_max()),
            self.time_n.unwrap_or(fallback.len()),
        )
        .map_err(|e| ConfigError::new("time.N", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_and_dotted_forms_agree() {
        let nested = RunConfig::from_json(r#"{"n": 1, "grid": {"R": 10, "h": 0.01}, "time": {"N": 64}}"#).unwrap();
        let dotted = RunConfig::from_json(r#"{"n": 1, "grid.R": 10, "grid.h": 0.01, "time.N": 64}"#).unwrap();
        assert_eq!(nested, dotted);
        assert_eq!(nested.grid_r, Some(10.0));
        assert_eq!(nested.time_n, Some(64));
    }

    #[test]
    fn unknown_and_malformed_keys_name_the_key() {
        let e = RunConfig::from_json(r#"{"grid": {"spacing": 0.1}}"#).unwrap_err();
        assert_eq!(e.key, "grid.spacing");
        let e = RunConfig::from_json(r#"{"K": -1}"#).unwrap_err();
        assert_eq!(e.key, "K");
        let e = RunConfig::from_json(r#"{"time": {"tmin": 2, "tmax": 1}}"#).unwrap_err();
        assert_eq!(e.key, "time.tmax");
        assert!(RunConfig::from_json("[1]").is_err());
        assert!(RunConfig::from_json("{").is_err());
    }

    #[test]
    fn overrides_win() {
        let base = RunConfig::from_json(r#"{"n": 2, "seed": 5}"#).unwrap();
        let flags = RunConfig {
            seed: Some(9),
            ..RunConfig::default()
        };
        let m = base.merged(&flags);
        assert_eq!((m.n, m.seed), (Some(2), Some(9)));
    }

    #[test]
    fn grids_fall_back() {
        let cfg = RunConfig::from_json(r#"{"grid.h": 0.05}"#).unwrap();
        let g = cfg.grid_or(1, SpatialGrid::new(8.0, 0.1, 1).unwrap()).unwrap();
        assert_eq!((g.half_width(), g.spacing()), (8.0, 0.05));
        let t = cfg.times_or(TimeGrid::default()).unwrap();
        assert_eq!(t, TimeGrid::default());
    }
}
