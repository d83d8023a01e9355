//! Engine thresholds and execution settings, loadable from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Expected reporting interval of each bus, seconds.
    pub cadence_s: i64,
    /// A trip with at least this many missing tuples is dropped.
    pub sparse_trip_threshold: u64,
    /// Consecutive points farther apart than this are a move.
    pub stop_move_threshold_m: f64,
    pub station_radius_m: f64,
    pub intersection_radius_m: f64,
    pub cell_size_m: f64,
    pub buffer_half_width_m: f64,
    /// Road endpoints closer than this are the same node.
    pub snap_tolerance_m: f64,
    pub window_s: i64,
    /// Real-time ingest only; replay closes windows at end of stream.
    pub allowed_lateness_s: i64,
    pub workers: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            cadence_s: 5,
            sparse_trip_threshold: 100,
            stop_move_threshold_m: 15.0,
            station_radius_m: 30.0,
            intersection_radius_m: 30.0,
            cell_size_m: 10.0,
            buffer_half_width_m: 30.0,
            snap_tolerance_m: 1.0,
            window_s: 5,
            allowed_lateness_s: 60,
            workers: 1,
        }
    }
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: EngineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("stop_move_threshold_m", self.stop_move_threshold_m),
            ("station_radius_m", self.station_radius_m),
            ("intersection_radius_m", self.intersection_radius_m),
            ("cell_size_m", self.cell_size_m),
            ("buffer_half_width_m", self.buffer_half_width_m),
            ("snap_tolerance_m", self.snap_tolerance_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Parse(format!("{name} must be positive")));
            }
        }
        if self.cadence_s <= 0 || self.window_s <= 0 {
            return Err(ConfigError::Parse("cadence_s and window_s must be positive".into()));
        }
        if self.allowed_lateness_s < 0 {
            return Err(ConfigError::Parse("allowed_lateness_s must be nonnegative".into()));
        }
        if self.workers == 0 {
            return Err(ConfigError::Parse("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_keeps_defaults() {
        let c = EngineConfig::from_toml_str("workers = 8\nstop_move_threshold_m = 20.0\n").unwrap();
        assert_eq!(c.workers, 8);
        assert_eq!(c.stop_move_threshold_m, 20.0);
        assert_eq!(c.station_radius_m, 30.0);
        assert_eq!(c.sparse_trip_threshold, 100);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(EngineConfig::from_toml_str("workers = 0").is_err());
        assert!(EngineConfig::from_toml_str("cell_size_m = -1.0").is_err());
        assert!(EngineConfig::from_toml_str("unknown_key = 1").is_err());
    }
}
