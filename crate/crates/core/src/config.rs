//! Run configuration shared by the library routines and the command-line front end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Text,
}

/// Grid sizes, solver tolerances and output settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(rename = "grid_M")]
    pub grid_m: usize,
    #[serde(rename = "torus_M")]
    pub torus_m: usize,
    pub tol_eigen: f64,
    pub tol_descent: f64,
    pub fd_eps: Vec<f64>,
    pub output_format: OutputFormat,
    pub catalog_path: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid_m: 512,
            torus_m: 128,
            tol_eigen: 1e-10,
            tol_descent: 1e-9,
            fd_eps: vec![1e-2, 5e-3, 2.5e-3],
            output_format: OutputFormat::Json,
            catalog_path: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_m < 32 || self.torus_m < 32 {
            return Err(Error::Domain(format!(
                "grid sizes must be >= 32 (grid_M = {}, torus_M = {})",
                self.grid_m, self.torus_m
            )));
        }
        for (name, tol) in [("tol_eigen", self.tol_eigen), ("tol_descent", self.tol_descent)] {
            if !(tol > 0.0 && tol < 1e-2) {
                return Err(Error::Domain(format!("{name} = {tol} is outside (0, 1e-2)")));
            }
        }
        if self.fd_eps.is_empty() || self.fd_eps.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Domain("fd_eps must be a nonempty list of positive steps".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"grid_M\":512"));
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = RunConfig::from_json(r#"{"grid_M": 64, "output_format": "csv"}"#).unwrap();
        assert_eq!(cfg.grid_m, 64);
        assert_eq!(cfg.torus_m, 128);
        assert_eq!(cfg.output_format, OutputFormat::Csv);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_json(r#"{"grid_M": 16}"#).is_err());
        assert!(RunConfig::from_json(r#"{"tol_eigen": 0.5}"#).is_err());
        assert!(RunConfig::from_json(r#"{"tol_descent": 0}"#).is_err());
    }
}
