//! JSON run configurations, one per subcommand, and their fingerprints.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{LatticeGrid, TestFunction};
use crate::harness::{CovDecayConfig, Rung, ScalingConfig, DEFAULT_FLOOR};
use crate::nonlinearity::Nonlinearity;
use crate::polymer::{ZInftyConfig, ZMethod};

pub const DEFAULT_SPACING: f64 = 0.5;
pub const DEFAULT_BETA: f64 = 0.2;

/// Reads a config, rejecting unknown fields; missing fields take defaults.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text)
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let field = msg
            .split('`')
            .nth(1)
            .map(str::to_string)
            .unwrap_or_else(|| "config".into());
        Error::config(field, msg)
    })
}

/// SHA-256 of the canonical JSON of `(command, seed, config)`.
pub fn fingerprint<T: Serialize>(command: &str, seed: u64, cfg: &T) -> String {
    let value = serde_json::json!({ "command": command, "seed": seed, "config": cfg });
    // serde_json maps are ordered by key, so this rendering is canonical
    let text = serde_json::to_string(&value).expect("configs serialize");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathBudget {
    pub horizon: f64,
    pub n_paths: usize,
    pub n_x_nodes: usize,
}

impl Default for PathBudget {
    fn default() -> Self {
        PathBudget {
            horizon: 64.0,
            n_paths: 4000,
            n_x_nodes: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoryConfig {
    pub beta: f64,
    pub nu: PathBudget,
    pub times: Vec<f64>,
    pub g: Vec<TestFunction>,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            beta: DEFAULT_BETA,
            nu: PathBudget::default(),
            times: vec![1.0],
            g: vec![TestFunction::gaussian(3, 0.125)],
        }
    }
}

/// Draws of `Z_infinity` used for `sigma_f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZConfig {
    pub horizon: f64,
    pub n_realizations: usize,
    pub n_cells: usize,
    pub spacing: f64,
    pub probe_stride: usize,
}

impl Default for ZConfig {
    fn default() -> Self {
        ZConfig {
            horizon: 64.0,
            n_realizations: 64,
            n_cells: 32,
            spacing: DEFAULT_SPACING,
            probe_stride: 2,
        }
    }
}

impl ZConfig {
    pub fn to_z_infty(&self, beta: f64, record: Vec<f64>) -> Result<ZInftyConfig> {
        let grid = LatticeGrid::new(3, self.spacing, self.n_cells)?;
        let mut z = ZInftyConfig::new(beta, self.horizon, self.n_realizations, grid);
        z.probe_stride = self.probe_stride;
        if !record.is_empty() {
            z.record = record;
        }
        z.method = ZMethod::Lattice;
        Ok(z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluctuationsConfig {
    pub beta: f64,
    pub t: f64,
    pub g: TestFunction,
    pub eps: Vec<f64>,
    pub n_realizations: Vec<usize>,
    /// Cells per axis for each rung; defaults to a side of `6 / eps`.
    pub n_cells: Option<Vec<usize>>,
    pub spacing: f64,
    pub dt_max: f64,
    /// The first entry is the headline nonlinearity written to `variance_scaling.csv`.
    pub nonlinearities: Vec<Nonlinearity>,
    pub floor: f64,
    pub n_boot: usize,
    pub nu: PathBudget,
    pub z: ZConfig,
}

impl Default for FluctuationsConfig {
    fn default() -> Self {
        FluctuationsConfig {
            beta: DEFAULT_BETA,
            t: 1.0,
            g: TestFunction::gaussian(3, 0.125),
            eps: vec![0.5, 0.25, 0.125],
            n_realizations: vec![2000, 800, 200],
            n_cells: None,
            spacing: DEFAULT_SPACING,
            dt_max: 0.0375,
            nonlinearities: vec![
                Nonlinearity::Log,
                Nonlinearity::Identity,
                Nonlinearity::LogMinusY,
                Nonlinearity::Square,
            ],
            floor: DEFAULT_FLOOR,
            n_boot: 2000,
            nu: PathBudget::default(),
            z: ZConfig::default(),
        }
    }
}

impl FluctuationsConfig {
    pub fn scaling(&self) -> Result<ScalingConfig> {
        if self.eps.len() != self.n_realizations.len() {
            return Err(Error::config("n_realizations", "needs one entry per eps"));
        }
        if let Some(n) = &self.n_cells {
            if n.len() != self.eps.len() {
                return Err(Error::config("n_cells", "needs one entry per eps"));
            }
        }
        let rungs = self
            .eps
            .iter()
            .enumerate()
            .map(|(i, &eps)| {
                if !(eps > 0.0) {
                    return Err(Error::config("eps", format!("must be positive, got {eps}")));
                }
                let n = match &self.n_cells {
                    Some(n) => n[i],
                    None => {
                        let n = (6.0 / (eps * self.spacing)).round() as usize;
                        n + n % 2
                    }
                };
                Ok(Rung {
                    eps,
                    n_realizations: self.n_realizations[i],
                    grid: LatticeGrid::new(self.g.dim(), self.spacing, n)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let cfg = ScalingConfig {
            beta: self.beta,
            t: self.t,
            g: self.g.clone(),
            rungs,
            nonlinearities: self.nonlinearities.clone(),
            dt_max: self.dt_max,
            floor: self.floor,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolymerConfig {
    pub beta: f64,
    pub z: ZConfig,
    /// Record times; the horizon is always included.
    pub record: Vec<f64>,
    pub orders: Vec<u32>,
    pub nonlinearities: Vec<Nonlinearity>,
    pub n_boot: usize,
}

impl Default for PolymerConfig {
    fn default() -> Self {
        PolymerConfig {
            beta: DEFAULT_BETA,
            // sigma_f for the square exceeds 2 by only 2 Var Z; 64 draws cannot resolve that
            z: ZConfig {
                n_realizations: 256,
                ..ZConfig::default()
            },
            record: vec![32.0, 64.0],
            orders: vec![1, 2],
            nonlinearities: vec![
                Nonlinearity::Identity,
                Nonlinearity::Log,
                Nonlinearity::LogMinusY,
                Nonlinearity::Square,
            ],
            n_boot: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyConfig {
    pub nonlinearities: Vec<Nonlinearity>,
    pub deltas: Vec<f64>,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            nonlinearities: vec![
                Nonlinearity::Identity,
                Nonlinearity::Square,
                Nonlinearity::Power(3.0),
                Nonlinearity::Log,
                Nonlinearity::LogMinusY,
            ],
            deltas: vec![0.01],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CovDecayRunConfig {
    pub beta: f64,
    pub horizon: f64,
    pub n_cells: usize,
    pub spacing: f64,
    pub offsets: Vec<f64>,
    pub n_realizations: usize,
    pub nonlinearities: Vec<Nonlinearity>,
    pub floor: f64,
}

impl Default for CovDecayRunConfig {
    fn default() -> Self {
        CovDecayRunConfig {
            beta: DEFAULT_BETA,
            horizon: 256.0,
            n_cells: 96,
            spacing: DEFAULT_SPACING,
            offsets: vec![4.0, 6.5, 10.0, 16.0],
            n_realizations: 32,
            nonlinearities: vec![Nonlinearity::Identity, Nonlinearity::Square, Nonlinearity::Log],
            floor: DEFAULT_FLOOR,
        }
    }
}

impl CovDecayRunConfig {
    pub fn experiment(&self) -> Result<CovDecayConfig> {
        let cfg = CovDecayConfig {
            beta: self.beta,
            horizon: self.horizon,
            grid: LatticeGrid::new(3, self.spacing, self.n_cells)?,
            offsets: self.offsets.clone(),
            n_realizations: self.n_realizations,
            nonlinearities: self.nonlinearities.clone(),
            floor: self.floor,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_name_the_field() {
        let e = parse::<TheoryConfig>(r#"{"betta": 0.1}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("betta"), "{e}");
        let c: TheoryConfig = parse(r#"{"beta": 0.1}"#).unwrap();
        assert_eq!(c.beta, 0.1);
        assert_eq!(c.times, vec![1.0]);
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = TheoryConfig::default();
        let mut b = a.clone();
        assert_eq!(fingerprint("theory", 1, &a), fingerprint("theory", 1, &b));
        b.beta = 0.3;
        assert_ne!(fingerprint("theory", 1, &a), fingerprint("theory", 1, &b));
        assert_ne!(fingerprint("theory", 1, &a), fingerprint("theory", 2, &a));
    }

    #[test]
    fn default_ladder_grids() {
        let s = FluctuationsConfig::default().scaling().unwrap();
        let n: Vec<usize> = s.rungs.iter().map(|r| r.grid.n_cells()).collect();
        assert_eq!(n, vec![24, 48, 96]);
        s.setups().unwrap();
    }
}
