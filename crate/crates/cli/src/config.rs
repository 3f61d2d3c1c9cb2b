//! Run parameters: built-in defaults, then a flat TOML config file, then
//! command-line flags. Later sources win.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Dat,
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Dat => "dat",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Parameters shared by every subcommand. All optional so that sources can
/// be layered; [`Params::resolved`] fills in defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Params {
    /// Subsystem size N.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Mode index k (0-based, ascending φ).
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Transverse field ξ = h/J.
    #[arg(long, global = true)]
    pub xi: Option<f64>,
    #[arg(long = "p-min", global = true)]
    pub p_min: Option<f64>,
    /// Number of confirming measurements.
    #[arg(long = "n-max", global = true)]
    pub n_max: Option<usize>,
    #[arg(long = "t-max", global = true)]
    pub t_max: Option<f64>,
    #[arg(long = "t-step", global = true)]
    pub t_step: Option<f64>,
    /// Single evaluation time (gamma).
    #[arg(long, global = true)]
    pub t: Option<f64>,
    /// Periodic chain length; omit for the infinite chain.
    #[arg(long, global = true)]
    pub l: Option<usize>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "quad-tol", global = true)]
    pub quad_tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (directory for `sweep`); stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "TFIM_JOBS")]
    pub jobs: Option<usize>,
    /// Grid values of ξ (comma separated).
    #[arg(long = "xi-values", global = true, value_delimiter = ',')]
    pub xi_values: Option<Vec<f64>>,
    #[arg(long = "n-values", global = true, value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    #[arg(long = "k-values", global = true, value_delimiter = ',')]
    pub k_values: Option<Vec<usize>>,
}

macro_rules! layer {
    ($base:expr, $over:expr, $($f:ident),*) => {
        Params { $($f: $over.$f.or($base.$f)),* }
    };
}

impl Params {
    pub fn from_file(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| UsageError(format!("bad config {}: {e}", path.display())))
    }

    /// `over` wins wherever it sets a value.
    pub fn layered(self, over: Params) -> Params {
        layer!(
            self, over, n, k, xi, p_min, n_max, t_max, t_step, t, l, eps, seed, quad_tol, format,
            out, jobs, xi_values, n_values, k_values
        )
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(8)
    }

    /// Mode 1 unless the block is too small to have it.
    pub fn k(&self) -> usize {
        self.k.unwrap_or(if self.n() <= 2 { 0 } else { 1 })
    }

    pub fn xi(&self) -> f64 {
        self.xi.unwrap_or(1.0)
    }

    pub fn p_min(&self) -> f64 {
        self.p_min.unwrap_or(0.99)
    }

    pub fn n_max(&self) -> usize {
        self.n_max.unwrap_or(10)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max.unwrap_or(5.0)
    }

    pub fn t_step(&self) -> f64 {
        self.t_step.unwrap_or(0.05)
    }

    pub fn t(&self) -> f64 {
        self.t.unwrap_or(0.0)
    }

    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or(1e-4)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol.unwrap_or(tfim_core::quench::DEFAULT_QUAD_TOL)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    /// Time grid `0, dt, …` up to `t_max`, built by multiplication so that
    /// grid points do not drift.
    pub fn time_grid(&self) -> Result<Vec<f64>, UsageError> {
        let (t_max, dt) = (self.t_max(), self.t_step());
        if !(dt > 0.0 && dt.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(UsageError(format!(
                "time grid needs t-step > 0 and t-max >= 0 (got {dt}, {t_max})"
            )));
        }
        let count = (t_max / dt + 1e-9).floor() as usize;
        if count > 1_000_000 {
            return Err(UsageError(format!("time grid of {count} points is too large")));
        }
        Ok((0..=count).map(|i| i as f64 * dt).collect())
    }

    /// Every scalar parameter with its default filled in. `l` stays unset
    /// (infinite chain) and grids stay unset (single cell).
    pub fn resolved(&self) -> Params {
        Params {
            n: Some(self.n()),
            k: Some(self.k()),
            xi: Some(self.xi()),
            p_min: Some(self.p_min()),
            n_max: Some(self.n_max()),
            t_max: Some(self.t_max()),
            t_step: Some(self.t_step()),
            t: Some(self.t()),
            eps: Some(self.eps()),
            seed: Some(self.seed()),
            quad_tol: Some(self.quad_tol()),
            format: Some(self.format()),
            ..self.clone()
        }
    }

    /// Parameters recorded in output headers: everything that can change
    /// the numbers. Output location and thread count are excluded so that
    /// reruns compare byte for byte.
    pub fn provenance(&self) -> Vec<(String, String)> {
        let shown = Params {
            out: None,
            jobs: None,
            ..self.resolved()
        };
        let value = serde_json::to_value(&shown).expect("params serialize");
        value
            .as_object()
            .expect("params are a map")
            .iter()
            .filter(|(_, v)| !v.is_null())
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file: Params = toml::from_str("n = 4\nxi = 1.5\np-min = 0.9\n").unwrap();
        let cli = Params {
            xi: Some(2.0),
            ..Default::default()
        };
        let p = file.layered(cli);
        assert_eq!((p.n(), p.xi(), p.p_min()), (4, 2.0, 0.9));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Params>("nn = 3").is_err());
    }

    #[test]
    fn grid_endpoints() {
        let p = Params {
            t_max: Some(1.0),
            t_step: Some(0.1),
            ..Default::default()
        };
        let g = p.time_grid().unwrap();
        assert_eq!(g.len(), 11);
        assert!((g[10] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn default_mode_follows_block_size() {
        let p = Params {
            n: Some(2),
            ..Default::default()
        };
        assert_eq!(p.k(), 0);
        assert_eq!(Params::default().k(), 1);
    }
}
