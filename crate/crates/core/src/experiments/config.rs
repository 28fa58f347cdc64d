//! Experiment configuration files.
//!
//! ```toml
//! schema_version = 1
//!
//! [experiment]
//! kind = "bivariate"          # optional; checked against the subcommand
//! n_grid = [10, 16, 25, 40, 63]
//! delta = 0.5                 # optional; see `DEFAULT_DELTA_FRACTION`
//! seed = 7
//! b_sets = 25
//!
//! [bivariate]                 # optional; every field has a default
//! alpha1 = 1.0
//! alpha2 = 1.0
//! alpha12 = 2.0
//! mu1 = 1.0
//! mu2 = 2.0
//! a = [1.0, 1.0]
//! delta0 = 1.0
//!
//! [process]                   # same table as a process file
//! type = "elementary"
//! ...
//!
//! [simulation]
//! horizon = 5.0
//! reps = 10000
//! ```

use serde::{Deserialize, Serialize};

use super::bivariate::BivariateParams;
use super::studies::BIVARIATE_DELTA_FRACTION;
use crate::error::{Error, Result};
use crate::model::config::{check_schema, ProcessConfig};
use crate::model::ProcessSpec;

pub const DEFAULT_N_GRID: [u64; 6] = [10, 16, 25, 40, 63, 100];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Constants,
    Equilibrium,
    Stein,
    Couple,
    Simulate,
    Bivariate,
    Scaling,
    Bounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSettings {
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub n_grid: Option<Vec<u64>>,
    /// Truncation radius. When absent, a fixed fraction of the largest
    /// admissible value is used.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Number of random target sets for Stein experiments.
    #[serde(default = "default_b_sets")]
    pub b_sets: usize,
    /// `η` values for the concentration table, as fractions of `δ`.
    #[serde(default)]
    pub eta_fractions: Option<Vec<f64>>,
}

fn default_seed() -> u64 {
    1
}

fn default_b_sets() -> usize {
    25
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            kind: None,
            n_grid: None,
            delta: None,
            seed: default_seed(),
            b_sets: default_b_sets(),
            eta_fractions: None,
        }
    }
}

/// Bivariate parameters plus the locality radius declared for the
/// translated process. Missing fields take their default values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BivariateSection {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha12: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub a: [f64; 2],
    pub delta0: f64,
}

impl Default for BivariateSection {
    fn default() -> Self {
        let p = BivariateParams::default();
        Self {
            alpha1: p.alpha1,
            alpha2: p.alpha2,
            alpha12: p.alpha12,
            mu1: p.mu1,
            mu2: p.mu2,
            a: p.a,
            delta0: 1.0,
        }
    }
}

impl BivariateSection {
    pub fn params(&self) -> BivariateParams {
        BivariateParams {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            alpha12: self.alpha12,
            mu1: self.mu1,
            mu2: self.mu2,
            a: self.a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Start state; the lattice point nearest `nc` when absent.
    #[serde(default)]
    pub x0: Option<Vec<i64>>,
    /// Second start state for coupling runs.
    #[serde(default)]
    pub x1: Option<Vec<i64>>,
    /// Time grid for transient and coupling comparisons.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
}

fn default_reps() -> u64 {
    10_000
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            horizon: None,
            reps: default_reps(),
            seed: None,
            x0: None,
            x1: None,
            times: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub experiment: ExperimentSettings,
    #[serde(default)]
    pub bivariate: Option<BivariateSection>,
    #[serde(default)]
    pub process: Option<ProcessConfig>,
    /// Second process for the scaling study; must share `(c, A, σ²)`.
    #[serde(default)]
    pub reference: Option<ProcessConfig>,
    #[serde(default)]
    pub simulation: Option<SimulationConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: crate::model::config::SCHEMA_VERSION,
            experiment: ExperimentSettings::default(),
            bivariate: None,
            process: None,
            reference: None,
            simulation: None,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        check_schema(cfg.schema_version)?;
        cfg.validate_grid()?;
        Ok(cfg)
    }

    /// Rejects a config whose declared kind differs from `kind`.
    pub fn expect_kind(&self, kind: ExperimentKind) -> Result<()> {
        match self.experiment.kind {
            Some(k) if k != kind => {
                Err(Error::Config(format!("config is for {k:?}, not {kind:?}")))
            }
            _ => Ok(()),
        }
    }

    fn validate_grid(&self) -> Result<()> {
        if let Some(g) = &self.experiment.n_grid {
            if g.is_empty() || g[0] == 0 || g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(
                    "n_grid must be nonempty, positive and strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn n_grid(&self) -> Vec<u64> {
        self.experiment
            .n_grid
            .clone()
            .unwrap_or_else(|| DEFAULT_N_GRID.to_vec())
    }

    pub fn bivariate_section(&self) -> BivariateSection {
        self.bivariate.unwrap_or_default()
    }

    pub fn simulation(&self) -> SimulationConfig {
        self.simulation.clone().unwrap_or_default()
    }

    /// The configured process, or the translated bivariate process.
    pub fn process_spec(&self, n: u64) -> Result<ProcessSpec> {
        match &self.process {
            Some(p) => Ok(p.build()?.with_n(n)),
            None => {
                let b = self.bivariate_section();
                b.params().translated_spec(n, b.delta0)
            }
        }
    }

    /// Scale for single-point experiments: the configured process's own
    /// `n`, or the first grid entry for the bivariate process.
    pub fn point_n(&self) -> u64 {
        match &self.process {
            Some(ProcessConfig::Explicit { n, .. } | ProcessConfig::Elementary { n, .. }) => *n,
            None => self.n_grid()[0],
        }
    }

    /// `δ` with the default fraction that suits the configured process.
    pub fn resolve_delta(&self, spec: &ProcessSpec) -> Result<f64> {
        let fraction = if self.process.is_none() {
            BIVARIATE_DELTA_FRACTION
        } else {
            DEFAULT_DELTA_FRACTION
        };
        self.delta_for(spec, fraction)
    }

    /// `δ` for `spec`: the configured value, checked against
    /// `(0, δ₀/√λ_max(Σ))`, or `fraction` of that upper limit.
    pub fn delta_for(&self, spec: &ProcessSpec, fraction: f64) -> Result<f64> {
        let limit = delta_limit(spec)?;
        match self.experiment.delta {
            Some(d) if d > 0.0 && d < limit => Ok(d),
            Some(d) => Err(Error::Config(format!(
                "delta = {d} must lie in (0, {limit})"
            ))),
            None => Ok(fraction * limit),
        }
    }
}

/// `δ₀ / √λ_max(Σ)`.
pub fn delta_limit(spec: &ProcessSpec) -> Result<f64> {
    let geom = spec.geometry()?;
    Ok(spec.delta0() / geom.sigma_summary().lambda_max.sqrt())
}

/// The fraction of `δ₀/√λ_max(Σ)` used when no `δ` is configured.
pub const DEFAULT_DELTA_FRACTION: f64 = 0.4;
