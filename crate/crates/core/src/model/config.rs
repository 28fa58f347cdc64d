//! Text configuration for process specifications.
//!
//! ```toml
//! schema_version = 1
//! [process]
//! type = "explicit"
//! n = 40
//! c = [1.0]
//! delta0 = 0.5
//! jumps = [
//!   { jump = [1], rate = { kind = "constant", value = 1.0 } },
//!   { jump = [-1], rate = { kind = "affine", value = 1.0, gradient = [1.0] } },
//! ]
//! ```
//!
//! An `elementary` process is given by `c`, `a` and `sigma2` (row lists)
//! instead of a jump table.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::elementary::build_elementary;
use super::process::ProcessSpec;
use super::rate::{MassAction, RateFunction, Saturating};
use crate::error::{Error, Result};
use crate::factor::JumpVector;
use crate::spectral::{CovarianceMatrix, DriftMatrix};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coord: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_saturation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpConfig {
    pub jump: Vec<i64>,
    pub rate: RateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessConfig {
    Explicit {
        n: u64,
        c: Vec<f64>,
        delta0: f64,
        jumps: Vec<JumpConfig>,
    },
    Elementary {
        n: u64,
        c: Vec<f64>,
        a: Vec<Vec<f64>>,
        sigma2: Vec<Vec<f64>>,
    },
}

fn need<T>(v: Option<T>, kind: &str, field: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("rate kind '{kind}' requires field '{field}'")))
}

fn square(rows: &[Vec<f64>], d: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Config(format!(
            "{name} must be a {d}x{d} list of rows"
        )));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl RateConfig {
    pub fn build(&self, c: &[f64]) -> Result<RateFunction> {
        let kind = self.kind.as_str();
        match kind {
            "constant" => Ok(RateFunction::Constant(need(self.value, kind, "value")?)),
            "affine" => {
                let gradient = need(self.gradient.clone(), kind, "gradient")?;
                if gradient.len() != c.len() {
                    return Err(Error::Config(format!(
                        "affine gradient must have length {}",
                        c.len()
                    )));
                }
                Ok(RateFunction::Affine {
                    value: need(self.value, kind, "value")?,
                    gradient,
                    center: c.to_vec(),
                })
            }
            "builtin:mass_action" => {
                let exponents = need(self.exponents.clone(), kind, "exponents")?;
                if exponents.len() != c.len() {
                    return Err(Error::Config(format!(
                        "mass_action exponents must have length {}",
                        c.len()
                    )));
                }
                Ok(RateFunction::General(Arc::new(MassAction {
                    k: need(self.k, kind, "k")?,
                    exponents,
                })))
            }
            "builtin:saturating" => {
                let coord = need(self.coord, kind, "coord")?;
                if coord >= c.len() {
                    return Err(Error::Config(format!(
                        "saturating coord {coord} out of range"
                    )));
                }
                Ok(RateFunction::General(Arc::new(Saturating {
                    k: need(self.k, kind, "k")?,
                    coord,
                    half_saturation: need(self.half_saturation, kind, "half_saturation")?,
                })))
            }
            other => Err(Error::Config(format!("unknown rate kind '{other}'"))),
        }
    }
}

impl ProcessConfig {
    pub fn build(&self) -> Result<ProcessSpec> {
        match self {
            ProcessConfig::Explicit {
                n,
                c,
                delta0,
                jumps,
            } => {
                let jumps = jumps
                    .iter()
                    .map(|jc| Ok((JumpVector::new(jc.jump.clone()), jc.rate.build(c)?)))
                    .collect::<Result<Vec<_>>>()?;
                ProcessSpec::new(jumps, *n, c.clone(), *delta0)
            }
            ProcessConfig::Elementary { n, c, a, sigma2 } => {
                let d = c.len();
                let a = DriftMatrix::new(square(a, d, "a")?)?;
                let s2 = CovarianceMatrix::new(square(sigma2, d, "sigma2")?)?;
                Ok(build_elementary(c, &a, &s2)?.spec.with_n(*n))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProcessFile {
    schema_version: u32,
    process: ProcessConfig,
}

pub fn check_schema(version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema_version {version}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

/// Parses a document holding `schema_version` and a `[process]` table.
pub fn parse_process(text: &str) -> Result<ProcessConfig> {
    let file: ProcessFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    check_schema(file.schema_version)?;
    Ok(file.process)
}
