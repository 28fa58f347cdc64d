use std::io::Write;

use serde::Serialize;

use super::chain::TruncatedChain;
use crate::error::Result;

/// Writes one row per state: coordinates `x0..x{d-1}` then `value_name`.
pub fn write_state_values<W: Write>(
    out: W,
    states: &[Vec<i64>],
    values: &[f64],
    value_name: &str,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = states.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    header.push(value_name.to_string());
    w.write_record(&header)?;
    for (x, v) in states.iter().zip(values) {
        let mut rec: Vec<String> = x.iter().map(i64::to_string).collect();
        rec.push(format!("{v:e}"));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainMetadata {
    pub dim: usize,
    pub state_count: usize,
    pub transition_count: usize,
    pub uniformization_rate: f64,
    pub row_sum_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationary_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stein_residual: Option<f64>,
}

impl ChainMetadata {
    pub fn of(chain: &TruncatedChain) -> Self {
        Self {
            dim: chain.dim(),
            state_count: chain.len(),
            transition_count: (0..chain.len()).map(|i| chain.transitions(i).len()).sum(),
            uniformization_rate: chain.uniformization_rate(),
            row_sum_residual: chain.row_sum_residual(),
            stationary_residual: None,
            stein_residual: None,
        }
    }
}
