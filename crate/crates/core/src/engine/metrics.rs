use std::collections::HashMap;

use super::solve::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::model::ConstantsLedger;
use crate::spectral::GeometrySolution;

/// `½ Σ |p - q|` over the union of supports.
pub fn tv_distance(p: &DiscreteDistribution, q: &DiscreteDistribution) -> f64 {
    if p.states == q.states {
        return (0.5
            * p.probs
                .iter()
                .zip(&q.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
        .min(1.0);
    }
    let mut diff: HashMap<&[i64], f64> = HashMap::with_capacity(p.len() + q.len());
    for (x, w) in p.states.iter().zip(&p.probs) {
        *diff.entry(x.as_slice()).or_insert(0.0) += w;
    }
    for (x, w) in q.states.iter().zip(&q.probs) {
        *diff.entry(x.as_slice()).or_insert(0.0) -= w;
    }
    // Sum in a fixed order so the result does not depend on hashing.
    let mut keys: Vec<&&[i64]> = diff.keys().collect();
    keys.sort();
    (0.5 * keys.into_iter().map(|k| diff[*k].abs()).sum::<f64>()).min(1.0)
}

/// `d_TV(Π, Π * δ_{e^(j)})`.
pub fn shift_tv(pi: &DiscreteDistribution, j: usize) -> Result<f64> {
    if pi.states.first().is_some_and(|s| j >= s.len()) {
        return Err(Error::Dimension(format!("axis {j} out of range")));
    }
    let index: HashMap<&[i64], usize> = pi
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i))
        .collect();
    let mut total = 0.0;
    // Points of the shifted support: X + e_j for X in the support.
    for (i, x) in pi.states.iter().enumerate() {
        let mut y = x.clone();
        y[j] += 1;
        let here = index.get(y.as_slice()).map_or(0.0, |&k| pi.probs[k]);
        total += (here - pi.probs[i]).abs();
    }
    // Points of the original support not hit by the shift.
    for (i, x) in pi.states.iter().enumerate() {
        let mut y = x.clone();
        y[j] -= 1;
        if !index.contains_key(y.as_slice()) {
            total += pi.probs[i];
        }
    }
    Ok((0.5 * total).min(1.0))
}

/// `E ‖X - nc‖_Σ^p` for `p ∈ {1, 2}`.
pub fn sigma_moment(
    pi: &DiscreteDistribution,
    geom: &GeometrySolution,
    nc: &[f64],
    p: u32,
) -> Result<f64> {
    if !(p == 1 || p == 2) {
        return Err(Error::Precondition(format!(
            "moment order {p} not in {{1, 2}}"
        )));
    }
    Ok(pi.expect(|x| {
        let y: Vec<f64> = x.iter().zip(nc).map(|(&a, b)| a as f64 - b).collect();
        let q = geom.quad_form(&y).max(0.0);
        if p == 2 {
            q
        } else {
            q.sqrt()
        }
    }))
}

/// Measured `Π{‖X - nc‖_Σ > nη}` together with `η⁻² d² K_Σ e^{-nθ₁η²}`.
pub fn concentration_tail(
    pi: &DiscreteDistribution,
    geom: &GeometrySolution,
    nc: &[f64],
    n: u64,
    eta: f64,
    ledger: &ConstantsLedger,
) -> Result<(f64, f64)> {
    let threshold = ledger.concentration_threshold(n);
    if eta <= threshold {
        return Err(Error::Precondition(format!(
            "eta = {eta} must exceed K sqrt(d/n) = {threshold}"
        )));
    }
    let r2 = (n as f64 * eta).powi(2);
    let measured = pi.expect(|x| {
        let y: Vec<f64> = x.iter().zip(nc).map(|(&a, b)| a as f64 - b).collect();
        if geom.quad_form(&y) > r2 {
            1.0
        } else {
            0.0
        }
    });
    Ok((measured, ledger.concentration_bound(n, eta)))
}
