use std::collections::HashMap;
use std::f64::consts::PI;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::TruncatedModel;

/// Hard cap on enumerated states.
pub const MAX_STATES: usize = 2_000_000;

/// A finite continuous-time chain on lexicographically sorted lattice states.
#[derive(Debug, Clone)]
pub struct TruncatedChain {
    dim: usize,
    states: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
    /// Off-diagonal entries `Q[i][j] > 0`, one list per row, sorted by `j`.
    transitions: Vec<Vec<(usize, f64)>>,
    exit_rates: Vec<f64>,
    uniformization_rate: f64,
}

impl TruncatedChain {
    /// Builds a chain from explicit rates. States are re-sorted; duplicate
    /// transitions between the same pair are summed.
    pub fn from_transitions(
        states: Vec<Vec<i64>>,
        edges: &[(Vec<i64>, Vec<i64>, f64)],
    ) -> Result<Self> {
        let dim = states.first().map_or(0, Vec::len);
        let mut chain = Self::from_states(dim, states)?;
        let mut rows: Vec<HashMap<usize, f64>> = vec![HashMap::new(); chain.len()];
        for (from, to, rate) in edges {
            if *rate < 0.0 || !rate.is_finite() {
                return Err(Error::Model(format!(
                    "invalid rate {rate} from {from:?} to {to:?}"
                )));
            }
            let (Some(i), Some(j)) = (chain.index_of(from), chain.index_of(to)) else {
                return Err(Error::Model(format!(
                    "transition {from:?} -> {to:?} leaves the state set"
                )));
            };
            if i != j && *rate > 0.0 {
                *rows[i].entry(j).or_insert(0.0) += rate;
            }
        }
        chain.set_rows(rows.into_iter().map(|r| r.into_iter().collect()).collect());
        Ok(chain)
    }

    fn from_states(dim: usize, mut states: Vec<Vec<i64>>) -> Result<Self> {
        if states.iter().any(|s| s.len() != dim) {
            return Err(Error::Dimension("states of mixed dimension".into()));
        }
        states.sort();
        states.dedup();
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let n = states.len();
        Ok(Self {
            dim,
            states,
            index,
            transitions: vec![Vec::new(); n],
            exit_rates: vec![0.0; n],
            uniformization_rate: 0.0,
        })
    }

    fn set_rows(&mut self, mut rows: Vec<Vec<(usize, f64)>>) {
        for r in rows.iter_mut() {
            r.sort_by_key(|&(j, _)| j);
        }
        self.exit_rates = rows
            .iter()
            .map(|r| r.iter().map(|&(_, q)| q).sum())
            .collect();
        self.uniformization_rate = self.exit_rates.iter().cloned().fold(0.0, f64::max);
        self.transitions = rows;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Vec<i64>] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[i64] {
        &self.states[i]
    }

    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn transitions(&self, i: usize) -> &[(usize, f64)] {
        &self.transitions[i]
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        self.exit_rates[i]
    }

    /// Largest total exit rate.
    pub fn uniformization_rate(&self) -> f64 {
        self.uniformization_rate
    }

    /// `(Q v)_i = Σ_j Q_ij (v_j - v_i)`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.transitions
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().map(|&(j, q)| q * (v[j] - v[i])).sum())
            .collect()
    }

    /// `(pᵀ Q)_j`.
    pub fn apply_transpose(&self, p: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = p
            .iter()
            .zip(&self.exit_rates)
            .map(|(pi, e)| -pi * e)
            .collect();
        for (i, row) in self.transitions.iter().enumerate() {
            for &(j, q) in row {
                out[j] += p[i] * q;
            }
        }
        out
    }

    /// Largest absolute row sum of `Q` (diagonal included).
    pub fn row_sum_residual(&self) -> f64 {
        self.transitions
            .iter()
            .zip(&self.exit_rates)
            .map(|(row, e)| (row.iter().map(|&(_, q)| q).sum::<f64>() - e).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|idx(j) - idx(i)|` over transitions.
    pub fn bandwidth(&self) -> usize {
        self.transitions
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }
}

/// Rough state count `ω_d (nδ)^d √det Σ`.
pub fn volume_estimate(model: &TruncatedModel) -> f64 {
    let d = model.dim() as i32;
    let omega = match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        4 => PI * PI / 2.0,
        _ => PI.powf(d as f64 / 2.0) / gamma_half_int(d as f64 / 2.0 + 1.0),
    };
    omega * model.radius().powi(d) * model.geom.sigma.determinant().sqrt()
}

fn gamma_half_int(x: f64) -> f64 {
    // Γ for positive integers and half-integers.
    if x == 0.5 {
        PI.sqrt()
    } else if x == 1.0 {
        1.0
    } else {
        (x - 1.0) * gamma_half_int(x - 1.0)
    }
}

/// Lattice points `X` with `‖X - nc‖_Σ ≤ nδ`, in lexicographic order.
pub fn enumerate_ball(model: &TruncatedModel) -> Result<TruncatedChain> {
    let estimate = volume_estimate(model);
    if estimate > MAX_STATES as f64 {
        return Err(Error::Scale(format!(
            "about {estimate:.0} states exceed the limit of {MAX_STATES}"
        )));
    }
    let d = model.dim();
    let r = model.radius();
    let nc = model.nc();
    // Axis extents of the ellipsoid {y : yᵀΣ⁻¹y ≤ r²} are r √Σ_ii.
    let bounds: Vec<(i64, i64)> = (0..d)
        .map(|i| {
            let half = r * model.geom.sigma[(i, i)].sqrt();
            (
                (nc[i] - half).floor() as i64 - 1,
                (nc[i] + half).ceil() as i64 + 1,
            )
        })
        .collect();
    let mut states = Vec::new();
    let mut x: Vec<i64> = bounds.iter().map(|b| b.0).collect();
    'scan: loop {
        if model.contains(&x) {
            states.push(x.clone());
            if states.len() > MAX_STATES {
                return Err(Error::Scale(format!("more than {MAX_STATES} states")));
            }
        }
        let mut k = d;
        loop {
            if k == 0 {
                break 'scan;
            }
            k -= 1;
            if x[k] < bounds[k].1 {
                x[k] += 1;
                break;
            }
            x[k] = bounds[k].0;
        }
    }
    TruncatedChain::from_states(d, states)
}

/// Fills in the truncated rates of `model` on the enumerated states.
pub fn assemble_generator(
    model: &TruncatedModel,
    mut chain: TruncatedChain,
) -> Result<TruncatedChain> {
    let mut rows = Vec::with_capacity(chain.len());
    for x in chain.states() {
        let mut row = Vec::new();
        for (target, rate) in model.outgoing(x) {
            if rate < 0.0 || !rate.is_finite() {
                return Err(Error::Model(format!(
                    "rate {rate} at state {x:?} towards {target:?}"
                )));
            }
            let j = chain.index_of(&target).ok_or(Error::Numerical {
                context: "generator assembly",
                residual: f64::NAN,
            })?;
            if rate > 0.0 {
                row.push((j, rate));
            }
        }
        rows.push(row);
    }
    chain.set_rows(rows);
    Ok(chain)
}

impl TruncatedModel {
    /// Enumerates and assembles the truncated chain.
    pub fn chain(&self) -> Result<TruncatedChain> {
        assemble_generator(self, enumerate_ball(self)?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Irreducibility {
    pub irreducible: bool,
    /// Communicating classes as sorted state indices, ordered by first index.
    pub classes: Vec<Vec<usize>>,
}

pub fn irreducibility_check(chain: &TruncatedChain) -> Irreducibility {
    let mut g = DiGraph::<(), ()>::with_capacity(chain.len(), 0);
    let nodes: Vec<_> = (0..chain.len()).map(|_| g.add_node(())).collect();
    for i in 0..chain.len() {
        for &(j, _) in chain.transitions(i) {
            g.add_edge(nodes[i], nodes[j], ());
        }
    }
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    classes.sort();
    Irreducibility {
        irreducible: classes.len() <= 1,
        classes,
    }
}

/// Errors with the class list unless the chain is irreducible.
pub fn require_irreducible(chain: &TruncatedChain) -> Result<()> {
    let r = irreducibility_check(chain);
    if r.irreducible {
        Ok(())
    } else {
        Err(Error::Reducible { classes: r.classes })
    }
}
