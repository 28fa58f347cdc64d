use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::process::{drift_field, jacobian_at_equilibrium, local_covariance_raw, ProcessSpec};
use super::rate::RateFunction;
use crate::factor::JumpVector;
use crate::spectral::{check_hurwitz, CovarianceMatrix};

/// Tolerance on `|F(c)|` for the equilibrium check.
pub const EQUILIBRIUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Outcome of the structural and analytic assumption checks.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub g0: Verdict,
    pub g1: Verdict,
    pub g2: Verdict,
    pub g3: Verdict,
    pub g4: Verdict,
    pub s2: Verdict,
    pub s3: Verdict,
    pub s4: Verdict,
    pub covariance_pd: Verdict,
    /// Largest `ε₀` with `inf_{B_{δ₀}(c)} g^J ≥ ε₀ g^J(c)` for every `J`.
    pub epsilon0: f64,
    /// For each coordinate `j`, a shortest list of jumps summing to `e^(j)`.
    pub witnesses: Vec<Option<Vec<JumpVector>>>,
}

impl AssumptionReport {
    /// G0 through G4 together with a positive definite `σ²(c)`.
    pub fn general_ok(&self) -> bool {
        [
            &self.g0,
            &self.g1,
            &self.g2,
            &self.g3,
            &self.g4,
            &self.covariance_pd,
        ]
        .iter()
        .all(|v| v.pass)
    }

    pub fn elementary_ok(&self) -> bool {
        self.general_ok() && self.s2.pass && self.s3.pass && self.s4.pass
    }
}

pub fn check_assumptions(spec: &ProcessSpec) -> AssumptionReport {
    let d = spec.dim();
    let c = spec.c();

    let f = drift_field(spec, c);
    let f_norm = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let g0 = Verdict::new(
        f_norm <= EQUILIBRIUM_TOL,
        format!("max |F(c)| = {f_norm:e}"),
    );

    let a = jacobian_at_equilibrium(spec);
    let g1 = Verdict::new(
        check_hurwitz(&a),
        format!("spectral abscissa of DF(c) = {:e}", a.spectral_abscissa()),
    );

    let general: Vec<String> = spec
        .jumps()
        .iter()
        .filter(|(_, r)| !r.is_affine())
        .map(|(_, r)| r.kind())
        .collect();
    let g2 = if general.is_empty() {
        Verdict::new(true, "all rates constant or affine")
    } else {
        Verdict::new(
            true,
            format!("smoothness declared by caller for {}", general.join(", ")),
        )
    };

    let mut epsilon0 = f64::INFINITY;
    let mut bad_rate = None;
    for (j, rate) in spec.jumps() {
        let at_c = rate.eval(c);
        let (lo, _) = rate.range_on_ball(c, spec.delta0());
        if at_c <= 0.0 || lo <= 0.0 {
            bad_rate = Some(j.clone());
            epsilon0 = 0.0;
            break;
        }
        epsilon0 = epsilon0.min(lo / at_c);
    }
    let g3 = match &bad_rate {
        Some(j) => Verdict::new(
            false,
            format!("rate of jump {j} is not bounded away from 0 on the locality ball"),
        ),
        None => Verdict::new(true, format!("epsilon0 = {epsilon0}")),
    };

    let witnesses = g4_witnesses(spec.jumps().iter().map(|(j, _)| j), d);
    let missing: Vec<usize> = witnesses
        .iter()
        .enumerate()
        .filter(|(_, w)| w.is_none())
        .map(|(i, _)| i)
        .collect();
    let g4 = if missing.is_empty() {
        let depth = witnesses.iter().flatten().map(Vec::len).max().unwrap_or(0);
        Verdict::new(true, format!("every e^(j) reachable, max depth {depth}"))
    } else {
        Verdict::new(
            false,
            format!(
                "no sequence of length <= {} reaches coordinates {missing:?}",
                2 * d
            ),
        )
    };

    let s2_missing: Vec<usize> = (0..d)
        .filter(|&i| {
            let e = JumpVector::unit(d, i);
            let has = |v: &JumpVector| spec.jumps().iter().any(|(j, _)| j == v);
            !(has(&e) && has(&e.neg()))
        })
        .collect();
    let s2 = Verdict::new(
        s2_missing.is_empty(),
        format!("coordinates lacking ±e^(j): {s2_missing:?}"),
    );

    let s3_bad: Vec<String> = spec
        .jumps()
        .iter()
        .filter(|(j, r)| j.positive_unit_index().is_none() && !r.is_constant())
        .map(|(j, _)| j.to_string())
        .collect();
    let s3 = Verdict::new(
        s3_bad.is_empty(),
        format!("non-constant rates off the positive axes: {s3_bad:?}"),
    );

    let s4_bad: Vec<String> = spec
        .jumps()
        .iter()
        .filter(|(j, r)| {
            j.positive_unit_index().is_some() && {
                let at_c = r.eval(c);
                let (lo, _) = r.range_on_ball(c, spec.delta0());
                !r.is_affine() || lo < 0.5 * at_c * (1.0 - 1e-12)
            }
        })
        .map(|(j, _)| j.to_string())
        .collect();
    let s4 = Verdict::new(
        s4_bad.is_empty(),
        format!("positive-axis rates failing the affine half-bound: {s4_bad:?}"),
    );

    let covariance_pd = match CovarianceMatrix::new(local_covariance_raw(spec, c)) {
        Ok(_) => Verdict::new(true, "sigma^2(c) positive definite"),
        Err(e) => Verdict::new(false, e.to_string()),
    };

    AssumptionReport {
        g0,
        g1,
        g2,
        g3,
        g4,
        s2,
        s3,
        s4,
        covariance_pd,
        epsilon0,
        witnesses,
    }
}

/// Breadth-first search over partial sums of at most `2d` jumps.
fn g4_witnesses<'a>(
    jumps: impl Iterator<Item = &'a JumpVector>,
    d: usize,
) -> Vec<Option<Vec<JumpVector>>> {
    let jumps: Vec<&JumpVector> = jumps.collect();
    let origin = vec![0i64; d];
    let mut parent: HashMap<Vec<i64>, (Vec<i64>, usize)> = HashMap::new();
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::from([(origin.clone(), 0)]);
    let mut queue = VecDeque::from([origin.clone()]);
    let max_depth = 2 * d;
    while let Some(p) = queue.pop_front() {
        let depth = seen[&p];
        if depth == max_depth {
            continue;
        }
        for (k, j) in jumps.iter().enumerate() {
            let q: Vec<i64> = p.iter().zip(j.coords()).map(|(a, b)| a + b).collect();
            if !seen.contains_key(&q) {
                seen.insert(q.clone(), depth + 1);
                parent.insert(q.clone(), (p.clone(), k));
                queue.push_back(q);
            }
        }
    }
    (0..d)
        .map(|i| {
            let target = JumpVector::unit(d, i).0;
            seen.contains_key(&target).then(|| {
                let mut path = Vec::new();
                let mut cur = target;
                while cur != origin {
                    let (prev, k) = parent[&cur].clone();
                    path.push(jumps[k].clone());
                    cur = prev;
                }
                path.reverse();
                path
            })
        })
        .collect()
}

/// `ε₀ g^J(c)` minimised over jumps: the `μ*` of the ledger.
pub fn mu_star(spec: &ProcessSpec, epsilon0: f64) -> f64 {
    spec.jumps()
        .iter()
        .map(|(_, r): &(JumpVector, RateFunction)| epsilon0 * r.eval(spec.c()))
        .fold(f64::INFINITY, f64::min)
}
