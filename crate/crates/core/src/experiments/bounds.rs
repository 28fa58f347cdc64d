//! Measured counterparts of the drift, concentration and Stein-solution
//! bounds on a solved truncated chain.

use rand::Rng;
use serde::Serialize;

use crate::engine::{ChainSolver, DiscreteDistribution, TruncatedChain};
use crate::error::Result;
use crate::model::{
    apply_generator, apply_reduced_generator, delta, delta2, jacobian_at_equilibrium,
    local_covariance, ConstantsLedger, TruncatedModel,
};
use crate::sim::replicate_rng;

use super::config::ExperimentConfig;
use super::table::{Band, ResultTable};

/// A target set `B = {X : uᵀ(X - nc) ≤ t √(n uᵀΣu)}`.
///
/// The offset is measured in equilibrium standard deviations, so a given
/// `(u, t)` describes a set of comparable probability at every scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfSpace {
    pub u: Vec<f64>,
    pub t: f64,
}

impl HalfSpace {
    /// Indices of the chain states that lie in `B`.
    pub fn members(&self, model: &TruncatedModel, chain: &TruncatedChain) -> Vec<usize> {
        let s = &model.geom.sigma;
        let d = self.u.len();
        let mut var = 0.0;
        for i in 0..d {
            for j in 0..d {
                var += self.u[i] * s[(i, j)] * self.u[j];
            }
        }
        let cut = self.t * (model.n() as f64 * var).sqrt();
        let nc = model.nc();
        (0..chain.len())
            .filter(|&i| {
                let x = chain.state(i);
                let proj: f64 = (0..d).map(|k| self.u[k] * (x[k] as f64 - nc[k])).sum();
                proj <= cut
            })
            .collect()
    }
}

/// `count` half-spaces with directions uniform on the sphere and offsets
/// uniform in `[-t_max, t_max]`. Set `k` depends only on `(seed, k)`.
pub fn random_half_spaces(dim: usize, count: usize, seed: u64, t_max: f64) -> Vec<HalfSpace> {
    (0..count)
        .map(|k| {
            let mut rng = replicate_rng(seed, k as u64);
            let u = loop {
                let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                if (0.1..=1.0).contains(&norm) {
                    break v.into_iter().map(|a| a / norm).collect();
                }
            };
            HalfSpace {
                u,
                t: t_max * rng.random_range(-1.0..=1.0),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftCheck {
    /// States with `‖X - nc‖_Σ ≥ K √(nd)`.
    pub qualifying: usize,
    /// Qualifying states where `𝒜h₀(X) > -α₁ h₀(X)`.
    pub violations: usize,
    /// `max (𝒜h₀ + α₁h₀) / h₀` over the qualifying states.
    pub worst_margin: f64,
    /// Same count for `h_θ` with `θ = θ₁`; `None` below `n_drift`.
    pub exp_violations: Option<usize>,
}

/// Tolerance on the drift inequalities, relative to `h₀(X)`.
const DRIFT_RTOL: f64 = 1e-12;

/// Checks both drift inequalities by enumerating the chain.
pub fn drift_check(
    model: &TruncatedModel,
    chain: &TruncatedChain,
    ledger: &ConstantsLedger,
) -> Result<DriftCheck> {
    let r2 = ledger.drift_radius(model.n()).powi(2);
    let nf = model.n() as f64;
    let theta = ledger.theta1;
    let exp_applies = nf >= ledger.n_drift;
    let mut out = DriftCheck {
        qualifying: 0,
        violations: 0,
        worst_margin: f64::NEG_INFINITY,
        exp_violations: None,
    };
    let mut exp_bad = 0usize;
    for x in chain.states() {
        let h = model.h0(x);
        if h < r2 {
            continue;
        }
        out.qualifying += 1;
        let ah = apply_generator(model, |y| Some(model.h0(y)), x)?;
        let margin = (ah + ledger.alpha1 * h) / h;
        out.worst_margin = out.worst_margin.max(margin);
        if margin > DRIFT_RTOL {
            out.violations += 1;
        }
        if exp_applies {
            // Divide through by h_θ(X) to stay in range.
            let aexp = apply_generator(model, |y| Some((theta * (model.h0(y) - h) / nf).exp()), x)?;
            let rhs = -0.5 * ledger.alpha1 * theta * h / nf;
            if aexp > rhs + DRIFT_RTOL * rhs.abs() {
                exp_bad += 1;
            }
        }
    }
    out.exp_violations = exp_applies.then_some(exp_bad);
    if out.qualifying == 0 {
        out.worst_margin = f64::NAN;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConcentrationRow {
    pub eta: f64,
    pub measured: f64,
    pub bound: f64,
}

/// Measured tail and bound at each admissible `η` (those above the
/// threshold `K √(d/n)`); other values are skipped.
pub fn concentration_table(
    model: &TruncatedModel,
    pi: &DiscreteDistribution,
    ledger: &ConstantsLedger,
    etas: &[f64],
) -> Result<Vec<ConcentrationRow>> {
    let threshold = ledger.concentration_threshold(model.n());
    etas.iter()
        .filter(|&&eta| eta > threshold)
        .map(|&eta| {
            let (measured, bound) = crate::engine::concentration_tail(
                pi,
                &model.geom,
                model.nc(),
                model.n(),
                eta,
                ledger,
            )?;
            Ok(ConcentrationRow {
                eta,
                measured,
                bound,
            })
        })
        .collect()
}

/// Size of a Stein solution and of its differences over the inner ball.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SteinDifferences {
    pub pi_b: f64,
    pub sup_h: f64,
    /// `max_w max_j |Δ_j h(w)|` over `‖w - nc‖_Σ ≤ nδ/4`.
    pub sup_dh: f64,
    /// `max_w max_{j,k} |Δ_{jk} h(w)|` over the same ball.
    pub sup_d2h: f64,
    /// `|Σ_{w in inner ball} π(w) ((𝒜 - 𝒜̃) h)(w)|`.
    pub reduction: f64,
}

/// States of the chain within Σ-distance `nδ/4` of `nc`.
pub fn inner_ball(model: &TruncatedModel, chain: &TruncatedChain) -> Vec<usize> {
    let r2 = (model.radius() / 4.0).powi(2);
    (0..chain.len())
        .filter(|&i| model.h0(chain.state(i)) <= r2)
        .collect()
}

/// Solves the Stein equation for `B` and measures its differences.
pub fn stein_differences(
    model: &TruncatedModel,
    chain: &TruncatedChain,
    solver: &ChainSolver<'_>,
    pi: &DiscreteDistribution,
    inner: &[usize],
    b: &HalfSpace,
) -> Result<SteinDifferences> {
    let members = b.members(model, chain);
    let sol = solver.stein(pi, &members)?;
    let h = |x: &[i64]| chain.index_of(x).map(|i| sol.values[i]);
    let hv = |x: &[i64]| h(x).unwrap_or(f64::NAN);
    let d = model.dim();
    let spec = &model.spec;
    let a = jacobian_at_equilibrium(spec);
    let s2 = local_covariance(spec, spec.c())?;
    let (mut dh, mut d2h, mut red) = (0.0f64, 0.0f64, 0.0);
    let mut in_b = vec![false; chain.len()];
    members.iter().for_each(|&i| in_b[i] = true);
    for &i in inner {
        let w = chain.state(i);
        for j in 0..d {
            dh = dh.max(delta(&hv, w, j).abs());
            for k in 0..d {
                d2h = d2h.max(delta2(&hv, w, j, k).abs());
            }
        }
        let gen = if in_b[i] { 1.0 } else { 0.0 } - sol.pi_b;
        let reduced = apply_reduced_generator(s2.matrix(), &a, spec.c(), model.n(), &hv, w);
        red += pi.probs[i] * (gen - reduced);
    }
    let sup_h = sol.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(SteinDifferences {
        pi_b: sol.pi_b,
        sup_h,
        sup_dh: dh,
        sup_d2h: d2h,
        reduction: red.abs(),
    })
}

/// Median of a nonempty sample.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Largest offset for which the boundary of every half-space meets the
/// inner ball `‖X - nc‖_Σ ≤ nδ/4` at every `n ≥ n_min`: the closest point
/// of the boundary lies at Σ-distance `|t| √n`.
pub fn crossing_offset(n_min: u64, delta: f64) -> f64 {
    0.8 * (n_min as f64).sqrt() * delta / 4.0
}

/// Default `η` grid for the concentration table, as fractions of `δ`.
pub const ETA_FRACTIONS: [f64; 6] = [0.1, 0.2, 0.35, 0.5, 0.75, 1.0];

/// Everything measured at one scale.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsPoint {
    pub n: u64,
    pub states: usize,
    pub drift: DriftCheck,
    pub concentration: Vec<ConcentrationRow>,
    /// Whether `n` reaches the ledger threshold for the concentration bound.
    pub concentration_applies: bool,
    pub stein: Vec<SteinDifferences>,
}

/// Drift, concentration and Stein measurements for one truncated model.
pub fn run_bounds_point(
    model: &TruncatedModel,
    ledger: &ConstantsLedger,
    sets: &[HalfSpace],
    eta_fractions: &[f64],
) -> Result<BoundsPoint> {
    let chain = model.chain()?;
    let pi = crate::engine::stationary_distribution(&chain)?;
    let drift = drift_check(model, &chain, ledger)?;
    let etas: Vec<f64> = eta_fractions.iter().map(|f| f * model.delta).collect();
    let concentration = concentration_table(model, &pi, ledger, &etas)?;
    let solver = ChainSolver::for_stein(&chain, &pi)?;
    let inner = inner_ball(model, &chain);
    let stein = sets
        .iter()
        .map(|b| stein_differences(model, &chain, &solver, &pi, &inner, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsPoint {
        n: model.n(),
        states: chain.len(),
        drift,
        concentration,
        concentration_applies: model.n() as f64 >= ledger.n_drift,
        stein,
    })
}

pub const DH_BAND: (f64, f64) = (-0.75, -0.30);
pub const D2H_BAND: (f64, f64) = (-1.25, -0.75);

fn emit_point(table: &mut ResultTable, p: &BoundsPoint, alpha1: f64) {
    let n = Some(p.n);
    let nf = p.n as f64;
    table.info(n, "states", p.states as f64);
    table.info(n, "drift_qualifying_states", p.drift.qualifying as f64);
    table.check(
        n,
        "drift_violations",
        p.drift.violations as f64,
        Band::at_most(0.0),
    );
    table.info(n, "drift_worst_margin", p.drift.worst_margin);
    if let Some(v) = p.drift.exp_violations {
        table.check(n, "drift_exp_violations", v as f64, Band::at_most(0.0));
    }
    for row in &p.concentration {
        let metric = format!("concentration_eta_{:.4}", row.eta);
        table.info(n, &format!("{metric}_bound"), row.bound);
        if p.concentration_applies {
            table.check(n, &metric, row.measured, Band::at_most(row.bound));
        } else {
            table.info(n, &metric, row.measured);
        }
    }
    if p.stein.is_empty() {
        return;
    }
    let col = |f: fn(&SteinDifferences) -> f64| median(&p.stein.iter().map(f).collect::<Vec<_>>());
    let (h, dh, d2h, red) = (
        col(|s| s.sup_h),
        col(|s| s.sup_dh),
        col(|s| s.sup_d2h),
        col(|s| s.reduction),
    );
    let log_n = nf.ln();
    table.info(n, "median_sup_h", h);
    table.info(n, "median_sup_dh", dh);
    table.info(n, "median_sup_d2h", d2h);
    table.info(n, "median_reduction_error", red);
    table.info(
        n,
        "median_sup_dh_normalized",
        dh * alpha1 * nf.sqrt() / log_n,
    );
    table.info(n, "median_sup_d2h_normalized", d2h * alpha1 * nf / log_n);
}

/// The bounds suite at a single scale.
pub fn run_bounds_suite(
    spec: &crate::model::ProcessSpec,
    geom: &crate::spectral::GeometrySolution,
    delta: f64,
    sets: &[HalfSpace],
    provenance: super::table::Provenance,
) -> Result<ResultTable> {
    let model = TruncatedModel::new(spec.clone(), geom.clone(), delta)?;
    let ledger = crate::model::constants_ledger(spec, geom)?;
    let point = run_bounds_point(&model, &ledger, sets, &ETA_FRACTIONS)?;
    let mut table = ResultTable::new("bounds", provenance);
    table.info(None, "delta", delta);
    emit_point(&mut table, &point, geom.alpha1);
    Ok(table)
}

/// The bounds suite over the configured grid, with log–log slopes of the
/// median Stein differences.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<ResultTable> {
    use rayon::prelude::*;
    let grid = cfg.n_grid();
    let probe = cfg.process_spec(grid[0])?;
    let delta = cfg.resolve_delta(&probe)?;
    let sets = random_half_spaces(
        probe.dim(),
        cfg.experiment.b_sets,
        cfg.experiment.seed,
        crossing_offset(grid[0], delta),
    );
    let fractions = cfg
        .experiment
        .eta_fractions
        .clone()
        .unwrap_or_else(|| ETA_FRACTIONS.to_vec());
    let points = grid
        .par_iter()
        .map(|&n| {
            let spec = cfg.process_spec(n)?;
            let geom = spec.geometry()?;
            let ledger = crate::model::constants_ledger(&spec, &geom)?;
            let model = TruncatedModel::new(spec, geom, delta)?;
            run_bounds_point(&model, &ledger, &sets, &fractions)
        })
        .collect::<Result<Vec<_>>>()?;
    let alpha1 = probe.geometry()?.alpha1;
    let prov = super::table::Provenance::new(&(cfg, "bounds", delta), cfg.experiment.seed)?;
    let mut table = ResultTable::new("bounds", prov);
    table.info(None, "delta", delta);
    for p in &points {
        emit_point(&mut table, p, alpha1);
    }
    if points.len() >= 2 && !sets.is_empty() {
        let ns: Vec<u64> = points.iter().map(|p| p.n).collect();
        let series = |m: &str| {
            table
                .series(m)
                .into_iter()
                .map(|(_, v)| v)
                .collect::<Vec<_>>()
        };
        let (dh, d2h, red) = (
            series("median_sup_dh"),
            series("median_sup_d2h"),
            series("median_reduction_error"),
        );
        table.slope(
            "median_sup_dh",
            &ns,
            &dh,
            Band::between(DH_BAND.0, DH_BAND.1),
        );
        table.slope(
            "median_sup_d2h",
            &ns,
            &d2h,
            Band::between(D2H_BAND.0, D2H_BAND.1),
        );
        table.slope("median_reduction_error", &ns, &red, Band::at_most(0.0));
    }
    Ok(table)
}
