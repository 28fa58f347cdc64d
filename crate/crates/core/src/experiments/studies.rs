//! Scaling studies over a grid of `n`: the bivariate immigration–death
//! application and the comparison of two processes with a common
//! `(c, A, σ²)`.

use rayon::prelude::*;
use serde::Serialize;

use super::bivariate::{exact_bivariate_equilibrium, restricted_exact, BivariateParams};
use super::config::{delta_limit, ExperimentConfig, DEFAULT_DELTA_FRACTION};
use super::table::{Band, Provenance, ResultTable};
use crate::engine::chain::{volume_estimate, MAX_STATES};
use crate::engine::{
    shift_tv, sigma_moment, stationary_distribution, tv_distance, DiscreteDistribution,
};
use crate::error::{Error, Result};
use crate::model::{
    build_elementary, check_assumptions, jacobian_at_equilibrium, local_covariance, ProcessSpec,
    TruncatedModel,
};

/// Fraction of `δ₀/√λ_max(Σ)` used for the bivariate process when the
/// config gives no `δ`. At `n ≤ 100` a smaller ball sits inside the bulk
/// of the equilibrium, which then mostly measures the truncation.
pub const BIVARIATE_DELTA_FRACTION: f64 = 0.9;

pub const SERIES_A_BAND: (f64, f64) = (f64::NEG_INFINITY, -0.8);
pub const SERIES_B_BAND: (f64, f64) = (-0.75, -0.30);
pub const SHIFT_BAND: (f64, f64) = (-0.70, -0.35);
/// Largest allowed `max/min` of `E‖X - nc‖²_Σ / n` over the grid.
pub const MOMENT_RATIO_MAX: f64 = 3.0;
/// Geometries of compared processes must agree to this (max entry of Σ).
pub const GEOMETRY_TOL: f64 = 1e-10;

fn band(b: (f64, f64)) -> Band {
    if b.0.is_finite() {
        Band::between(b.0, b.1)
    } else {
        Band::at_most(b.1)
    }
}

/// Truncated model at scale `n`, or `None` when its state count would
/// exceed the engine limit.
fn model_at(spec: ProcessSpec, delta: f64) -> Result<Option<TruncatedModel>> {
    let geom = spec.geometry()?;
    let model = TruncatedModel::new(spec, geom, delta)?;
    Ok((volume_estimate(&model) <= MAX_STATES as f64).then_some(model))
}

/// Equilibria of two processes on the same grid point.
struct PairPoint {
    n: u64,
    states: usize,
    first: DiscreteDistribution,
    second: DiscreteDistribution,
    first_model: TruncatedModel,
}

fn solve_pair(first: ProcessSpec, second: ProcessSpec, delta: f64) -> Result<Option<PairPoint>> {
    let n = first.n();
    let (Some(m1), Some(m2)) = (model_at(first, delta)?, model_at(second, delta)?) else {
        return Ok(None);
    };
    let c1 = m1.chain()?;
    let c2 = m2.chain()?;
    let first = stationary_distribution(&c1)?;
    let second = stationary_distribution(&c2)?;
    Ok(Some(PairPoint {
        n,
        states: c1.len(),
        first,
        second,
        first_model: m1,
    }))
}

/// Per-`n` measurements of one study point.
#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub n: u64,
    pub states: usize,
    pub tv_pair: f64,
    pub tv_exact: Option<f64>,
    pub shift: Vec<f64>,
    pub moment_ratio: f64,
}

fn measure(p: &PairPoint, exact: Option<&DiscreteDistribution>) -> Result<GridPoint> {
    let m = &p.first_model;
    let d = m.dim();
    let shift = (0..d)
        .map(|j| shift_tv(&p.first, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(GridPoint {
        n: p.n,
        states: p.states,
        tv_pair: tv_distance(&p.first, &p.second),
        tv_exact: exact.map(|e| tv_distance(e, &p.first)),
        shift,
        moment_ratio: sigma_moment(&p.first, &m.geom, m.nc(), 2)? / p.n as f64,
    })
}

fn emit_grid(
    table: &mut ResultTable,
    points: &[GridPoint],
    pair_metric: &str,
    pair_band: (f64, f64),
) {
    let ns: Vec<u64> = points.iter().map(|p| p.n).collect();
    for p in points {
        table.info(Some(p.n), "states", p.states as f64);
        table.info(Some(p.n), pair_metric, p.tv_pair);
        if let Some(v) = p.tv_exact {
            table.info(Some(p.n), "tv_exact_vs_truncated", v);
        }
        for (j, s) in p.shift.iter().enumerate() {
            table.info(Some(p.n), &format!("shift_tv_e{}", j + 1), *s);
        }
        table.info(Some(p.n), "sigma_moment2_over_n", p.moment_ratio);
    }
    if points.iter().any(|p| p.tv_exact.is_some()) {
        let ys: Vec<f64> = points
            .iter()
            .map(|p| p.tv_exact.unwrap_or(f64::NAN))
            .collect();
        table.slope("tv_exact_vs_truncated", &ns, &ys, band(SERIES_A_BAND));
    }
    let ys: Vec<f64> = points.iter().map(|p| p.tv_pair).collect();
    table.slope(pair_metric, &ns, &ys, band(pair_band));
    let d = points.first().map_or(0, |p| p.shift.len());
    for j in 0..d {
        let ys: Vec<f64> = points.iter().map(|p| p.shift[j]).collect();
        table.slope(&format!("shift_tv_e{}", j + 1), &ns, &ys, band(SHIFT_BAND));
    }
    let ratios: Vec<f64> = points.iter().map(|p| p.moment_ratio).collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    table.check(
        None,
        "sigma_moment2_over_n_max_min_ratio",
        hi / lo,
        Band::at_most(MOMENT_RATIO_MAX),
    );
}

/// Grid points in ascending `n`, skipping those over the state limit.
fn run_grid<F>(grid: &[u64], point: F) -> Result<(Vec<GridPoint>, Vec<u64>)>
where
    F: Fn(u64) -> Result<Option<GridPoint>> + Sync,
{
    let results: Vec<(u64, Result<Option<GridPoint>>)> =
        grid.par_iter().map(|&n| (n, point(n))).collect();
    let mut points = Vec::new();
    let mut clipped = Vec::new();
    for (n, r) in results {
        match r? {
            Some(p) => points.push(p),
            None => clipped.push(n),
        }
    }
    Ok((points, clipped))
}

/// The bivariate application: the exact equilibrium restricted to the ball
/// against the truncated equilibrium, and the truncated equilibrium against
/// that of the elementary process with the same `(c, A, σ²)`.
pub fn run_bivariate_application(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let section = cfg.bivariate_section();
    let params = section.params();
    params.validate()?;
    let grid = cfg.n_grid();
    let probe = params.translated_spec(grid[0], section.delta0)?;
    let delta = cfg.delta_for(&probe, BIVARIATE_DELTA_FRACTION)?;
    let elementary = build_elementary(&params.c(), &params.drift(), &params.sigma2()?)?;

    let (points, clipped) = run_grid(&grid, |n| {
        let spec = params.translated_spec(n, section.delta0)?;
        let Some(pair) = solve_pair(spec, elementary.spec.with_n(n), delta)? else {
            return Ok(None);
        };
        let exact = restricted_exact(&params, n, &pair.first.states)?;
        measure(&pair, Some(&exact)).map(Some)
    })?;

    let mut prov = Provenance::new(&(cfg, "bivariate", delta), cfg.experiment.seed)?;
    prov.notes
        .push("bivariate parameters are a convention, not taken from a numeric instance".into());
    let mut table = ResultTable::new("bivariate", prov);
    table.info(None, "delta", delta);
    table.info(None, "delta_limit", delta_limit(&probe)?);
    for n in clipped {
        table.info(Some(n), "clipped_by_state_limit", 1.0);
    }
    emit_grid(
        &mut table,
        &points,
        "tv_truncated_vs_elementary",
        SERIES_B_BAND,
    );

    let corr = params.correlation();
    table.check(None, "exact_correlation", corr, Band::between(0.0, 0.5));
    table.info(
        None,
        "exact_correlation_numeric",
        numeric_correlation(&params, grid[0])?,
    );
    Ok(table)
}

/// Correlation of the exact equilibrium computed from its probabilities
/// on a box wide enough to hold all but `1e-12` of the mass.
pub fn numeric_correlation(params: &BivariateParams, n: u64) -> Result<f64> {
    let [l1, l2, l3] = params.poisson_means(n);
    let width = |m: f64| (m + 14.0 * m.sqrt() + 30.0).ceil() as usize;
    let (dist, _) = exact_bivariate_equilibrium(params, n, [width(l1 + l3), width(l2 + l3)])?;
    let mean = |k: usize| dist.expect(|x| x[k] as f64);
    let (m0, m1) = (mean(0), mean(1));
    let cov = dist.expect(|x| (x[0] as f64 - m0) * (x[1] as f64 - m1));
    let v0 = dist.expect(|x| (x[0] as f64 - m0).powi(2));
    let v1 = dist.expect(|x| (x[1] as f64 - m1).powi(2));
    Ok(cov / (v0 * v1).sqrt())
}

fn geometry_gap(a: &ProcessSpec, b: &ProcessSpec) -> Result<f64> {
    let ga = a.geometry()?;
    let gb = b.geometry()?;
    Ok((&ga.sigma - &gb.sigma).abs().max())
}

/// Two processes sharing `(c, A, σ²)`: TV between their truncated
/// equilibria, shift distances and second Σ-moments. The second process
/// defaults to the elementary process built from the first one's
/// `(c, A, σ²)`.
pub fn run_scaling_study(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let grid = cfg.n_grid();
    let first = cfg.process_spec(grid[0])?;
    let second = match &cfg.reference {
        Some(r) => r.build()?.with_n(grid[0]),
        None => {
            let a = jacobian_at_equilibrium(&first);
            let s2 = local_covariance(&first, first.c())?;
            build_elementary(first.c(), &a, &s2)?.spec.with_n(grid[0])
        }
    };
    for (name, spec) in [("process", &first), ("reference", &second)] {
        let rep = check_assumptions(spec);
        if !rep.general_ok() {
            return Err(Error::Config(format!(
                "{name} fails the standing assumptions: {rep:?}"
            )));
        }
    }
    let gap = geometry_gap(&first, &second)?;
    if gap > GEOMETRY_TOL
        || first
            .c()
            .iter()
            .zip(second.c())
            .any(|(a, b)| (a - b).abs() > GEOMETRY_TOL)
    {
        return Err(Error::Config(format!(
            "processes do not share (c, A, sigma^2): Sigma differs by {gap:e}"
        )));
    }
    let fraction = if cfg.process.is_none() {
        BIVARIATE_DELTA_FRACTION
    } else {
        DEFAULT_DELTA_FRACTION
    };
    let delta = cfg.delta_for(&first, fraction)?;

    let (points, clipped) = run_grid(&grid, |n| {
        let Some(pair) = solve_pair(cfg.process_spec(n)?, second.with_n(n), delta)? else {
            return Ok(None);
        };
        measure(&pair, None).map(Some)
    })?;

    let mut table = ResultTable::new(
        "scaling",
        Provenance::new(&(cfg, "scaling", delta), cfg.experiment.seed)?,
    );
    table.info(None, "delta", delta);
    for n in clipped {
        table.info(Some(n), "clipped_by_state_limit", 1.0);
    }
    emit_grid(
        &mut table,
        &points,
        "tv_process_vs_reference",
        SERIES_B_BAND,
    );
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::ProcessConfig;

    #[test]
    fn numeric_correlation_matches_closed_form() {
        let p = BivariateParams::default();
        let r = numeric_correlation(&p, 10).unwrap();
        assert!(
            (r - p.correlation()).abs() < 1e-9,
            "{r} vs {}",
            p.correlation()
        );
    }

    #[test]
    fn identical_specs_give_zero_tv() {
        let proc_cfg = ProcessConfig::Elementary {
            n: 10,
            c: vec![2.0, 2.0],
            a: vec![vec![-1.0, 0.0], vec![0.0, -1.0]],
            sigma2: vec![vec![8.0, 0.0], vec![0.0, 8.0]],
        };
        let cfg = ExperimentConfig {
            process: Some(proc_cfg.clone()),
            reference: Some(proc_cfg),
            experiment: super::super::config::ExperimentSettings {
                n_grid: Some(vec![10, 16]),
                ..Default::default()
            },
            ..Default::default()
        };
        let t = run_scaling_study(&cfg).unwrap();
        assert!(t
            .series("tv_process_vs_reference")
            .iter()
            .all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn mismatched_geometry_is_a_config_error() {
        let mk = |s: f64| ProcessConfig::Elementary {
            n: 10,
            c: vec![2.0, 2.0],
            a: vec![vec![-1.0, 0.0], vec![0.0, -1.0]],
            sigma2: vec![vec![s, 0.0], vec![0.0, 8.0]],
        };
        let cfg = ExperimentConfig {
            process: Some(mk(8.0)),
            reference: Some(mk(9.0)),
            ..Default::default()
        };
        assert!(matches!(run_scaling_study(&cfg), Err(Error::Config(_))));
    }
}
