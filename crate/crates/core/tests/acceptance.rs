//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails. Every tolerance is pinned below.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mjp_stein::engine::solve::{stationarity_residual, stein_residual};
use mjp_stein::engine::{
    decay_profile, solve_stein, stationary_distribution, stein_via_transient, TruncatedChain,
};
use mjp_stein::experiments::bivariate::BivariateParams;
use mjp_stein::experiments::bounds::{
    concentration_table, crossing_offset, drift_check, random_half_spaces, run_bounds,
};
use mjp_stein::experiments::config::{delta_limit, ExperimentConfig};
use mjp_stein::experiments::dynamics::{run_coupling_study, run_simulation_check};
use mjp_stein::experiments::fit::linear_fit;
use mjp_stein::experiments::studies::{run_bivariate_application, BIVARIATE_DELTA_FRACTION};
use mjp_stein::experiments::table::{ResultTable, MIN_R2};
use mjp_stein::factor::{coordinate_bound, factorize, verify_factorization, JumpVector};
use mjp_stein::model::config::parse_process;
use mjp_stein::model::operators::{newton_remainder_e2, TruncatedModel};
use mjp_stein::model::{build_elementary, constants_ledger, ElementaryProcess, ProcessSpec};
use mjp_stein::spectral::{solve_lyapunov, CovarianceMatrix, DriftMatrix};

// Criterion 1.
const LYAPUNOV_CASES: usize = 100;
const LYAPUNOV_RTOL: f64 = 1e-10;
const LYAPUNOV_SECS: u64 = 5;
// Criterion 2.
const FACTOR_CASES: usize = 50;
const FACTOR_TOL: f64 = 1e-10;
const FACTOR_SECS: u64 = 30;
// Criterion 3.
const ORACLE_NS: [u64; 3] = [20, 50, 100];
const ORACLE_TV: f64 = 1e-12;
const ORACLE_SECS: u64 = 5;
// Criterion 4.
const STATIONARY_RTOL: f64 = 1e-12;
const STEIN_TOL: f64 = 1e-10;
const STEIN_SETS: usize = 50;
const TRANSIENT_MAX_STATES: usize = 2000;
const TRANSIENT_AGREEMENT: f64 = 1e-8;
const RESIDUAL_SECS: u64 = 120;
// Criterion 5.
const E2_TOL: f64 = 1e-12;
const E2_SECS: u64 = 10;
// Criteria 6 and 7.
const DRIFT_NS: [u64; 2] = [40, 80];
const DRIFT_SECS: u64 = 60;
const CONCENTRATION_SECS: u64 = 60;
const ETA_FRACTIONS: [f64; 8] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
// Criteria 8, 9 and 10.
const APPLICATION_GRID: [u64; 5] = [10, 16, 25, 40, 63];
const SERIES_A_MAX_SLOPE: f64 = -0.8;
const SERIES_B_SLOPE: (f64, f64) = (-0.75, -0.30);
const CORRELATION_RANGE: (f64, f64) = (0.0, 0.5);
const SHIFT_SLOPE: (f64, f64) = (-0.70, -0.35);
const DH_SLOPE: (f64, f64) = (-0.75, -0.30);
const D2H_SLOPE: (f64, f64) = (-1.25, -0.75);
const STEIN_B_SETS: usize = 25;
const APPLICATION_SECS: u64 = 600;
const SHIFT_SECS: u64 = 300;
const BOUNDS_SECS: u64 = 600;
// Criterion 11.
const COUPLING_REPS: u64 = 10_000;
const COUPLING_Z: f64 = 3.0;
const TAIL_TV: (f64, f64) = (1e-11, 1e-2);
const TAIL_R2: f64 = 0.99;
const COUPLING_SECS: u64 = 300;
// Criterion 12.
const SIM_MAX_STATES: usize = 500;
const SIM_REPS: u64 = 100_000;
const SIM_COVERAGE: f64 = 0.99;
const SIM_SECS: u64 = 120;

type Check = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn in_band(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}

fn slope_of(t: &ResultTable, metric: &str) -> Result<(f64, f64), String> {
    let s = t
        .slope_row(metric)
        .ok_or_else(|| format!("no slope row {metric}"))?;
    let f = s
        .fit
        .ok_or_else(|| format!("slope of {metric} could not be fitted"))?;
    Ok((f.slope, f.r2))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_hurwitz(r: &mut ChaCha8Rng, d: usize) -> DriftMatrix {
    let b = DMatrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
    let shift = b.norm() + r.random_range(0.05..1.0);
    DriftMatrix::new(b - DMatrix::identity(d, d) * shift).unwrap()
}

fn random_covariance(r: &mut ChaCha8Rng, d: usize) -> CovarianceMatrix {
    let l = DMatrix::from_fn(d, d, |_, _| r.random_range(-2.0..2.0));
    let m = &l * l.transpose() + DMatrix::identity(d, d) * r.random_range(0.1..2.0);
    CovarianceMatrix::new((&m + m.transpose()) * 0.5).unwrap()
}

fn criterion_1() -> Check {
    let mut r = rng(101);
    let mut worst = 0.0_f64;
    for k in 0..LYAPUNOV_CASES {
        let d = 1 + k % 4;
        let (a, s2) = (random_hurwitz(&mut r, d), random_covariance(&mut r, d));
        let g = solve_lyapunov(&a, &s2).map_err(err)?;
        let res = a.matrix() * &g.sigma + &g.sigma * a.matrix().transpose() + s2.matrix();
        worst = worst.max(res.amax() / s2.max_abs());
    }
    Ok((
        worst <= LYAPUNOV_RTOL,
        format!("max residual/‖σ²‖_max = {worst:.2e} (tol {LYAPUNOV_RTOL:e})"),
    ))
}

fn criterion_2() -> Check {
    let mut r = rng(202);
    let (mut worst, mut bound_ok, mut coord_ok, mut sym_ok) = (0.0_f64, true, true, true);
    for k in 0..FACTOR_CASES {
        let d = 2 + k % 2;
        let s2 = random_covariance(&mut r, d);
        let ws = factorize(&s2).map_err(err)?;
        worst = worst.max(verify_factorization(&ws, &s2));
        bound_ok &= ws.max_coordinate() as f64 <= coordinate_bound(&s2).map_err(err)?;
        let quarter = 0.25 * s2.lambda_min();
        coord_ok &= (0..d)
            .all(|i| ws.weight(&JumpVector::unit(d, i)).unwrap_or(0.0) >= quarter * (1.0 - 1e-12));
        sym_ok &= ws.is_symmetric() && ws.entries.iter().all(|(_, w)| *w >= 0.0);
    }
    let pass = worst <= FACTOR_TOL && bound_ok && coord_ok && sym_ok;
    Ok((
        pass,
        format!(
            "max reconstruction error {worst:.2e} (tol {FACTOR_TOL:e}); coordinate bound {bound_ok}; g(e_i) >= λmin/4 {coord_ok}; ± symmetry {sym_ok}"
        ),
    ))
}

/// Immigration at rate `nμ`, death at rate `X`.
fn immigration_death(mu: f64, n: u64) -> Result<ProcessSpec, String> {
    let doc = format!(
        "schema_version = 1\n[process]\ntype = \"explicit\"\nn = {n}\nc = [{mu}]\ndelta0 = {}\njumps = [\n\
         {{ jump = [1], rate = {{ kind = \"constant\", value = {mu} }} }},\n\
         {{ jump = [-1], rate = {{ kind = \"affine\", value = {mu}, gradient = [1.0] }} }},\n]\n",
        0.5 * mu
    );
    parse_process(&doc).and_then(|p| p.build()).map_err(err)
}

fn model_of(spec: ProcessSpec, fraction: f64) -> Result<TruncatedModel, String> {
    let delta = fraction * delta_limit(&spec).map_err(err)?;
    let geom = spec.geometry().map_err(err)?;
    TruncatedModel::new(spec, geom, delta).map_err(err)
}

fn criterion_3() -> Check {
    let mu = 1.5;
    let mut worst = 0.0_f64;
    for n in ORACLE_NS {
        let model = model_of(immigration_death(mu, n)?, 0.9)?;
        let chain = model.chain().map_err(err)?;
        let pi = stationary_distribution(&chain).map_err(err)?;
        let lambda = mu * n as f64;
        let logs: Vec<f64> = chain
            .states()
            .iter()
            .map(|x| {
                let k = x[0];
                k as f64 * lambda.ln() - (1..=k).map(|v| (v as f64).ln()).sum::<f64>()
            })
            .collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        let tv = 0.5
            * w.iter()
                .zip(&pi.probs)
                .map(|(a, b)| (a / total - b).abs())
                .sum::<f64>();
        worst = worst.max(tv);
    }
    Ok((worst <= ORACLE_TV, format!("max TV to conditioned Poisson = {worst:.2e} over n in {ORACLE_NS:?} (tol {ORACLE_TV:e})")))
}

fn bivariate_elementary() -> Result<ElementaryProcess, String> {
    let p = BivariateParams::default();
    build_elementary(&p.c(), &p.drift(), &p.sigma2().map_err(err)?).map_err(err)
}

fn criterion_4() -> Check {
    let bivariate = BivariateParams::default()
        .translated_spec(16, 1.0)
        .map_err(err)?;
    let chains: Vec<(&str, TruncatedModel)> = vec![
        (
            "immigration-death n=50",
            model_of(immigration_death(1.5, 50)?, 0.9)?,
        ),
        (
            "bivariate n=16",
            model_of(bivariate, BIVARIATE_DELTA_FRACTION)?,
        ),
        (
            "elementary n=25",
            model_of(bivariate_elementary()?.spec.with_n(25), 0.9)?,
        ),
    ];
    let (mut stat, mut stein, mut agree) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut compared = 0usize;
    for (k, (_, model)) in chains.iter().enumerate() {
        let chain = model.chain().map_err(err)?;
        let pi = stationary_distribution(&chain).map_err(err)?;
        stat = stat.max(stationarity_residual(&chain, &pi.probs) / chain.uniformization_rate());
        let sets = random_half_spaces(
            model.dim(),
            STEIN_SETS,
            40 + k as u64,
            crossing_offset(model.n(), model.delta),
        );
        for b in &sets {
            let target = b.members(model, &chain);
            let sol = solve_stein(&chain, &pi, &target).map_err(err)?;
            let f: Vec<f64> = (0..chain.len())
                .map(|i| f64::from(u8::from(target.contains(&i))) - sol.pi_b)
                .collect();
            stein = stein.max(stein_residual(&chain, &sol.values, &f));
            if chain.len() <= TRANSIENT_MAX_STATES {
                let series = stein_via_transient(&chain, &pi, &target, 80.0, 1e-11).map_err(err)?;
                let d = sol
                    .values
                    .iter()
                    .zip(&series.values)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                agree = agree.max(d);
                compared += 1;
            }
        }
    }
    let pass = stat <= STATIONARY_RTOL
        && stein <= STEIN_TOL
        && agree <= TRANSIENT_AGREEMENT
        && compared > 0;
    Ok((
        pass,
        format!(
            "max ‖πQ‖/Λ = {stat:.1e} (tol {STATIONARY_RTOL:e}); max Stein residual {stein:.1e} (tol {STEIN_TOL:e}); \
             direct vs time integral {agree:.1e} over {compared} solves (tol {TRANSIENT_AGREEMENT:e})"
        ),
    ))
}

type Basis = Box<dyn Fn(&[i64]) -> f64>;

fn criterion_5() -> Check {
    let mut worst = 0.0_f64;
    let mut cases = 0usize;
    for d in 1..=3usize {
        // Quadratic h span a space with basis 1, w_i, w_i w_j; E₂ is linear in h.
        let mut basis: Vec<Basis> = vec![Box::new(|_| 1.0)];
        for i in 0..d {
            basis.push(Box::new(move |w: &[i64]| w[i] as f64));
            for j in i..d {
                basis.push(Box::new(move |w: &[i64]| (w[i] * w[j]) as f64));
            }
        }
        let mut r = rng(500 + d as u64);
        for _ in 0..5 {
            let m: Vec<i64> = (0..d * d).map(|_| r.random_range(-5..=5)).collect();
            basis.push(Box::new(move |w: &[i64]| {
                let mut v = 0i64;
                for i in 0..d {
                    for j in 0..d {
                        v += w[i] * m[i * d + j] * w[j];
                    }
                }
                v as f64
            }));
        }
        let box_pts = lattice(d, -2, 2);
        let jumps = lattice(d, -3, 3);
        for h in &basis {
            for w in &box_pts {
                for j in &jumps {
                    worst = worst.max(newton_remainder_e2(h, w, j).abs());
                    cases += 1;
                }
            }
        }
    }
    Ok((
        worst <= E2_TOL,
        format!("max |E₂| = {worst:.1e} over {cases} (h, W, J) cases, d in 1..=3 (tol {E2_TOL:e})"),
    ))
}

fn lattice(d: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| (lo..=hi).map(move |v| [p.clone(), vec![v]].concat()))
            .collect();
    }
    out
}

/// Two-dimensional elementary processes whose diffusion dominates the
/// drift, so the region `K√(nd) ≤ ‖X-nc‖_Σ ≤ nδ` is nonempty at desk scale.
/// That needs `n ≥ 2K²/δ²` with `d = 2`, about 32 for the coupled case.
fn drift_test_processes() -> Result<Vec<(&'static str, ElementaryProcess)>, String> {
    let build = |c: [f64; 2], a: [f64; 4], s: [f64; 4]| {
        build_elementary(
            &c,
            &DriftMatrix::from_row_slice(2, &a).map_err(err)?,
            &CovarianceMatrix::from_row_slice(2, &s).map_err(err)?,
        )
        .map_err(err)
    };
    Ok(vec![
        (
            "isotropic",
            build([5.0, 5.0], [-1.0, 0.0, 0.0, -1.0], [16.0, 0.0, 0.0, 16.0])?,
        ),
        (
            "coupled",
            build([4.0, 6.0], [-1.0, 0.2, 0.0, -1.0], [20.0, 2.0, 2.0, 20.0])?,
        ),
    ])
}

struct DriftCase {
    label: String,
    model: TruncatedModel,
    chain: TruncatedChain,
    ledger: mjp_stein::model::ConstantsLedger,
}

fn drift_cases() -> Result<Vec<DriftCase>, String> {
    let mut out = Vec::new();
    for (name, e) in drift_test_processes()? {
        for n in DRIFT_NS {
            let spec = e.spec.with_n(n);
            let ledger = constants_ledger(&spec, &e.geom).map_err(err)?;
            let model =
                TruncatedModel::new(spec, e.geom.clone(), ledger.delta_max()).map_err(err)?;
            let chain = model.chain().map_err(err)?;
            out.push(DriftCase {
                label: format!("{name} n={n}"),
                model,
                chain,
                ledger,
            });
        }
    }
    Ok(out)
}

fn criterion_6(cases: &[DriftCase]) -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for c in cases {
        let dc = drift_check(&c.model, &c.chain, &c.ledger).map_err(err)?;
        pass &= dc.qualifying > 0 && dc.violations == 0 && dc.exp_violations.unwrap_or(0) == 0;
        let exp = match dc.exp_violations {
            Some(v) => format!("{v} exponential violations"),
            None => "exponential form not applicable".into(),
        };
        parts.push(format!(
            "{}: {} qualifying, {} violations, {exp}",
            c.label, dc.qualifying, dc.violations
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn criterion_7(cases: &[DriftCase]) -> Check {
    let mut pass = true;
    let mut checked = 0usize;
    let mut parts = Vec::new();
    for c in cases {
        let n = c.model.n() as f64;
        let thresholds = c.ledger.n_drift.max(c.ledger.n_elementary.unwrap_or(0.0));
        if n < thresholds {
            parts.push(format!("{}: below threshold {thresholds:.1}", c.label));
            continue;
        }
        let pi = stationary_distribution(&c.chain).map_err(err)?;
        let etas: Vec<f64> = ETA_FRACTIONS.iter().map(|f| f * c.model.delta).collect();
        let rows = concentration_table(&c.model, &pi, &c.ledger, &etas).map_err(err)?;
        let bad = rows.iter().filter(|r| r.measured > r.bound).count();
        let tightest = rows
            .iter()
            .map(|r| r.measured / r.bound)
            .fold(0.0_f64, f64::max);
        checked += rows.len();
        pass &= bad == 0;
        parts.push(format!(
            "{}: {} η values, {bad} above bound, max measured/bound {tightest:.1e}",
            c.label,
            rows.len()
        ));
    }
    Ok((pass && checked > 0, parts.join("; ")))
}

fn application_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.n_grid = Some(APPLICATION_GRID.to_vec());
    cfg.experiment.b_sets = STEIN_B_SETS;
    cfg
}

fn criterion_8(t: &ResultTable) -> Check {
    let (a, ra) = slope_of(t, "tv_exact_vs_truncated")?;
    let (b, rb) = slope_of(t, "tv_truncated_vs_elementary")?;
    let corr = t
        .value("exact_correlation", None)
        .ok_or("no correlation row")?;
    let pass = a <= SERIES_A_MAX_SLOPE
        && ra >= MIN_R2
        && in_band(b, SERIES_B_SLOPE)
        && rb >= MIN_R2
        && in_band(corr, CORRELATION_RANGE);
    Ok((
        pass,
        format!(
            "series (a) slope {a:.3} R² {ra:.3} (≤ {SERIES_A_MAX_SLOPE}); series (b) slope {b:.3} R² {rb:.3} (in {SERIES_B_SLOPE:?}); correlation {corr:.4}"
        ),
    ))
}

fn criterion_9(t: &ResultTable) -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for j in 1..=2 {
        let (s, r2) = slope_of(t, &format!("shift_tv_e{j}"))?;
        pass &= in_band(s, SHIFT_SLOPE) && r2 >= MIN_R2;
        parts.push(format!("e{j}: slope {s:.3} R² {r2:.3}"));
    }
    Ok((
        pass,
        format!("{} (band {SHIFT_SLOPE:?}, R² ≥ {MIN_R2})", parts.join("; ")),
    ))
}

fn criterion_10() -> Check {
    let t = run_bounds(&application_config()).map_err(err)?;
    let (dh, r1) = slope_of(&t, "median_sup_dh")?;
    let (d2h, r2) = slope_of(&t, "median_sup_d2h")?;
    let pass = in_band(dh, DH_SLOPE) && in_band(d2h, D2H_SLOPE) && r1 >= MIN_R2 && r2 >= MIN_R2;
    Ok((
        pass,
        format!(
            "median max‖Δh‖ slope {dh:.3} R² {r1:.3} (in {DH_SLOPE:?}); median max‖Δ²h‖ slope {d2h:.3} R² {r2:.3} (in {D2H_SLOPE:?}); {STEIN_B_SETS} sets per n"
        ),
    ))
}

fn extreme_states(model: &TruncatedModel, chain: &TruncatedChain) -> (Vec<i64>, Vec<i64>) {
    let by_h0 = |a: &usize, b: &usize| {
        model
            .h0(chain.state(*a))
            .total_cmp(&model.h0(chain.state(*b)))
    };
    let near = (0..chain.len()).min_by(by_h0).unwrap();
    let far = (0..chain.len()).max_by(by_h0).unwrap();
    (chain.state(near).to_vec(), chain.state(far).to_vec())
}

fn criterion_11() -> Check {
    let spec = BivariateParams::default()
        .translated_spec(16, 1.0)
        .map_err(err)?;
    let model = model_of(spec, BIVARIATE_DELTA_FRACTION)?;
    let chain = model.chain().map_err(err)?;
    let (x1, x2) = extreme_states(&model, &chain);

    let long: Vec<f64> = (0..=120).map(|k| 0.5 * k as f64).collect();
    let profile = decay_profile(
        &chain,
        chain.index_of(&x1).unwrap(),
        chain.index_of(&x2).unwrap(),
        &long,
    )
    .map_err(err)?;
    let tail: Vec<(f64, f64)> = profile
        .points
        .iter()
        .filter(|(_, tv)| *tv > TAIL_TV.0 && *tv <= TAIL_TV.1)
        .map(|&(t, tv)| (t, tv.ln()))
        .collect();
    let fit = linear_fit(&tail).ok_or("too few tail points")?;
    let rate = -fit.slope;

    let times: Vec<f64> = (0..=24).map(|k| 0.5 * k as f64).collect();
    let t = run_coupling_study(&model, &chain, &x1, &x2, &times, COUPLING_REPS, 11).map_err(err)?;
    let bands_ok = t
        .rows
        .iter()
        .filter(|r| r.metric.starts_with("survival minus tv"))
        .all(|r| r.value >= -COUPLING_Z);
    let worst = t
        .rows
        .iter()
        .filter(|r| r.metric.starts_with("survival minus tv"))
        .map(|r| r.value)
        .fold(f64::INFINITY, f64::min);
    let pass = rate > 0.0 && fit.r2 >= TAIL_R2 && profile.monotone && bands_ok;
    Ok((
        pass,
        format!(
            "{} states; tail rate {rate:.4} R² {:.4} over {} points; min (survival - tv)/se = {worst:.2} (≥ -{COUPLING_Z}), {COUPLING_REPS} reps",
            chain.len(),
            fit.r2,
            tail.len()
        ),
    ))
}

fn criterion_12() -> Check {
    let mut chosen = None;
    for n in [25u64, 16, 10] {
        let spec = BivariateParams::default()
            .translated_spec(n, 1.0)
            .map_err(err)?;
        let model = model_of(spec, BIVARIATE_DELTA_FRACTION)?;
        let chain = model.chain().map_err(err)?;
        if chain.len() <= SIM_MAX_STATES {
            chosen = Some((model, chain));
            break;
        }
    }
    let (model, chain) = chosen.ok_or("no chain within the state limit")?;
    let (_, far) = extreme_states(&model, &chain);
    let t = run_simulation_check(&model, &chain, &far, 1.0, SIM_REPS, 12).map_err(err)?;
    let frac = t
        .value("fraction of states within band", Some(model.n()))
        .ok_or("no coverage row")?;
    let outside = t
        .value("samples outside truncation", Some(model.n()))
        .ok_or("no outside row")?;
    let repro = t
        .value("same seed reproduces samples", Some(model.n()))
        .ok_or("no reproducibility row")?;
    let pass = frac >= SIM_COVERAGE && outside == 0.0 && repro == 1.0;
    Ok((
        pass,
        format!(
            "{} states, {SIM_REPS} reps: {:.4} of states within 4σ (≥ {SIM_COVERAGE}); reproducible {}",
            chain.len(),
            frac,
            repro == 1.0
        ),
    ))
}

fn report(id: u32, name: &str, limit: u64, started: Instant, outcome: Check) -> bool {
    let elapsed = started.elapsed();
    let in_time = elapsed <= Duration::from_secs(limit);
    let (pass, detail) = match outcome {
        Ok((p, d)) => (p && in_time, d),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "criterion {id:>2} {}: {name}: {detail}; {:.2} s (limit {limit} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    pass
}

fn main() -> ExitCode {
    let mut ok = true;
    let s = Instant::now();
    ok &= report(1, "Lyapunov residual", LYAPUNOV_SECS, s, criterion_1());
    let s = Instant::now();
    ok &= report(2, "integer factorisation", FACTOR_SECS, s, criterion_2());
    let s = Instant::now();
    ok &= report(
        3,
        "one-dimensional Poisson oracle",
        ORACLE_SECS,
        s,
        criterion_3(),
    );
    let s = Instant::now();
    ok &= report(
        4,
        "stationary and Stein residuals",
        RESIDUAL_SECS,
        s,
        criterion_4(),
    );
    let s = Instant::now();
    ok &= report(
        5,
        "second-order Newton remainder",
        E2_SECS,
        s,
        criterion_5(),
    );

    let s = Instant::now();
    let cases = drift_cases();
    let build_time = s.elapsed();
    match &cases {
        Ok(cases) => {
            ok &= report(6, "drift inequality", DRIFT_SECS, s, criterion_6(cases));
            let s7 = Instant::now() - build_time;
            ok &= report(
                7,
                "concentration bound",
                CONCENTRATION_SECS,
                s7,
                criterion_7(cases),
            );
        }
        Err(e) => {
            ok &= report(6, "drift inequality", DRIFT_SECS, s, Err(e.clone()));
            ok &= report(
                7,
                "concentration bound",
                CONCENTRATION_SECS,
                s,
                Err(e.clone()),
            );
        }
    }

    let s = Instant::now();
    let app = run_bivariate_application(&application_config()).map_err(err);
    let shared = s.elapsed();
    match &app {
        Ok(t) => {
            ok &= report(
                8,
                "bivariate application",
                APPLICATION_SECS,
                s,
                criterion_8(t),
            );
            ok &= report(
                9,
                "shift total variation",
                SHIFT_SECS,
                Instant::now() - shared,
                criterion_9(t),
            );
        }
        Err(e) => {
            ok &= report(
                8,
                "bivariate application",
                APPLICATION_SECS,
                s,
                Err(e.clone()),
            );
            ok &= report(9, "shift total variation", SHIFT_SECS, s, Err(e.clone()));
        }
    }
    let s = Instant::now();
    ok &= report(10, "Stein solution scaling", BOUNDS_SECS, s, criterion_10());
    let s = Instant::now();
    ok &= report(11, "coupling decay", COUPLING_SECS, s, criterion_11());
    let s = Instant::now();
    ok &= report(12, "simulator exactness", SIM_SECS, s, criterion_12());

    if ok {
        println!("acceptance: all criteria PASS");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: at least one criterion FAILED");
        ExitCode::FAILURE
    }
}
