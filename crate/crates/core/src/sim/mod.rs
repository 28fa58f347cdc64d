//! Exact stochastic simulation of the truncated process and of the
//! minimum-rate coupling of two copies.
//!
//! Every replicate draws from its own ChaCha8 stream: the generator is
//! seeded with the user seed and the stream is set to the replicate index,
//! so results do not depend on how replicates are scheduled over threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::TruncatedModel;

/// Default censoring horizon in units of `1/α₁`.
pub const DEFAULT_HORIZON_FACTOR: f64 = 50.0;

/// Generator for replicate `rep` under `seed`.
pub fn replicate_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn exponential(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    // 1 - U lies in (0, 1].
    -(1.0 - rng.random::<f64>()).ln() / rate
}

/// Index `k` with probability `w[k] / total`.
fn pick(rng: &mut ChaCha8Rng, w: &[f64], total: f64) -> usize {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, &wk) in w.iter().enumerate() {
        acc += wk;
        if u < acc {
            return k;
        }
    }
    w.iter().rposition(|&v| v > 0.0).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub seed: u64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<i64>>,
    /// True when the path reached a state with no outgoing rate.
    pub absorbed: bool,
}

impl Trajectory {
    /// State occupied at time `t`.
    pub fn state_at(&self, t: f64) -> &[i64] {
        let k = self.times.partition_point(|&s| s <= t);
        &self.states[k.saturating_sub(1)]
    }
}

fn check_start(model: &TruncatedModel, x: &[i64]) -> Result<()> {
    if x.len() != model.dim() {
        return Err(Error::Dimension(format!(
            "start state has dimension {}",
            x.len()
        )));
    }
    if !model.contains(x) {
        return Err(Error::Precondition(format!(
            "start state {x:?} lies outside the truncation ball"
        )));
    }
    Ok(())
}

/// Runs one path up to `horizon`, calling `visit(t, x)` at time 0 and after
/// every jump. Stops early when `visit` returns false.
fn run_path(
    model: &TruncatedModel,
    x0: &[i64],
    horizon: f64,
    rng: &mut ChaCha8Rng,
    mut visit: impl FnMut(f64, &[i64]) -> bool,
) -> bool {
    let jumps = model.spec.jumps();
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut rates = Vec::with_capacity(jumps.len());
    if !visit(t, &x) {
        return false;
    }
    loop {
        model.rates_by_jump(&x, &mut rates);
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            return true;
        }
        t += exponential(rng, total);
        if t > horizon {
            return false;
        }
        let k = pick(rng, &rates, total);
        for (xi, ji) in x.iter_mut().zip(jumps[k].0.coords()) {
            *xi += ji;
        }
        if !visit(t, &x) {
            return false;
        }
    }
}

/// A single exact path of the truncated chain on `[0, horizon]`.
pub fn simulate(model: &TruncatedModel, x0: &[i64], horizon: f64, seed: u64) -> Result<Trajectory> {
    check_start(model, x0)?;
    let mut rng = replicate_rng(seed, 0);
    let mut times = Vec::new();
    let mut states = Vec::new();
    let absorbed = run_path(model, x0, horizon, &mut rng, |t, x| {
        times.push(t);
        states.push(x.to_vec());
        true
    });
    Ok(Trajectory {
        seed,
        times,
        states,
        absorbed,
    })
}

/// `X(t)` for `reps` independent replicates, in replicate order.
pub fn sample_states_at(
    model: &TruncatedModel,
    x0: &[i64],
    t: f64,
    reps: u64,
    seed: u64,
) -> Result<Vec<Vec<i64>>> {
    check_start(model, x0)?;
    Ok((0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(seed, rep);
            let mut last = x0.to_vec();
            run_path(model, x0, t, &mut rng, |_, x| {
                last.clear();
                last.extend_from_slice(x);
                true
            });
            last
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HittingDirection {
    /// First time `‖X - nc‖_Σ ≤ nη`.
    Enter,
    /// First time `‖X - nc‖_Σ ≥ nη`.
    Exit,
}

/// A possibly censored waiting time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeSample {
    pub time: f64,
    pub censored: bool,
}

pub fn hitting_time_samples(
    model: &TruncatedModel,
    x0: &[i64],
    eta: f64,
    direction: HittingDirection,
    reps: u64,
    seed: u64,
    horizon: Option<f64>,
) -> Result<Vec<TimeSample>> {
    check_start(model, x0)?;
    if !(eta > 0.0 && eta <= model.delta) {
        return Err(Error::Precondition(format!(
            "eta = {eta} must lie in (0, delta = {}]",
            model.delta
        )));
    }
    let horizon = horizon.unwrap_or(DEFAULT_HORIZON_FACTOR / model.geom.alpha1);
    let r2 = (model.n() as f64 * eta).powi(2);
    let hit = |x: &[i64]| match direction {
        HittingDirection::Enter => model.h0(x) <= r2,
        HittingDirection::Exit => model.h0(x) >= r2,
    };
    Ok((0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(seed, rep);
            let mut found = None;
            run_path(model, x0, horizon, &mut rng, |t, x| {
                if hit(x) {
                    found = Some(t);
                    false
                } else {
                    true
                }
            });
            match found {
                Some(time) => TimeSample {
                    time,
                    censored: false,
                },
                None => TimeSample {
                    time: horizon,
                    censored: true,
                },
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledTrajectory {
    pub seed: u64,
    pub times: Vec<f64>,
    pub first: Vec<Vec<i64>>,
    pub second: Vec<Vec<i64>>,
    /// `None` when the copies had not met by the horizon.
    pub coupling_time: Option<f64>,
}

/// One step of the coupling: rates of the joint and solo moves per jump.
fn coupled_step(
    model: &TruncatedModel,
    x1: &mut [i64],
    x2: &mut [i64],
    r1: &mut Vec<f64>,
    r2: &mut Vec<f64>,
    table: &mut Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> Option<f64> {
    let jumps = model.spec.jumps();
    model.rates_by_jump(x1, r1);
    model.rates_by_jump(x2, r2);
    table.clear();
    // Layout: [joint_0, solo1_0, solo2_0, joint_1, ...].
    for (a, b) in r1.iter().zip(r2.iter()) {
        let joint = a.min(*b);
        table.extend_from_slice(&[joint, a - joint, b - joint]);
    }
    let total: f64 = table.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let dt = exponential(rng, total);
    let k = pick(rng, table, total);
    let (jump, kind) = (k / 3, k % 3);
    let j = jumps[jump].0.coords();
    if kind != 2 {
        x1.iter_mut().zip(j).for_each(|(x, d)| *x += d);
    }
    if kind != 1 {
        x2.iter_mut().zip(j).for_each(|(x, d)| *x += d);
    }
    Some(dt)
}

fn run_coupled(
    model: &TruncatedModel,
    x1: &[i64],
    x2: &[i64],
    horizon: f64,
    rng: &mut ChaCha8Rng,
    mut visit: impl FnMut(f64, &[i64], &[i64]),
) -> Option<f64> {
    let mut a = x1.to_vec();
    let mut b = x2.to_vec();
    let (mut r1, mut r2, mut table) = (Vec::new(), Vec::new(), Vec::new());
    let mut t = 0.0;
    visit(t, &a, &b);
    let mut met = (a == b).then_some(0.0);
    loop {
        let Some(dt) = coupled_step(model, &mut a, &mut b, &mut r1, &mut r2, &mut table, rng)
        else {
            return met;
        };
        t += dt;
        if t > horizon {
            return met;
        }
        visit(t, &a, &b);
        if met.is_none() && a == b {
            met = Some(t);
        }
    }
}

/// Two copies driven by the minimum-rate coupling: jump `J` moves both at
/// rate `min(r₁, r₂)` and each alone at the positive part of its excess.
pub fn simulate_coupled(
    model: &TruncatedModel,
    x1: &[i64],
    x2: &[i64],
    horizon: f64,
    seed: u64,
) -> Result<CoupledTrajectory> {
    check_start(model, x1)?;
    check_start(model, x2)?;
    let mut rng = replicate_rng(seed, 0);
    let (mut times, mut first, mut second) = (Vec::new(), Vec::new(), Vec::new());
    let coupling_time = run_coupled(model, x1, x2, horizon, &mut rng, |t, a, b| {
        times.push(t);
        first.push(a.to_vec());
        second.push(b.to_vec());
    });
    Ok(CoupledTrajectory {
        seed,
        times,
        first,
        second,
        coupling_time,
    })
}

/// Coupling times for `reps` replicates, censored at `horizon`.
pub fn coupling_time_samples(
    model: &TruncatedModel,
    x1: &[i64],
    x2: &[i64],
    horizon: f64,
    reps: u64,
    seed: u64,
) -> Result<Vec<TimeSample>> {
    check_start(model, x1)?;
    check_start(model, x2)?;
    Ok((0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(seed, rep);
            match run_coupled(model, x1, x2, horizon, &mut rng, |_, _, _| {}) {
                Some(time) => TimeSample {
                    time,
                    censored: false,
                },
                None => TimeSample {
                    time: horizon,
                    censored: true,
                },
            }
        })
        .collect())
}

/// Both marginals of the coupling at time `t`, per replicate.
pub fn coupled_states_at(
    model: &TruncatedModel,
    x1: &[i64],
    x2: &[i64],
    t: f64,
    reps: u64,
    seed: u64,
) -> Result<Vec<(Vec<i64>, Vec<i64>)>> {
    check_start(model, x1)?;
    check_start(model, x2)?;
    Ok((0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(seed, rep);
            let mut last = (x1.to_vec(), x2.to_vec());
            run_coupled(model, x1, x2, t, &mut rng, |_, a, b| {
                last = (a.to_vec(), b.to_vec());
            });
            last
        })
        .collect())
}

/// Fraction of samples whose time exceeds `t` (censored samples count as
/// exceeding every `t` up to their horizon).
pub fn survival(samples: &[TimeSample], t: f64) -> f64 {
    samples
        .iter()
        .filter(|s| s.time > t || (s.censored && s.time >= t))
        .count() as f64
        / samples.len().max(1) as f64
}
