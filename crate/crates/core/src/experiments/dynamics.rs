//! Transient behaviour: coupling decay and simulator validation against
//! the exact semigroup.

use std::collections::HashMap;

use super::table::{Band, Provenance, ResultTable};
use crate::engine::chain::TruncatedChain;
use crate::engine::transient::{decay_profile, transient_distribution};
use crate::error::{Error, Result};
use crate::model::operators::TruncatedModel;
use crate::sim::{coupling_time_samples, sample_states_at, survival};

/// Monte Carlo band width in standard errors for the coupling inequality.
pub const COUPLING_Z: f64 = 3.0;
/// Per-state band width in standard errors for simulated frequencies.
pub const FREQUENCY_Z: f64 = 4.0;
/// Fraction of states that must fall inside the per-state band.
pub const FREQUENCY_COVERAGE: f64 = 0.99;

fn index(chain: &TruncatedChain, x: &[i64], what: &str) -> Result<usize> {
    chain.index_of(x).ok_or_else(|| {
        Error::Precondition(format!("{what} {x:?} is not in the truncated state space"))
    })
}

fn time_label(metric: &str, t: f64) -> String {
    format!("{metric} t={t}")
}

/// Compares exact `d_TV(L(X(t)|x1), L(X(t)|x2))` with the survival
/// function of the minimum-rate coupling time.
///
/// Checks: the exact profile is nonincreasing, its fitted exponential rate
/// is positive, and at each `t` the empirical `P[T > t]` is at least the
/// exact TV minus `COUPLING_Z` standard errors.
pub fn run_coupling_study(
    model: &TruncatedModel,
    chain: &TruncatedChain,
    x1: &[i64],
    x2: &[i64],
    times: &[f64],
    reps: u64,
    seed: u64,
) -> Result<ResultTable> {
    if times.is_empty() || reps == 0 {
        return Err(Error::Precondition(
            "coupling study needs times and replicates".into(),
        ));
    }
    let (i1, i2) = (index(chain, x1, "x1")?, index(chain, x2, "x2")?);
    let profile = decay_profile(chain, i1, i2, times)?;
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let samples = coupling_time_samples(model, x1, x2, horizon, reps, seed)?;

    let n = Some(model.n());
    let mut t = ResultTable::new(
        "couple",
        Provenance::new(&(model.n(), model.delta, x1, x2, times, reps), seed)?,
    );
    t.info(n, "states", chain.len() as f64);
    t.check(
        n,
        "exact tv nonincreasing",
        f64::from(u8::from(profile.monotone)),
        Band::at_least(1.0),
    );
    match profile.fitted_rate(1e-12, 0.9) {
        Some((rate, r2)) => {
            t.check(
                n,
                "fitted decay rate",
                rate,
                Band::at_least(f64::MIN_POSITIVE),
            );
            t.info(n, "fitted decay rate r2", r2);
        }
        None => {
            t.check(
                n,
                "fitted decay rate",
                f64::NAN,
                Band::at_least(f64::MIN_POSITIVE),
            );
        }
    }
    let rf = reps as f64;
    for &(time, tv) in &profile.points {
        let s = survival(&samples, time);
        let p = s.max(tv).clamp(1.0 / rf, 1.0 - 1.0 / rf);
        let se = (p * (1.0 - p) / rf).sqrt();
        t.info(n, &time_label("exact tv", time), tv);
        t.info(n, &time_label("coupling survival", time), s);
        t.check(
            n,
            &time_label("survival minus tv (in se)", time),
            (s - tv) / se,
            Band::at_least(-COUPLING_Z),
        );
    }
    Ok(t)
}

/// Simulated laws at time `t` against the exact transient distribution.
///
/// A state passes when its empirical frequency is within `FREQUENCY_Z`
/// binomial standard errors of the exact probability, where the error is
/// floored at one count. At least `FREQUENCY_COVERAGE` of states must pass,
/// no sample may leave the truncated space, and a second run with the same
/// seed must reproduce every sample.
pub fn run_simulation_check(
    model: &TruncatedModel,
    chain: &TruncatedChain,
    x0: &[i64],
    time: f64,
    reps: u64,
    seed: u64,
) -> Result<ResultTable> {
    if reps == 0 {
        return Err(Error::Precondition(
            "simulation check needs replicates".into(),
        ));
    }
    let i0 = index(chain, x0, "x0")?;
    let exact = transient_distribution(chain, i0, time)?;
    let samples = sample_states_at(model, x0, time, reps, seed)?;
    let again = sample_states_at(model, x0, time, reps, seed)?;

    let mut counts: HashMap<usize, u64> = HashMap::new();
    let mut outside = 0u64;
    for x in &samples {
        match chain.index_of(x) {
            Some(i) => *counts.entry(i).or_default() += 1,
            None => outside += 1,
        }
    }
    let rf = reps as f64;
    let mut inside_band = 0usize;
    let mut worst = 0.0_f64;
    let mut tv = 0.0;
    for (i, &p) in exact.probs.iter().enumerate() {
        let f = counts.get(&i).copied().unwrap_or(0) as f64 / rf;
        tv += 0.5 * (f - p).abs();
        let se = (p * (1.0 - p) / rf).sqrt().max(1.0 / rf);
        let z = (f - p).abs() / se;
        worst = worst.max(z);
        if z <= FREQUENCY_Z {
            inside_band += 1;
        }
    }

    let n = Some(model.n());
    let mut t = ResultTable::new(
        "simulate",
        Provenance::new(&(model.n(), model.delta, x0, time, reps), seed)?,
    );
    t.info(n, "states", chain.len() as f64);
    t.info(n, "tv empirical vs exact", tv);
    t.info(n, "largest standardised deviation", worst);
    t.check(
        n,
        "samples outside truncation",
        outside as f64,
        Band::at_most(0.0),
    );
    t.check(
        n,
        "fraction of states within band",
        inside_band as f64 / exact.len() as f64,
        Band::at_least(FREQUENCY_COVERAGE),
    );
    t.check(
        n,
        "same seed reproduces samples",
        f64::from(u8::from(samples == again)),
        Band::at_least(1.0),
    );
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_elementary;
    use crate::spectral::{CovarianceMatrix, DriftMatrix};

    fn small_model() -> TruncatedModel {
        let a = DriftMatrix::from_row_slice(1, &[-1.0]).unwrap();
        let s2 = CovarianceMatrix::from_row_slice(1, &[2.0]).unwrap();
        let e = build_elementary(&[1.0], &a, &s2).unwrap().at_scale(20);
        TruncatedModel::new(e.spec, e.geom, 0.05).unwrap()
    }

    #[test]
    fn coupling_study_on_small_chain() {
        let m = small_model();
        let chain = m.chain().unwrap();
        let x1 = chain.state(0).to_vec();
        let x2 = chain.state(chain.len() - 1).to_vec();
        let t =
            run_coupling_study(&m, &chain, &x1, &x2, &[0.0, 0.5, 1.0, 2.0, 4.0], 2000, 5).unwrap();
        assert!(t.all_pass(), "{:?}", t.failures());
        assert_eq!(t.value("exact tv t=0", Some(20)), Some(1.0));
    }

    #[test]
    fn simulation_matches_semigroup() {
        let m = small_model();
        let chain = m.chain().unwrap();
        let x0 = chain.state(0).to_vec();
        let t = run_simulation_check(&m, &chain, &x0, 1.0, 5000, 9).unwrap();
        assert!(t.all_pass(), "{:?}", t.failures());
    }

    #[test]
    fn rejects_foreign_start() {
        let m = small_model();
        let chain = m.chain().unwrap();
        assert!(run_simulation_check(&m, &chain, &[1000], 1.0, 10, 0).is_err());
    }
}
