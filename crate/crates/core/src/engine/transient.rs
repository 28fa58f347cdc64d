use super::chain::TruncatedChain;
use super::metrics::tv_distance;
use super::solve::{DiscreteDistribution, SteinSolution};
use crate::error::{Error, Result};

/// Poisson mass discarded from the uniformisation series.
pub const POISSON_TAIL: f64 = 1e-13;
/// Uniformisation rate relative to the largest exit rate; the excess keeps
/// the discrete kernel aperiodic.
pub const UNIFORMIZATION_FACTOR: f64 = 1.05;

/// Poisson(λ) probabilities on `[left, left + w.len())` covering all but
/// `POISSON_TAIL` of the mass, computed outward from the mode.
pub fn poisson_window(lambda: f64) -> (usize, Vec<f64>) {
    if lambda <= 0.0 {
        return (0, vec![1.0]);
    }
    let mode = lambda.floor() as usize;
    let mut right = vec![1.0];
    let mut k = mode;
    loop {
        let next = right.last().unwrap() * lambda / (k + 1) as f64;
        if next < 1e-32 {
            break;
        }
        right.push(next);
        k += 1;
    }
    let mut left = Vec::new();
    let mut cur = 1.0;
    let mut k = mode;
    while k > 0 {
        cur *= k as f64 / lambda;
        if cur < 1e-32 {
            break;
        }
        left.push(cur);
        k -= 1;
    }
    let start = mode - left.len();
    let mut w: Vec<f64> = left.into_iter().rev().chain(right).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    // Trim both tails, each by at most half the budget.
    let mut lo = 0;
    let mut acc = 0.0;
    while lo + 1 < w.len() && acc + w[lo] <= POISSON_TAIL / 2.0 {
        acc += w[lo];
        lo += 1;
    }
    let mut hi = w.len();
    let mut acc = 0.0;
    while hi > lo + 1 && acc + w[hi - 1] <= POISSON_TAIL / 2.0 {
        acc += w[hi - 1];
        hi -= 1;
    }
    (start + lo, w[lo..hi].to_vec())
}

/// The uniformised kernel `P = I + Q/Λ`.
struct Kernel<'a> {
    chain: &'a TruncatedChain,
    rate: f64,
}

impl<'a> Kernel<'a> {
    fn new(chain: &'a TruncatedChain) -> Self {
        let rate = (UNIFORMIZATION_FACTOR * chain.uniformization_rate()).max(f64::MIN_POSITIVE);
        Self { chain, rate }
    }

    /// Row vector times `P`.
    fn left(&self, p: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = p[i] * (1.0 - self.chain.exit_rate(i) / self.rate);
        }
        for (i, &pi) in p.iter().enumerate() {
            if pi != 0.0 {
                for &(j, q) in self.chain.transitions(i) {
                    out[j] += pi * q / self.rate;
                }
            }
        }
    }

    /// `P` times a column vector.
    fn right(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = v[i] * (1.0 - self.chain.exit_rate(i) / self.rate);
            for &(j, q) in self.chain.transitions(i) {
                acc += q / self.rate * v[j];
            }
            *o = acc;
        }
    }

    /// `p e^{Qt}` for a row vector `p`.
    fn propagate(&self, p: &[f64], t: f64) -> Vec<f64> {
        if t <= 0.0 || self.chain.uniformization_rate() == 0.0 {
            return p.to_vec();
        }
        let (start, w) = poisson_window(self.rate * t);
        let mut cur = p.to_vec();
        let mut next = vec![0.0; p.len()];
        let mut acc = vec![0.0; p.len()];
        for k in 0..start + w.len() {
            if k >= start {
                let wk = w[k - start];
                acc.iter_mut().zip(&cur).for_each(|(a, c)| *a += wk * c);
            }
            self.left(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        acc
    }
}

/// Law of `X(t)` started from state index `x0`.
pub fn transient_distribution(
    chain: &TruncatedChain,
    x0: usize,
    t: f64,
) -> Result<DiscreteDistribution> {
    if x0 >= chain.len() {
        return Err(Error::Precondition(format!(
            "state index {x0} out of range"
        )));
    }
    if t < 0.0 {
        return Err(Error::Precondition(format!("negative time {t}")));
    }
    let mut p = vec![0.0; chain.len()];
    p[x0] = 1.0;
    let probs = Kernel::new(chain).propagate(&p, t);
    DiscreteDistribution::new(chain.states().to_vec(), probs)
}

/// `d_TV(L(X(t) | x1), L(X(t) | x2))` on an increasing time grid, stepping
/// both laws forward through the semigroup.
pub fn decay_profile(
    chain: &TruncatedChain,
    x1: usize,
    x2: usize,
    t_grid: &[f64],
) -> Result<DecayProfile> {
    if x1 >= chain.len() || x2 >= chain.len() {
        return Err(Error::Precondition("start state out of range".into()));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Precondition(
            "time grid must be nonnegative and nondecreasing".into(),
        ));
    }
    let kernel = Kernel::new(chain);
    let mut p1 = vec![0.0; chain.len()];
    let mut p2 = vec![0.0; chain.len()];
    p1[x1] = 1.0;
    p2[x2] = 1.0;
    let mut last_t = 0.0;
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        p1 = kernel.propagate(&p1, t - last_t);
        p2 = kernel.propagate(&p2, t - last_t);
        last_t = t;
        let tv = 0.5 * p1.iter().zip(&p2).map(|(a, b)| (a - b).abs()).sum::<f64>();
        points.push((t, tv.min(1.0)));
    }
    let monotone = points.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    Ok(DecayProfile { points, monotone })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DecayProfile {
    pub points: Vec<(f64, f64)>,
    /// Whether the TV sequence is nonincreasing within `1e-12`.
    pub monotone: bool,
}

impl DecayProfile {
    /// Least-squares slope of `-log tv` against `t` over points with
    /// `tv ∈ (floor, ceiling]`, with the coefficient of determination.
    pub fn fitted_rate(&self, floor: f64, ceiling: f64) -> Option<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|&&(_, tv)| tv > floor && tv <= ceiling)
            .map(|&(t, tv)| (t, tv.ln()))
            .collect();
        let fit = crate::experiments::fit::linear_fit(&pts)?;
        Some((-fit.slope, fit.r2))
    }
}

/// `h_B(X) = -∫₀^T (P_X[X(t) ∈ B] - π{B}) dt`, evaluated through the
/// uniformised series: `∫₀^T Pois(Λt; k) dt = P[N_{ΛT} > k] / Λ`, so the
/// time integral is exact up to the Poisson truncation. Fails when the
/// integrand still exceeds `tol` at `T`.
pub fn stein_via_transient(
    chain: &TruncatedChain,
    pi: &DiscreteDistribution,
    target: &[usize],
    horizon: f64,
    tol: f64,
) -> Result<SteinSolution> {
    let n = chain.len();
    let mut f = vec![0.0; n];
    for &i in target {
        *f.get_mut(i)
            .ok_or_else(|| Error::Precondition(format!("state index {i} out of range")))? = 1.0;
    }
    let pi_b: f64 = (0..n).filter(|&i| f[i] > 0.0).map(|i| pi.probs[i]).sum();
    if n == 1 || chain.uniformization_rate() == 0.0 {
        let mut t = target.to_vec();
        t.sort_unstable();
        t.dedup();
        return Ok(SteinSolution {
            values: vec![0.0; n],
            target: t,
            pi_b,
            residual: 0.0,
        });
    }
    let kernel = Kernel::new(chain);
    let lam = kernel.rate * horizon;
    let (start, w) = poisson_window(lam);
    // Survival P[N > k]: exactly 1 - cumulative; 1 below the window.
    let mut survival = Vec::with_capacity(start + w.len());
    survival.resize(start, 1.0);
    let mut cum = 0.0;
    for wk in &w {
        cum += wk;
        survival.push((1.0 - cum).max(0.0));
    }
    // Work with f̄ = 1_B - π{B}; P^k f̄ → 0.
    let mut v: Vec<f64> = f.iter().map(|x| x - pi_b).collect();
    let mut next = vec![0.0; n];
    let mut integral = vec![0.0; n];
    let mut at_horizon = vec![0.0; n];
    for k in 0..start + w.len() {
        let s = survival[k];
        integral.iter_mut().zip(&v).for_each(|(a, b)| *a += s * b);
        if k >= start {
            let wk = w[k - start];
            at_horizon
                .iter_mut()
                .zip(&v)
                .for_each(|(a, b)| *a += wk * b);
        }
        kernel.right(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
    }
    let tail = at_horizon.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if tail > tol {
        return Err(Error::Convergence(format!(
            "integrand still {tail:e} at horizon {horizon}; increase the horizon"
        )));
    }
    let mut h: Vec<f64> = integral.iter().map(|x| -x / kernel.rate).collect();
    let mean: f64 = h.iter().zip(&pi.probs).map(|(a, b)| a * b).sum();
    h.iter_mut().for_each(|x| *x -= mean);
    let fbar: Vec<f64> = f.iter().map(|x| x - pi_b).collect();
    let residual = super::solve::stein_residual(chain, &h, &fbar);
    let mut t = target.to_vec();
    t.sort_unstable();
    t.dedup();
    Ok(SteinSolution {
        values: h,
        target: t,
        pi_b,
        residual,
    })
}

/// TV distance from `transient_distribution(x0, t)` to `pi`.
pub fn distance_to_equilibrium(
    chain: &TruncatedChain,
    pi: &DiscreteDistribution,
    x0: usize,
    t: f64,
) -> Result<f64> {
    Ok(tv_distance(&transient_distribution(chain, x0, t)?, pi))
}

#[cfg(test)]
mod tests {
    use super::super::chain::tests::{bivariate_model, immigration_death_model};
    use super::super::solve::ChainSolver;
    use super::*;

    #[test]
    fn poisson_window_mass() {
        for lam in [0.3, 5.0, 80.0, 2500.0] {
            let (start, w) = poisson_window(lam);
            let s: f64 = w.iter().sum();
            assert!((1.0 - s).abs() <= 2e-13, "{lam} {s}");
            let mean: f64 = w
                .iter()
                .enumerate()
                .map(|(k, p)| (start + k) as f64 * p)
                .sum();
            assert!((mean - lam).abs() < 1e-9 * lam.max(1.0));
        }
    }

    #[test]
    fn transient_limits() {
        let ch = immigration_death_model(1.0, 20, 0.5).chain().unwrap();
        let x0 = 2;
        let p0 = transient_distribution(&ch, x0, 0.0).unwrap();
        assert_eq!(p0.probs[x0], 1.0);
        let pi = ChainSolver::new(&ch).unwrap().stationary().unwrap();
        for t in [0.1, 1.0, 3.0] {
            let p = transient_distribution(&ch, x0, t).unwrap();
            assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(distance_to_equilibrium(&ch, &pi, x0, 40.0).unwrap() < 1e-10);
    }

    #[test]
    fn stein_methods_agree() {
        let ch = bivariate_model(16, 0.45).chain().unwrap();
        assert!(ch.len() < 2000);
        let solver = ChainSolver::new(&ch).unwrap();
        let pi = solver.stationary().unwrap();
        let target: Vec<usize> = (0..ch.len()).filter(|i| i % 3 == 0).collect();
        let direct = solver.stein(&pi, &target).unwrap();
        let series = stein_via_transient(&ch, &pi, &target, 40.0, 1e-11).unwrap();
        let diff = direct
            .values
            .iter()
            .zip(&series.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff <= 1e-8, "{diff:e}");
        assert!(matches!(
            stein_via_transient(&ch, &pi, &target, 0.05, 1e-11),
            Err(Error::Convergence(_))
        ));
    }

    #[test]
    fn decay_profile_basics() {
        let ch = immigration_death_model(1.0, 20, 0.5).chain().unwrap();
        let grid: Vec<f64> = (0..30).map(|k| k as f64 * 0.5).collect();
        let same = decay_profile(&ch, 3, 3, &grid).unwrap();
        assert!(same.points.iter().all(|&(_, tv)| tv == 0.0));
        let prof = decay_profile(&ch, 0, ch.len() - 1, &grid).unwrap();
        assert_eq!(prof.points[0].1, 1.0);
        assert!(prof.monotone);
        let (rate, r2) = prof.fitted_rate(1e-12, 0.1).unwrap();
        assert!(rate > 0.0 && r2 > 0.9, "{rate} {r2}");
    }
}
