use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use serde::Serialize;

use super::chain::{require_irreducible, TruncatedChain};
use crate::error::{Error, Result};

/// Clamp threshold for negative round-off probabilities.
pub const NEGATIVE_CLAMP: f64 = -1e-14;
pub const STATIONARY_RTOL: f64 = 1e-12;
pub const STEIN_TOL: f64 = 1e-10;

/// A probability vector over lattice states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    pub states: Vec<Vec<i64>>,
    pub probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Clamps small negatives to zero and renormalises. Entries below
    /// `-1e-14` are rejected.
    pub fn new(states: Vec<Vec<i64>>, mut probs: Vec<f64>) -> Result<Self> {
        if states.len() != probs.len() {
            return Err(Error::Dimension(format!(
                "{} states but {} probabilities",
                states.len(),
                probs.len()
            )));
        }
        let mut clamped = 0.0;
        for p in probs.iter_mut() {
            if *p < NEGATIVE_CLAMP || !p.is_finite() {
                return Err(Error::Numerical {
                    context: "probability vector",
                    residual: *p,
                });
            }
            if *p < 0.0 {
                clamped -= *p;
                *p = 0.0;
            }
        }
        if clamped > 0.0 {
            log::debug!("clamped {clamped:e} of negative probability mass");
        }
        let total: f64 = probs.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::Numerical {
                context: "probability vector",
                residual: total,
            });
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(Self { states, probs })
    }

    pub fn point_mass(states: Vec<Vec<i64>>, at: usize) -> Self {
        let mut probs = vec![0.0; states.len()];
        probs[at] = 1.0;
        Self { states, probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `Σ_X π(X) f(X)`.
    pub fn expect(&self, f: impl Fn(&[i64]) -> f64) -> f64 {
        self.states
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * f(x))
            .sum()
    }

    pub fn mass(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&i| self.probs[i]).sum()
    }
}

/// Sparse LU of `Q` with the row and column of one pivot state removed.
/// The same factorisation serves the stationary equation (transposed)
/// and the Stein equation.
///
/// Any pivot gives an exact scheme, but for the Stein equation the
/// consistency error of `1_B - π{B}` is divided by `π(pivot)`, so
/// [`ChainSolver::for_stein`] pivots on the state of largest mass.
pub struct ChainSolver<'a> {
    chain: &'a TruncatedChain,
    pivot: usize,
    lu: Option<Lu<usize, f64>>,
}

impl<'a> ChainSolver<'a> {
    /// Pivots on the lexicographically largest state.
    pub fn new(chain: &'a TruncatedChain) -> Result<Self> {
        Self::with_pivot(chain, chain.len().saturating_sub(1))
    }

    /// Pivots on a mode of `pi`.
    pub fn for_stein(chain: &'a TruncatedChain, pi: &DiscreteDistribution) -> Result<Self> {
        let mode = pi
            .probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i);
        Self::with_pivot(chain, mode)
    }

    pub fn with_pivot(chain: &'a TruncatedChain, pivot: usize) -> Result<Self> {
        if chain.is_empty() {
            return Err(Error::Precondition("empty chain".into()));
        }
        if pivot >= chain.len() {
            return Err(Error::Precondition(format!("pivot {pivot} out of range")));
        }
        require_irreducible(chain)?;
        let m = chain.len() - 1;
        if m == 0 {
            return Ok(Self {
                chain,
                pivot,
                lu: None,
            });
        }
        let red = |i: usize| if i < pivot { i } else { i - 1 };
        let mut trip = Vec::new();
        for i in (0..chain.len()).filter(|&i| i != pivot) {
            trip.push(Triplet::new(red(i), red(i), -chain.exit_rate(i)));
            for &(j, q) in chain.transitions(i) {
                if j != pivot {
                    trip.push(Triplet::new(red(i), red(j), q));
                }
            }
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(m, m, &trip)
            .map_err(|e| Error::Model(format!("sparse assembly: {e:?}")))?;
        let lu = a.sp_lu().map_err(|e| {
            log::error!("LU failure: {e:?}");
            Error::Numerical {
                context: "sparse LU of the reduced generator",
                residual: f64::NAN,
            }
        })?;
        Ok(Self {
            chain,
            pivot,
            lu: Some(lu),
        })
    }

    /// Solves the reduced system for a full-length right-hand side whose
    /// pivot entry is ignored; the pivot entry of the result is 0.
    fn solve_reduced(&self, rhs: &[f64], transpose: bool) -> Vec<f64> {
        let lu = self.lu.as_ref().expect("nontrivial chain");
        let p = self.pivot;
        let keep = |i: &usize| *i != p;
        let idx: Vec<usize> = (0..rhs.len()).filter(keep).collect();
        let b = Mat::<f64>::from_fn(idx.len(), 1, |k, _| rhs[idx[k]]);
        let x = if transpose {
            lu.solve_transpose(&b)
        } else {
            lu.solve(&b)
        };
        let mut out = vec![0.0; rhs.len()];
        for (k, &i) in idx.iter().enumerate() {
            out[i] = x[(k, 0)];
        }
        out
    }

    /// Solves `πᵀQ = 0`, `Σπ = 1` by fixing the pivot coordinate and
    /// normalising, with two steps of iterative refinement.
    pub fn stationary(&self) -> Result<DiscreteDistribution> {
        let chain = self.chain;
        let n = chain.len();
        if n == 1 {
            return Ok(DiscreteDistribution::point_mass(chain.states().to_vec(), 0));
        }
        // With π_pivot = 1 the reduced equations read Q_redᵀ π = -(row pivot of Q).
        let mut rhs = vec![0.0; n];
        for &(j, q) in chain.transitions(self.pivot) {
            rhs[j] -= q;
        }
        let mut p = self.solve_reduced(&rhs, true);
        p[self.pivot] = 1.0;
        for _ in 0..2 {
            let r: Vec<f64> = chain.apply_transpose(&p).iter().map(|v| -v).collect();
            let corr = self.solve_reduced(&r, true);
            p.iter_mut().zip(&corr).for_each(|(a, b)| *a += b);
        }
        let dist = DiscreteDistribution::new(chain.states().to_vec(), p)?;
        let res = stationarity_residual(chain, &dist.probs);
        let scale = chain.uniformization_rate().max(f64::MIN_POSITIVE);
        if res > STATIONARY_RTOL * scale {
            return Err(Error::Numerical {
                context: "stationary distribution",
                residual: res / scale,
            });
        }
        Ok(dist)
    }

    /// Solves `Q h = 1_B - π{B}` with `πᵀh = 0`.
    pub fn stein(&self, pi: &DiscreteDistribution, target: &[usize]) -> Result<SteinSolution> {
        let chain = self.chain;
        let n = chain.len();
        let mut in_b = vec![false; n];
        for &i in target {
            *in_b
                .get_mut(i)
                .ok_or_else(|| Error::Precondition(format!("state index {i} out of range")))? =
                true;
        }
        let pi_b: f64 = (0..n).filter(|&i| in_b[i]).map(|i| pi.probs[i]).sum();
        let f: Vec<f64> = in_b
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 } - pi_b)
            .collect();
        let mut h = vec![0.0; n];
        if n > 1 {
            h = self.solve_reduced(&f, false);
            for _ in 0..2 {
                let qh = chain.apply(&h);
                let r: Vec<f64> = f.iter().zip(&qh).map(|(a, b)| a - b).collect();
                let corr = self.solve_reduced(&r, false);
                h.iter_mut().zip(&corr).for_each(|(a, b)| *a += b);
            }
        }
        let mean: f64 = h.iter().zip(&pi.probs).map(|(a, b)| a * b).sum();
        h.iter_mut().for_each(|v| *v -= mean);
        let residual = stein_residual(chain, &h, &f);
        if residual > STEIN_TOL {
            return Err(Error::Numerical {
                context: "Stein equation",
                residual,
            });
        }
        let mut target = target.to_vec();
        target.sort_unstable();
        target.dedup();
        Ok(SteinSolution {
            values: h,
            target,
            pi_b,
            residual,
        })
    }
}

/// A centred solution of the Stein equation on a finite chain.
#[derive(Debug, Clone, Serialize)]
pub struct SteinSolution {
    pub values: Vec<f64>,
    pub target: Vec<usize>,
    pub pi_b: f64,
    pub residual: f64,
}

/// `‖πᵀQ‖_∞`.
pub fn stationarity_residual(chain: &TruncatedChain, pi: &[f64]) -> f64 {
    chain
        .apply_transpose(pi)
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// `max_X |(Qh)(X) - f(X)|`.
pub fn stein_residual(chain: &TruncatedChain, h: &[f64], f: &[f64]) -> f64 {
    chain
        .apply(h)
        .iter()
        .zip(f)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

pub fn stationary_distribution(chain: &TruncatedChain) -> Result<DiscreteDistribution> {
    ChainSolver::new(chain)?.stationary()
}

pub fn solve_stein(
    chain: &TruncatedChain,
    pi: &DiscreteDistribution,
    target: &[usize],
) -> Result<SteinSolution> {
    ChainSolver::for_stein(chain, pi)?.stein(pi, target)
}

#[cfg(test)]
mod tests {
    use super::super::chain::tests::{bivariate_model, immigration_death_model};
    use super::*;

    fn truncated_poisson(lambda: f64, lo: i64, hi: i64) -> Vec<f64> {
        // Ratios p(k+1)/p(k) = λ/(k+1), normalised in f64.
        let mut w = vec![1.0];
        for k in lo..hi {
            let last = *w.last().unwrap();
            w.push(last * lambda / (k + 1) as f64);
        }
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    }

    #[test]
    fn one_dimensional_matches_conditioned_poisson() {
        for n in [20u64, 50, 100] {
            let m = immigration_death_model(1.0, n, 0.5);
            let ch = m.chain().unwrap();
            let pi = stationary_distribution(&ch).unwrap();
            let lo = ch.state(0)[0];
            let hi = ch.state(ch.len() - 1)[0];
            let oracle = truncated_poisson(n as f64, lo, hi);
            let tv: f64 = 0.5
                * pi.probs
                    .iter()
                    .zip(&oracle)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
            assert!(tv <= 1e-12, "n={n} tv={tv:e}");
        }
    }

    #[test]
    fn stationary_residual_and_dynkin() {
        let ch = bivariate_model(25, 0.45).chain().unwrap();
        let pi = stationary_distribution(&ch).unwrap();
        assert!(stationarity_residual(&ch, &pi.probs) <= 1e-12 * ch.uniformization_rate());
        let h: Vec<f64> = (0..ch.len())
            .map(|i| ((i * 7919) % 101) as f64 / 13.0)
            .collect();
        let ah = ch.apply(&h);
        let dynkin: f64 = ah.iter().zip(&pi.probs).map(|(a, b)| a * b).sum();
        assert!(dynkin.abs() < 1e-10);
    }

    #[test]
    fn stein_trivial_targets_vanish() {
        let ch = immigration_death_model(1.0, 30, 0.5).chain().unwrap();
        let solver = ChainSolver::new(&ch).unwrap();
        let pi = solver.stationary().unwrap();
        let all: Vec<usize> = (0..ch.len()).collect();
        for target in [&all[..], &[]] {
            let s = solver.stein(&pi, target).unwrap();
            assert!(s.values.iter().all(|v| v.abs() < 1e-12));
        }
        let s = solver.stein(&pi, &[3, 4, 9]).unwrap();
        assert!(s.residual <= STEIN_TOL);
        let centred: f64 = s.values.iter().zip(&pi.probs).map(|(a, b)| a * b).sum();
        assert!(centred.abs() < 1e-13);
    }

    #[test]
    fn single_state_chain() {
        let ch = TruncatedChain::from_transitions(vec![vec![4, 4]], &[]).unwrap();
        let pi = stationary_distribution(&ch).unwrap();
        assert_eq!(pi.probs, vec![1.0]);
        let s = solve_stein(&ch, &pi, &[0]).unwrap();
        assert_eq!(s.values, vec![0.0]);
    }

    #[test]
    fn clamps_round_off() {
        let d = DiscreteDistribution::new(vec![vec![0], vec![1]], vec![1.0, -1e-16]).unwrap();
        assert_eq!(d.probs, vec![1.0, 0.0]);
        assert!(DiscreteDistribution::new(vec![vec![0], vec![1]], vec![1.0, -1e-3]).is_err());
    }
}
