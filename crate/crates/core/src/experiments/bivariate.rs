//! The bivariate immigration–death process: single immigrants of each
//! type, paired immigrants, and independent exponential lifetimes.

use serde::{Deserialize, Serialize};

use crate::engine::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::factor::JumpVector;
use crate::model::{ProcessSpec, RateFunction};
use crate::spectral::{CovarianceMatrix, DriftMatrix};

/// Largest mass allowed outside the convolution box.
pub const TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BivariateParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha12: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// Translation `a`; the process is shifted by `⌊na⌋`.
    pub a: [f64; 2],
}

impl Default for BivariateParams {
    /// A conventional instance; nothing canonical about these numbers.
    fn default() -> Self {
        Self {
            alpha1: 1.0,
            alpha2: 1.0,
            alpha12: 2.0,
            mu1: 1.0,
            mu2: 2.0,
            a: [1.0, 1.0],
        }
    }
}

impl BivariateParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha1, self.alpha2, self.alpha12, self.mu1, self.mu2];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(
                "bivariate rates must be positive and finite".into(),
            ));
        }
        let ch = self.c_hat();
        if self.a[0] <= -ch[0] || self.a[1] <= -ch[1] {
            return Err(Error::Config("translation must satisfy a > -c_hat".into()));
        }
        Ok(())
    }

    /// Mean of the untranslated equilibrium divided by `n`.
    pub fn c_hat(&self) -> [f64; 2] {
        [
            (self.alpha1 + self.alpha12) / self.mu1,
            (self.alpha2 + self.alpha12) / self.mu2,
        ]
    }

    /// `c = a + ĉ`.
    pub fn c(&self) -> [f64; 2] {
        let ch = self.c_hat();
        [self.a[0] + ch[0], self.a[1] + ch[1]]
    }

    pub fn drift(&self) -> DriftMatrix {
        DriftMatrix::diagonal(&[-self.mu1, -self.mu2])
    }

    pub fn sigma2(&self) -> Result<CovarianceMatrix> {
        let s = [
            2.0 * (self.alpha1 + self.alpha12),
            self.alpha12,
            self.alpha12,
            2.0 * (self.alpha2 + self.alpha12),
        ];
        CovarianceMatrix::from_row_slice(2, &s)
    }

    /// `⌊na⌋`.
    pub fn offset(&self, n: u64) -> [i64; 2] {
        [
            (n as f64 * self.a[0]).floor() as i64,
            (n as f64 * self.a[1]).floor() as i64,
        ]
    }

    /// Poisson means `(E N₁, E N₂, E N₃)` at scale `n`.
    pub fn poisson_means(&self, n: u64) -> [f64; 3] {
        let nf = n as f64;
        let s = self.mu1 + self.mu2;
        [
            nf / self.mu1 * (self.alpha1 + self.alpha12 * self.mu2 / s),
            nf / self.mu2 * (self.alpha2 + self.alpha12 * self.mu1 / s),
            nf * self.alpha12 / s,
        ]
    }

    /// `Corr(N₁ + N₃, N₂ + N₃)`.
    pub fn correlation(&self) -> f64 {
        let [l1, l2, l3] = self.poisson_means(1);
        l3 / ((l1 + l3) * (l2 + l3)).sqrt()
    }

    /// The translated process at scale `n`, with locality radius `delta0`.
    /// Death rates are `μ_i (x_i - ⌊na_i⌋/n)`, written as affine functions
    /// about `c`.
    pub fn translated_spec(&self, n: u64, delta0: f64) -> Result<ProcessSpec> {
        self.validate()?;
        let c = self.c();
        let off = self.offset(n);
        let nf = n as f64;
        let death = |i: usize, mu: f64| {
            let mut gradient = vec![0.0; 2];
            gradient[i] = mu;
            RateFunction::Affine {
                value: mu * (c[i] - off[i] as f64 / nf),
                gradient,
                center: c.to_vec(),
            }
        };
        ProcessSpec::new(
            vec![
                (
                    JumpVector::new(vec![1, 0]),
                    RateFunction::Constant(self.alpha1),
                ),
                (
                    JumpVector::new(vec![0, 1]),
                    RateFunction::Constant(self.alpha2),
                ),
                (
                    JumpVector::new(vec![1, 1]),
                    RateFunction::Constant(self.alpha12),
                ),
                (JumpVector::new(vec![-1, 0]), death(0, self.mu1)),
                (JumpVector::new(vec![0, -1]), death(1, self.mu2)),
            ],
            n,
            c.to_vec(),
            delta0,
        )
    }
}

/// `ln k!` for `k ≤ max`.
fn ln_factorials(max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=max {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Exact equilibrium probabilities of the translated process at the given
/// lattice states, by convolution of the three Poisson laws.
pub struct ExactBivariate {
    means: [f64; 3],
    offset: [i64; 2],
    lnf: Vec<f64>,
}

impl ExactBivariate {
    pub fn new(params: &BivariateParams, n: u64, max_count: usize) -> Self {
        Self {
            means: params.poisson_means(n),
            offset: params.offset(n),
            lnf: ln_factorials(max_count),
        }
    }

    fn ln_pois(&self, k: i64, which: usize) -> f64 {
        let lam = self.means[which];
        -lam + k as f64 * lam.ln() - self.lnf[k as usize]
    }

    /// `P[N₁ + N₃ = y₁, N₂ + N₃ = y₂]` in untranslated coordinates.
    pub fn pmf_untranslated(&self, y1: i64, y2: i64) -> f64 {
        if y1 < 0 || y2 < 0 {
            return 0.0;
        }
        let top = y1.min(y2);
        if y1.max(y2) as usize >= self.lnf.len() {
            return 0.0;
        }
        (0..=top)
            .map(|k| (self.ln_pois(y1 - k, 0) + self.ln_pois(y2 - k, 1) + self.ln_pois(k, 2)).exp())
            .sum()
    }

    /// Probability of the translated state `X`.
    pub fn pmf(&self, x: &[i64]) -> f64 {
        self.pmf_untranslated(x[0] - self.offset[0], x[1] - self.offset[1])
    }
}

/// The exact equilibrium over the box `[0, b₁] × [0, b₂]` (untranslated
/// counts, reported in translated coordinates) and the mass outside it.
pub fn exact_bivariate_equilibrium(
    params: &BivariateParams,
    n: u64,
    support_box: [usize; 2],
) -> Result<(DiscreteDistribution, f64)> {
    params.validate()?;
    let exact = ExactBivariate::new(params, n, support_box[0].max(support_box[1]));
    let off = params.offset(n);
    let mut states = Vec::with_capacity((support_box[0] + 1) * (support_box[1] + 1));
    let mut probs = Vec::with_capacity(states.capacity());
    for y1 in 0..=support_box[0] as i64 {
        for y2 in 0..=support_box[1] as i64 {
            states.push(vec![y1 + off[0], y2 + off[1]]);
            probs.push(exact.pmf_untranslated(y1, y2));
        }
    }
    let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    if tail > TAIL_TOL {
        return Err(Error::Precondition(format!(
            "support box {support_box:?} leaves tail mass {tail:e}"
        )));
    }
    Ok((DiscreteDistribution::new(states, probs)?, tail))
}

/// Exact law restricted to the given states and renormalised.
pub fn restricted_exact(
    params: &BivariateParams,
    n: u64,
    states: &[Vec<i64>],
) -> Result<DiscreteDistribution> {
    let off = params.offset(n);
    let max = states
        .iter()
        .map(|x| (x[0] - off[0]).max(x[1] - off[1]).max(0))
        .max()
        .unwrap_or(0) as usize;
    let exact = ExactBivariate::new(params, n, max);
    let probs = states.iter().map(|x| exact.pmf(x)).collect();
    DiscreteDistribution::new(states.to_vec(), probs)
}
