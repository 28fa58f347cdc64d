use nalgebra::DMatrix;

use super::rate::RateFunction;
use crate::error::{Error, Result};
use crate::factor::JumpVector;
use crate::spectral::{solve_lyapunov, CovarianceMatrix, DriftMatrix, GeometrySolution};

/// Finite-difference step for non-affine Jacobians.
pub const FD_STEP: f64 = 1e-5;

/// A density-dependent jump process: jump `J` fires at rate `n g^J(X/n)`.
#[derive(Debug, Clone)]
pub struct ProcessSpec {
    dim: usize,
    jumps: Vec<(JumpVector, RateFunction)>,
    n: u64,
    c: Vec<f64>,
    delta0: f64,
}

impl ProcessSpec {
    pub fn new(
        jumps: Vec<(JumpVector, RateFunction)>,
        n: u64,
        c: Vec<f64>,
        delta0: f64,
    ) -> Result<Self> {
        let dim = c.len();
        if dim == 0 {
            return Err(Error::Dimension(
                "equilibrium point must have at least one coordinate".into(),
            ));
        }
        if jumps.is_empty() {
            return Err(Error::Model("jump set is empty".into()));
        }
        if n == 0 {
            return Err(Error::Model("scale n must be positive".into()));
        }
        if !(delta0 > 0.0 && delta0.is_finite()) {
            return Err(Error::Model(format!(
                "locality radius must be positive, got {delta0}"
            )));
        }
        for (i, (j, rate)) in jumps.iter().enumerate() {
            if j.dim() != dim {
                return Err(Error::Dimension(format!(
                    "jump {j} has dimension {}, expected {dim}",
                    j.dim()
                )));
            }
            if j.is_zero() {
                return Err(Error::Model("zero jump vector".into()));
            }
            if jumps[..i].iter().any(|(k, _)| k == j) {
                return Err(Error::Model(format!("duplicate jump {j}")));
            }
            if let RateFunction::Affine {
                gradient, center, ..
            } = rate
            {
                if gradient.len() != dim || center.len() != dim {
                    return Err(Error::Dimension(format!(
                        "affine rate for jump {j} has wrong dimension"
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            jumps,
            n,
            c,
            delta0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jumps(&self) -> &[(JumpVector, RateFunction)] {
        &self.jumps
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn with_n(&self, n: u64) -> Self {
        Self {
            n: n.max(1),
            ..self.clone()
        }
    }

    /// `nc` as a real vector.
    pub fn scaled_center(&self) -> Vec<f64> {
        self.c.iter().map(|ci| ci * self.n as f64).collect()
    }

    /// Geometry from `A = DF(c)` and `σ² = σ²(c)`.
    pub fn geometry(&self) -> Result<GeometrySolution> {
        let a = jacobian_at_equilibrium(self);
        let s2 = local_covariance(self, &self.c)?;
        solve_lyapunov(&a, &s2)
    }

    pub fn is_in_locality(&self, x: &[f64]) -> bool {
        let r2: f64 = x.iter().zip(&self.c).map(|(a, b)| (a - b) * (a - b)).sum();
        r2 <= self.delta0 * self.delta0 * (1.0 + 1e-12)
    }
}

/// `F(x) = Σ_J J g^J(x)`.
pub fn drift_field(spec: &ProcessSpec, x: &[f64]) -> Vec<f64> {
    if !spec.is_in_locality(x) {
        log::warn!("drift evaluated outside the locality ball at {x:?}");
    }
    let mut f = vec![0.0; spec.dim];
    for (j, rate) in &spec.jumps {
        let g = rate.eval(x);
        for (fi, &ji) in f.iter_mut().zip(j.coords()) {
            *fi += ji as f64 * g;
        }
    }
    f
}

/// `A = DF(c)`: exact for constant and affine rates, Richardson-extrapolated
/// central differences otherwise.
pub fn jacobian_at_equilibrium(spec: &ProcessSpec) -> DriftMatrix {
    let d = spec.dim;
    let mut a = DMatrix::zeros(d, d);
    for (j, rate) in &spec.jumps {
        let grad = if rate.is_affine() {
            rate.gradient(&spec.c)
        } else {
            fd_gradient(rate, &spec.c)
        };
        for r in 0..d {
            let jr = j.coords()[r] as f64;
            if jr != 0.0 {
                for k in 0..d {
                    a[(r, k)] += jr * grad[k];
                }
            }
        }
    }
    DriftMatrix::new(a).expect("square by construction")
}

fn fd_gradient(rate: &RateFunction, x: &[f64]) -> Vec<f64> {
    let central = |h: f64, k: usize| {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        (rate.eval(&xp) - rate.eval(&xm)) / (2.0 * h)
    };
    (0..x.len())
        .map(|k| {
            let coarse = central(FD_STEP, k);
            let fine = central(FD_STEP / 2.0, k);
            (4.0 * fine - coarse) / 3.0
        })
        .collect()
}

/// `σ²(x) = Σ_J J Jᵀ g^J(x)`, validated as positive definite.
pub fn local_covariance(spec: &ProcessSpec, x: &[f64]) -> Result<CovarianceMatrix> {
    CovarianceMatrix::new(local_covariance_raw(spec, x))
}

pub(crate) fn local_covariance_raw(spec: &ProcessSpec, x: &[f64]) -> DMatrix<f64> {
    let d = spec.dim;
    let mut m = DMatrix::zeros(d, d);
    for (j, rate) in &spec.jumps {
        let g = rate.eval(x);
        let jf = j.as_f64();
        for r in 0..d {
            for s in 0..d {
                m[(r, s)] += g * jf[r] * jf[s];
            }
        }
    }
    m
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// One-dimensional immigration–death: `g¹ = μ`, `g⁻¹(x) = x`.
    pub(crate) fn immigration_death(mu: f64, n: u64, delta0: f64) -> ProcessSpec {
        ProcessSpec::new(
            vec![
                (JumpVector::new(vec![1]), RateFunction::Constant(mu)),
                (
                    JumpVector::new(vec![-1]),
                    RateFunction::Affine {
                        value: mu,
                        gradient: vec![1.0],
                        center: vec![mu],
                    },
                ),
            ],
            n,
            vec![mu],
            delta0,
        )
        .unwrap()
    }

    #[test]
    fn immigration_death_drift_and_covariance() {
        let spec = immigration_death(2.0, 10, 1.0);
        assert_eq!(drift_field(&spec, &[2.0]), vec![0.0]);
        assert_eq!(drift_field(&spec, &[2.5]), vec![-0.5]);
        assert_eq!(jacobian_at_equilibrium(&spec).matrix()[(0, 0)], -1.0);
        assert_eq!(
            local_covariance(&spec, &[2.0]).unwrap().matrix()[(0, 0)],
            4.0
        );
        let g = spec.geometry().unwrap();
        assert!((g.sigma[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_malformed_specs() {
        let j = JumpVector::new(vec![1]);
        assert!(ProcessSpec::new(
            vec![(j.clone(), RateFunction::Constant(1.0))],
            0,
            vec![1.0],
            1.0
        )
        .is_err());
        assert!(ProcessSpec::new(
            vec![
                (j.clone(), RateFunction::Constant(1.0)),
                (j, RateFunction::Constant(2.0))
            ],
            1,
            vec![1.0],
            1.0
        )
        .is_err());
        assert!(ProcessSpec::new(
            vec![(JumpVector::new(vec![0]), RateFunction::Constant(1.0))],
            1,
            vec![1.0],
            1.0
        )
        .is_err());
    }

    #[test]
    fn finite_difference_jacobian_matches_analytic() {
        use super::super::rate::MassAction;
        use std::sync::Arc;
        // Logistic-type: birth 2x, death x² at equilibrium c = 2.
        let spec = ProcessSpec::new(
            vec![
                (
                    JumpVector::new(vec![1]),
                    RateFunction::General(Arc::new(MassAction {
                        k: 2.0,
                        exponents: vec![1],
                    })),
                ),
                (
                    JumpVector::new(vec![-1]),
                    RateFunction::General(Arc::new(MassAction {
                        k: 1.0,
                        exponents: vec![2],
                    })),
                ),
            ],
            1,
            vec![2.0],
            0.5,
        )
        .unwrap();
        let a = jacobian_at_equilibrium(&spec);
        assert!((a.matrix()[(0, 0)] + 2.0).abs() < 1e-9);
    }
}
