use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::spectral::jacobi_eigen;

/// Closed-form rate with analytic gradient and Hessian norm.
pub trait SmoothRate: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Spectral norm of the Hessian at `x`.
    fn hessian_norm(&self, x: &[f64]) -> f64;
}

/// A jump-rate function `g^J : ℝ^d -> ℝ_+`.
#[derive(Debug, Clone)]
pub enum RateFunction {
    Constant(f64),
    /// `value + gradientᵀ (x - center)`.
    Affine {
        value: f64,
        gradient: Vec<f64>,
        center: Vec<f64>,
    },
    General(Arc<dyn SmoothRate>),
}

impl RateFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            RateFunction::Constant(v) => *v,
            RateFunction::Affine {
                value,
                gradient,
                center,
            } => {
                value
                    + gradient
                        .iter()
                        .zip(x.iter().zip(center))
                        .map(|(b, (xi, ci))| b * (xi - ci))
                        .sum::<f64>()
            }
            RateFunction::General(g) => g.value(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            RateFunction::Constant(_) => vec![0.0; x.len()],
            RateFunction::Affine { gradient, .. } => gradient.clone(),
            RateFunction::General(g) => g.gradient(x),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, RateFunction::Constant(_))
    }

    /// Constant or affine: extrema over balls are available in closed form.
    pub fn is_affine(&self) -> bool {
        !matches!(self, RateFunction::General(_))
    }

    pub fn kind(&self) -> String {
        match self {
            RateFunction::Constant(_) => "constant".into(),
            RateFunction::Affine { .. } => "affine".into(),
            RateFunction::General(g) => format!("builtin:{}", g.name()),
        }
    }

    /// `(inf, sup)` of the rate over the Euclidean ball `B_r(center)`.
    pub fn range_on_ball(&self, center: &[f64], r: f64) -> (f64, f64) {
        match self {
            RateFunction::Constant(v) => (*v, *v),
            RateFunction::Affine { gradient, .. } => {
                let mid = self.eval(center);
                let slope = gradient.iter().map(|b| b * b).sum::<f64>().sqrt();
                (mid - r * slope, mid + r * slope)
            }
            RateFunction::General(g) => {
                ball_grid(center, r).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    let v = g.value(&x);
                    (lo.min(v), hi.max(v))
                })
            }
        }
    }

    /// `sup |Dg|` over the ball.
    pub fn gradient_sup_on_ball(&self, center: &[f64], r: f64) -> f64 {
        match self {
            RateFunction::Constant(_) => 0.0,
            RateFunction::Affine { gradient, .. } => {
                gradient.iter().map(|b| b * b).sum::<f64>().sqrt()
            }
            RateFunction::General(g) => ball_grid(center, r)
                .map(|x| g.gradient(&x).iter().map(|v| v * v).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
        }
    }

    /// `sup ‖D²g‖` over the ball.
    pub fn hessian_sup_on_ball(&self, center: &[f64], r: f64) -> f64 {
        match self {
            RateFunction::Constant(_) | RateFunction::Affine { .. } => 0.0,
            RateFunction::General(g) => ball_grid(center, r)
                .map(|x| g.hessian_norm(&x))
                .fold(0.0, f64::max),
        }
    }
}

/// Points per axis of the grid laid over `B_r(center)`.
pub const GRID_POINTS: usize = 41;

/// Lattice of `41^d` points over the bounding cube, filtered to the ball.
pub fn ball_grid(center: &[f64], r: f64) -> impl Iterator<Item = Vec<f64>> + '_ {
    let d = center.len();
    let total = GRID_POINTS.pow(d as u32);
    let step = 2.0 * r / (GRID_POINTS - 1) as f64;
    (0..total).filter_map(move |mut idx| {
        let mut x = vec![0.0; d];
        let mut dist2 = 0.0;
        for k in 0..d {
            let off = -r + (idx % GRID_POINTS) as f64 * step;
            idx /= GRID_POINTS;
            x[k] = center[k] + off;
            dist2 += off * off;
        }
        (dist2 <= r * r * (1.0 + 1e-12)).then_some(x)
    })
}

/// `k ∏ x_i^{m_i}` (mass-action kinetics).
#[derive(Debug, Clone)]
pub struct MassAction {
    pub k: f64,
    pub exponents: Vec<u32>,
}

impl MassAction {
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = x.len();
        let mono = |skip: &[(usize, u32)]| -> f64 {
            let mut v = self.k;
            for (i, &m) in self.exponents.iter().enumerate() {
                let mut m = m as i32;
                let mut coef = 1.0;
                for &(s, cnt) in skip {
                    if s == i {
                        for _ in 0..cnt {
                            coef *= m as f64;
                            m -= 1;
                        }
                    }
                }
                if coef == 0.0 {
                    return 0.0;
                }
                v *= coef * x[i].powi(m);
            }
            v
        };
        DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                mono(&[(i, 2)])
            } else {
                mono(&[(i, 1), (j, 1)])
            }
        })
    }
}

impl SmoothRate for MassAction {
    fn name(&self) -> String {
        "mass_action".into()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .fold(self.k, |acc, (&m, &xi)| acc * xi.powi(m as i32))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let m = self.exponents[i];
                if m == 0 {
                    return 0.0;
                }
                self.exponents
                    .iter()
                    .enumerate()
                    .fold(self.k, |acc, (k, &mk)| {
                        if k == i {
                            acc * m as f64 * x[k].powi(mk as i32 - 1)
                        } else {
                            acc * x[k].powi(mk as i32)
                        }
                    })
            })
            .collect()
    }

    fn hessian_norm(&self, x: &[f64]) -> f64 {
        let (vals, _) = jacobi_eigen(&self.hessian(x));
        vals.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// `k x_i / (half_saturation + x_i)` (Michaelis–Menten).
#[derive(Debug, Clone)]
pub struct Saturating {
    pub k: f64,
    pub coord: usize,
    pub half_saturation: f64,
}

impl SmoothRate for Saturating {
    fn name(&self) -> String {
        "saturating".into()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let xi = x[self.coord];
        self.k * xi / (self.half_saturation + xi)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        let den = self.half_saturation + x[self.coord];
        g[self.coord] = self.k * self.half_saturation / (den * den);
        g
    }

    fn hessian_norm(&self, x: &[f64]) -> f64 {
        let den = self.half_saturation + x[self.coord];
        (2.0 * self.k * self.half_saturation / (den * den * den)).abs()
    }
}
