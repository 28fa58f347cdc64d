use nalgebra::DMatrix;

use super::process::{drift_field, local_covariance_raw, ProcessSpec};
use crate::error::{Error, Result};
use crate::factor::JumpVector;
use crate::spectral::{DriftMatrix, GeometrySolution};

/// Relative slack on the ball-membership test, absorbing round-off in `Σ⁻¹`.
pub const MEMBERSHIP_RTOL: f64 = 1e-12;

/// A process restricted to the Σ-ball of radius `nδ` about `nc`.
#[derive(Debug, Clone)]
pub struct TruncatedModel {
    pub spec: ProcessSpec,
    pub geom: GeometrySolution,
    pub delta: f64,
    nc: Vec<f64>,
    radius2: f64,
}

impl TruncatedModel {
    pub fn new(spec: ProcessSpec, geom: GeometrySolution, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Precondition(format!(
                "truncation radius must be positive, got {delta}"
            )));
        }
        if geom.dim() != spec.dim() {
            return Err(Error::Dimension(format!(
                "geometry has dimension {}, process {}",
                geom.dim(),
                spec.dim()
            )));
        }
        let nc = spec.scaled_center();
        let r = spec.n() as f64 * delta;
        Ok(Self {
            spec,
            geom,
            delta,
            nc,
            radius2: r * r,
        })
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn n(&self) -> u64 {
        self.spec.n()
    }

    pub fn nc(&self) -> &[f64] {
        &self.nc
    }

    /// `nδ`.
    pub fn radius(&self) -> f64 {
        self.radius2.sqrt()
    }

    /// `‖X - nc‖²_Σ`.
    pub fn h0(&self, x: &[i64]) -> f64 {
        let y: Vec<f64> = x.iter().zip(&self.nc).map(|(&a, b)| a as f64 - b).collect();
        self.geom.quad_form(&y)
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.h0(x) <= self.radius2 * (1.0 + MEMBERSHIP_RTOL)
    }

    /// `n g^J(X/n)` when both `X` and `X + J` lie in the ball, else 0.
    pub fn truncated_rate(&self, jump: &JumpVector, x: &[i64]) -> f64 {
        let Some((_, rate)) = self.spec.jumps().iter().find(|(j, _)| j == jump) else {
            return 0.0;
        };
        let target: Vec<i64> = x.iter().zip(jump.coords()).map(|(a, b)| a + b).collect();
        if !self.contains(x) || !self.contains(&target) {
            return 0.0;
        }
        let n = self.n() as f64;
        let xs: Vec<f64> = x.iter().map(|&v| v as f64 / n).collect();
        n * rate.eval(&xs)
    }

    /// Truncated rate of every jump of the spec at `X`, in jump-list order.
    pub fn rates_by_jump(&self, x: &[i64], out: &mut Vec<f64>) {
        out.clear();
        if !self.contains(x) {
            out.resize(self.spec.jumps().len(), 0.0);
            return;
        }
        let n = self.n() as f64;
        let xs: Vec<f64> = x.iter().map(|&v| v as f64 / n).collect();
        let mut target = x.to_vec();
        for (j, rate) in self.spec.jumps() {
            for (t, (a, b)) in target.iter_mut().zip(x.iter().zip(j.coords())) {
                *t = a + b;
            }
            out.push(if self.contains(&target) {
                n * rate.eval(&xs)
            } else {
                0.0
            });
        }
    }

    /// All positive truncated rates out of `X`, in jump-list order.
    pub fn outgoing(&self, x: &[i64]) -> Vec<(Vec<i64>, f64)> {
        if !self.contains(x) {
            return Vec::new();
        }
        let n = self.n() as f64;
        let xs: Vec<f64> = x.iter().map(|&v| v as f64 / n).collect();
        self.spec
            .jumps()
            .iter()
            .filter_map(|(j, rate)| {
                let target: Vec<i64> = x.iter().zip(j.coords()).map(|(a, b)| a + b).collect();
                if !self.contains(&target) {
                    return None;
                }
                let r = n * rate.eval(&xs);
                (r != 0.0).then_some((target, r))
            })
            .collect()
    }
}

/// `Σ_J rate_J(X) (h(X+J) - h(X))` on the truncated chain.
pub fn apply_generator(
    model: &TruncatedModel,
    h: impl Fn(&[i64]) -> Option<f64>,
    x: &[i64],
) -> Result<f64> {
    let out = model.outgoing(x);
    if out.is_empty() {
        return Ok(0.0);
    }
    let missing = |p: &[i64]| Error::Precondition(format!("h undefined at {p:?}"));
    let hx = h(x).ok_or_else(|| missing(x))?;
    let mut acc = 0.0;
    for (target, rate) in out {
        let ht = h(&target).ok_or_else(|| missing(&target))?;
        acc += rate * (ht - hx);
    }
    Ok(acc)
}

/// Closed form `n{2F(x)ᵀΣ⁻¹(X-nc) + Tr(Σ⁻¹σ²(x))}` for `𝒜h₀` at states
/// whose every one-jump neighbour stays inside the ball.
pub fn generator_h0_closed_form(model: &TruncatedModel, x: &[i64]) -> f64 {
    let n = model.n() as f64;
    let xs: Vec<f64> = x.iter().map(|&v| v as f64 / n).collect();
    let f = drift_field(&model.spec, &xs);
    let y: Vec<f64> = x
        .iter()
        .zip(model.nc())
        .map(|(&a, b)| a as f64 - b)
        .collect();
    let si = &model.geom.sigma_inv;
    let d = model.dim();
    let mut cross = 0.0;
    for i in 0..d {
        for j in 0..d {
            cross += f[i] * si[(i, j)] * y[j];
        }
    }
    let s2 = local_covariance_raw(&model.spec, &xs);
    let tr = (si * s2).trace();
    n * (2.0 * cross + tr)
}

fn shifted(w: &[i64], j: usize, by: i64) -> Vec<i64> {
    let mut v = w.to_vec();
    v[j] += by;
    v
}

/// Forward difference `Δ_j h(w) = h(w + e^(j)) - h(w)`.
pub fn delta<H: Fn(&[i64]) -> f64>(h: &H, w: &[i64], j: usize) -> f64 {
    h(&shifted(w, j, 1)) - h(w)
}

/// `Δ_{jk} h(w) = Δ_j Δ_k h(w)`.
pub fn delta2<H: Fn(&[i64]) -> f64>(h: &H, w: &[i64], j: usize, k: usize) -> f64 {
    let wj = shifted(w, j, 1);
    let wk = shifted(w, k, 1);
    let wjk = shifted(&wj, k, 1);
    h(&wjk) - h(&wj) - h(&wk) + h(w)
}

/// Gradient and Hessian of forward differences at `w`.
pub fn differences<H: Fn(&[i64]) -> f64>(h: &H, w: &[i64]) -> (Vec<f64>, DMatrix<f64>) {
    let d = w.len();
    let g = (0..d).map(|j| delta(h, w, j)).collect();
    let m = DMatrix::from_fn(d, d, |j, k| delta2(h, w, j, k));
    (g, m)
}

/// `(n/2) Tr(σ² Δ²h(w)) + Δh(w)ᵀ A (w - nc)`.
pub fn apply_reduced_generator<H: Fn(&[i64]) -> f64>(
    sigma2: &DMatrix<f64>,
    a: &DriftMatrix,
    c: &[f64],
    n: u64,
    h: &H,
    w: &[i64],
) -> f64 {
    let nf = n as f64;
    let (g, m) = differences(h, w);
    let d = w.len();
    let y: Vec<f64> = w
        .iter()
        .zip(c)
        .map(|(&wi, ci)| wi as f64 - nf * ci)
        .collect();
    let mut first = 0.0;
    for (i, gi) in g.iter().enumerate().take(d) {
        let ay: f64 = y
            .iter()
            .enumerate()
            .map(|(k, yk)| a.matrix()[(i, k)] * yk)
            .sum();
        first += gi * ay;
    }
    0.5 * nf * (sigma2 * m).trace() + first
}

/// `E₂(W, J, h) = h(W+J) - h(W) - Δh(W)ᵀJ - ½ JᵀΔ²h(W)J + ½ Σ_j J_j Δ_jj h(W)`.
pub fn newton_remainder_e2<H: Fn(&[i64]) -> f64>(h: &H, w: &[i64], jump: &[i64]) -> f64 {
    let d = w.len();
    let (g, m) = differences(h, w);
    let wj: Vec<i64> = w.iter().zip(jump).map(|(a, b)| a + b).collect();
    let jf: Vec<f64> = jump.iter().map(|&v| v as f64).collect();
    let lin: f64 = (0..d).map(|i| g[i] * jf[i]).sum();
    let mut quad = 0.0;
    for i in 0..d {
        for k in 0..d {
            quad += jf[i] * m[(i, k)] * jf[k];
        }
    }
    let diag: f64 = (0..d).map(|i| jf[i] * m[(i, i)]).sum();
    h(&wj) - h(w) - lin - 0.5 * quad + 0.5 * diag
}
