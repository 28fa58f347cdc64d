//! Explicit constants attached to a process and its geometry.
//!
//! Everything here is a closed-form function of the rates at and near `c`
//! together with `Σ`. Quantities that are only known to exist (without a
//! usable formula) are deliberately absent.

use nalgebra::DVector;
use serde::Serialize;

use super::assumptions::{check_assumptions, mu_star, AssumptionReport};
use super::process::{jacobian_at_equilibrium, local_covariance, ProcessSpec};
use crate::error::{Error, Result};
use crate::spectral::{spectral_summary, GeometrySolution, SpectralSummary};

/// Numerical constant appearing in the Stein-solution bounds.
pub const KAPPA0: f64 = 1536.0;

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsLedger {
    pub dim: usize,
    pub n: u64,
    pub delta0: f64,
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub j_max: f64,
    pub j_sigma_max: f64,
    pub alpha1: f64,
    pub lambda_bar: f64,
    pub gamma_bar: f64,
    pub mu_star: f64,
    pub epsilon0: f64,
    pub trace_sigma2_sigma: f64,
    pub sigma2_summary: SpectralSummary,
    pub sigma_summary: SpectralSummary,
    pub k_drift: f64,
    pub delta_drift: f64,
    /// `None` when `L2 = 0`, in which case the constraint is vacuous.
    pub delta_drift_d: Option<f64>,
    pub d_theta1: f64,
    pub theta1: f64,
    pub psi_of_n: f64,
    pub n_drift: f64,
    pub k_exit: f64,
    pub k_sigma: f64,
    pub kappa0: f64,
    /// Elementary processes only: `g^(j) = g^{-e^(j)}(c)`.
    pub g_lower: Option<Vec<f64>>,
    /// Elementary processes only: `G^(j) = Σ_{i: A_ij ≠ 0} g^{e^(i)}(c)`.
    pub g_upper: Option<Vec<f64>>,
    pub g_star: Option<f64>,
    pub n_elementary: Option<f64>,
}

impl ConstantsLedger {
    /// `4 √(log n / (dθ₁ n^{3/4}))`.
    pub fn psi(&self, n: f64) -> f64 {
        psi(n, self.d_theta1)
    }

    /// Largest `δ` for which the drift inequalities are guaranteed.
    pub fn delta_max(&self) -> f64 {
        self.delta_drift_d
            .map_or(self.delta_drift, |v| v.min(self.delta_drift))
    }

    /// Σ-radius `K √(nd)` beyond which the drift inequality applies.
    pub fn drift_radius(&self, n: u64) -> f64 {
        self.k_drift * ((n as f64) * self.dim as f64).sqrt()
    }

    /// `max{K_exit Λ̄ T, n_drift}`.
    pub fn n_exit(&self, t: f64) -> f64 {
        (self.k_exit * self.lambda_bar * t).max(self.n_drift)
    }

    /// Smallest admissible `η` in the concentration bound at scale `n`.
    pub fn concentration_threshold(&self, n: u64) -> f64 {
        self.k_drift * (self.dim as f64 / n as f64).sqrt()
    }

    /// `η⁻² d² K_Σ e^{-nθ₁η²}`.
    pub fn concentration_bound(&self, n: u64, eta: f64) -> f64 {
        let d = self.dim as f64;
        eta.powi(-2) * d * d * self.k_sigma * (-(n as f64) * self.theta1 * eta * eta).exp()
    }

    /// `1/(3 d⁻¹J δ)`, `1/(64 L0 ρ(σ²) ρ(Σ))` and `1/(4 (d⁻¹J)²)`.
    pub fn d_theta1_terms(&self) -> [f64; 3] {
        let jd = self.j_sigma_max / self.dim as f64;
        [
            1.0 / (3.0 * jd * self.delta_drift),
            1.0 / (64.0 * self.l0 * self.sigma2_summary.rho * self.sigma_summary.rho),
            1.0 / (4.0 * jd * jd),
        ]
    }
}

pub fn psi(n: f64, d_theta1: f64) -> f64 {
    4.0 * (n.ln() / (d_theta1 * n.powf(0.75))).sqrt()
}

pub fn constants_ledger(spec: &ProcessSpec, geom: &GeometrySolution) -> Result<ConstantsLedger> {
    let report = check_assumptions(spec);
    constants_ledger_with(spec, geom, &report)
}

pub fn constants_ledger_with(
    spec: &ProcessSpec,
    geom: &GeometrySolution,
    report: &AssumptionReport,
) -> Result<ConstantsLedger> {
    if !report.g3.pass {
        return Err(Error::Precondition(format!(
            "mu_star undefined: {}",
            report.g3.detail
        )));
    }
    let d = spec.dim();
    if geom.dim() != d {
        return Err(Error::Dimension(format!(
            "geometry has dimension {}, process {d}",
            geom.dim()
        )));
    }
    let df = d as f64;
    let c = spec.c();
    let r = spec.delta0();

    let (mut l0, mut l1, mut l2) = (0.0_f64, 0.0_f64, 0.0_f64);
    let (mut gamma, mut j_max, mut j_sigma_max) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (j, rate) in spec.jumps() {
        let at_c = rate.eval(c);
        let (lo, hi) = rate.range_on_ball(c, r);
        l0 = l0.max(lo.abs().max(hi.abs()) / at_c);
        l1 = l1.max(rate.gradient_sup_on_ball(c, r) / at_c);
        l2 = l2.max(rate.hessian_sup_on_ball(c, r) / at_c);
        gamma += at_c * j.euclid().powi(3);
        j_max = j_max.max(j.euclid());
        let v = &geom.sigma_inv_sqrt * DVector::from_vec(j.as_f64());
        j_sigma_max = j_sigma_max.max(v.norm());
    }

    let sigma2 = local_covariance(spec, c)?;
    let lambda = sigma2.matrix().trace();
    let sigma2_summary = spectral_summary(sigma2.matrix())?;
    let sigma_summary = geom.sigma_summary();
    let alpha1 = geom.alpha1;
    let trace_s2s = geom.sigma2_sigma.trace();
    let lambda_bar = lambda / df;

    let k_drift = (2.0 * l0 * trace_s2s / (df * alpha1)).sqrt();
    let delta_drift = spec.delta0() / sigma_summary.lambda_max.sqrt();
    let delta_drift_d = (l2 > 0.0).then(|| {
        alpha1 * sigma_summary.lambda_min.sqrt()
            / (4.0 * df * lambda_bar * l2 * sigma_summary.lambda_max)
    });

    let jd = j_sigma_max / df;
    let d_theta1 = (1.0 / (3.0 * jd * delta_drift))
        .min(1.0 / (64.0 * l0 * sigma2_summary.rho * sigma_summary.rho))
        .min(1.0 / (4.0 * jd * jd));
    let theta1 = d_theta1 / df;
    let n_drift = (jd / delta_drift).powf(4.0 / 3.0);
    let k_exit = l0 * (theta1 * (k_drift + jd).powi(2)).exp();
    let k_sigma = 2.0 * lambda_bar * k_exit / (d_theta1 * alpha1);

    let elementary = report.s2.pass && report.s3.pass && report.s4.pass;
    let (g_lower, g_upper, g_star, n_elementary) = if elementary {
        let a = jacobian_at_equilibrium(spec);
        let rate_of = |v: Vec<i64>| -> f64 {
            spec.jumps()
                .iter()
                .find(|(j, _)| j.0 == v)
                .map_or(0.0, |(_, rate)| rate.eval(c))
        };
        let unit =
            |i: usize, s: i64| -> Vec<i64> { (0..d).map(|k| if k == i { s } else { 0 }).collect() };
        let lower: Vec<f64> = (0..d).map(|j| rate_of(unit(j, -1))).collect();
        let upper: Vec<f64> = (0..d)
            .map(|j| {
                (0..d)
                    .filter(|&i| a.matrix()[(i, j)] != 0.0)
                    .map(|i| rate_of(unit(i, 1)))
                    .sum()
            })
            .collect();
        let star = lower
            .iter()
            .zip(&upper)
            .map(|(g, gg)| g.min(*gg))
            .fold(f64::INFINITY, f64::min);
        let first = (5.0 * jd * d_theta1.sqrt().max(1.0)).powf(8.0 / 3.0);
        let n27 = first.max((k_exit * lambda_bar / star).max(n_drift));
        (Some(lower), Some(upper), Some(star), Some(n27))
    } else {
        (None, None, None, None)
    };

    Ok(ConstantsLedger {
        dim: d,
        n: spec.n(),
        delta0: spec.delta0(),
        l0,
        l1,
        l2,
        lambda,
        gamma,
        j_max,
        j_sigma_max,
        alpha1,
        lambda_bar,
        gamma_bar: gamma / df.powf(1.5),
        mu_star: mu_star(spec, report.epsilon0),
        epsilon0: report.epsilon0,
        trace_sigma2_sigma: trace_s2s,
        sigma2_summary,
        sigma_summary,
        k_drift,
        delta_drift,
        delta_drift_d,
        d_theta1,
        theta1,
        psi_of_n: psi(spec.n() as f64, d_theta1),
        n_drift,
        k_exit,
        k_sigma,
        kappa0: KAPPA0,
        g_lower,
        g_upper,
        g_star,
        n_elementary,
    })
}
