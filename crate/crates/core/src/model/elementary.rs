use super::process::ProcessSpec;
use super::rate::RateFunction;
use crate::error::{Error, Result};
use crate::factor::{factorize, WeightedJumpSet};
use crate::spectral::{
    check_hurwitz, solve_lyapunov, CovarianceMatrix, DriftMatrix, GeometrySolution,
};

/// A process realising a prescribed `(c, A, σ²)` with constant rates
/// everywhere except affine rates on the positive coordinate jumps.
#[derive(Debug, Clone)]
pub struct ElementaryProcess {
    pub spec: ProcessSpec,
    pub geom: GeometrySolution,
    pub source: WeightedJumpSet,
}

impl ElementaryProcess {
    /// Same rates at scale `n`.
    pub fn at_scale(&self, n: u64) -> Self {
        Self {
            spec: self.spec.with_n(n),
            ..self.clone()
        }
    }
}

/// Builds the elementary process with `g^{e^(i)}(x) = g̃(e^(i)) + (A(x-c))_i`
/// and `δ₀ = λ_min(σ²) / (8‖A‖)`. The returned spec has `n = 1`.
pub fn build_elementary(
    c: &[f64],
    a: &DriftMatrix,
    sigma2: &CovarianceMatrix,
) -> Result<ElementaryProcess> {
    let d = c.len();
    if a.dim() != d || sigma2.dim() != d {
        return Err(Error::Dimension(format!(
            "c has length {d}, A is {}x{0}, sigma^2 is {}x{1}",
            a.dim(),
            sigma2.dim()
        )));
    }
    if !check_hurwitz(a) {
        return Err(Error::Stability {
            max_real_part: a.spectral_abscissa(),
        });
    }
    let source = factorize(sigma2)?;
    let geom = solve_lyapunov(a, sigma2)?;
    let jumps = source
        .entries
        .iter()
        .map(|(j, w)| {
            let rate = match j.positive_unit_index() {
                Some(i) => RateFunction::Affine {
                    value: *w,
                    gradient: a.matrix().row(i).iter().cloned().collect(),
                    center: c.to_vec(),
                },
                None => RateFunction::Constant(*w),
            };
            (j.clone(), rate)
        })
        .collect();
    let delta0 = sigma2.lambda_min() / (8.0 * a.spectral_norm());
    let spec = ProcessSpec::new(jumps, 1, c.to_vec(), delta0)?;
    Ok(ElementaryProcess { spec, geom, source })
}
