//! Small dense matrix services: Hurwitz checks, the continuous Lyapunov
//! equation, spectral summaries and the Σ-norm.
//!
//! Everything here targets desk-scale dimensions (`d <= 4`), so the Lyapunov
//! equation is solved through its Kronecker linearisation and symmetric
//! eigenproblems through cyclic Jacobi sweeps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spectral abscissa threshold below which a matrix counts as Hurwitz.
pub const HURWITZ_MARGIN: f64 = 1e-12;

const SYMMETRY_RTOL: f64 = 1e-12;
const LYAPUNOV_RTOL: f64 = 1e-10;
const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// The drift matrix `A = DF(c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftMatrix(DMatrix<f64>);

impl DriftMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "drift matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self(entries))
    }

    pub fn from_row_slice(d: usize, data: &[f64]) -> Result<Self> {
        if data.len() != d * d {
            return Err(Error::Dimension(format!(
                "expected {} entries, got {}",
                d * d,
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(d, d, data))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Spectral norm `sup_{|y|=1} |Ay|`.
    pub fn spectral_norm(&self) -> f64 {
        let ata = self.0.transpose() * &self.0;
        let (vals, _) = jacobi_eigen(&ata);
        vals.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt()
    }

    /// Largest real part over the spectrum.
    pub fn spectral_abscissa(&self) -> f64 {
        self.0
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A symmetric positive definite covariance matrix such as `σ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    /// Validates symmetry (relative tolerance `1e-12`) and positive definiteness.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "covariance must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let scale = max_abs(&entries).max(f64::MIN_POSITIVE);
        let asym = max_abs(&(&entries - entries.transpose()));
        if asym > SYMMETRY_RTOL * scale {
            return Err(Error::Model(format!(
                "covariance not symmetric (asymmetry {asym:e})"
            )));
        }
        let sym = symmetrize(&entries);
        let (vals, _) = jacobi_eigen(&sym);
        let lambda_min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if lambda_min <= 0.0 {
            return Err(Error::Definiteness { lambda_min });
        }
        Ok(Self(sym))
    }

    pub fn from_row_slice(d: usize, data: &[f64]) -> Result<Self> {
        if data.len() != d * d {
            return Err(Error::Dimension(format!(
                "expected {} entries, got {}",
                d * d,
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(d, d, data))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn lambda_min(&self) -> f64 {
        let (vals, _) = jacobi_eigen(&self.0);
        vals.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `Sp'(M)` together with the condition number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub lambda_bar: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub rho: f64,
}

/// Solution of `AΣ + ΣAᵀ + σ² = 0` with the derived quantities used
/// throughout: `Σ⁻¹`, `Σ^{-1/2}`, `σ²_Σ = Σ^{-1/2} σ² Σ^{-1/2}` and
/// `α₁ = ½ λ_min(σ²_Σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySolution {
    pub sigma: DMatrix<f64>,
    pub sigma_inv: DMatrix<f64>,
    pub sigma_inv_sqrt: DMatrix<f64>,
    pub sigma2_sigma: DMatrix<f64>,
    pub alpha1: f64,
    pub residual: f64,
}

impl GeometrySolution {
    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// `yᵀ Σ⁻¹ y` for an arbitrary real vector.
    pub fn quad_form(&self, y: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for (i, yi) in y.iter().enumerate().take(d) {
            let row: f64 = (0..d).map(|j| self.sigma_inv[(i, j)] * y[j]).sum();
            acc += yi * row;
        }
        acc
    }

    /// `Sp'(Σ)`.
    pub fn sigma_summary(&self) -> SpectralSummary {
        summary_of(&self.sigma)
    }
}

/// True iff every eigenvalue of `a` has real part below `-1e-12`.
pub fn check_hurwitz(a: &DriftMatrix) -> bool {
    a.spectral_abscissa() < -HURWITZ_MARGIN
}

/// Solve the continuous Lyapunov equation for a Hurwitz drift.
pub fn solve_lyapunov(a: &DriftMatrix, sigma2: &CovarianceMatrix) -> Result<GeometrySolution> {
    let d = a.dim();
    if sigma2.dim() != d {
        return Err(Error::Dimension(format!(
            "drift is {d}x{d} but covariance is {0}x{0}",
            sigma2.dim()
        )));
    }
    let abscissa = a.spectral_abscissa();
    if abscissa >= -HURWITZ_MARGIN {
        return Err(Error::Stability {
            max_real_part: abscissa,
        });
    }

    // (I ⊗ A + A ⊗ I) vec(Σ) = -vec(σ²), column-major vec.
    let am = a.matrix();
    let n = d * d;
    let mut k = DMatrix::<f64>::zeros(n, n);
    for col in 0..d {
        for row in 0..d {
            let r = col * d + row;
            for m in 0..d {
                // (AΣ)_{row,col} = Σ_m A_{row,m} Σ_{m,col}
                k[(r, col * d + m)] += am[(row, m)];
                // (ΣAᵀ)_{row,col} = Σ_m Σ_{row,m} A_{col,m}
                k[(r, m * d + row)] += am[(col, m)];
            }
        }
    }
    let rhs = DVector::from_iterator(n, sigma2.matrix().iter().map(|v| -v));
    let vec_sigma = k.lu().solve(&rhs).ok_or(Error::Numerical {
        context: "lyapunov solve",
        residual: f64::INFINITY,
    })?;
    let sigma = symmetrize(&DMatrix::from_column_slice(d, d, vec_sigma.as_slice()));

    let residual = max_abs(&(am * &sigma + &sigma * am.transpose() + sigma2.matrix()));
    let scale = sigma2.max_abs();
    if residual > LYAPUNOV_RTOL * scale {
        return Err(Error::Numerical {
            context: "lyapunov residual",
            residual,
        });
    }

    let (vals, vecs) = jacobi_eigen(&sigma);
    let lambda_min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if lambda_min <= 0.0 {
        return Err(Error::Definiteness { lambda_min });
    }
    let sigma_inv = symmetrize(&spectral_fn(&vals, &vecs, |l| 1.0 / l));
    let sigma_inv_sqrt = symmetrize(&spectral_fn(&vals, &vecs, |l| 1.0 / l.sqrt()));

    let ident_err = max_abs(&(&sigma * &sigma_inv - DMatrix::identity(d, d)));
    if ident_err > 1e-10 {
        return Err(Error::Numerical {
            context: "Σ inverse",
            residual: ident_err,
        });
    }

    let sigma2_sigma = symmetrize(&(&sigma_inv_sqrt * sigma2.matrix() * &sigma_inv_sqrt));
    let (s_vals, _) = jacobi_eigen(&sigma2_sigma);
    let alpha1 = 0.5 * s_vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if alpha1 <= 0.0 {
        return Err(Error::Definiteness {
            lambda_min: 2.0 * alpha1,
        });
    }

    Ok(GeometrySolution {
        sigma,
        sigma_inv,
        sigma_inv_sqrt,
        sigma2_sigma,
        alpha1,
        residual,
    })
}

/// `‖y‖_Σ = √(yᵀ Σ⁻¹ y)`.
pub fn sigma_norm(geom: &GeometrySolution, y: &[f64]) -> Result<f64> {
    if y.len() != geom.dim() {
        return Err(Error::Dimension(format!(
            "vector of length {} against {}-dimensional geometry",
            y.len(),
            geom.dim()
        )));
    }
    Ok(geom.quad_form(y).max(0.0).sqrt())
}

/// `(d⁻¹ Tr M, λ_min, λ_max, ρ)` for a symmetric positive definite `M`.
pub fn spectral_summary(m: &DMatrix<f64>) -> Result<SpectralSummary> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "{}x{} is not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let s = summary_of(&symmetrize(m));
    if s.lambda_min <= 0.0 {
        return Err(Error::Definiteness {
            lambda_min: s.lambda_min,
        });
    }
    Ok(s)
}

fn summary_of(m: &DMatrix<f64>) -> SpectralSummary {
    let d = m.nrows();
    let (vals, _) = jacobi_eigen(m);
    let lambda_min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let lambda_max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lambda_bar = m.trace() / d as f64;
    SpectralSummary {
        lambda_bar,
        lambda_min,
        lambda_max,
        rho: lambda_max / lambda_min,
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns the
/// eigenvalues (unsorted) and the orthogonal matrix of eigenvectors (columns).
pub fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let d = m.nrows();
    let mut a = symmetrize(m);
    let mut v = DMatrix::<f64>::identity(d, d);
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if total == 0.0 {
        return (vec![0.0; d], v);
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += 2.0 * a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= JACOBI_TOL * total {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..d).map(|i| a[(i, i)]).collect(), v)
}

fn spectral_fn(vals: &[f64], vecs: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let d = vals.len();
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(d, vals.iter().map(|&l| f(l))));
    vecs * diag * vecs.transpose()
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hurwitz_examples() {
        assert!(check_hurwitz(&DriftMatrix::diagonal(&[-1.0, -1.0])));
        assert!(!check_hurwitz(
            &DriftMatrix::from_row_slice(2, &[0.0, 1.0, -1.0, 0.0]).unwrap()
        ));
        assert!(check_hurwitz(&DriftMatrix::diagonal(&[-1.0, -2.0])));
        assert!(DriftMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn lyapunov_identity_case() {
        let a = DriftMatrix::diagonal(&[-1.0, -1.0]);
        let s2 = CovarianceMatrix::from_row_slice(2, &[2.0, 0.0, 0.0, 2.0]).unwrap();
        let g = solve_lyapunov(&a, &s2).unwrap();
        assert_abs_diff_eq!(g.sigma, DMatrix::identity(2, 2), epsilon = 1e-14);
    }

    #[test]
    fn lyapunov_diagonal_closed_form() {
        // Σ_ij = σ²_ij / (|a_i| + |a_j|) for diagonal A.
        let a = DriftMatrix::diagonal(&[-1.0, -2.0]);
        let s2 = CovarianceMatrix::from_row_slice(2, &[6.0, 2.0, 2.0, 6.0]).unwrap();
        let g = solve_lyapunov(&a, &s2).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[3.0, 2.0 / 3.0, 2.0 / 3.0, 1.5]);
        assert_abs_diff_eq!(g.sigma, expect, epsilon = 1e-13);
        assert!(g.residual <= 1e-12);
    }

    #[test]
    fn lyapunov_scalar_immigration_death() {
        let mu = 3.5;
        let a = DriftMatrix::diagonal(&[-1.0]);
        let s2 = CovarianceMatrix::from_row_slice(1, &[2.0 * mu]).unwrap();
        let g = solve_lyapunov(&a, &s2).unwrap();
        assert_abs_diff_eq!(g.sigma[(0, 0)], mu, epsilon = 1e-14);
        assert_abs_diff_eq!(g.alpha1, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn lyapunov_rejects_unstable_drift() {
        let a = DriftMatrix::from_row_slice(2, &[0.0, 1.0, -1.0, 0.0]).unwrap();
        let s2 = CovarianceMatrix::identity(2);
        assert!(matches!(
            solve_lyapunov(&a, &s2),
            Err(Error::Stability { .. })
        ));
    }

    #[test]
    fn sigma_norm_examples() {
        let a = DriftMatrix::diagonal(&[-1.0, -1.0]);
        let g = solve_lyapunov(
            &a,
            &CovarianceMatrix::from_row_slice(2, &[2.0, 0.0, 0.0, 2.0]).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(sigma_norm(&g, &[3.0, 4.0]).unwrap(), 5.0, epsilon = 1e-13);
        assert_eq!(sigma_norm(&g, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(sigma_norm(&g, &[1.0]).is_err());

        // Σ = diag(4, 1): A = -I, σ² = diag(8, 2).
        let g = solve_lyapunov(
            &a,
            &CovarianceMatrix::from_row_slice(2, &[8.0, 0.0, 0.0, 2.0]).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(sigma_norm(&g, &[2.0, 0.0]).unwrap(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn spectral_summary_examples() {
        let s = spectral_summary(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(
            (s.lambda_bar, s.lambda_min, s.lambda_max, s.rho),
            (1.0, 1.0, 1.0, 1.0)
        );

        let s = spectral_summary(&DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 4.0])).unwrap();
        assert_abs_diff_eq!(s.lambda_min, 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(s.lambda_max, 5.0, epsilon = 1e-13);
        assert_abs_diff_eq!(s.lambda_bar, 4.0, epsilon = 1e-13);
        assert_abs_diff_eq!(s.rho, 5.0 / 3.0, epsilon = 1e-13);

        let s = spectral_summary(&DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 8.0])).unwrap();
        assert_eq!(s.lambda_bar, 5.0);
        assert_eq!(s.rho, 4.0);

        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            spectral_summary(&indefinite),
            Err(Error::Definiteness { .. })
        ));
    }

    #[test]
    fn covariance_validation() {
        assert!(CovarianceMatrix::from_row_slice(2, &[1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(CovarianceMatrix::from_row_slice(2, &[1.0, 2.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        assert_abs_diff_eq!(
            DriftMatrix::diagonal(&[-1.0, -2.0]).spectral_norm(),
            2.0,
            epsilon = 1e-13
        );
    }
}
