//! Factorisation of a positive definite covariance into nonnegatively
//! weighted integer dyads, `σ² = Σ_J g̃(J) J Jᵀ`.
//!
//! The diagonal split `σ² = (σ² - λ₀ I) + λ₀ I` with `λ₀ = ½ λ_min(σ²)`
//! guarantees every coordinate jump carries weight at least `¼ λ_min`.
//! The remainder is handled in closed form when it is diagonally dominant
//! and otherwise by an exact vertex search over all integer directions in
//! the coordinate box `max_i |J_i| <= 1 + ½ √(2(d-1) ρ(σ²))`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex;
use crate::spectral::{spectral_summary, CovarianceMatrix};

/// Largest dimension handled by the factoriser.
pub const MAX_DIM: usize = 4;

const RECONSTRUCTION_RTOL: f64 = 1e-10;

/// An integer jump vector `J ∈ ℤ^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JumpVector(pub Vec<i64>);

impl JumpVector {
    pub fn new(coords: Vec<i64>) -> Self {
        Self(coords)
    }

    pub fn unit(d: usize, i: usize) -> Self {
        let mut v = vec![0; d];
        v[i] = 1;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }

    /// Index `i` if this is the positive coordinate vector `e^(i)`.
    pub fn positive_unit_index(&self) -> Option<usize> {
        let mut idx = None;
        for (i, &c) in self.0.iter().enumerate() {
            match c {
                0 => {}
                1 if idx.is_none() => idx = Some(i),
                _ => return None,
            }
        }
        idx
    }

    pub fn euclid_sq(&self) -> f64 {
        self.0.iter().map(|&c| (c * c) as f64).sum()
    }

    pub fn euclid(&self) -> f64 {
        self.euclid_sq().sqrt()
    }

    pub fn l1(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn max_abs(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }

    /// First nonzero coordinate is positive.
    fn is_canonical(&self) -> bool {
        self.0.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
    }
}

impl fmt::Display for JumpVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A symmetric set of integer jumps with nonnegative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedJumpSet {
    pub dim: usize,
    pub entries: Vec<(JumpVector, f64)>,
}

impl WeightedJumpSet {
    pub fn weight(&self, j: &JumpVector) -> Option<f64> {
        self.entries.iter().find(|(v, _)| v == j).map(|(_, w)| *w)
    }

    /// `Σ_J g̃(J) J Jᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::<f64>::zeros(d, d);
        for (j, w) in &self.entries {
            for r in 0..d {
                for c in 0..d {
                    m[(r, c)] += w * (j.0[r] * j.0[c]) as f64;
                }
            }
        }
        m
    }

    pub fn max_coordinate(&self) -> i64 {
        self.entries
            .iter()
            .map(|(j, _)| j.max_abs())
            .max()
            .unwrap_or(0)
    }

    /// True when every `J` has `-J` present with the same weight.
    pub fn is_symmetric(&self) -> bool {
        self.entries
            .iter()
            .all(|(j, w)| self.weight(&j.neg()).is_some_and(|wn| wn == *w))
    }

    fn from_canonical(dim: usize, canonical: Vec<(JumpVector, f64)>) -> Self {
        let mut entries = Vec::with_capacity(2 * canonical.len());
        for (j, w) in canonical {
            let half = 0.5 * w;
            entries.push((j.neg(), half));
            entries.push((j, half));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        Self { dim, entries }
    }
}

/// `1 + ½ √(2(d-1) ρ(σ²))`.
pub fn coordinate_bound(sigma2: &CovarianceMatrix) -> Result<f64> {
    let d = sigma2.dim();
    let s = spectral_summary(sigma2.matrix())?;
    Ok(1.0 + 0.5 * (2.0 * (d as f64 - 1.0) * s.rho).sqrt())
}

/// `‖Σ g̃(J) J Jᵀ - σ²‖_max`.
pub fn verify_factorization(ws: &WeightedJumpSet, sigma2: &CovarianceMatrix) -> f64 {
    if ws.dim != sigma2.dim() {
        return f64::INFINITY;
    }
    (ws.reconstruct() - sigma2.matrix())
        .iter()
        .fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Represent `σ²` as a nonnegative combination of integer dyads.
pub fn factorize(sigma2: &CovarianceMatrix) -> Result<WeightedJumpSet> {
    let d = sigma2.dim();
    if d > MAX_DIM {
        return Err(Error::Scale(format!(
            "factorisation supports d <= {MAX_DIM}, got {d}"
        )));
    }
    let summary = spectral_summary(sigma2.matrix())?;
    let lambda0 = 0.5 * summary.lambda_min;
    let mut rest = sigma2.matrix().clone();
    for i in 0..d {
        rest[(i, i)] -= lambda0;
    }

    let mut canonical: Vec<(JumpVector, f64)> = if is_diagonally_dominant(&rest) {
        dominant_split(&rest)
    } else {
        let bound = coordinate_bound(sigma2)?.floor() as i64;
        lattice_split(&rest, bound)?
    };

    // λ₀ I = Σ_i ½λ₀ (e eᵀ + (-e)(-e)ᵀ): canonical weight λ₀ on each e^(i).
    for i in 0..d {
        let e = JumpVector::unit(d, i);
        match canonical.iter_mut().find(|(j, _)| *j == e) {
            Some((_, w)) => *w += lambda0,
            None => canonical.push((e, lambda0)),
        }
    }
    canonical.retain(|(_, w)| *w > 0.0);

    let ws = WeightedJumpSet::from_canonical(d, canonical);
    let residual = verify_factorization(&ws, sigma2);
    if residual > RECONSTRUCTION_RTOL * sigma2.max_abs() {
        return Err(Error::Factorization { residual });
    }
    Ok(ws)
}

fn is_diagonally_dominant(m: &DMatrix<f64>) -> bool {
    let d = m.nrows();
    (0..d).all(|i| {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        m[(i, i)] >= off
    })
}

/// `M = Σ_{i<j} |M_ij| u uᵀ + Σ_i r_i e eᵀ` with `u = e^(i) + sign(M_ij) e^(j)`.
fn dominant_split(m: &DMatrix<f64>) -> Vec<(JumpVector, f64)> {
    let d = m.nrows();
    let mut out = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let mij = m[(i, j)];
            if mij != 0.0 {
                let mut u = vec![0i64; d];
                u[i] = 1;
                u[j] = if mij > 0.0 { 1 } else { -1 };
                out.push((JumpVector(u), mij.abs()));
            }
        }
    }
    for i in 0..d {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        let r = m[(i, i)] - off;
        if r > 0.0 {
            out.push((JumpVector::unit(d, i), r));
        }
    }
    out
}

/// Minimise `Σ g̃(J)|J|³` subject to the `d(d+1)/2` reconstruction
/// constraints over all canonical integer directions inside the box.
fn lattice_split(m: &DMatrix<f64>, bound: i64) -> Result<Vec<(JumpVector, f64)>> {
    let d = m.nrows();
    let columns = canonical_box(d, bound.max(1));
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|r| (r..d).map(move |c| (r, c))).collect();
    let a = DMatrix::from_fn(pairs.len(), columns.len(), |row, col| {
        let (r, c) = pairs[row];
        (columns[col].0[r] * columns[col].0[c]) as f64
    });
    let b: Vec<f64> = pairs.iter().map(|&(r, c)| m[(r, c)]).collect();
    let cost: Vec<f64> = columns.iter().map(|j| j.euclid().powi(3)).collect();

    let failure = |residual: f64| Error::Factorization { residual };
    let sol = simplex::solve(&a, &b, &cost).map_err(|_| failure(f64::INFINITY))?;
    let polished = simplex::polish(&a, &b, &sol.basis).ok_or_else(|| failure(f64::INFINITY))?;
    let weights: Vec<(usize, f64)> = if polished.iter().all(|&(_, w)| w >= -1e-12 * m.amax()) {
        polished
    } else {
        sol.x
            .iter()
            .cloned()
            .enumerate()
            .filter(|&(_, w)| w > 0.0)
            .collect()
    };
    Ok(weights
        .into_iter()
        .filter(|&(_, w)| w > 0.0)
        .map(|(col, w)| (columns[col].clone(), w))
        .collect())
}

/// Canonical (first nonzero positive) integer vectors with `max|J_i| <= bound`,
/// in lexicographic order.
fn canonical_box(d: usize, bound: i64) -> Vec<JumpVector> {
    let side = (2 * bound + 1) as usize;
    let total = side.pow(d as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let mut rem = idx;
        let mut v = vec![0i64; d];
        for k in (0..d).rev() {
            v[k] = (rem % side) as i64 - bound;
            rem /= side;
        }
        let j = JumpVector(v);
        if j.is_canonical() {
            out.push(j);
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cov(d: usize, data: &[f64]) -> CovarianceMatrix {
        CovarianceMatrix::from_row_slice(d, data).unwrap()
    }

    #[test]
    fn identity_factorisation() {
        let ws = factorize(&cov(2, &[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(ws.entries.len(), 4);
        for (_, w) in &ws.entries {
            assert_abs_diff_eq!(*w, 0.5, epsilon = 1e-15);
        }
        assert_eq!(
            verify_factorization(&ws, &cov(2, &[1.0, 0.0, 0.0, 1.0])),
            0.0
        );
    }

    #[test]
    fn four_one_factorisation() {
        let s2 = cov(2, &[4.0, 1.0, 1.0, 4.0]);
        let ws = factorize(&s2).unwrap();
        let w = |v: Vec<i64>| ws.weight(&JumpVector(v)).unwrap();
        assert_abs_diff_eq!(w(vec![1, 1]), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(w(vec![-1, -1]), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(w(vec![1, 0]), 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(w(vec![0, -1]), 1.5, epsilon = 1e-14);
        assert!(verify_factorization(&ws, &s2) <= 1e-10);
    }

    #[test]
    fn bivariate_target_factorisation() {
        let s2 = cov(2, &[6.0, 2.0, 2.0, 6.0]);
        let ws = factorize(&s2).unwrap();
        let w = |v: Vec<i64>| ws.weight(&JumpVector(v)).unwrap();
        assert_abs_diff_eq!(w(vec![1, 1]), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w(vec![1, 0]), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w(vec![0, 1]), 2.0, epsilon = 1e-14);
        // Brute-force reconstruction oracle.
        let mut sum = [[0.0; 2]; 2];
        for (j, g) in &ws.entries {
            for (r, row) in sum.iter_mut().enumerate() {
                for (c, cell) in row.iter_mut().enumerate() {
                    *cell += g * (j.0[r] * j.0[c]) as f64;
                }
            }
        }
        assert_eq!(sum, [[6.0, 2.0], [2.0, 6.0]]);
    }

    #[test]
    fn verify_is_linear_in_weights() {
        let s2 = cov(2, &[1.0, 0.0, 0.0, 1.0]);
        let mut ws = factorize(&s2).unwrap();
        for e in &mut ws.entries {
            e.1 *= 2.0;
        }
        assert_abs_diff_eq!(
            verify_factorization(&ws, &s2),
            s2.max_abs(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn coordinate_bound_examples() {
        assert_eq!(coordinate_bound(&cov(1, &[7.0])).unwrap(), 1.0);
        assert_abs_diff_eq!(
            coordinate_bound(&CovarianceMatrix::identity(3)).unwrap(),
            2.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            coordinate_bound(&cov(2, &[4.0, 1.0, 1.0, 4.0])).unwrap(),
            1.0 + 0.5 * (10.0_f64 / 3.0).sqrt(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn non_dominant_case_uses_lattice_search() {
        // Strong correlation: σ² - λ₀I is far from diagonally dominant.
        let s2 = cov(2, &[10.0, 9.0, 9.0, 10.0]);
        let ws = factorize(&s2).unwrap();
        assert!(verify_factorization(&ws, &s2) <= 1e-10 * s2.max_abs());
        assert!(ws.is_symmetric());
        let bound = coordinate_bound(&s2).unwrap();
        assert!(ws.max_coordinate() as f64 <= bound);
        for i in 0..2 {
            assert!(ws.weight(&JumpVector::unit(2, i)).unwrap() >= 0.25 * s2.lambda_min() - 1e-12);
        }
    }

    #[test]
    fn three_dimensional_non_dominant() {
        let s2 = cov(3, &[5.0, 4.0, -3.0, 4.0, 5.0, -2.0, -3.0, -2.0, 4.0]);
        let ws = factorize(&s2).unwrap();
        assert!(verify_factorization(&ws, &s2) <= 1e-10 * s2.max_abs());
    }

    #[test]
    fn rejects_high_dimension() {
        assert!(matches!(
            factorize(&CovarianceMatrix::identity(5)),
            Err(Error::Scale(_))
        ));
    }

    #[test]
    fn deterministic_output() {
        let s2 = cov(3, &[5.0, 4.0, -3.0, 4.0, 5.0, -2.0, -3.0, -2.0, 4.0]);
        let a = factorize(&s2).unwrap();
        let b = factorize(&s2).unwrap();
        assert_eq!(a, b);
    }
}
