//! Dense two-phase simplex for small equality-constrained problems
//! `min cᵀx  s.t.  Ax = b, x >= 0`, with Bland's rule so the pivot sequence
//! (and hence the returned vertex) is fully determined by the column order.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpFailure {
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// `a` is `m x n` (row-major rows), `b` has length `m`, `cost` length `n`.
pub(crate) fn solve(a: &DMatrix<f64>, b: &[f64], cost: &[f64]) -> Result<LpSolution, LpFailure> {
    let m = a.nrows();
    let n = a.ncols();
    let scale = b.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let feas_tol = 1e-10 * scale;

    // Tableau columns: n structural, m artificial, then rhs.
    let width = n + m + 1;
    let mut t = DMatrix::<f64>::zeros(m, width);
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = flip * a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, width - 1)] = flip * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimise the sum of artificials.
    let mut phase1_cost = vec![0.0; n + m];
    for c in phase1_cost.iter_mut().skip(n) {
        *c = 1.0;
    }
    run(&mut t, &mut basis, &phase1_cost, n + m)?;
    let infeas: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &col)| col >= n)
        .map(|(row, _)| t[(row, width - 1)].abs())
        .sum();
    if infeas > feas_tol {
        return Err(LpFailure::Infeasible);
    }
    // Drive degenerate artificials out of the basis where possible.
    for row in 0..m {
        if basis[row] >= n {
            if let Some(col) = (0..n).find(|&j| t[(row, j)].abs() > 1e-9) {
                pivot(&mut t, &mut basis, row, col);
            }
        }
    }

    // Phase 2 over structural columns only.
    let mut phase2_cost = cost.to_vec();
    phase2_cost.extend(std::iter::repeat_n(f64::INFINITY, m));
    run(&mut t, &mut basis, &phase2_cost, n)?;

    let mut x = vec![0.0; n];
    for (row, &col) in basis.iter().enumerate() {
        if col < n {
            x[col] = t[(row, width - 1)].max(0.0);
        }
    }
    Ok(LpSolution {
        x,
        basis: basis.into_iter().filter(|&c| c < n).collect(),
    })
}

/// Primal simplex iterations; only columns `< allowed` may enter.
fn run(
    t: &mut DMatrix<f64>,
    basis: &mut [usize],
    cost: &[f64],
    allowed: usize,
) -> Result<(), LpFailure> {
    let m = t.nrows();
    let width = t.ncols();
    let max_iter = 50 * (width + m) + 1000;
    for _ in 0..max_iter {
        // Reduced costs r_j = c_j - c_Bᵀ T_j.
        let cb: Vec<f64> = basis
            .iter()
            .map(|&c| if cost[c].is_finite() { cost[c] } else { 0.0 })
            .collect();
        let mut entering = None;
        for j in 0..allowed {
            if basis.contains(&j) {
                continue;
            }
            let mut r = cost[j];
            for i in 0..m {
                r -= cb[i] * t[(i, j)];
            }
            if r < -PIVOT_TOL * (1.0 + cost[j].abs()) {
                entering = Some(j);
                break;
            }
        }
        let Some(col) = entering else {
            return Ok(());
        };
        // Ratio test, Bland tie-break on basis index.
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t[(i, col)];
            if a > PIVOT_TOL {
                let ratio = t[(i, width - 1)] / a;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-15 || (ratio <= lr + 1e-15 && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, _)) = leave else {
            return Err(LpFailure::Unbounded);
        };
        pivot(t, basis, row, col);
    }
    Err(LpFailure::IterationLimit)
}

fn pivot(t: &mut DMatrix<f64>, basis: &mut [usize], row: usize, col: usize) {
    let m = t.nrows();
    let width = t.ncols();
    let p = t[(row, col)];
    for j in 0..width {
        t[(row, j)] /= p;
    }
    for i in 0..m {
        if i == row {
            continue;
        }
        let f = t[(i, col)];
        if f != 0.0 {
            for j in 0..width {
                let v = t[(row, j)];
                t[(i, j)] -= f * v;
            }
        }
    }
    basis[row] = col;
}

/// Re-solve the square basic system exactly (up to LU round-off) so the
/// returned weights reproduce `b` to machine precision.
pub(crate) fn polish(a: &DMatrix<f64>, b: &[f64], basis: &[usize]) -> Option<Vec<(usize, f64)>> {
    if basis.is_empty() {
        return Some(Vec::new());
    }
    let m = a.nrows();
    let k = basis.len();
    let sub = DMatrix::from_fn(m, k, |i, j| a[(i, basis[j])]);
    let rhs = DVector::from_column_slice(b);
    let sol = if k == m {
        sub.lu().solve(&rhs)?
    } else {
        let ata = sub.transpose() * &sub;
        ata.lu().solve(&(sub.transpose() * rhs))?
    };
    Some(basis.iter().cloned().zip(sol.iter().cloned()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // min x0 + 2 x1 + 3 x2  s.t. x0 + x1 + x2 = 1, x1 + 2 x2 = 1
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 0.0, 1.0, 2.0]);
        let sol = solve(&a, &[1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        // x = (0.5, 0, 0.5) costs 2.0; x = (0, 1, 0) costs 2.0 as well.
        let obj: f64 = sol.x.iter().zip([1.0, 2.0, 3.0]).map(|(x, c)| x * c).sum();
        assert!((obj - 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_lp() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert_eq!(
            solve(&a, &[-1.0], &[1.0, 1.0]).unwrap_err(),
            LpFailure::Infeasible
        );
    }
}
