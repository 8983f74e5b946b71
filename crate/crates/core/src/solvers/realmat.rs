//! Minimal dense real-matrix helpers for the small optimization subproblems.

use crate::error::{Result, SlpError};

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.at_mut(c, r) = self.at(r, c);
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    *out.at_mut(r, c) += a * other.at(k, c);
                }
            }
        }
        out
    }

    /// trace for square matrices.
    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.at(i, i)).sum()
    }
}

/// Cholesky factor L (lower) of a symmetric positive definite matrix.
pub fn cholesky(a: &RealMatrix) -> Result<RealMatrix> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut l = RealMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.at(i, j);
            for k in 0..j {
                sum -= l.at(i, k) * l.at(j, k);
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(SlpError::Numeric(format!(
                        "matrix not positive definite (pivot {sum:.3e} at {i})"
                    )));
                }
                *l.at_mut(i, j) = sum.sqrt();
            } else {
                *l.at_mut(i, j) = sum / l.at(j, j);
            }
        }
    }
    Ok(l)
}

/// Solve A x = b for SPD A via Cholesky.
pub fn solve_spd(a: &RealMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let l = cholesky(a)?;
    let n = a.rows;
    // forward
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l.at(i, k) * y[k];
        }
        y[i] /= l.at(i, i);
    }
    // backward (L^T x = y)
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l.at(k, i) * y[k];
        }
        y[i] /= l.at(i, i);
    }
    Ok(y)
}

/// Inverse of an SPD matrix.
pub fn inverse_spd(a: &RealMatrix) -> Result<RealMatrix> {
    let n = a.rows;
    let mut out = RealMatrix::zeros(n, n);
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        let col = solve_spd(a, &e)?;
        for r in 0..n {
            *out.at_mut(r, c) = col[r];
        }
    }
    // symmetrize roundoff
    for r in 0..n {
        for c in 0..r {
            let v = 0.5 * (out.at(r, c) + out.at(c, r));
            *out.at_mut(r, c) = v;
            *out.at_mut(c, r) = v;
        }
    }
    Ok(out)
}

/// Minimum-norm solution of the consistent underdetermined system A x = b:
/// x = A^T (A A^T)^{-1} b, with a tiny ridge retry if the Gram matrix is
/// numerically singular.
pub fn min_norm_solution(a: &RealMatrix, b: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(a.rows, b.len());
    let at = a.transpose();
    let gram = a.matmul(&at);
    let y = match solve_spd(&gram, b) {
        Ok(y) => y,
        Err(_) => {
            let mut ridged = gram.clone();
            let eps = 1e-12 * (gram.trace() / gram.rows.max(1) as f64).max(1e-30);
            for i in 0..ridged.rows {
                *ridged.at_mut(i, i) += eps;
            }
            solve_spd(&ridged, b)?
        }
    };
    Ok(at.matvec(&y))
}

/// Minimize ||x||^2 subject to `a_eq x = b_eq` and `a_in x >= b_in`.
///
/// Dual-flavored active set: start from the equality-only minimum-norm point,
/// repeatedly pin the most violated inequality and drop pinned rows whose
/// multiplier turns negative. Returns the solution and the iteration count.
pub fn min_norm_with_inequalities(
    a_eq: &RealMatrix,
    b_eq: &[f64],
    a_in: &RealMatrix,
    b_in: &[f64],
) -> Result<(Vec<f64>, usize)> {
    assert_eq!(a_eq.rows, b_eq.len());
    assert_eq!(a_in.rows, b_in.len());
    assert!(a_in.rows == 0 || a_eq.cols == a_in.cols);
    let n_eq = a_eq.rows;
    let m = a_in.rows;
    let dim = a_eq.cols.max(a_in.cols);
    let scale = 1.0
        + b_eq.iter().chain(b_in).map(|x| x.abs()).fold(0.0f64, f64::max);
    let tol = 1e-9 * scale;

    let mut active: Vec<bool> = vec![false; m];
    let max_iter = 50 * (m + n_eq + 2);

    for iter in 0..max_iter {
        let n_act = active.iter().filter(|&&a| a).count();
        let mut rows = RealMatrix::zeros(n_eq + n_act, dim);
        let mut rhs = vec![0.0; n_eq + n_act];
        for r in 0..n_eq {
            for c in 0..dim {
                *rows.at_mut(r, c) = a_eq.at(r, c);
            }
            rhs[r] = b_eq[r];
        }
        let mut act_rows = Vec::with_capacity(n_act);
        let mut rr = n_eq;
        for (i, &a) in active.iter().enumerate() {
            if a {
                for c in 0..dim {
                    *rows.at_mut(rr, c) = a_in.at(i, c);
                }
                rhs[rr] = b_in[i];
                act_rows.push(i);
                rr += 1;
            }
        }

        let x = min_norm_solution(&rows, &rhs)?;
        // consistency of the pinned system
        let achieved = rows.matvec(&x);
        let eq_resid = achieved
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if eq_resid > 1e-6 * scale {
            return Err(SlpError::Infeasible {
                row: act_rows.first().copied(),
            });
        }

        // multipliers of pinned inequalities: x = rows^T y with lambda = 2 y
        if !act_rows.is_empty() {
            let gram = rows.matmul(&rows.transpose());
            let mut ridged = gram.clone();
            let eps = 1e-12 * (gram.trace() / gram.rows.max(1) as f64).max(1e-30);
            for i in 0..ridged.rows {
                *ridged.at_mut(i, i) += eps;
            }
            let y = solve_spd(&ridged, &rows.matvec(&x))?;
            let mut worst = 0.0f64;
            let mut worst_idx = None;
            for (pos, &i) in act_rows.iter().enumerate() {
                let lambda = y[n_eq + pos];
                if lambda < worst {
                    worst = lambda;
                    worst_idx = Some(i);
                }
            }
            if let Some(i) = worst_idx {
                if worst < -1e-9 {
                    active[i] = false;
                    continue;
                }
            }
        }

        // most violated inactive inequality
        let mut worst = tol;
        let mut worst_idx = None;
        for i in 0..m {
            if active[i] {
                continue;
            }
            let v = b_in[i]
                - a_in.data[i * a_in.cols..(i + 1) * a_in.cols]
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            if v > worst {
                worst = v;
                worst_idx = Some(i);
            }
        }
        match worst_idx {
            Some(i) => active[i] = true,
            None => return Ok((x, iter + 1)),
        }
    }
    Err(SlpError::Convergence {
        iterations: max_iter,
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_solve_roundtrip() {
        let a = RealMatrix {
            rows: 3,
            cols: 3,
            data: vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0],
        };
        let x = vec![1.0, -2.0, 0.5];
        let b = a.matvec(&x);
        let got = solve_spd(&a, &b).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-12);
        }
        let inv = inverse_spd(&a).unwrap();
        let prod = a.matmul(&inv);
        for r in 0..3 {
            for c in 0..3 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!((prod.at(r, c) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn min_norm_with_inequalities_simple_cases() {
        // no inequalities: matches the plain minimum-norm point
        let a = RealMatrix {
            rows: 1,
            cols: 2,
            data: vec![1.0, 1.0],
        };
        let (x, _) = min_norm_with_inequalities(&a, &[2.0], &RealMatrix::zeros(0, 2), &[]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10 && (x[1] - 1.0).abs() < 1e-10);

        // inequality active: min ||x||^2 s.t. x0 >= 1, x1 >= 2 from origin
        let ineq = RealMatrix {
            rows: 2,
            cols: 2,
            data: vec![1.0, 0.0, 0.0, 1.0],
        };
        let (x, _) =
            min_norm_with_inequalities(&RealMatrix::zeros(0, 2), &[], &ineq, &[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 2.0).abs() < 1e-9);

        // inequality inactive when already satisfied
        let (x, _) =
            min_norm_with_inequalities(&a, &[2.0], &ineq, &[0.5, 0.5]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn min_norm_with_inequalities_detects_infeasible() {
        // x0 = 0 together with x0 >= 1 cannot hold
        let eq = RealMatrix {
            rows: 1,
            cols: 1,
            data: vec![1.0],
        };
        let ineq = RealMatrix {
            rows: 1,
            cols: 1,
            data: vec![1.0],
        };
        let r = min_norm_with_inequalities(&eq, &[0.0], &ineq, &[1.0]);
        assert!(matches!(r, Err(SlpError::Infeasible { .. })));
    }

    #[test]
    fn min_norm_satisfies_constraints() {
        let a = RealMatrix {
            rows: 2,
            cols: 4,
            data: vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0],
        };
        let b = vec![2.0, 4.0];
        let x = min_norm_solution(&a, &b).unwrap();
        let r = a.matvec(&x);
        assert!((r[0] - 2.0).abs() < 1e-12 && (r[1] - 4.0).abs() < 1e-12);
        // symmetric split is the minimum-norm choice
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[2] - 1.0).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12 && (x[3] - 2.0).abs() < 1e-12);
    }
}
