//! Primal active-set solver for the dual quadratic programs.
//!
//! The problem shape is always the same: minimize u^T Q u over the affine
//! simplex 1^T u = 1 with the first `nonneg_count` coordinates constrained
//! nonnegative. Q is the (regularized) inverse of a symmetric PSD matrix.

use crate::error::{Result, SlpError};

use super::realmat::{inverse_spd, solve_spd, RealMatrix};

const FEAS_TOL: f64 = 1e-12;
const MULT_TOL: f64 = 1e-11;

/// Quadratic program data: symmetric PSD `q` of size `dim` and the number of
/// leading coordinates constrained nonnegative.
#[derive(Debug, Clone)]
pub struct SimplexQp {
    q: RealMatrix,
    nonneg_count: usize,
}

impl SimplexQp {
    pub fn new(q: RealMatrix, nonneg_count: usize) -> Result<Self> {
        if q.rows != q.cols {
            return Err(SlpError::Contract(format!(
                "Q must be square, got {}x{}",
                q.rows, q.cols
            )));
        }
        if nonneg_count > q.rows {
            return Err(SlpError::Contract(format!(
                "nonneg_count {} exceeds dimension {}",
                nonneg_count, q.rows
            )));
        }
        let scale = q.data.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
        let mut sym_dev = 0.0f64;
        for r in 0..q.rows {
            for c in 0..r {
                sym_dev = sym_dev.max((q.at(r, c) - q.at(c, r)).abs());
            }
        }
        if sym_dev > 1e-10 * scale.max(1e-300) {
            return Err(SlpError::Contract(format!(
                "Q must be symmetric (deviation {sym_dev:.3e})"
            )));
        }
        Ok(Self { q, nonneg_count })
    }

    /// Build Q = (V_tilde + eps I)^{-1} with eps = 1e-10 tr(V_tilde)/dim.
    pub fn from_v_tilde(v_tilde: &RealMatrix, nonneg_count: usize) -> Result<Self> {
        let n = v_tilde.rows;
        let mut reg = v_tilde.clone();
        let eps = 1e-10 * (v_tilde.trace() / n.max(1) as f64).abs().max(1e-300);
        for i in 0..n {
            *reg.at_mut(i, i) += eps;
        }
        let q = inverse_spd(&reg).map_err(|_| {
            SlpError::Numeric("V_tilde is not positive definite after regularization".into())
        })?;
        Self::new(q, nonneg_count)
    }

    pub fn dim(&self) -> usize {
        self.q.rows
    }

    pub fn nonneg_count(&self) -> usize {
        self.nonneg_count
    }

    pub fn q(&self) -> &RealMatrix {
        &self.q
    }

    pub fn objective(&self, u: &[f64]) -> f64 {
        let qu = self.q.matvec(u);
        u.iter().zip(&qu).map(|(a, b)| a * b).sum()
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        self.q.matvec(u).iter().map(|x| 2.0 * x).collect()
    }
}

/// Dual vector solving the QP, ordered with the nonnegative block first.
#[derive(Debug, Clone)]
pub struct DualVector {
    pub u: Vec<f64>,
    pub iterations: usize,
}

/// Solve min u^T Q u s.t. 1^T u = 1, u_i >= 0 for i < nonneg_count.
///
/// Primal active-set iteration: each step solves the equality-constrained
/// subproblem with the working set pinned to zero, steps to the nearest
/// blocking constraint, and releases constraints with negative multipliers.
pub fn solve_simplex_qp(prob: &SimplexQp) -> Result<DualVector> {
    let n = prob.dim();
    if n == 0 {
        return Err(SlpError::Contract("empty problem".into()));
    }
    // Feasible start: uniform weights.
    let mut u = vec![1.0 / n as f64; n];
    let mut active = vec![false; n];
    let max_iter = 100 * (n + 1);

    for iter in 0..max_iter {
        // Equality-constrained optimum with active coordinates pinned to zero.
        let target = subproblem_solution(prob, &active)?;
        let d: Vec<f64> = target.iter().zip(&u).map(|(t, x)| t - x).collect();
        let step_len = d.iter().map(|x| x.abs()).fold(0.0f64, f64::max);

        if step_len <= FEAS_TOL {
            // Check multipliers of the active constraints.
            let g = prob.gradient(&u);
            let lambda = free_multiplier(&g, &active);
            let mut worst = f64::INFINITY;
            let mut worst_idx = None;
            for i in 0..prob.nonneg_count() {
                if active[i] {
                    let theta = g[i] - lambda;
                    if theta < worst {
                        worst = theta;
                        worst_idx = Some(i);
                    }
                }
            }
            match worst_idx {
                Some(i) if worst < -MULT_TOL => {
                    active[i] = false;
                    continue;
                }
                _ => {
                    return Ok(DualVector {
                        u,
                        iterations: iter + 1,
                    })
                }
            }
        }

        // Longest feasible step toward the subproblem optimum.
        let mut alpha = 1.0f64;
        let mut blocking = None;
        for i in 0..prob.nonneg_count() {
            if !active[i] && d[i] < -FEAS_TOL {
                let a = -u[i] / d[i];
                if a < alpha {
                    alpha = a;
                    blocking = Some(i);
                }
            }
        }
        for (x, di) in u.iter_mut().zip(&d) {
            *x += alpha * di;
        }
        if let Some(i) = blocking {
            u[i] = 0.0;
            active[i] = true;
        }
    }
    Err(SlpError::Convergence {
        iterations: max_iter,
        residual: f64::NAN,
    })
}

/// Solve min x^T Q x s.t. 1^T x = 1, x_i = 0 for active i.
fn subproblem_solution(prob: &SimplexQp, active: &[bool]) -> Result<Vec<f64>> {
    let n = prob.dim();
    let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
    if free.is_empty() {
        return Err(SlpError::Numeric("all coordinates pinned".into()));
    }
    let nf = free.len();
    let mut qff = RealMatrix::zeros(nf, nf);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            *qff.at_mut(a, b) = prob.q.at(i, j);
        }
    }
    let ones = vec![1.0; nf];
    let y = solve_spd(&qff, &ones).map_err(|_| {
        SlpError::Numeric("reduced Q block is not positive definite".into())
    })?;
    let s: f64 = y.iter().sum();
    if s.abs() < 1e-300 {
        return Err(SlpError::Numeric("degenerate KKT system (1^T Q^-1 1 = 0)".into()));
    }
    let mut x = vec![0.0; n];
    for (a, &i) in free.iter().enumerate() {
        x[i] = y[a] / s;
    }
    Ok(x)
}

fn free_multiplier(g: &[f64], active: &[bool]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (gi, &a) in g.iter().zip(active) {
        if !a {
            sum += gi;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[f64]) -> RealMatrix {
        let n = values.len();
        let mut m = RealMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            *m.at_mut(i, i) = v;
        }
        m
    }

    /// Exhaustive active-set enumeration: checks every subset of pinned
    /// nonnegative coordinates and keeps the best feasible candidate.
    pub(crate) fn enumeration_oracle(prob: &SimplexQp) -> Vec<f64> {
        let n = prob.dim();
        let k = prob.nonneg_count();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0..(1u32 << k) {
            let mut active = vec![false; n];
            for i in 0..k {
                active[i] = (mask >> i) & 1 == 1;
            }
            if active.iter().all(|&a| a) && k == n {
                continue;
            }
            let Ok(x) = subproblem_solution(prob, &active) else {
                continue;
            };
            if (0..k).any(|i| x[i] < -1e-9) {
                continue;
            }
            let obj = prob.objective(&x);
            if best.as_ref().map_or(true, |(b, _)| obj < *b) {
                best = Some((obj, x));
            }
        }
        best.expect("simplex is nonempty").1
    }

    pub(crate) fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> RealMatrix {
        let mut a = RealMatrix::zeros(n, n);
        for v in a.data.iter_mut() {
            *v = rng.gen::<f64>() * 2.0 - 1.0;
        }
        let mut q = a.transpose().matmul(&a);
        for i in 0..n {
            *q.at_mut(i, i) += 0.05; // keep well conditioned
        }
        q
    }

    #[test]
    fn unconstrained_identity_gives_uniform() {
        let prob = SimplexQp::new(RealMatrix::identity(4), 0).unwrap();
        let sol = solve_simplex_qp(&prob).unwrap();
        for v in &sol.u {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn inactive_constraints_match_closed_form() {
        let prob = SimplexQp::new(diag(&[1.0, 100.0]), 2).unwrap();
        let sol = solve_simplex_qp(&prob).unwrap();
        assert!((sol.u[0] - 100.0 / 101.0).abs() < 1e-10);
        assert!((sol.u[1] - 1.0 / 101.0).abs() < 1e-10);
    }

    #[test]
    fn active_constraint_is_found() {
        // equality-only solution is [7/5, -2/5]; optimum pins coordinate 1
        let q = RealMatrix {
            rows: 2,
            cols: 2,
            data: vec![1.0, 3.0, 3.0, 10.0],
        };
        let prob = SimplexQp::new(q, 2).unwrap();
        let sol = solve_simplex_qp(&prob).unwrap();
        assert!((sol.u[0] - 1.0).abs() < 1e-10);
        assert!(sol.u[1].abs() < 1e-12);
    }

    #[test]
    fn matches_enumeration_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..500 {
            let n = 2 + (trial % 5);
            let k = rng.gen_range(0..=n);
            let prob = SimplexQp::new(random_psd(&mut rng, n), k).unwrap();
            let sol = solve_simplex_qp(&prob).unwrap();
            let oracle = enumeration_oracle(&prob);
            let got = prob.objective(&sol.u);
            let want = prob.objective(&oracle);
            assert!(
                got <= want + 1e-8,
                "trial {trial}: solver {got} vs oracle {want}"
            );
            let sum: f64 = sol.u.iter().sum();
            assert!((sum - 1.0).abs() < 1e-8);
            for i in 0..k {
                assert!(sol.u[i] >= -1e-10);
            }
        }
    }

    #[test]
    fn from_v_tilde_regularizes() {
        // rank-deficient V_tilde still yields a solvable Q
        let v = RealMatrix {
            rows: 2,
            cols: 2,
            data: vec![1.0, 1.0, 1.0, 1.0],
        };
        let prob = SimplexQp::from_v_tilde(&v, 0).unwrap();
        let sol = solve_simplex_qp(&prob).unwrap();
        assert!((sol.u.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }
}
