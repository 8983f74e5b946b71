//! Residual reports for verifying solver output against the KKT conditions.

use crate::error::{Result, SlpError};
use crate::linalg::{eig_hermitian, norm_sqr, realify};

use super::min_eig::{MinEigProblem, MinEigSolution};
use super::simplex_qp::SimplexQp;

/// Norms of the four KKT residual groups. All finite for valid inputs.
#[derive(Debug, Clone, Copy)]
pub struct ResidualReport {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

const ACTIVE_TOL: f64 = 1e-9;

/// KKT residuals for a candidate solution of the simplex QP.
///
/// Multipliers are reconstructed from the gradient: lambda is the mean
/// gradient over coordinates treated as free, theta_i = max(0, g_i - lambda)
/// on the nonnegative block.
pub fn kkt_residuals_qp(prob: &SimplexQp, u: &[f64]) -> Result<ResidualReport> {
    if u.len() != prob.dim() {
        return Err(SlpError::Contract(format!(
            "solution length {} != problem dimension {}",
            u.len(),
            prob.dim()
        )));
    }
    let g = prob.gradient(u);
    let active: Vec<bool> = (0..u.len())
        .map(|i| i < prob.nonneg_count() && u[i] <= ACTIVE_TOL)
        .collect();
    let free_count = active.iter().filter(|&&a| !a).count().max(1);
    let lambda: f64 = g
        .iter()
        .zip(&active)
        .filter(|(_, &a)| !a)
        .map(|(gi, _)| gi)
        .sum::<f64>()
        / free_count as f64;

    let stationarity = g
        .iter()
        .zip(&active)
        .filter(|(_, &a)| !a)
        .map(|(gi, _)| (gi - lambda).abs())
        .fold(0.0f64, f64::max);
    let sum: f64 = u.iter().sum();
    let neg = (0..prob.nonneg_count())
        .map(|i| (-u[i]).max(0.0))
        .fold(0.0f64, f64::max);
    let primal = (sum - 1.0).abs().max(neg);
    let dual = (0..prob.nonneg_count())
        .filter(|&i| active[i])
        .map(|i| (lambda - g[i]).max(0.0))
        .fold(0.0f64, f64::max);
    let complementarity = (0..prob.nonneg_count())
        .map(|i| (u[i] * (g[i] - lambda).max(0.0)).abs())
        .fold(0.0f64, f64::max);

    Ok(ResidualReport {
        stationarity,
        primal,
        dual,
        complementarity,
    })
}

/// Residuals for a candidate solution of the min-eigenvalue problem:
/// primal collects the LMI, power and alignment violations, stationarity is
/// the gap between the reported z and the actual smallest eigenvalue, and
/// complementarity measures power slack scaled by z.
pub fn kkt_residuals_min_eig(
    prob: &MinEigProblem,
    sol: &MinEigSolution,
) -> Result<ResidualReport> {
    prob.validate()?;
    if sol.p1.rows() != prob.dimension || sol.p1.cols() != prob.dimension {
        return Err(SlpError::Contract(format!(
            "P1 is {}x{}, expected {0}x{0}",
            sol.p1.rows(),
            sol.p1.cols()
        )));
    }
    let r = realify(&sol.p1)?;
    let (vals, _) = eig_hermitian(&r)?;
    let lam_min = vals.first().copied().unwrap_or(0.0);

    let lmi = (sol.z - lam_min).max(0.0);
    let power_used = norm_sqr(&sol.transmit);
    let power_violation = (power_used - prob.power).max(0.0);

    let k = prob.users as f64;
    let p1s = sol.p1.mul_vec(&prob.symbols);
    let mut align = 0.0f64;
    let scale = 1.0 + p1s.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    for u in 0..prob.users {
        let action = sol.p1.mul_vec(&prob.embedded_symbol(u));
        for (a, b) in action.iter().zip(&p1s) {
            align = align.max((a * k - b).norm());
        }
    }
    if let (Some(p2), Some(ci)) = (&sol.p2, &prob.ci_rows) {
        let full = crate::linalg::ComplexMatrix::vstack(&sol.p1, p2);
        let ps = full.mul_vec(&prob.symbols);
        for u in 0..prob.users {
            let mut su = vec![num_complex::Complex64::new(0.0, 0.0); prob.dimension];
            let l = prob.streams_per_user;
            su[u * l..(u + 1) * l]
                .copy_from_slice(&prob.symbols[u * l..(u + 1) * l]);
            let action = full.mul_vec(&su);
            for (a, b) in action.iter().zip(&ps) {
                align = align.max((a * k - b).norm());
            }
        }
        for row in 0..ci.rows.rows() {
            let got: num_complex::Complex64 = ci
                .rows
                .row(row)
                .iter()
                .zip(&sol.transmit)
                .map(|(a, b)| a * b)
                .sum();
            align = align.max((got - ci.rhs[row]).norm());
        }
    }

    Ok(ResidualReport {
        stationarity: (sol.z - lam_min).abs(),
        primal: lmi.max(power_violation).max(align / scale),
        dual: (-sol.z).max(0.0),
        complementarity: if sol.z > ACTIVE_TOL {
            (prob.power - power_used).abs() / (1.0 + prob.power)
        } else {
            0.0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::min_eig::solve_min_eig;
    use crate::solvers::realmat::RealMatrix;
    use crate::solvers::simplex_qp::solve_simplex_qp;
    use num_complex::Complex64;

    #[test]
    fn exact_qp_solution_has_tiny_residuals() {
        let prob = SimplexQp::new(RealMatrix::identity(4), 0).unwrap();
        let u = vec![0.25; 4];
        let r = kkt_residuals_qp(&prob, &u).unwrap();
        assert!(r.max() <= 1e-10, "{r:?}");
    }

    #[test]
    fn perturbed_solution_is_flagged() {
        // optimum pins coordinate 0: u* = [0, 1]
        let q = RealMatrix {
            rows: 2,
            cols: 2,
            data: vec![10.0, 3.0, 3.0, 1.0],
        };
        let prob = SimplexQp::new(q, 2).unwrap();
        let star = solve_simplex_qp(&prob).unwrap();
        assert!(star.u[0].abs() < 1e-10);
        let exact = kkt_residuals_qp(&prob, &star.u).unwrap();
        assert!(exact.max() < 1e-8, "{exact:?}");

        // u* + 0.1 e1, renormalized
        let mut u = star.u.clone();
        u[0] += 0.1;
        let s: f64 = u.iter().sum();
        for x in u.iter_mut() {
            *x /= s;
        }
        let r = kkt_residuals_qp(&prob, &u).unwrap();
        assert!(
            r.primal.max(r.complementarity) > 1e-3,
            "expected a visible violation, got {r:?}"
        );
    }

    #[test]
    fn shape_mismatch_is_contract_error() {
        let prob = SimplexQp::new(RealMatrix::identity(3), 1).unwrap();
        assert!(matches!(
            kkt_residuals_qp(&prob, &[0.5, 0.5]),
            Err(SlpError::Contract(_))
        ));
    }

    #[test]
    fn min_eig_solution_residuals() {
        let prob = MinEigProblem {
            dimension: 2,
            symbols: vec![Complex64::new(0.7, 0.7), Complex64::new(-0.7, 0.7)],
            users: 2,
            streams_per_user: 1,
            power: 1.0,
            ci_rows: None,
        };
        let sol = solve_min_eig(&prob).unwrap();
        let r = kkt_residuals_min_eig(&prob, &sol).unwrap();
        assert!(r.max() < 1e-6, "{r:?}");
    }
}
