//! Smallest-eigenvalue maximization under alignment, power and optional
//! linear transmit constraints.
//!
//! The problem: over Hermitian P1 (and a free lower block P2 when linear
//! constraint rows are present), maximize z subject to
//!
//!   realify(P1) - z I  PSD,
//!   || P s ||^2 <= p,
//!   P1 s = K * (user-k column block of P1) s_k  for every user k
//!   (and the same row-partitioned identity for P2),
//!   optional rows  A (P s) = b.
//!
//! Structure used by the solver: write S_k for the symbol vector embedded in
//! user k's block. The alignment constraints say P S_k is one common vector
//! v = (P s)/K, and Hermiticity forces the inner products S_k^H v to share a
//! single real value c. The compression of P1 onto span{S_k} is then the
//! rank-one matrix c w w^T (w_k = 1/||s_k||), so by eigenvalue interlacing
//! the optimum is z* = 0 whenever K >= 2, and z* = sqrt(p)/||s|| for K = 1.
//! All optimal solutions with c > 0 contain the rank-one term v v^H / c; the
//! solver returns that term plus a PSD spread over the untouched subspace so
//! the precoding matrix is well conditioned among the optimal set.

use num_complex::Complex64;

use crate::error::{Result, SlpError};
use crate::linalg::{dot, eig_hermitian, norm, norm_sqr, ComplexMatrix};

use super::realmat::{min_norm_solution, RealMatrix};

/// Linear constraint rows on the transmit vector x = P s.
#[derive(Debug, Clone)]
pub struct CiRows {
    /// m x total_dim complex coefficient rows.
    pub rows: ComplexMatrix,
    /// Right-hand sides, length m.
    pub rhs: Vec<Complex64>,
    /// Number of transmit antennas (columns of P when stacked).
    pub total_dim: usize,
}

/// Problem data for the min-eigenvalue maximization.
#[derive(Debug, Clone)]
pub struct MinEigProblem {
    /// n = K * L, the side of the Hermitian block.
    pub dimension: usize,
    /// Symbol vector s of length n (no zero entries).
    pub symbols: Vec<Complex64>,
    pub users: usize,
    pub streams_per_user: usize,
    /// Transmit power budget p >= 0 (watts).
    pub power: f64,
    /// Present for the CI-constrained variant.
    pub ci_rows: Option<CiRows>,
}

impl MinEigProblem {
    pub fn validate(&self) -> Result<()> {
        if self.dimension != self.users * self.streams_per_user {
            return Err(SlpError::Contract(format!(
                "dimension {} != users {} * streams {}",
                self.dimension, self.users, self.streams_per_user
            )));
        }
        if self.symbols.len() != self.dimension {
            return Err(SlpError::Contract(format!(
                "symbol vector length {} != dimension {}",
                self.symbols.len(),
                self.dimension
            )));
        }
        if self.power < 0.0 {
            return Err(SlpError::Contract("power must be nonnegative".into()));
        }
        if let Some(ci) = &self.ci_rows {
            if ci.rows.cols() != ci.total_dim || ci.rhs.len() != ci.rows.rows() {
                return Err(SlpError::Contract("inconsistent CI row dimensions".into()));
            }
            if ci.total_dim < self.dimension {
                return Err(SlpError::Contract(format!(
                    "total_dim {} smaller than Hermitian block {}",
                    ci.total_dim, self.dimension
                )));
            }
        }
        Ok(())
    }

    /// Symbol vector of user k embedded into C^n.
    pub fn embedded_symbol(&self, k: usize) -> Vec<Complex64> {
        let l = self.streams_per_user;
        let mut v = vec![Complex64::new(0.0, 0.0); self.dimension];
        v[k * l..(k + 1) * l].copy_from_slice(&self.symbols[k * l..(k + 1) * l]);
        v
    }
}

/// Solver output. `p2` is present exactly when the problem carried CI rows.
#[derive(Debug, Clone)]
pub struct MinEigSolution {
    pub p1: ComplexMatrix,
    pub z: f64,
    pub p2: Option<ComplexMatrix>,
    /// Transmit vector x = P s realised by the solution.
    pub transmit: Vec<Complex64>,
}

pub fn solve_min_eig(prob: &MinEigProblem) -> Result<MinEigSolution> {
    prob.validate()?;
    let n = prob.dimension;
    let s = &prob.symbols;
    if s.iter().any(|z| z.norm() < 1e-300) {
        return Err(SlpError::InvalidSymbol(
            "symbol vector contains zero entries".into(),
        ));
    }

    match &prob.ci_rows {
        None => {
            // Unconstrained transmit direction: spend the budget on the
            // consistent direction q = sum_k S_k / ||S_k||^2.
            let q = consistent_direction(prob);
            let qn = norm(&q);
            let beta = prob.power.sqrt() / (prob.users as f64 * qn);
            let v: Vec<Complex64> = q.iter().map(|z| z * beta).collect();
            let c = beta; // S_k^H v = beta for every k
            let p1 = assemble_p1(prob, &v, c)?;
            let z = min_eig_of(&p1)?;
            let transmit: Vec<Complex64> =
                v.iter().map(|z| z * prob.users as f64).collect();
            Ok(MinEigSolution {
                p1,
                z,
                p2: None,
                transmit,
            })
        }
        Some(ci) => {
            let x = solve_transmit_vector(prob, ci)?;
            let k = prob.users as f64;
            let v: Vec<Complex64> = x[..n].iter().map(|z| z / k).collect();
            let x2: Vec<Complex64> = x[n..].iter().map(|z| z / k).collect();
            let cs: Vec<f64> = (0..prob.users)
                .map(|u| dot(&prob.embedded_symbol(u), &v).re)
                .collect();
            let c = cs[0];
            for (u, &cu) in cs.iter().enumerate() {
                if (cu - c).abs() > 1e-7 * (1.0 + c.abs()) {
                    return Err(SlpError::Numeric(format!(
                        "alignment consistency violated for user {u}: {cu} vs {c}"
                    )));
                }
            }
            let p1 = assemble_p1(prob, &v, c)?;
            let p2 = assemble_p2(prob, ci.total_dim, &x2);
            let z = min_eig_of(&p1)?;
            Ok(MinEigSolution {
                p1,
                z,
                p2: Some(p2),
                transmit: x,
            })
        }
    }
}

/// q = sum_k S_k / ||S_k||^2; the unique direction in span{S_k} with equal
/// real inner products against every S_k.
fn consistent_direction(prob: &MinEigProblem) -> Vec<Complex64> {
    let n = prob.dimension;
    let mut q = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..prob.users {
        let sk = prob.embedded_symbol(k);
        let nn = norm_sqr(&sk);
        for (qi, si) in q.iter_mut().zip(&sk) {
            *qi += si / nn;
        }
    }
    q
}

/// Hermitian PSD completion P1 = v v^H / c + g (I - Proj_U - vperp vperp^H)
/// with prescribed action P1 S_k = v for every k.
fn assemble_p1(prob: &MinEigProblem, v: &[Complex64], c: f64) -> Result<ComplexMatrix> {
    let n = prob.dimension;
    let vnorm = norm(v);
    let spread = prob.power.sqrt() / norm(&prob.symbols);

    if vnorm < 1e-12 * (1.0 + spread) {
        // zero prescribed action; pure spread off the symbol subspace
        let mut p1 = ComplexMatrix::zeros(n, n);
        add_scaled_off_subspace_identity(prob, &mut p1, spread, None);
        return Ok(p1.hermitian_part());
    }
    if c <= 1e-10 * vnorm {
        return Err(SlpError::Numeric(format!(
            "PSD completion requires a positive alignment value, got c = {c:.3e}"
        )));
    }

    let mut p1 = ComplexMatrix::zeros(n, n);
    let inv_c = 1.0 / c;
    for r in 0..n {
        for cc in 0..n {
            p1[(r, cc)] = v[r] * v[cc].conj() * inv_c;
        }
    }

    // v component orthogonal to span{S_k}
    let mut vperp = v.to_vec();
    for k in 0..prob.users {
        let sk = prob.embedded_symbol(k);
        let nn = norm_sqr(&sk);
        let coeff = dot(&sk, v) / nn;
        for (vp, si) in vperp.iter_mut().zip(&sk) {
            *vp -= coeff * si;
        }
    }
    let vperp_n = norm(&vperp);
    let vperp_unit = if vperp_n > 1e-9 * vnorm {
        Some(
            vperp
                .iter()
                .map(|z| z / vperp_n)
                .collect::<Vec<Complex64>>(),
        )
    } else {
        None
    };
    add_scaled_off_subspace_identity(prob, &mut p1, spread, vperp_unit.as_deref());
    Ok(p1.hermitian_part())
}

/// p1 += g * (I - sum_k Shat_k Shat_k^H - vperp vperp^H).
fn add_scaled_off_subspace_identity(
    prob: &MinEigProblem,
    p1: &mut ComplexMatrix,
    g: f64,
    vperp_unit: Option<&[Complex64]>,
) {
    let n = prob.dimension;
    for i in 0..n {
        p1[(i, i)] += Complex64::new(g, 0.0);
    }
    for k in 0..prob.users {
        let sk = prob.embedded_symbol(k);
        let nn = norm_sqr(&sk);
        for r in 0..n {
            for c in 0..n {
                p1[(r, c)] -= sk[r] * sk[c].conj() * (g / nn);
            }
        }
    }
    if let Some(u) = vperp_unit {
        for r in 0..n {
            for c in 0..n {
                p1[(r, c)] -= u[r] * u[c].conj() * g;
            }
        }
    }
}

/// P2 with prescribed action P2 S_k = x2 for every k plus a spread term that
/// acts only off the symbol subspace.
fn assemble_p2(prob: &MinEigProblem, total_dim: usize, x2: &[Complex64]) -> ComplexMatrix {
    let n = prob.dimension;
    let rows = total_dim - n;
    let q = consistent_direction(prob);
    let mut p2 = ComplexMatrix::zeros(rows, n);
    for r in 0..rows {
        for c in 0..n {
            p2[(r, c)] = x2[r] * q[c].conj();
        }
    }
    // spread: g * T (I - Proj_U) with T cycling the standard basis
    let g = prob.power.sqrt() / norm(&prob.symbols);
    let mut proj = ComplexMatrix::zeros(n, n);
    for k in 0..prob.users {
        let sk = prob.embedded_symbol(k);
        let nn = norm_sqr(&sk);
        for r in 0..n {
            for c in 0..n {
                proj[(r, c)] += sk[r] * sk[c].conj() / nn;
            }
        }
    }
    for r in 0..rows {
        let basis = r % n;
        for c in 0..n {
            let id = if basis == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            p2[(r, c)] += (id - proj[(basis, c)]) * g;
        }
    }
    p2
}

/// Minimum-norm transmit vector satisfying the CI rows and the Hermiticity
/// consistency conditions, then checked against the power budget.
fn solve_transmit_vector(prob: &MinEigProblem, ci: &CiRows) -> Result<Vec<Complex64>> {
    let n = prob.dimension;
    let nt = ci.total_dim;
    let m = ci.rows.rows();
    let k = prob.users;

    // Real system: 2m rows for the complex CI constraints, K rows forcing
    // Im(S_k^H x1) = 0, K-1 rows equating the real parts across users.
    let total_rows = 2 * m + k + (k - 1);
    let mut a = RealMatrix::zeros(total_rows, 2 * nt);
    let mut b = vec![0.0; total_rows];

    for r in 0..m {
        for c in 0..nt {
            let g = ci.rows[(r, c)];
            *a.at_mut(2 * r, c) = g.re;
            *a.at_mut(2 * r, nt + c) = -g.im;
            *a.at_mut(2 * r + 1, c) = g.im;
            *a.at_mut(2 * r + 1, nt + c) = g.re;
        }
        b[2 * r] = ci.rhs[r].re;
        b[2 * r + 1] = ci.rhs[r].im;
    }
    // Im(S_k^H x1) = sum_i (re_sk * im_x - im_sk * re_x)
    for u in 0..k {
        let sk = prob.embedded_symbol(u);
        let row = 2 * m + u;
        for (i, &si) in sk.iter().enumerate().take(n) {
            *a.at_mut(row, i) = -si.im;
            *a.at_mut(row, nt + i) = si.re;
        }
    }
    // Re(S_u^H x1) - Re(S_0^H x1) = 0
    for u in 1..k {
        let row = 2 * m + k + (u - 1);
        let s0 = prob.embedded_symbol(0);
        let su = prob.embedded_symbol(u);
        for i in 0..n {
            *a.at_mut(row, i) += su[i].re - s0[i].re;
            *a.at_mut(row, nt + i) += su[i].im - s0[i].im;
        }
    }

    let xr = min_norm_solution(&a, &b)?;
    let x: Vec<Complex64> = (0..nt)
        .map(|i| Complex64::new(xr[i], xr[nt + i]))
        .collect();

    // Feasibility checks.
    let mut worst = 0.0f64;
    let mut worst_row = 0usize;
    let scale = 1.0 + ci.rhs.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    for r in 0..m {
        let got: Complex64 = ci.rows.row(r).iter().zip(&x).map(|(a, b)| a * b).sum();
        let resid = (got - ci.rhs[r]).norm();
        if resid > worst {
            worst = resid;
            worst_row = r;
        }
    }
    if worst > 1e-7 * scale {
        return Err(SlpError::Infeasible {
            row: Some(worst_row),
        });
    }
    let power = norm_sqr(&x);
    if power > prob.power * (1.0 + 1e-9) + 1e-12 {
        return Err(SlpError::Infeasible { row: None });
    }
    Ok(x)
}

fn min_eig_of(p1: &ComplexMatrix) -> Result<f64> {
    let (vals, _) = eig_hermitian(p1)?;
    Ok(vals.first().copied().unwrap_or(0.0))
}
