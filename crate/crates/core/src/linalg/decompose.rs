//! Matrix decompositions: QR, Hermitian eigendecomposition, SVD, pseudo-inverse,
//! null-space basis and the complex-to-real block embedding.
//!
//! All routines are direct (Householder reflections, cyclic Jacobi sweeps) so a
//! given input always produces bit-identical output.

use num_complex::Complex64;

use super::matrix::{norm, ComplexMatrix};
use crate::error::{Result, SlpError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// QR decomposition A = Q R with Q unitary (m x m) and R upper triangular
/// (m x n) with nonnegative real diagonal. Requires rows >= cols.
pub fn qr_decompose(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    a.require_finite("qr input")?;
    if a.rows() < a.cols() {
        return Err(SlpError::Contract(format!(
            "qr_decompose requires rows >= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let (q, r) = householder_qr(a);
    Ok((q, r))
}

/// Householder QR without the rows >= cols restriction; returns full Q (m x m)
/// and trapezoidal R (m x n).
pub(crate) fn householder_qr(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let m = a.rows();
    let n = a.cols();
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(m);
    let k_max = m.min(n);

    for k in 0..k_max {
        // Householder vector for column k below the diagonal.
        let x: Vec<Complex64> = (k..m).map(|i| r[(i, k)]).collect();
        let xnorm = norm(&x);
        if xnorm < 1e-300 {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sqr < 1e-300 {
            continue;
        }
        let beta = 2.0 / vnorm_sqr;

        // R <- H R on the trailing block.
        for c in k..n {
            let mut s = ZERO;
            for (i, vi) in v.iter().enumerate() {
                s += vi.conj() * r[(k + i, c)];
            }
            s *= beta;
            for (i, vi) in v.iter().enumerate() {
                let t = s * vi;
                r[(k + i, c)] -= t;
            }
        }
        // Q <- Q H (accumulate from the right).
        for row in 0..m {
            let mut s = ZERO;
            for (i, vi) in v.iter().enumerate() {
                s += q[(row, k + i)] * vi;
            }
            s *= beta;
            for (i, vi) in v.iter().enumerate() {
                let t = s * vi.conj();
                q[(row, k + i)] -= t;
            }
        }
    }

    // Zero out the strict lower part (roundoff) and make the diagonal real
    // nonnegative by a unitary diagonal rescaling.
    for rr in 0..m {
        for cc in 0..n.min(rr) {
            r[(rr, cc)] = ZERO;
        }
    }
    for k in 0..k_max {
        let d = r[(k, k)];
        if d.norm() > 0.0 && (d.im != 0.0 || d.re < 0.0) {
            let ph = d / d.norm();
            let ph_conj = ph.conj();
            for c in k..n {
                let t = r[(k, c)];
                r[(k, c)] = ph_conj * t;
            }
            for row in 0..m {
                let t = q[(row, k)];
                q[(row, k)] = t * ph;
            }
        }
        // Clamp residual imaginary dust on the diagonal.
        if r[(k, k)].norm() > 0.0 {
            r[(k, k)] = Complex64::new(r[(k, k)].norm(), 0.0);
        }
    }
    (q, r)
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues in ascending order with matching orthonormal
/// eigenvector columns. Rejects inputs with `||A - A^H|| > 1e-10 ||A||`.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    a.require_finite("eig input")?;
    if !a.is_square() {
        return Err(SlpError::Contract(format!(
            "eig_hermitian requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let scale = a.frobenius_norm();
    let dev = (a - &a.hermitian()).frobenius_norm();
    if dev > 1e-10 * scale.max(1e-300) {
        return Err(SlpError::Contract(format!(
            "eig_hermitian input is not Hermitian (deviation {dev:.3e}, scale {scale:.3e})"
        )));
    }

    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let tol = 1e-15 * scale.max(1e-300);
    let max_sweeps = 60;

    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.norm() <= tol / (n as f64) {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let mag = apq.norm();
                let phase = apq / mag; // |phase| = 1
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 {
                    1.0 / (tau.abs() + (1.0 + tau * tau).sqrt())
                } else {
                    t
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;

                // Unitary J: columns p,q mixed with phase-augmented rotation;
                // apply M <- J^H M J and V <- V J.
                let jpp = Complex64::new(cs, 0.0);
                let jpq = phase * sn;
                let jqp = -phase.conj() * sn;
                let jqq = Complex64::new(cs, 0.0);

                for r in 0..n {
                    let mrp = m[(r, p)];
                    let mrq = m[(r, q)];
                    m[(r, p)] = mrp * jpp + mrq * jqp;
                    m[(r, q)] = mrp * jpq + mrq * jqq;
                }
                for c in 0..n {
                    let mpc = m[(p, c)];
                    let mqc = m[(q, c)];
                    m[(p, c)] = jpp.conj() * mpc + jqp.conj() * mqc;
                    m[(q, c)] = jpq.conj() * mpc + jqq.conj() * mqc;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = vrp * jpp + vrq * jqp;
                    v[(r, q)] = vrp * jpq + vrq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let eigvals: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let eigvecs = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((eigvals, eigvecs))
}

/// Thin SVD A = U diag(sigma) V^H by one-sided Jacobi.
///
/// `sigma` has min(rows, cols) entries sorted descending; U is rows x k and V
/// is cols x k with orthonormal columns, k = min(rows, cols).
pub fn svd(a: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
    a.require_finite("svd input")?;
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        let (u, s, v) = svd_tall(&a.hermitian())?;
        Ok((v, s, u))
    }
}

fn svd_tall(a: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
    let m = a.rows();
    let n = a.cols();
    let mut w = a.clone(); // columns rotated in place
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(1e-300);
    let tol = 1e-15;
    let max_sweeps = 60;

    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = ZERO;
                for r in 0..m {
                    let wp = w[(r, p)];
                    let wq = w[(r, q)];
                    app += wp.norm_sqr();
                    aqq += wq.norm_sqr();
                    apq += wp.conj() * wq;
                }
                let mag = apq.norm();
                if mag <= tol * (app * aqq).sqrt() + 1e-300 {
                    continue;
                }
                rotated = true;
                let phase = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                // column rotation zeroing the Gram off-diagonal entry
                let cp = Complex64::new(cs, 0.0);
                let sq = phase * sn;
                for r in 0..m {
                    let wp = w[(r, p)];
                    let wq = w[(r, q)];
                    w[(r, p)] = wp * cp - wq * sq.conj();
                    w[(r, q)] = wp * sq + wq * cp;
                }
                for r in 0..n {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = vp * cp - vq * sq.conj();
                    v[(r, q)] = vp * sq + vq * cp;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Singular values are the column norms; normalize U, complete zero columns
    // to an orthonormal set.
    let mut sigma: Vec<f64> = (0..n).map(|c| norm(&w.col(c))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let sigma_sorted: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    sigma = sigma_sorted;

    let mut u = ComplexMatrix::zeros(m, n);
    let mut v_sorted = ComplexMatrix::zeros(n, n);
    for (c_new, &c_old) in order.iter().enumerate() {
        v_sorted.set_col(c_new, &v.col(c_old));
        let wc = w.col(c_old);
        let s = sigma[c_new];
        if s > 1e-14 * scale {
            let inv = 1.0 / s;
            let col: Vec<Complex64> = wc.iter().map(|z| z * inv).collect();
            u.set_col(c_new, &col);
        }
    }
    // Fill columns for (near-)zero singular values by Gram-Schmidt against the
    // columns already placed.
    for c in 0..n {
        if sigma[c] > 1e-14 * scale {
            continue;
        }
        sigma[c] = sigma[c].max(0.0);
        let mut candidate = vec![ZERO; m];
        'seed: for seed in 0..m {
            for x in candidate.iter_mut() {
                *x = ZERO;
            }
            candidate[seed] = ONE;
            for c2 in 0..n {
                if c2 == c || (sigma[c2] <= 1e-14 * scale && c2 > c) {
                    continue;
                }
                let ucol = u.col(c2);
                let proj: Complex64 = ucol.iter().zip(&candidate).map(|(a, b)| a.conj() * b).sum();
                for (x, &uu) in candidate.iter_mut().zip(&ucol) {
                    *x -= proj * uu;
                }
            }
            let nn = norm(&candidate);
            if nn > 1e-6 {
                for x in candidate.iter_mut() {
                    *x /= Complex64::new(nn, 0.0);
                }
                u.set_col(c, &candidate);
                break 'seed;
            }
        }
    }
    Ok((u, sigma, v_sorted))
}

/// Moore–Penrose pseudo-inverse via SVD. `tol` <= 0 selects the default
/// rank cutoff max(rows, cols) * eps * sigma_max.
pub fn pinv(a: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let (u, sigma, v) = svd(a)?;
    let cutoff = effective_rank_cutoff(a, &sigma, tol);
    let k = sigma.len();
    let mut out = ComplexMatrix::zeros(a.cols(), a.rows());
    for i in 0..k {
        if sigma[i] <= cutoff {
            continue;
        }
        let inv = 1.0 / sigma[i];
        let vi = v.col(i);
        let ui = u.col(i);
        for r in 0..a.cols() {
            for c in 0..a.rows() {
                out[(r, c)] += vi[r] * Complex64::new(inv, 0.0) * ui[c].conj();
            }
        }
    }
    Ok(out)
}

/// Orthonormal basis of the (right) null space of A.
///
/// Rank comes from the SVD with threshold `tol * sigma_max` (or the default
/// cutoff when `tol <= 0`); the basis is the orthogonal complement of the
/// leading right-singular vectors, built from a full Householder QR.
pub fn null_space_basis(a: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let n = a.cols();
    let (_, sigma, v) = svd(a)?;
    let cutoff = if tol > 0.0 {
        tol * sigma.first().copied().unwrap_or(0.0)
    } else {
        effective_rank_cutoff(a, &sigma, 0.0)
    };
    let rank = sigma.iter().filter(|&&s| s > cutoff).count();
    if rank == 0 {
        return Ok(ComplexMatrix::identity(n));
    }
    if rank == n {
        return Ok(ComplexMatrix::zeros(n, 0));
    }
    let vr = v.block(0, n, 0, rank);
    let (q, _) = householder_qr(&vr);
    Ok(q.block(0, n, rank, n))
}

fn effective_rank_cutoff(a: &ComplexMatrix, sigma: &[f64], tol: f64) -> f64 {
    let smax = sigma.first().copied().unwrap_or(0.0);
    if tol > 0.0 {
        tol * smax
    } else {
        a.rows().max(a.cols()) as f64 * f64::EPSILON * smax
    }
}

/// Real block embedding [[Re A, -Im A], [Im A, Re A]] of a square complex A.
///
/// For Hermitian A the result is symmetric with the eigenvalues of A doubled
/// in multiplicity.
pub fn realify(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(SlpError::Contract(format!(
            "realify requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    Ok(ComplexMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let val = if r < n && c < n {
            a[(r, c)].re
        } else if r < n {
            -a[(r, c - n)].im
        } else if c < n {
            a[(r - n, c)].im
        } else {
            a[(r - n, c - n)].re
        };
        Complex64::new(val, 0.0)
    }))
}

/// Smallest eigenvalue of a Hermitian matrix (convenience wrapper).
pub fn min_eigenvalue(a: &ComplexMatrix) -> Result<f64> {
    let (vals, _) = eig_hermitian(a)?;
    Ok(vals.first().copied().unwrap_or(0.0))
}
