//! Constructive-interference geometry shared by the precoder and combiner
//! updates: the effective matrix G = W H, the symbol basis vectors, the
//! pair-summing matrix U and the quadratic forms V / V_tilde.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::constellation::{build_index_partition, decompose_symbol, Constellation, IndexPartition};
use crate::error::{Result, SlpError};
use crate::linalg::ComplexMatrix;
use crate::solvers::realmat::RealMatrix;

/// Per-user receive combining matrices W_k (each L x N_R).
#[derive(Debug, Clone)]
pub struct CombinerSet {
    per_user: Vec<ComplexMatrix>,
}

impl CombinerSet {
    pub fn new(per_user: Vec<ComplexMatrix>) -> Self {
        assert!(!per_user.is_empty());
        let (l, nr) = (per_user[0].rows(), per_user[0].cols());
        assert!(per_user.iter().all(|w| w.rows() == l && w.cols() == nr));
        Self { per_user }
    }

    /// Row-selector combiner [I_L | 0] for every user.
    pub fn selector(users: usize, streams: usize, rx_antennas: usize) -> Self {
        assert!(streams <= rx_antennas);
        let w = ComplexMatrix::from_fn(streams, rx_antennas, |r, c| {
            if r == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self {
            per_user: vec![w; users],
        }
    }

    pub fn users(&self) -> usize {
        self.per_user.len()
    }

    pub fn streams(&self) -> usize {
        self.per_user[0].rows()
    }

    pub fn user(&self, k: usize) -> &ComplexMatrix {
        &self.per_user[k]
    }

    /// Block-diagonal W of shape KL x K*N_R.
    pub fn block_diagonal(&self) -> ComplexMatrix {
        let k = self.users();
        let l = self.streams();
        let nr = self.per_user[0].cols();
        let mut w = ComplexMatrix::zeros(k * l, k * nr);
        for (u, wk) in self.per_user.iter().enumerate() {
            for r in 0..l {
                for c in 0..nr {
                    w[(u * l + r, u * nr + c)] = wk[(r, c)];
                }
            }
        }
        w
    }
}

/// Everything the closed-form precoder needs about one (W, H, s) triple.
#[derive(Debug, Clone)]
pub struct CiGeometry {
    g: ComplexMatrix,
    gram: ComplexMatrix,
    s_bar: Vec<Complex64>,
    s_hat: Vec<Complex64>,
    partition: IndexPartition,
    v: RealMatrix,
    v_tilde: RealMatrix,
}

impl CiGeometry {
    pub fn g(&self) -> &ComplexMatrix {
        &self.g
    }

    pub fn g_row(&self, i: usize) -> &[Complex64] {
        self.g.row(i)
    }

    /// Basis vector s_bar of length 2·KL, components interleaved
    /// [s_1^R, s_1^J, s_2^R, ...].
    pub fn s_bar(&self) -> &[Complex64] {
        &self.s_bar
    }

    /// Reciprocal row [1/s_1, ..., 1/s_KL].
    pub fn s_hat(&self) -> &[Complex64] {
        &self.s_hat
    }

    pub fn partition(&self) -> &IndexPartition {
        &self.partition
    }

    pub fn v(&self) -> &RealMatrix {
        &self.v
    }

    pub fn v_tilde(&self) -> &RealMatrix {
        &self.v_tilde
    }

    pub fn dim(&self) -> usize {
        self.s_hat.len()
    }

    /// Pair-summing matrix U = I_KL ⊗ [1, 1].
    pub fn u_pair(&self) -> ComplexMatrix {
        let n = self.dim();
        ComplexMatrix::from_fn(n, 2 * n, |r, c| {
            if c == 2 * r || c == 2 * r + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Target received vector U diag(gamma) s_bar for a scaling vector in
    /// original component ordering.
    pub fn target_from_gamma(&self, gamma: &[f64]) -> Vec<Complex64> {
        let n = self.dim();
        debug_assert_eq!(gamma.len(), 2 * n);
        (0..n)
            .map(|i| self.s_bar[2 * i] * gamma[2 * i] + self.s_bar[2 * i + 1] * gamma[2 * i + 1])
            .collect()
    }

    /// Minimum-norm transmit vector x with G x = y.
    pub fn min_norm_preimage(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let w = self
            .gram
            .solve(&ComplexMatrix::col_vector(y))
            .map_err(|e| SlpError::Numeric(format!("Gram solve failed: {e}")))?;
        Ok(self.g.hermitian().mul_vec(&w.col(0)))
    }

    /// Decompose G x into per-component scaling factors (original ordering):
    /// gamma[2i] = Re(g_i x)/Re(s_i), gamma[2i+1] = Im(g_i x)/Im(s_i).
    pub fn decompose_received(&self, x: &[Complex64]) -> Vec<f64> {
        let gx = self.g.mul_vec(x);
        let mut gamma = vec![0.0; 2 * self.dim()];
        for (i, &v) in gx.iter().enumerate() {
            gamma[2 * i] = v.re / self.s_bar[2 * i].re;
            gamma[2 * i + 1] = v.im / self.s_bar[2 * i + 1].im;
        }
        gamma
    }
}

/// Assemble the CI geometry for combiner set `w`, channels `h` and symbol
/// vector `s` drawn from constellation `c`.
pub fn build_ci_geometry(
    w: &CombinerSet,
    h: &ChannelSet,
    s: &[Complex64],
    c: &Constellation,
) -> Result<CiGeometry> {
    if w.users() != h.users() {
        return Err(SlpError::Contract(format!(
            "combiner has {} users, channel has {}",
            w.users(),
            h.users()
        )));
    }
    let kl = s.len();
    if kl != w.users() * w.streams() {
        return Err(SlpError::Contract(format!(
            "symbol vector length {} != K*L = {}",
            kl,
            w.users() * w.streams()
        )));
    }
    for &sym in s {
        if sym.norm() < 1e-12 || sym.re == 0.0 || sym.im == 0.0 {
            return Err(SlpError::InvalidSymbol(format!(
                "symbol {sym} has a vanishing component"
            )));
        }
    }
    let partition = build_index_partition(s, c)?;
    let g = w.block_diagonal().matmul(h.stacked());
    build_geometry_from_g(g, s, partition)
}

/// Geometry from an explicit effective matrix G (used by the combiner update
/// where G is the received vector itself, and by tests).
pub fn build_geometry_from_g(
    g: ComplexMatrix,
    s: &[Complex64],
    partition: IndexPartition,
) -> Result<CiGeometry> {
    let kl = s.len();
    assert_eq!(g.rows(), kl);
    let mut s_bar = Vec::with_capacity(2 * kl);
    let mut s_hat = Vec::with_capacity(kl);
    for &sym in s {
        let b = decompose_symbol(sym);
        s_bar.push(b.s_r);
        s_bar.push(b.s_j);
        s_hat.push(Complex64::new(1.0, 0.0) / sym);
    }

    // Gram matrix with a relative ridge if numerically singular.
    let mut gram = g.matmul(&g.hermitian());
    let trace: f64 = (0..kl).map(|i| gram[(i, i)].re).sum();
    if gram.solve(&ComplexMatrix::identity(kl)).is_err() {
        let eps = 1e-10 * (trace / kl.max(1) as f64).max(1e-300);
        for i in 0..kl {
            gram[(i, i)] += Complex64::new(eps, 0.0);
        }
    }

    // T = diag(s_bar^H) U^H (G G^H)^{-1} U diag(s_bar) built column-wise:
    // A = U diag(s_bar) has row i carrying (s_i^R, s_i^J) at columns 2i, 2i+1.
    let a = ComplexMatrix::from_fn(kl, 2 * kl, |r, c| {
        if c == 2 * r || c == 2 * r + 1 {
            s_bar[c]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let x = gram
        .solve(&a)
        .map_err(|e| SlpError::Numeric(format!("(GG^H) solve failed: {e}")))?;
    let t_mat = a.hermitian().matmul(&x);

    let n2 = 2 * kl;
    let mut v = RealMatrix::zeros(n2, n2);
    for r in 0..n2 {
        for c in 0..n2 {
            *v.at_mut(r, c) = t_mat[(r, c)].re;
        }
    }
    // symmetrize roundoff
    for r in 0..n2 {
        for c in 0..r {
            let m = 0.5 * (v.at(r, c) + v.at(c, r));
            *v.at_mut(r, c) = m;
            *v.at_mut(c, r) = m;
        }
    }
    let perm = partition.perm();
    let mut v_tilde = RealMatrix::zeros(n2, n2);
    for r in 0..n2 {
        for c in 0..n2 {
            *v_tilde.at_mut(r, c) = v.at(perm[r], perm[c]);
        }
    }

    Ok(CiGeometry {
        g,
        gram,
        s_bar,
        s_hat,
        partition,
        v,
        v_tilde,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, Purpose, RngStream};
    use crate::constellation::{build_constellation, map_bits};
    use crate::linalg::eig_hermitian;

    #[test]
    fn scalar_geometry() {
        let c = build_constellation(4).unwrap();
        let s = map_bits(&[1, 1], &c).unwrap();
        let h = ChannelSet::new(vec![ComplexMatrix::identity(1)]);
        let w = CombinerSet::selector(1, 1, 1);
        let geo = build_ci_geometry(&w, &h, &s, &c).unwrap();
        assert_eq!(geo.g()[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(geo.dim(), 1);
        // s_hat * s = 1
        assert!((geo.s_hat()[0] * s[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn u_pair_structure() {
        let c = build_constellation(16).unwrap();
        let s = map_bits(&[0, 0, 0, 0, 1, 1, 1, 1], &c).unwrap();
        let h = ChannelSet::new(vec![
            sample_channel(1, 2, 4, RngStream::new(1, 0, Purpose::Channel))
                .user(0)
                .clone(),
            sample_channel(1, 2, 4, RngStream::new(1, 1, Purpose::Channel))
                .user(0)
                .clone(),
        ]);
        let w = CombinerSet::selector(2, 1, 2);
        let geo = build_ci_geometry(&w, &h, &s, &c).unwrap();
        let u = geo.u_pair();
        assert_eq!((u.rows(), u.cols()), (2, 4));
        assert_eq!(u[(0, 0)].re, 1.0);
        assert_eq!(u[(0, 1)].re, 1.0);
        assert_eq!(u[(0, 2)].re, 0.0);
        assert_eq!(u[(1, 2)].re, 1.0);
        assert_eq!(u[(1, 3)].re, 1.0);
        for r in 0..u.rows() {
            let count: f64 = u.row(r).iter().map(|z| z.re).sum();
            assert_eq!(count, 2.0);
        }
    }

    #[test]
    fn v_tilde_is_symmetric_psd() {
        let c = build_constellation(16).unwrap();
        let bits: Vec<u8> = (0..16).map(|i| (i * 7 % 2) as u8).collect();
        let s = map_bits(&bits, &c).unwrap();
        let h = sample_channel(2, 4, 8, RngStream::new(5, 3, Purpose::Channel));
        let w = CombinerSet::selector(2, 2, 4);
        let geo = build_ci_geometry(&w, &h, &s, &c).unwrap();
        let n = 2 * geo.dim();
        let vt = geo.v_tilde();
        let as_complex = ComplexMatrix::from_fn(n, n, |r, cc| Complex64::new(vt.at(r, cc), 0.0));
        let (vals, _) = eig_hermitian(&as_complex).unwrap();
        assert!(vals[0] > -1e-10, "min eigenvalue {}", vals[0]);
        for r in 0..n {
            for cc in 0..n {
                assert!((vt.at(r, cc) - vt.at(cc, r)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_symbol_component_rejected() {
        let c = build_constellation(4).unwrap();
        let h = ChannelSet::new(vec![ComplexMatrix::identity(1)]);
        let w = CombinerSet::selector(1, 1, 1);
        let bad = vec![Complex64::new(1.0, 0.0)];
        assert!(matches!(
            build_ci_geometry(&w, &h, &bad, &c),
            Err(SlpError::InvalidSymbol(_))
        ));
    }

    #[test]
    fn preimage_hits_target() {
        let c = build_constellation(16).unwrap();
        let s = map_bits(&[0, 1, 1, 0, 1, 0, 0, 1], &c).unwrap();
        let h = sample_channel(2, 2, 6, RngStream::new(9, 0, Purpose::Channel));
        let w = CombinerSet::selector(2, 1, 2);
        let geo = build_ci_geometry(&w, &h, &s, &c).unwrap();
        let y = vec![Complex64::new(1.0, -0.5), Complex64::new(0.2, 0.8)];
        let x = geo.min_norm_preimage(&y).unwrap();
        let got = geo.g().mul_vec(&x);
        for (a, b) in got.iter().zip(&y) {
            assert!((a - b).norm() < 1e-9);
        }
    }
}
