//! Singular-value precoders for receivers that decode with maximum-likelihood
//! detection: the CI-constrained variant and the CSI-free variant.
//!
//! Both stack a Hermitian top block over a free bottom block. The top block
//! comes out of the min-eigenvalue solver, whose smallest eigenvalue lower
//! bounds the smallest singular value of the stacked precoder.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::constellation::Constellation;
use crate::error::{Result, SlpError};
use crate::linalg::{svd, ComplexMatrix};
use crate::solvers::realmat::{min_norm_with_inequalities, RealMatrix};
use crate::solvers::{solve_min_eig, CiRows, MinEigProblem};

use super::geometry::{build_ci_geometry, CombinerSet};
use super::PrecodeOutcome;

/// Where the effective matrix G for the CI constraints comes from.
#[derive(Debug, Clone, Copy)]
pub enum GSource<'a> {
    /// Row selector of the first L receive antennas per user.
    Selector,
    /// Reuse combiners from a joint design pass.
    Combiners(&'a CombinerSet),
}

/// CI-constrained singular-value precoder.
///
/// Chooses the transmit vector of maximal CI margin that is compatible with a
/// Hermitian top block, pins it as linear rows for the min-eigenvalue solver
/// and stacks the returned blocks.
pub fn ssvmp_precoder(
    h: &ChannelSet,
    s: &[Complex64],
    c: &Constellation,
    power: f64,
    g_source: GSource<'_>,
) -> Result<PrecodeOutcome> {
    let users = h.users();
    let kl = s.len();
    if kl % users != 0 {
        return Err(SlpError::Contract(format!(
            "symbol count {kl} is not a multiple of user count {users}"
        )));
    }
    let streams = kl / users;
    let nt = h.tx_antennas();
    if nt < kl {
        return Err(SlpError::Contract(format!(
            "transmit antennas {nt} below total streams {kl}"
        )));
    }
    if power <= 0.0 {
        return Err(SlpError::Contract("power must be positive".into()));
    }

    let selector;
    let w = match g_source {
        GSource::Selector => {
            selector = CombinerSet::selector(users, streams, h.rx_antennas());
            &selector
        }
        GSource::Combiners(w) => w,
    };
    let geo = build_ci_geometry(w, h, s, c)?;

    // Margin-1 transmit vector of minimum norm, honoring the Hermiticity
    // consistency of the top block; the margin scales with sqrt(power)/norm.
    let (x_unit, iterations) = margin_one_transmit(&geo, s, users, streams, nt)?;
    let xn = norm_real(&x_unit);
    if xn < 1e-12 {
        return Err(SlpError::Numeric("margin solve returned zero vector".into()));
    }
    let scale = power.sqrt() / xn;
    let x: Vec<Complex64> = (0..nt)
        .map(|i| Complex64::new(x_unit[i] * scale, x_unit[nt + i] * scale))
        .collect();

    // Pin the transmit vector itself: the CI targets G x are realised by x,
    // and pinning x keeps the completion's alignment value under control.
    let prob = MinEigProblem {
        dimension: kl,
        symbols: s.to_vec(),
        users,
        streams_per_user: streams,
        power,
        ci_rows: Some(CiRows {
            rows: ComplexMatrix::identity(nt),
            rhs: x.clone(),
            total_dim: nt,
        }),
    };
    let sol = solve_min_eig(&prob)?;
    let p2 = sol
        .p2
        .clone()
        .unwrap_or_else(|| ComplexMatrix::zeros(nt - kl, kl));
    let p = ComplexMatrix::vstack(&sol.p1, &p2);

    let gamma = geo.decompose_received(&p.mul_vec(s));
    let t = gamma.iter().cloned().fold(f64::INFINITY, f64::min);
    let (_, sigma, _) = svd(&p)?;
    debug_assert!(
        sigma.last().copied().unwrap_or(0.0) >= sol.z - 1e-6,
        "singular value bound violated"
    );
    Ok(PrecodeOutcome {
        precoder: p,
        gamma,
        t,
        iterations,
        sigma,
    })
}

/// CSI-free singular-value precoder: the bottom block is identically zero and
/// the Hermitian top block comes from the unconstrained min-eigenvalue solve.
pub fn sdp_precoder(
    s: &[Complex64],
    _c: &Constellation,
    power: f64,
    users: usize,
    streams: usize,
    nt: usize,
) -> Result<PrecodeOutcome> {
    let kl = users * streams;
    if s.len() != kl {
        return Err(SlpError::Contract(format!(
            "symbol count {} != K*L = {kl}",
            s.len()
        )));
    }
    if nt < kl {
        return Err(SlpError::Contract(format!(
            "transmit antennas {nt} below total streams {kl}"
        )));
    }
    let prob = MinEigProblem {
        dimension: kl,
        symbols: s.to_vec(),
        users,
        streams_per_user: streams,
        power,
        ci_rows: None,
    };
    let sol = solve_min_eig(&prob)?;
    let p = ComplexMatrix::vstack(&sol.p1, &ComplexMatrix::zeros(nt - kl, kl));

    // Diagnostic scaling factors of the top-block action against the symbol
    // bases; the CSI-free design does not constrain their pattern.
    let x1 = sol.p1.mul_vec(s);
    let mut gamma = vec![0.0; 2 * kl];
    for (i, &v) in x1.iter().enumerate() {
        gamma[2 * i] = v.re / s[i].re;
        gamma[2 * i + 1] = v.im / s[i].im;
    }
    let t = gamma.iter().cloned().fold(f64::INFINITY, f64::min);
    let (_, sigma, _) = svd(&p)?;
    Ok(PrecodeOutcome {
        precoder: p,
        gamma,
        t,
        iterations: 1,
        sigma,
    })
}

/// Minimum-norm real-coordinate transmit vector achieving CI margin 1.
///
/// Equalities: inner components scale by exactly 1 and the Hermiticity
/// consistency rows hold; inequalities: outer components scale by at least 1
/// and the alignment value c = Re(S_1^H x_1) stays nonnegative. When the
/// minimizer parks c near zero the solve is repeated with a floor on c so the
/// Hermitian completion keeps a bounded norm.
fn margin_one_transmit(
    geo: &super::geometry::CiGeometry,
    s: &[Complex64],
    users: usize,
    streams: usize,
    nt: usize,
) -> Result<(Vec<f64>, usize)> {
    let kl = s.len();
    let partition = geo.partition();
    let dim = 2 * nt;

    let gamma_row = |comp: usize| -> Vec<f64> {
        let i = comp / 2;
        let g_row = geo.g_row(i);
        let mut row = vec![0.0; dim];
        if comp % 2 == 0 {
            let denom = geo.s_bar()[comp].re;
            for (j, g) in g_row.iter().enumerate() {
                row[j] = g.re / denom;
                row[nt + j] = -g.im / denom;
            }
        } else {
            let denom = geo.s_bar()[comp].im;
            for (j, g) in g_row.iter().enumerate() {
                row[j] = g.im / denom;
                row[nt + j] = g.re / denom;
            }
        }
        row
    };

    let inner = &partition.inner_indices;
    let outer = &partition.outer_indices;
    let n_eq = inner.len() + users + (users - 1);
    let mut a_eq = RealMatrix::zeros(n_eq, dim);
    let mut b_eq = vec![0.0; n_eq];
    for (r, &comp) in inner.iter().enumerate() {
        let row = gamma_row(comp);
        for (cidx, v) in row.into_iter().enumerate() {
            *a_eq.at_mut(r, cidx) = v;
        }
        b_eq[r] = 1.0;
    }
    // Im(S_k^H x1) = 0
    for u in 0..users {
        let r = inner.len() + u;
        for l in 0..streams {
            let idx = u * streams + l;
            let si = s[idx];
            *a_eq.at_mut(r, idx) = -si.im;
            *a_eq.at_mut(r, nt + idx) = si.re;
        }
    }
    // Re(S_u^H x1) = Re(S_0^H x1)
    for u in 1..users {
        let r = inner.len() + users + (u - 1);
        for l in 0..streams {
            let idx0 = l;
            let idxu = u * streams + l;
            *a_eq.at_mut(r, idxu) += s[idxu].re;
            *a_eq.at_mut(r, nt + idxu) += s[idxu].im;
            *a_eq.at_mut(r, idx0) -= s[idx0].re;
            *a_eq.at_mut(r, nt + idx0) -= s[idx0].im;
        }
    }

    // inequality block: outer margins plus the alignment value
    let mut a_in = RealMatrix::zeros(outer.len() + 1, dim);
    let mut b_in = vec![1.0; outer.len() + 1];
    for (r, &comp) in outer.iter().enumerate() {
        let row = gamma_row(comp);
        for (cidx, v) in row.into_iter().enumerate() {
            *a_in.at_mut(r, cidx) = v;
        }
    }
    let c_row = outer.len();
    for l in 0..streams {
        *a_in.at_mut(c_row, l) = s[l].re;
        *a_in.at_mut(c_row, nt + l) = s[l].im;
    }
    b_in[c_row] = 0.0;

    let (x1, it1) = min_norm_with_inequalities(&a_eq, &b_eq, &a_in, &b_in)?;
    let eval_c = |x: &[f64]| -> f64 {
        (0..streams)
            .map(|l| s[l].re * x[l] + s[l].im * x[nt + l])
            .sum()
    };
    let c1 = eval_c(&x1);
    // floor c at half the correlation the CSI-free design would produce at
    // the same norm
    let q_norm = {
        let mut acc = 0.0f64;
        for u in 0..users {
            let nn: f64 = (0..streams)
                .map(|l| s[u * streams + l].norm_sqr())
                .sum();
            acc += 1.0 / nn;
        }
        acc.sqrt()
    };
    let floor = norm_real(&x1) / (2.0 * users as f64 * q_norm);
    if c1 >= floor {
        let _ = kl;
        return Ok((x1, it1));
    }
    b_in[c_row] = floor;
    match min_norm_with_inequalities(&a_eq, &b_eq, &a_in, &b_in) {
        Ok((x2, it2)) => Ok((x2, it1 + it2)),
        Err(_) if c1 > 1e-9 * norm_real(&x1) => Ok((x1, it1)),
        Err(e) => Err(e),
    }
}

fn norm_real(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{random_bits, sample_channel, Purpose, RngStream};
    use crate::constellation::{build_constellation, map_bits};
    use crate::linalg::{eig_hermitian, norm, norm_sqr, realify};

    fn setup(
        seed: u64,
        users: usize,
        streams: usize,
        nr: usize,
        nt: usize,
        order: usize,
    ) -> (ChannelSet, Vec<Complex64>, Constellation) {
        let c = build_constellation(order).unwrap();
        let h = sample_channel(users, nr, nt, RngStream::new(seed, 0, Purpose::Channel));
        let mut rng = RngStream::new(seed, 1, Purpose::Bits).rng();
        let bits = random_bits(users * streams * c.bits_per_symbol(), &mut rng);
        let s = map_bits(&bits, &c).unwrap();
        (h, s, c)
    }

    #[test]
    fn ssvmp_constraints_hold() {
        for seed in 0..10 {
            let (h, s, c) = setup(seed, 2, 2, 4, 8, 16);
            let out = ssvmp_precoder(&h, &s, &c, 1.0, GSource::Selector).unwrap();
            let p = &out.precoder;
            assert_eq!((p.rows(), p.cols()), (8, 4));

            // top block Hermitian
            let p1 = p.block(0, 4, 0, 4);
            assert!(
                (&p1 - &p1.hermitian()).frobenius_norm() <= 1e-9 * p1.frobenius_norm().max(1e-9)
            );
            // power
            let ps = p.mul_vec(&s);
            assert!(norm_sqr(&ps) <= 1.0 + 1e-6, "power {}", norm_sqr(&ps));
            // CI margins
            assert!(out.t > 0.0, "t = {}", out.t);
            let partition =
                crate::constellation::build_index_partition(&s, &c).unwrap();
            for &i in &partition.inner_indices {
                assert!((out.gamma[i] - out.t).abs() <= 1e-6 * (1.0 + out.t));
            }
            for &i in &partition.outer_indices {
                assert!(out.gamma[i] >= out.t - 1e-6);
            }
            // independent decoding identity
            for k in 0..2 {
                let block = p.block(0, 8, k * 2, (k + 1) * 2);
                let pk_sk = block.mul_vec(&s[k * 2..(k + 1) * 2]);
                for (a, b) in pk_sk.iter().zip(&ps) {
                    assert!((a * 2.0 - b).norm() < 1e-6 * (1.0 + norm(&ps)));
                }
            }
            // singular value bound
            let (vals, _) = eig_hermitian(&realify(&p1).unwrap()).unwrap();
            assert!(out.sigma.last().unwrap() >= &(vals[0] - 1e-6));
        }
    }

    #[test]
    fn sdp_bottom_block_is_exactly_zero() {
        let (_, s, c) = setup(3, 2, 2, 4, 8, 16);
        let out = sdp_precoder(&s, &c, 1.0, 2, 2, 8).unwrap();
        let bottom = out.precoder.block(4, 8, 0, 4);
        assert_eq!(bottom.frobenius_norm(), 0.0);
        let ps = out.precoder.mul_vec(&s);
        assert!((norm_sqr(&ps) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sdp_zero_power() {
        let (_, s, c) = setup(4, 2, 1, 2, 4, 4);
        let out = sdp_precoder(&s, &c, 0.0, 2, 1, 4).unwrap();
        assert_eq!(out.precoder.frobenius_norm(), 0.0);
        assert!(out.t.abs() < 1e-12);
    }

    #[test]
    fn sdp_scalar_case_matches_min_eig() {
        let c = build_constellation(4).unwrap();
        let s = map_bits(&[1, 1], &c).unwrap();
        let out = sdp_precoder(&s, &c, 1.0, 1, 1, 1).unwrap();
        // P = P1 scalar with |P1 s| = sqrt(p)
        assert_eq!((out.precoder.rows(), out.precoder.cols()), (1, 1));
        let val = out.precoder[(0, 0)];
        assert!(val.im.abs() < 1e-12);
        assert!(((val * s[0]).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ssvmp_insufficient_antennas_rejected() {
        let (h, s, c) = setup(5, 2, 2, 4, 3, 16);
        assert!(matches!(
            ssvmp_precoder(&h, &s, &c, 1.0, GSource::Selector),
            Err(SlpError::Contract(_))
        ));
    }
}
