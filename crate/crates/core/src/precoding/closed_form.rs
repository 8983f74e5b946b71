//! Closed-form symbol-level precoder, the matching closed-form receive
//! combiner, and the alternating loop that couples them.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::constellation::{build_index_partition, Constellation};
use crate::error::{Result, SlpError};
use crate::linalg::{norm, norm_sqr, svd, ComplexMatrix};
use crate::solvers::{solve_simplex_qp, SimplexQp};

use super::geometry::{build_ci_geometry, build_geometry_from_g, CiGeometry, CombinerSet};
use super::PrecodeOutcome;

/// Closed-form transmit precoder for a fixed effective matrix G.
///
/// Solves the dual QP over the scaling simplex, recovers the scaling vector,
/// and assembles the rank-one precoder x * s_hat / KL whose action on s is the
/// minimum-norm preimage of the scaled targets. The power constraint is tight
/// at the optimum.
pub fn slp_closed_form(geometry: &CiGeometry, power: f64) -> Result<PrecodeOutcome> {
    if power <= 0.0 {
        return Err(SlpError::Contract(format!(
            "transmit power must be positive, got {power}"
        )));
    }
    let kl = geometry.dim();
    let partition = geometry.partition();
    let qp = SimplexQp::from_v_tilde(geometry.v_tilde(), partition.outer_count())?;
    let dual = solve_simplex_qp(&qp)?;
    let qval = qp.objective(&dual.u);
    if qval <= 0.0 {
        return Err(SlpError::Numeric(format!(
            "dual objective {qval:.3e} is not positive"
        )));
    }
    let scale = (power / qval).sqrt();
    let gamma_ofirst: Vec<f64> = qp.q().matvec(&dual.u).iter().map(|x| x * scale).collect();
    let gamma = partition.apply_inverse(&gamma_ofirst);

    let target = geometry.target_from_gamma(&gamma);
    let x = geometry.min_norm_preimage(&target)?;

    let inv_kl = 1.0 / kl as f64;
    let s_hat = geometry.s_hat();
    let p = ComplexMatrix::from_fn(x.len(), kl, |r, c| x[r] * s_hat[c] * inv_kl);

    let t = gamma.iter().cloned().fold(f64::INFINITY, f64::min);
    let (_, sigma, _) = svd(&p)?;
    Ok(PrecodeOutcome {
        precoder: p,
        gamma,
        t,
        iterations: dual.iterations,
        sigma,
    })
}

/// Closed-form optimal receive combining matrix for user k given the transmit
/// precoder: W_k = (1/r^H r) U_1 diag(Gamma_k) s_bar_k r^H with the scaling
/// vector from the user-local dual QP. Returns (W_k, Gamma_k in original
/// component ordering).
pub fn optimal_combiner(
    h_k: &ComplexMatrix,
    p: &ComplexMatrix,
    s: &[Complex64],
    user_symbols: &[Complex64],
    c: &Constellation,
) -> Result<(ComplexMatrix, Vec<f64>)> {
    let r = h_k.mul_vec(&p.mul_vec(s));
    let rn2 = norm_sqr(&r);
    if rn2 < 1e-20 {
        return Err(SlpError::DegenerateChannel(
            "received vector H_k P s is numerically zero".into(),
        ));
    }
    let l = user_symbols.len();
    let partition = build_index_partition(user_symbols, c)?;

    // Combiner geometry: G is the received vector viewed as an L x 1 system
    // per stream; the quadratic form uses U_1^H U_1 so the Gram matrix is the
    // identity. Reuse the geometry builder with G = I_L to obtain V_1.
    let geo = build_geometry_from_g(
        ComplexMatrix::identity(l),
        user_symbols,
        partition,
    )?;
    let qp = SimplexQp::from_v_tilde(geo.v_tilde(), geo.partition().outer_count())?;
    let dual = solve_simplex_qp(&qp)?;
    let qval = qp.objective(&dual.u);
    if qval <= 0.0 {
        return Err(SlpError::Numeric(format!(
            "combiner dual objective {qval:.3e} is not positive"
        )));
    }
    let scale = (rn2 / qval).sqrt();
    let gamma_ofirst: Vec<f64> = qp.q().matvec(&dual.u).iter().map(|x| x * scale).collect();
    let gamma = geo.partition().apply_inverse(&gamma_ofirst);

    // zeta* = U_1 diag(Gamma_k) s_bar_k
    let zeta = geo.target_from_gamma(&gamma);
    let w = ComplexMatrix::outer(&zeta, &r).scale_re(1.0 / rn2);
    Ok((w, gamma))
}

/// Joint transmit precoding and receive combining by alternating the two
/// closed-form updates until the margin stabilizes.
///
/// Returns the final precoder outcome, the per-user combiners and the trace
/// of the margin after every precoder update.
pub fn joint_design_ao(
    h: &ChannelSet,
    s: &[Complex64],
    c: &Constellation,
    power: f64,
    kappa: f64,
) -> Result<(PrecodeOutcome, CombinerSet, Vec<f64>)> {
    if kappa <= 0.0 {
        return Err(SlpError::Contract(format!(
            "convergence threshold must be positive, got {kappa}"
        )));
    }
    let users = h.users();
    let kl = s.len();
    if kl % users != 0 {
        return Err(SlpError::Contract(format!(
            "symbol count {kl} is not a multiple of the user count {users}"
        )));
    }
    let streams = kl / users;
    if streams > h.rx_antennas() {
        return Err(SlpError::Contract(format!(
            "streams per user {streams} exceeds receive antennas {}",
            h.rx_antennas()
        )));
    }
    if h.tx_antennas() < kl {
        return Err(SlpError::Contract(format!(
            "transmit antennas {} below total streams {kl}",
            h.tx_antennas()
        )));
    }

    // Matched-filter start: user k's block is the Hermitian of the first L
    // rows of H_k, scaled to the power budget.
    let nt = h.tx_antennas();
    let mut p = ComplexMatrix::zeros(nt, kl);
    for k in 0..users {
        let hk = h.user(k);
        for l in 0..streams {
            for r in 0..nt {
                p[(r, k * streams + l)] = hk[(l, r)].conj();
            }
        }
    }
    let ps = p.mul_vec(s);
    let pn = norm(&ps);
    if pn < 1e-20 {
        return Err(SlpError::DegenerateChannel(
            "matched-filter start has zero transmit power".into(),
        ));
    }
    let mut p = p.scale_re(power.sqrt() / pn);

    let max_iter = 200;
    let mut t_prev = 0.0f64;
    let mut last_delta = f64::INFINITY;
    let mut trace = Vec::new();

    for _ in 0..max_iter {
        // Combiner step: per-user closed forms, then equalize the margins.
        // Each user's margin may differ; scaling W_k down to the common
        // minimum keeps the next precoder subproblem (which demands one
        // shared margin on the fixed components) feasible at the previous
        // precoder, so the trace cannot decrease. Scaling W_k is neutral for
        // detection since it scales the noise identically.
        let mut per_user = Vec::with_capacity(users);
        let mut margins = Vec::with_capacity(users);
        for k in 0..users {
            let sk = &s[k * streams..(k + 1) * streams];
            let (w, gamma) = optimal_combiner(h.user(k), &p, s, sk, c)?;
            margins.push(gamma.iter().cloned().fold(f64::INFINITY, f64::min));
            per_user.push(w);
        }
        let t_common = margins.iter().cloned().fold(f64::INFINITY, f64::min);
        if t_common > 0.0 {
            for (w, &tk) in per_user.iter_mut().zip(&margins) {
                if tk > t_common {
                    *w = w.scale_re(t_common / tk);
                }
            }
        }
        let w = CombinerSet::new(per_user);

        // precoder step against the refreshed effective matrix
        let geo = build_ci_geometry(&w, h, s, c)?;
        let mut step = slp_closed_form(&geo, power)?;
        let t = step.t;
        p = step.precoder.clone();
        trace.push(t);
        last_delta = (t - t_prev).abs();
        t_prev = t;
        if last_delta <= kappa {
            // report unit-norm combiners matched to the final precoder
            let final_w: Result<Vec<ComplexMatrix>> = (0..users)
                .map(|k| {
                    let sk = &s[k * streams..(k + 1) * streams];
                    optimal_combiner(h.user(k), &p, s, sk, c).map(|(w, _)| w)
                })
                .collect();
            step.iterations = trace.len();
            return Ok((step, CombinerSet::new(final_w?), trace));
        }
    }
    log::warn!("alternating design hit the iteration cap; trace: {trace:?}");
    Err(SlpError::Convergence {
        iterations: max_iter,
        residual: last_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, Purpose, RngStream};
    use crate::constellation::{build_constellation, map_bits};
    use crate::channel::random_bits;

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
    fn closed_form_power_is_tight_and_rank_one() {
        for seed in 0..20 {
            let (h, s, c) = setup(seed, 2, 2, 4, 8, 16);
            let w = CombinerSet::selector(2, 2, 4);
            let geo = build_ci_geometry(&w, &h, &s, &c).unwrap();
            let out = slp_closed_form(&geo, 1.0).unwrap();
            let ps = out.precoder.mul_vec(&s);
            assert!((norm_sqr(&ps) - 1.0).abs() < 1e-6, "power {}", norm_sqr(&ps));
            assert!(out.sigma[1] / out.sigma[0] <= 1e-6, "rank-one violated");
            assert!(out.t > 0.0);
            // CI pattern: inner components equal t, outer at least t
            for &i in &geo.partition().inner_indices {
                assert!((out.gamma[i] - out.t).abs() <= 1e-7 * (1.0 + out.t));
            }
            for &i in &geo.partition().outer_indices {
                assert!(out.gamma[i] >= out.t - 1e-7);
            }
        }
    }

    #[test]
    fn closed_form_achieves_the_scaled_targets() {
        let (h, s, c) = setup(3, 2, 1, 2, 4, 16);
        let w = CombinerSet::selector(2, 1, 2);
        let geo = build_ci_geometry(&w, &h, &s, &c).unwrap();
        let out = slp_closed_form(&geo, 2.0).unwrap();
        let achieved = geo.decompose_received(&out.precoder.mul_vec(&s));
        for (a, g) in achieved.iter().zip(&out.gamma) {
            assert!((a - g).abs() < 1e-7, "decomposed {a} vs gamma {g}");
        }
    }

    #[test]
    fn independent_decoding_identity() {
        let (h, s, c) = setup(7, 2, 2, 4, 8, 16);
        let w = CombinerSet::selector(2, 2, 4);
        let geo = build_ci_geometry(&w, &h, &s, &c).unwrap();
        let out = slp_closed_form(&geo, 1.0).unwrap();
        let ps = out.precoder.mul_vec(&s);
        for k in 0..2 {
            let block = out.precoder.block(0, 8, k * 2, (k + 1) * 2);
            let pk_sk = block.mul_vec(&s[k * 2..(k + 1) * 2]);
            for (a, b) in pk_sk.iter().zip(&ps) {
                assert!((a * 2.0 - b).norm() < 1e-8 * (1.0 + norm(&ps)));
            }
        }
    }

    #[test]
    fn combiner_norm_and_row_structure() {
        let (h, s, c) = setup(11, 2, 2, 4, 8, 16);
        let w0 = CombinerSet::selector(2, 2, 4);
        let geo = build_ci_geometry(&w0, &h, &s, &c).unwrap();
        let out = slp_closed_form(&geo, 1.0).unwrap();
        for k in 0..2 {
            let sk = &s[k * 2..(k + 1) * 2];
            let (w, gamma) = optimal_combiner(h.user(k), &out.precoder, &s, sk, &c).unwrap();
            let n = w.frobenius_norm();
            assert!((n * n - 1.0).abs() < 1e-7, "||W_k||^2 = {}", n * n);
            // every row is proportional to r^H
            let r = h.user(k).mul_vec(&out.precoder.mul_vec(&s));
            for row in 0..2 {
                let wr: Vec<Complex64> = w.row(row).to_vec();
                // cross product of wr and conj(r) must vanish
                for i in 0..wr.len() {
                    for j in 0..wr.len() {
                        let cross = wr[i] * r[j].conj() - wr[j] * r[i].conj();
                        assert!(cross.norm() < 1e-9 * (1.0 + norm(&r)));
                    }
                }
            }
            // Gamma_k^T V_1 Gamma_k = r^H r
            let partition = build_index_partition(sk, &c).unwrap();
            let geo_k =
                build_geometry_from_g(ComplexMatrix::identity(2), sk, partition).unwrap();
            let v1 = geo_k.v();
            let quad: f64 = (0..gamma.len())
                .map(|a| {
                    (0..gamma.len())
                        .map(|b| gamma[a] * v1.at(a, b) * gamma[b])
                        .sum::<f64>()
                })
                .sum();
            assert!((quad - norm_sqr(&r)).abs() < 1e-6 * (1.0 + norm_sqr(&r)));
        }
    }

    #[test]
    fn single_antenna_combiner_is_unit_phase() {
        let (h, s, c) = setup(13, 1, 1, 1, 2, 4);
        let w0 = CombinerSet::selector(1, 1, 1);
        let geo = build_ci_geometry(&w0, &h, &s, &c).unwrap();
        let out = slp_closed_form(&geo, 1.0).unwrap();
        let (w, _) = optimal_combiner(h.user(0), &out.precoder, &s, &s, &c).unwrap();
        assert_eq!((w.rows(), w.cols()), (1, 1));
        assert!((w[(0, 0)].norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ao_monotone_and_converges() {
        for seed in 0..10 {
            let (h, s, c) = setup(100 + seed, 2, 2, 4, 8, 16);
            let (out, w, trace) = joint_design_ao(&h, &s, &c, 1.0, 1e-5).unwrap();
            for win in trace.windows(2) {
                assert!(win[1] >= win[0] - 1e-9, "trace not monotone: {trace:?}");
            }
            assert!(out.t > 0.0);
            assert_eq!(w.users(), 2);
            // combined received signal lands on the scaled targets with margin t
            let ps = out.precoder.mul_vec(&s);
            for k in 0..2 {
                let rk = h.user(k).mul_vec(&ps);
                let shat = w.user(k).mul_vec(&rk);
                let sk = &s[k * 2..(k + 1) * 2];
                for (i, est) in shat.iter().enumerate() {
                    let g_re = est.re / sk[i].re;
                    let g_im = est.im / sk[i].im;
                    assert!(g_re >= out.t - 1e-6, "margin re {g_re} vs t {}", out.t);
                    assert!(g_im >= out.t - 1e-6, "margin im {g_im} vs t {}", out.t);
                }
            }
        }
    }

    #[test]
    fn ao_t_increases_with_power() {
        let (h, s, c) = setup(55, 2, 2, 4, 8, 16);
        let (lo, _, _) = joint_design_ao(&h, &s, &c, 0.5, 1e-5).unwrap();
        let (mid, _, _) = joint_design_ao(&h, &s, &c, 1.0, 1e-5).unwrap();
        let (hi, _, _) = joint_design_ao(&h, &s, &c, 2.0, 1e-5).unwrap();
        assert!(lo.t < mid.t && mid.t < hi.t);
    }

    #[test]
    fn ao_rejects_bad_dimensions() {
        let (h, s, c) = setup(1, 2, 2, 4, 8, 16);
        assert!(joint_design_ao(&h, &s, &c, 1.0, 0.0).is_err());
        // L > N_R
        let c4 = build_constellation(4).unwrap();
        let h_small = sample_channel(2, 1, 8, RngStream::new(2, 0, Purpose::Channel));
        let mut rng = RngStream::new(2, 1, Purpose::Bits).rng();
        let bits = random_bits(2 * 2 * 2, &mut rng);
        let s_two_streams = map_bits(&bits, &c4).unwrap();
        assert!(joint_design_ao(&h_small, &s_two_streams, &c4, 1.0, 1e-5).is_err());
        let _ = (h, s, c);
    }
}
