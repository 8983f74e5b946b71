use slp_core::channel::{random_bits, sample_channel, Purpose, RngStream};
use slp_core::constellation::{build_constellation, build_index_partition, map_bits};
use slp_core::linalg::norm_sqr;
use slp_core::precoding::{build_ci_geometry, optimal_combiner, slp_closed_form, CombinerSet};

fn main() {
    let seed = 102;
    let c = build_constellation(16).unwrap();
    let h = sample_channel(2, 4, 8, RngStream::new(seed, 0, Purpose::Channel));
    let mut rng = RngStream::new(seed, 1, Purpose::Bits).rng();
    let bits = random_bits(2 * 2 * c.bits_per_symbol(), &mut rng);
    let s = map_bits(&bits, &c).unwrap();
    let partition = build_index_partition(&s, &c).unwrap();
    println!("outer={:?} inner={:?}", partition.outer_indices, partition.inner_indices);

    let nt = 8;
    let streams = 2;
    let users = 2;
    let mut p = slp_core::linalg::ComplexMatrix::zeros(nt, 4);
    for k in 0..users {
        let hk = h.user(k);
        for l in 0..streams {
            for r in 0..nt {
                p[(r, k * streams + l)] = hk[(l, r)].conj();
            }
        }
    }
    let ps = p.mul_vec(&s);
    let mut p = p.scale_re(1.0 / norm_sqr(&ps).sqrt());

    for it in 0..3 {
        let mut per_user = Vec::new();
        let mut margins = Vec::new();
        for k in 0..users {
            let sk = &s[k * streams..(k + 1) * streams];
            let (w, gamma) = optimal_combiner(h.user(k), &p, &s, sk, &c).unwrap();
            println!("iter {it} user {k}: gamma_k = {gamma:?}");
            margins.push(gamma.iter().cloned().fold(f64::INFINITY, f64::min));
            per_user.push(w);
        }
        let t_c = margins.iter().cloned().fold(f64::INFINITY, f64::min);
        if t_c > 0.0 {
            for (w, &tk) in per_user.iter_mut().zip(&margins) {
                if tk > t_c {
                    *w = w.scale_re(t_c / tk);
                }
            }
        }
        let w = CombinerSet::new(per_user);
        let geo = build_ci_geometry(&w, &h, &s, &c).unwrap();
        // margins of the PREVIOUS precoder through the new geometry
        let feas = geo.decompose_received(&p.mul_vec(&s));
        println!("iter {it}: t_c={t_c:.9}");
        println!("  feas gammas = {feas:?}");
        let step = slp_closed_form(&geo, 1.0).unwrap();
        println!("  precoder t  = {:.9}  gammas = {:?}", step.t, step.gamma);
        p = step.precoder.clone();
    }
}
