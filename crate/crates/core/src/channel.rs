//! Random channel and noise generation with counter-based deterministic streams.
//!
//! Every random draw in a simulation comes from a stream addressed by
//! (master seed, trial index, purpose), so results do not depend on the order
//! in which trials execute.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SlpError};
use crate::linalg::ComplexMatrix;

/// What a random stream is used for. Part of the stream address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Channel,
    Bits,
    Noise,
    Probe,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Channel => 0x6368616e, // "chan"
            Purpose::Bits => 0x62697473,    // "bits"
            Purpose::Noise => 0x6e6f6973,   // "nois"
            Purpose::Probe => 0x70726f62,   // "prob"
        }
    }
}

/// Addressed random stream: identical (master_seed, trial, purpose) always
/// reproduces identical draws.
#[derive(Debug, Clone, Copy)]
pub struct RngStream {
    pub master_seed: u64,
    pub trial: u64,
    pub purpose: Purpose,
}

impl RngStream {
    pub fn new(master_seed: u64, trial: u64, purpose: Purpose) -> Self {
        Self {
            master_seed,
            trial,
            purpose,
        }
    }

    /// Instantiate the generator for this stream address.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let mut state = self.master_seed ^ 0x9e37_79b9_7f4a_7c15;
        let words = [
            splitmix(&mut state),
            splitmix(&mut state) ^ self.trial.wrapping_mul(0xbf58_476d_1ce4_e5b9),
            splitmix(&mut state) ^ self.purpose.tag().wrapping_mul(0x94d0_49bb_1331_11eb),
            splitmix(&mut state) ^ self.trial.rotate_left(32) ^ self.purpose.tag(),
        ];
        for (i, w) in words.iter().enumerate() {
            let mut x = *w;
            x = mix(x);
            seed[i * 8..(i + 1) * 8].copy_from_slice(&x.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    mix(*state)
}

fn mix(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Per-user channels H_k plus the row-stacked composite H.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    per_user: Vec<ComplexMatrix>,
    stacked: ComplexMatrix,
}

impl ChannelSet {
    pub fn new(per_user: Vec<ComplexMatrix>) -> Self {
        assert!(!per_user.is_empty());
        let mut stacked = per_user[0].clone();
        for h in &per_user[1..] {
            stacked = ComplexMatrix::vstack(&stacked, h);
        }
        Self { per_user, stacked }
    }

    pub fn users(&self) -> usize {
        self.per_user.len()
    }

    pub fn user(&self, k: usize) -> &ComplexMatrix {
        &self.per_user[k]
    }

    pub fn stacked(&self) -> &ComplexMatrix {
        &self.stacked
    }

    pub fn rx_antennas(&self) -> usize {
        self.per_user[0].rows()
    }

    pub fn tx_antennas(&self) -> usize {
        self.stacked.cols()
    }
}

/// Draw one i.i.d. CN(0, 1) complex Gaussian.
#[inline]
pub fn standard_complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Sample K user channels of shape N_R x N_T with i.i.d. CN(0,1) entries.
pub fn sample_channel(
    users: usize,
    rx_antennas: usize,
    tx_antennas: usize,
    stream: RngStream,
) -> ChannelSet {
    assert!(users > 0 && rx_antennas > 0 && tx_antennas > 0);
    let mut rng = stream.rng();
    let per_user: Vec<ComplexMatrix> = (0..users)
        .map(|_| {
            ComplexMatrix::from_fn(rx_antennas, tx_antennas, |_, _| {
                standard_complex_gaussian(&mut rng)
            })
        })
        .collect();
    ChannelSet::new(per_user)
}

/// Add circularly symmetric complex Gaussian noise of variance `sigma2` per
/// entry; `sigma2 = 0` returns the input unchanged.
pub fn awgn(y: &[Complex64], sigma2: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Complex64>> {
    if sigma2 < 0.0 {
        return Err(SlpError::Config(format!(
            "noise variance must be nonnegative, got {sigma2}"
        )));
    }
    if sigma2 == 0.0 {
        return Ok(y.to_vec());
    }
    let scale = sigma2.sqrt();
    Ok(y.iter()
        .map(|&z| z + standard_complex_gaussian(rng) * scale)
        .collect())
}

/// Draw `n` uniform bits (values 0/1).
pub fn random_bits(n: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut bits = Vec::with_capacity(n);
    while bits.len() < n {
        let mut word: u32 = rng.gen();
        for _ in 0..32 {
            if bits.len() == n {
                break;
            }
            bits.push((word & 1) as u8);
            word >>= 1;
        }
    }
    bits
}
