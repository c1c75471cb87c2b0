//! Error channels: parameter validation, prior log-likelihood ratios, and
//! seeded sampling with reproducible per-trial substreams.

use crate::binary_decoder::DEFAULT_LLR_CLIP;
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Channel family and its single strength parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseParams {
    /// Independent bit flips with probability p on one error stream.
    BitFlip { p: f64 },
    /// Depolarizing: each qubit stays clean with probability 1-p and takes
    /// each of the three Pauli errors with probability p/3.
    Depolarizing { p: f64 },
}

impl NoiseParams {
    /// p = 0 is allowed as a degenerate (noiseless) input; the upper limits
    /// keep the prior LLR strictly positive.
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseParams::BitFlip { p } => {
                if !(0.0..0.5).contains(&p) {
                    return Err(Error::InvalidParam(format!(
                        "bit-flip probability must lie in [0, 0.5), got {p}"
                    )));
                }
            }
            NoiseParams::Depolarizing { p } => {
                if !(0.0..0.75).contains(&p) {
                    return Err(Error::InvalidParam(format!(
                        "depolarizing probability must lie in [0, 0.75), got {p}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn p(&self) -> f64 {
        match *self {
            NoiseParams::BitFlip { p } | NoiseParams::Depolarizing { p } => p,
        }
    }
}

/// Sampled error pattern split into the two components a CSS pair detects.
/// `e_a` marks qubits whose error anticommutes with the stream-a checks
/// (X or Y under depolarizing), `e_b` the ones seen by stream b (Z or Y).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliFrame {
    pub e_a: BitVec,
    pub e_b: BitVec,
}

/// Per-variable prior LLR of the channel. For bit flips this is
/// log((1-p)/p); for depolarizing each stream sees a marginal flip rate of
/// 2p/3, giving log((1-2p/3)/(2p/3)). The p = 0 pole is mapped to the
/// default clip magnitude so a noiseless prior is still finite.
pub fn prior_llr(params: &NoiseParams) -> f64 {
    let q = match *params {
        NoiseParams::BitFlip { p } => p,
        NoiseParams::Depolarizing { p } => 2.0 * p / 3.0,
    };
    if q == 0.0 {
        return DEFAULT_LLR_CLIP;
    }
    (((1.0 - q) / q).ln()).min(DEFAULT_LLR_CLIP)
}

/// Independent Bernoulli(p) bits.
pub fn sample_bitflip(n: usize, p: f64, rng: &mut impl Rng) -> BitVec {
    let mut e = BitVec::zeros(n);
    for i in 0..n {
        if rng.gen::<f64>() < p {
            e.set(i, true);
        }
    }
    e
}

/// One depolarizing draw per qubit, split into detected components. A single
/// uniform variate decides between I and the three equally likely Paulis.
pub fn sample_depolarizing(n: usize, p: f64, rng: &mut impl Rng) -> PauliFrame {
    let mut e_a = BitVec::zeros(n);
    let mut e_b = BitVec::zeros(n);
    let third = p / 3.0;
    for i in 0..n {
        let u = rng.gen::<f64>();
        if u >= p {
            continue; // identity
        }
        if u < third {
            e_a.set(i, true); // X
        } else if u < 2.0 * third {
            e_a.set(i, true); // Y
            e_b.set(i, true);
        } else {
            e_b.set(i, true); // Z
        }
    }
    PauliFrame { e_a, e_b }
}

/// s = H e over GF(2).
pub fn syndrome(h: &BitMatrix, e: &BitVec) -> BitVec {
    h.mul_vec(e)
}

fn splitmix(z: &mut u64) -> u64 {
    *z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut x = *z;
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent substream for one Monte Carlo trial, a pure function of
/// (master seed, stream id, trial index). Trials can therefore run in any
/// order or on any thread and still see identical randomness.
pub fn trial_rng(master_seed: u64, stream: u64, trial: u64) -> ChaCha8Rng {
    let mut z = master_seed;
    let mut seed = [0u8; 32];
    let a = splitmix(&mut z) ^ stream.wrapping_mul(0xA24B_AED4_963E_E407);
    z ^= a;
    let b = splitmix(&mut z) ^ trial.wrapping_mul(0x9FB2_1C65_1E98_DF25);
    z ^= b;
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix(&mut z).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
