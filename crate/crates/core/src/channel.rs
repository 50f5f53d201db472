//! BPSK over AWGN, channel LLRs, and the binary symmetric intra-link.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ldpc::LlrSeq;
use crate::media::BitSeq;
use crate::{clip_llr, Error, Result};

/// AWGN link parameters. SNR is Es/N0 per BPSK symbol with Es = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub snr_db: f64,
    /// Noise variance per real dimension, `10^(-snr_db/10) / 2`.
    pub sigma2: f64,
    pub rng_seed: u64,
}

impl ChannelParams {
    pub fn new(snr_db: f64, rng_seed: u64) -> Result<Self> {
        let sigma2 = 10f64.powf(-snr_db / 10.0) / 2.0;
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!("SNR {snr_db} dB gives sigma2 = {sigma2}")));
        }
        Ok(ChannelParams { snr_db, sigma2, rng_seed })
    }
}

/// Crossover model between the source bits X and the relay's bits Y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntraLinkModel {
    rho: f64,
}

impl IntraLinkModel {
    pub fn new(rho: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&rho) {
            return Err(Error::InvalidParameter(format!("crossover probability {rho} outside [0, 0.5]")));
        }
        Ok(IntraLinkModel { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// Maps bit b to `1 - 2b` and adds zero-mean Gaussian noise of variance `sigma2`.
pub fn bpsk_awgn(bits: &[u8], params: &ChannelParams) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let noise = Normal::new(0.0, params.sigma2.sqrt()).expect("sigma2 validated positive");
    bits.iter()
        .map(|&b| 1.0 - 2.0 * f64::from(b) + noise.sample(&mut rng))
        .collect()
}

/// `L = 2y / sigma2`, clipped to `L_MAX`.
pub fn channel_llr(y: &[f64], params: &ChannelParams) -> LlrSeq {
    let scale = 2.0 / params.sigma2;
    LlrSeq::from_vec_unchecked(y.iter().map(|v| clip_llr(scale * v)).collect())
}

/// Flips each bit independently with probability `rho`: `Y = X xor E`.
pub fn bsc_corrupt(bits: &BitSeq, model: &IntraLinkModel, seed: u64) -> BitSeq {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = bits
        .iter()
        .map(|&b| b ^ u8::from(rng.gen_bool(model.rho)))
        .collect();
    BitSeq::from_vec_unchecked(out)
}
