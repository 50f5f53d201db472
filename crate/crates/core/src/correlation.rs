//! Extrinsic-information exchange between the two decoding branches.
//!
//! For correlated bits `Y = X xor E`, `E ~ Bern(rho)`, an LLR `L` about one
//! bit translates into an LLR about the other via
//!
//! ```text
//! f_c(L, rho) = ln( ((1 - rho) e^L + rho) / (rho e^L + (1 - rho)) )
//! ```
//!
//! which saturates at `ln((1 - rho) / rho)`.

use crate::ldpc::{check_len, LlrSeq};
use crate::media::BitSeq;
use crate::{Error, Result};

/// Destination-side knowledge of the intra-link crossover probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    rho_hat: f64,
}

impl CorrelationEstimate {
    pub fn new(rho_hat: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&rho_hat) {
            return Err(Error::InvalidParameter(format!("rho_hat {rho_hat} outside [0, 0.5]")));
        }
        Ok(CorrelationEstimate { rho_hat })
    }

    pub fn rho_hat(&self) -> f64 {
        self.rho_hat
    }

    /// Flip rate between two hard-decision sequences, clamped to `[floor, 0.5]`.
    pub fn from_hard_decisions(a: &BitSeq, b: &BitSeq, floor: f64) -> Result<Self> {
        let rate = a.bit_error_rate(b)?;
        Self::new(rate.clamp(floor.clamp(0.0, 0.5), 0.5))
    }
}

/// The LLR update `f_c(L, rho)`. Exact identity at `rho = 0`.
pub fn fc(llr: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return llr;
    }
    if llr.is_nan() {
        return 0.0;
    }
    let mag = llr.abs();
    // dividing numerator and denominator by e^|L| keeps both terms bounded
    let t = (-mag).exp();
    let v = ((1.0 - rho) + rho * t).ln() - (rho + (1.0 - rho) * t).ln();
    v.copysign(llr)
}

pub fn fc_update(llr: &LlrSeq, est: &CorrelationEstimate) -> LlrSeq {
    let rho = est.rho_hat;
    LlrSeq::from_vec_unchecked(llr.iter().map(|&l| fc(l, rho)).collect())
}

/// Cross-feeds the extrinsics: `a1 = f_c(e2)`, `a2 = f_c(e1)`.
pub fn exchange(e1: &LlrSeq, e2: &LlrSeq, est: &CorrelationEstimate) -> Result<(LlrSeq, LlrSeq)> {
    check_len("extrinsic exchange", e2.len(), e1.len())?;
    Ok((fc_update(e2, est), fc_update(e1, est)))
}
