//! Semantic-forward (SF) relaying.
//!
//! A source broadcasts an LDPC-coded image to a relay and a destination. The
//! relay (whose copy is corrupted by a binary symmetric intra-link) extracts
//! compact semantic features with a small convolutional codec and forwards
//! them over a second LDPC link. The destination decodes both branches and
//! iteratively exchanges extrinsic LLRs through the correlation model
//! `Y = X xor E`, `E ~ Bern(rho)`, before taking hard decisions.
//!
//! Modules:
//! - [`media`]: image/bit conversion and the Euclidean-distance metric
//! - [`ldpc`]: regular LDPC construction, systematic encoding, sum-product decoding
//! - [`channel`]: BPSK over AWGN, channel LLRs, BSC corruption
//! - [`correlation`]: the `f_c` LLR update and the extrinsic exchanger
//! - [`semantic`]: convolutional codec inference, feature quantization, soft demapping
//! - [`joint_decoder`]: the destination's global iteration loop
//! - [`bounds`]: achievable-rate constraints under a binary parametrization
//! - [`harness`]: Monte-Carlo driver, configuration and CSV output

pub mod bounds;
pub mod channel;
pub mod correlation;
mod error;
pub mod harness;
pub mod joint_decoder;
pub mod ldpc;
pub mod media;
pub mod semantic;

pub use error::{Error, Result};
pub use ldpc::{LdpcCode, LlrSeq};
pub use media::{BitSeq, ImageTensor};

/// Magnitude bound applied to every LLR that crosses a module boundary.
pub const L_MAX: f64 = 30.0;

/// Hard decision on one LLR. Ties (exactly zero) resolve to bit 0.
#[inline]
pub fn hard_bit(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

#[inline]
pub(crate) fn clip_llr(l: f64) -> f64 {
    if l.is_nan() {
        0.0
    } else {
        l.clamp(-L_MAX, L_MAX)
    }
}
