//! Destination-side iterative joint decoding.
//!
//! Branch 1 decodes the S-D LDPC blocks carrying the source bits X. Branch 2
//! decodes the R-D blocks carrying the relay's semantic bits, runs the
//! semantic decoder and soft-demaps the reconstruction into LLRs over the
//! relay bits Y. Each global iteration exchanges the extrinsics of the two
//! branches through `f_c`, feeds branch 1 its new a-priori directly and
//! re-encodes branch 2's a-priori into the semantic-bit domain.
//!
//! Observations are channel LLRs over the concatenated codewords of each
//! link. The final block of each link is zero-padded; padded positions are
//! decoded as known zeros (`+L_MAX`).

use crate::correlation::{exchange, CorrelationEstimate};
use crate::ldpc::{check_len, BlockDecoder, LdpcCode, LlrSeq};
use crate::media::{self, BitSeq, ImageTensor};
use crate::semantic::{self, SemanticModel};
use crate::{Error, Result, L_MAX};

/// Splits a payload into zero-padded LDPC blocks.
#[derive(Debug, Clone, Copy)]
pub struct Framing<'a> {
    code: &'a LdpcCode,
    payload_bits: usize,
}

impl<'a> Framing<'a> {
    pub fn new(code: &'a LdpcCode, payload_bits: usize) -> Self {
        Framing { code, payload_bits }
    }

    pub fn code(&self) -> &'a LdpcCode {
        self.code
    }

    pub fn payload_bits(&self) -> usize {
        self.payload_bits
    }

    pub fn blocks(&self) -> usize {
        self.payload_bits.div_ceil(self.code.k())
    }

    pub fn coded_bits(&self) -> usize {
        self.blocks() * self.code.n()
    }

    pub fn padding_bits(&self) -> usize {
        self.blocks() * self.code.k() - self.payload_bits
    }

    /// Encodes the payload block by block; the last block is padded with zeros.
    pub fn encode(&self, payload: &BitSeq) -> Result<BitSeq> {
        check_len("payload", payload.len(), self.payload_bits)?;
        let (n, k) = (self.code.n(), self.code.k());
        let mut out = vec![0u8; self.coded_bits()];
        let mut info = vec![0u8; k];
        for (b, word) in out.chunks_exact_mut(n).enumerate() {
            info.fill(0);
            let src = &payload[b * k..((b + 1) * k).min(self.payload_bits)];
            info[..src.len()].copy_from_slice(src);
            self.code.encode_into(&info, word);
        }
        Ok(BitSeq::from_vec_unchecked(out))
    }

    /// Codeword-stream index of payload bit `i`.
    #[inline]
    pub fn position(&self, i: usize) -> usize {
        let k = self.code.k();
        (i / k) * self.code.n() + self.code.info_positions()[i % k]
    }

    /// Codeword-stream indices of the padding bits.
    pub fn padding_positions(&self) -> impl Iterator<Item = usize> + '_ {
        let k = self.code.k();
        let last = self.blocks().saturating_sub(1);
        let used = self.payload_bits - last * k;
        (used..k).map(move |j| last * self.code.n() + self.code.info_positions()[j])
    }

    /// Payload-order values gathered from a codeword-stream vector.
    pub fn gather(&self, stream: &[f64]) -> Vec<f64> {
        (0..self.payload_bits).map(|i| stream[self.position(i)]).collect()
    }
}

/// One LDPC branch: per-block decoder state plus the padded channel LLRs.
struct Branch<'a> {
    framing: Framing<'a>,
    channel: Vec<f64>,
    decoders: Vec<BlockDecoder<'a>>,
    apriori: Vec<f64>,
    posterior: Vec<f64>,
    warm_start: bool,
}

impl<'a> Branch<'a> {
    fn new(framing: Framing<'a>, observations: &LlrSeq, warm_start: bool) -> Result<Self> {
        if observations.len() != framing.coded_bits() {
            return Err(Error::InvalidInput(format!(
                "expected {} blocks ({} coded bits), got {} observations",
                framing.blocks(),
                framing.coded_bits(),
                observations.len()
            )));
        }
        let mut channel = observations.to_vec();
        for p in framing.padding_positions() {
            channel[p] = L_MAX;
        }
        let decoders = (0..framing.blocks()).map(|_| BlockDecoder::new(framing.code())).collect();
        let len = channel.len();
        Ok(Branch {
            framing,
            channel,
            decoders,
            apriori: vec![0.0; len],
            posterior: vec![0.0; len],
            warm_start,
        })
    }

    /// Decodes every block with a payload-domain a-priori; returns payload-domain posteriors.
    fn decode(&mut self, payload_apriori: &[f64], iters: usize) -> Vec<f64> {
        for (i, &a) in payload_apriori.iter().enumerate() {
            self.apriori[self.framing.position(i)] = a;
        }
        let n = self.framing.code().n();
        for (b, dec) in self.decoders.iter_mut().enumerate() {
            if !self.warm_start {
                dec.reset();
            }
            let r = b * n..(b + 1) * n;
            dec.run(&self.channel[r.clone()], &self.apriori[r.clone()], iters, &mut self.posterior[r]);
        }
        self.framing.gather(&self.posterior)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDecoderConfig {
    pub global_iters: usize,
    pub local_iters: usize,
    /// Magnitude of the semantic-bit a-priori LLRs.
    pub kappa: f64,
    /// Keep check messages across global iterations instead of restarting each local decode.
    pub warm_start: bool,
    /// Re-estimate rho from the branch hard decisions every iteration.
    pub estimate_rho: bool,
    /// Subtract the Y-domain a-priori from the semantic-path LLRs to form the
    /// branch-2 extrinsic. The semantic LLRs are rebuilt from hard bits and
    /// never contain that a-priori, so subtracting it feeds branch 1 its own
    /// extrinsic with the sign flipped. Off by default.
    pub subtract_semantic_apriori: bool,
}

impl Default for JointDecoderConfig {
    fn default() -> Self {
        JointDecoderConfig {
            global_iters: 7,
            local_iters: 1,
            kappa: 2.0,
            warm_start: true,
            estimate_rho: false,
            subtract_semantic_apriori: false,
        }
    }
}

/// Ground truth used only for trace statistics.
#[derive(Debug, Clone)]
pub struct TraceReference {
    pub x_bits: BitSeq,
    pub x_image: ImageTensor,
}

impl TraceReference {
    pub fn new(x_image: ImageTensor) -> Self {
        TraceReference { x_bits: media::quantize_image(&x_image), x_image }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub rho_hat: f64,
    pub mean_abs_posterior1: f64,
    pub mean_abs_apriori1: f64,
    pub mean_abs_posterior2: f64,
    /// Hard-decision BER of branch 1 against the truth.
    pub ber: Option<f64>,
    /// ED of the branch-1 image against the truth.
    pub ed_joint: Option<f64>,
    /// ED of the branch-2 semantic image against the truth.
    pub ed_semantic: Option<f64>,
    pub joint_image: Option<ImageTensor>,
    pub semantic_image: Option<ImageTensor>,
}

/// One record for the initial round plus one per global iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct JointOutput {
    pub x_hat: BitSeq,
    /// Final hard decisions on the semantic bits.
    pub semantic_bits: BitSeq,
    pub trace: IterationTrace,
}

/// Semantic path: hard semantic bits -> features -> image -> Y-domain LLRs.
fn semantic_llrs(model: &SemanticModel, bits: &BitSeq) -> Result<(LlrSeq, ImageTensor)> {
    let feat = semantic::bits_to_features(model, bits)?;
    let img = semantic::sem_decode(model, &feat);
    Ok((semantic::pixel_bit_llrs(model, &img), img))
}

/// Runs the initial round plus `cfg.global_iters` exchange rounds.
///
/// `reference` is read only to fill the trace; `keep_images` stores the
/// per-iteration joint and semantic images in the trace.
#[allow(clippy::too_many_arguments)]
pub fn joint_decode(
    y1: &LlrSeq,
    y2: &LlrSeq,
    sd_code: &LdpcCode,
    rd_code: &LdpcCode,
    model: &SemanticModel,
    est: &CorrelationEstimate,
    cfg: &JointDecoderConfig,
    reference: Option<&TraceReference>,
    keep_images: bool,
) -> Result<JointOutput> {
    let mut b1 = Branch::new(Framing::new(sd_code, media::IMAGE_BITS), y1, cfg.warm_start)?;
    let mut b2 = Branch::new(Framing::new(rd_code, semantic::FEATURE_BITS), y2, cfg.warm_start)?;
    let local = cfg.local_iters.max(1);

    let mut a1 = LlrSeq::zeros(media::IMAGE_BITS);
    let mut a2 = LlrSeq::zeros(media::IMAGE_BITS);
    let mut s2 = LlrSeq::zeros(semantic::FEATURE_BITS);
    let mut est = *est;

    let mut p1 = LlrSeq::from_vec_unchecked(b1.decode(&a1, local));
    let mut sem_bits = LlrSeq::from_vec_unchecked(b2.decode(&s2, local)).hard_decision();
    let (mut p2, mut sem_img) = semantic_llrs(model, &sem_bits)?;

    let record = |iter: usize, est: &CorrelationEstimate, p1: &LlrSeq, a1: &LlrSeq, p2: &LlrSeq, sem_img: &ImageTensor| {
        let x_hat = p1.hard_decision();
        let joint_img = media::dequantize_image(&x_hat).expect("branch 1 carries a full image");
        let (ber, ed_joint, ed_semantic) = match reference {
            Some(r) => (
                Some(x_hat.bit_error_rate(&r.x_bits).expect("same length")),
                Some(media::euclidean_distance(&joint_img, &r.x_image)),
                Some(media::euclidean_distance(sem_img, &r.x_image)),
            ),
            None => (None, None, None),
        };
        IterationRecord {
            iter,
            rho_hat: est.rho_hat(),
            mean_abs_posterior1: p1.mean_abs(),
            mean_abs_apriori1: a1.mean_abs(),
            mean_abs_posterior2: p2.mean_abs(),
            ber,
            ed_joint,
            ed_semantic,
            joint_image: keep_images.then_some(joint_img),
            semantic_image: keep_images.then(|| sem_img.clone()),
        }
    };

    let mut trace = IterationTrace { records: Vec::with_capacity(cfg.global_iters + 1) };
    trace.records.push(record(0, &est, &p1, &a1, &p2, &sem_img));

    for iter in 1..=cfg.global_iters {
        if cfg.estimate_rho {
            est = CorrelationEstimate::from_hard_decisions(&p1.hard_decision(), &p2.hard_decision(), 1e-3)?;
        }
        let e1 = p1.minus(&a1)?;
        let e2 = if cfg.subtract_semantic_apriori { p2.minus(&a2)? } else { p2.clone() };
        (a1, a2) = exchange(&e1, &e2, &est)?;
        s2 = semantic::apriori_to_semantic_llrs(model, &a2, cfg.kappa)?;

        p1 = LlrSeq::from_vec_unchecked(b1.decode(&a1, local));
        let bits = LlrSeq::from_vec_unchecked(b2.decode(&s2, local)).hard_decision();
        if bits != sem_bits {
            sem_bits = bits;
            (p2, sem_img) = semantic_llrs(model, &sem_bits)?;
        }
        trace.records.push(record(iter, &est, &p1, &a1, &p2, &sem_img));
    }

    Ok(JointOutput { x_hat: p1.hard_decision(), semantic_bits: sem_bits, trace })
}

/// Branch-1-only decoding: `total_iters` consecutive sum-product iterations.
///
/// Returns the hard decision after every iteration; the last entry is the output.
pub fn independent_decode_trace(y1: &LlrSeq, sd_code: &LdpcCode, total_iters: usize) -> Result<Vec<BitSeq>> {
    let mut b1 = Branch::new(Framing::new(sd_code, media::IMAGE_BITS), y1, true)?;
    let zeros = vec![0.0; media::IMAGE_BITS];
    Ok((0..total_iters.max(1))
        .map(|_| LlrSeq::from_vec_unchecked(b1.decode(&zeros, 1)).hard_decision())
        .collect())
}

pub fn independent_decode(y1: &LlrSeq, sd_code: &LdpcCode, total_iters: usize) -> Result<BitSeq> {
    let mut b1 = Branch::new(Framing::new(sd_code, media::IMAGE_BITS), y1, true)?;
    let zeros = vec![0.0; media::IMAGE_BITS];
    Ok(LlrSeq::from_vec_unchecked(b1.decode(&zeros, total_iters.max(1))).hard_decision())
}
