//! Inference side of the semantic codec.
//!
//! The encoder maps a 3x96x96 image to a 16x23x23 feature tensor through
//! three unpadded convolutions; the decoder mirrors it with three transposed
//! convolutions. Hidden layers (and the latent) use ReLU, the last decoder
//! layer a logistic output so reconstructions land in `[0, 1]`.
//!
//! Features travel as bits: each value is clipped to the model's calibrated
//! `[clip_min, clip_max]` range and quantized uniformly to 8 bits, MSB first.

mod format;
pub mod layers;

pub use format::{load_model, read_model, save_model, write_model, MAGIC, VERSION};
pub use layers::{Activation, Layer, LayerKind, Tensor};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ldpc::{check_len, LlrSeq};
use crate::media::{self, byte_from_bits, push_byte_bits, BitSeq, ImageTensor};
use crate::{Error, Result, L_MAX};

pub const FEATURE_CHANNELS: usize = 16;
pub const FEATURE_SIDE: usize = 23;
pub const FEATURE_VALUES: usize = FEATURE_CHANNELS * FEATURE_SIDE * FEATURE_SIDE;
pub const FEATURE_BITS: usize = FEATURE_VALUES * 8;

/// `(kind, out_ch, kernel, stride, output shape)` for the six codec layers.
const ARCHITECTURE: [(LayerKind, usize, usize, usize, (usize, usize, usize)); 6] = [
    (LayerKind::Conv, 16, 2, 1, (16, 95, 95)),
    (LayerKind::Conv, 16, 3, 2, (16, 47, 47)),
    (LayerKind::Conv, 16, 3, 2, (16, 23, 23)),
    (LayerKind::TransposedConv, 16, 3, 2, (16, 47, 47)),
    (LayerKind::TransposedConv, 16, 3, 2, (16, 95, 95)),
    (LayerKind::TransposedConv, 3, 2, 1, (3, 96, 96)),
];

/// The expected chain of activation shapes, starting from the input image.
pub const SHAPE_CHAIN: [(usize, usize, usize); 7] = [
    (3, 96, 96),
    (16, 95, 95),
    (16, 47, 47),
    (16, 23, 23),
    (16, 47, 47),
    (16, 95, 95),
    (3, 96, 96),
];

/// Semantic features, 16x23x23.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    data: Vec<f32>,
}

impl FeatureTensor {
    pub fn new(data: Vec<f32>) -> Result<Self> {
        check_len("feature tensor", data.len(), FEATURE_VALUES)?;
        Ok(FeatureTensor { data })
    }

    pub fn values(&self) -> &[f32] {
        &self.data
    }

    fn to_tensor(&self) -> Tensor {
        Tensor { channels: FEATURE_CHANNELS, height: FEATURE_SIDE, width: FEATURE_SIDE, data: self.data.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticModel {
    version: u32,
    encoder: Vec<Layer>,
    decoder: Vec<Layer>,
    clip_min: f32,
    clip_max: f32,
    sigma_s: f32,
}

impl SemanticModel {
    /// Assembles a model from its six layers, enforcing the layer shape chain.
    pub fn new(layers: Vec<Layer>, clip_min: f32, clip_max: f32, sigma_s: f32) -> Result<Self> {
        validate_layers(&layers)?;
        if !(clip_min.is_finite() && clip_max.is_finite() && clip_min < clip_max) {
            return Err(Error::CorruptModel(format!("bad clip range [{clip_min}, {clip_max}]")));
        }
        if !(sigma_s.is_finite() && sigma_s > 0.0) {
            return Err(Error::CorruptModel(format!("sigma_s must be positive, got {sigma_s}")));
        }
        let mut layers = layers;
        let decoder = layers.split_off(3);
        Ok(SemanticModel { version: VERSION, encoder: layers, decoder, clip_min, clip_max, sigma_s })
    }

    /// A model with the right architecture and random (He-scaled) weights.
    pub fn with_random_weights(seed: u64, clip_min: f32, clip_max: f32, sigma_s: f32) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut in_ch = 3;
        let layers = ARCHITECTURE
            .iter()
            .map(|&(kind, out_ch, k, stride, _)| {
                let fan_in = (in_ch * k * k) as f32;
                let bound = (6.0 / fan_in).sqrt();
                let layer = Layer {
                    kind,
                    in_ch,
                    out_ch,
                    kh: k,
                    kw: k,
                    stride,
                    weights: (0..out_ch * in_ch * k * k).map(|_| rng.gen_range(-bound..bound)).collect(),
                    bias: (0..out_ch).map(|_| rng.gen_range(-0.1..0.1)).collect(),
                };
                in_ch = out_ch;
                layer
            })
            .collect();
        Self::new(layers, clip_min, clip_max, sigma_s)
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.encoder.iter().chain(&self.decoder)
    }

    pub fn clip_range(&self) -> (f32, f32) {
        (self.clip_min, self.clip_max)
    }

    pub fn sigma_s(&self) -> f32 {
        self.sigma_s
    }

    pub fn set_sigma_s(&mut self, sigma_s: f32) -> Result<()> {
        if !(sigma_s.is_finite() && sigma_s > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma_s must be positive, got {sigma_s}")));
        }
        self.sigma_s = sigma_s;
        Ok(())
    }

    /// Encoder forward pass, returning every intermediate activation.
    pub fn encode_trace(&self, img: &ImageTensor) -> Vec<Tensor> {
        let mut x = Tensor { channels: 3, height: media::HEIGHT, width: media::WIDTH, data: img.values().to_vec() };
        let mut trace = Vec::with_capacity(3);
        for layer in &self.encoder {
            x = layer.forward(&x).expect("shape chain validated at construction");
            Activation::Relu.apply(&mut x);
            trace.push(x.clone());
        }
        trace
    }

    /// Decoder forward pass, returning every intermediate activation.
    pub fn decode_trace(&self, feat: &FeatureTensor) -> Vec<Tensor> {
        let mut x = feat.to_tensor();
        let mut trace = Vec::with_capacity(3);
        for (i, layer) in self.decoder.iter().enumerate() {
            x = layer.forward(&x).expect("shape chain validated at construction");
            let act = if i + 1 == self.decoder.len() { Activation::Sigmoid } else { Activation::Relu };
            act.apply(&mut x);
            trace.push(x.clone());
        }
        trace
    }
}

fn validate_layers(layers: &[Layer]) -> Result<()> {
    if layers.len() != ARCHITECTURE.len() {
        return Err(Error::ShapeChain(format!("expected 6 layers, found {}", layers.len())));
    }
    let (mut c, mut h, mut w) = SHAPE_CHAIN[0];
    for (i, (layer, &(kind, ..))) in layers.iter().zip(&ARCHITECTURE).enumerate() {
        if !layer.is_well_formed() {
            return Err(Error::CorruptModel(format!("layer {i} has inconsistent weight/bias sizes")));
        }
        if layer.kind != kind {
            return Err(Error::ShapeChain(format!("layer {i} is {:?}, expected {kind:?}", layer.kind)));
        }
        if layer.in_ch != c {
            return Err(Error::ShapeChain(format!("layer {i} takes {} channels, expected {c}", layer.in_ch)));
        }
        let (oh, ow) = layer
            .output_hw(h, w)
            .ok_or_else(|| Error::ShapeChain(format!("layer {i} cannot consume a {h}x{w} input")))?;
        (c, h, w) = (layer.out_ch, oh, ow);
        if (c, h, w) != SHAPE_CHAIN[i + 1] {
            return Err(Error::ShapeChain(format!(
                "layer {i} outputs {c}x{h}x{w}, expected {:?}",
                SHAPE_CHAIN[i + 1]
            )));
        }
    }
    Ok(())
}

pub fn sem_encode(model: &SemanticModel, img: &ImageTensor) -> FeatureTensor {
    let out = model.encode_trace(img).pop().expect("three encoder layers");
    FeatureTensor { data: out.data }
}

pub fn sem_decode(model: &SemanticModel, feat: &FeatureTensor) -> ImageTensor {
    let out = model.decode_trace(feat).pop().expect("three decoder layers");
    ImageTensor::from_clamped(out.data).expect("decoder output has image shape")
}

fn quantize_feature(v: f32, lo: f32, hi: f32) -> u8 {
    let t = if v.is_nan() { 0.0 } else { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) };
    (t * 255.0).round() as u8
}

pub fn features_to_bits(model: &SemanticModel, feat: &FeatureTensor) -> BitSeq {
    let (lo, hi) = model.clip_range();
    let mut bits = Vec::with_capacity(FEATURE_BITS);
    for &v in &feat.data {
        push_byte_bits(&mut bits, quantize_feature(v, lo, hi));
    }
    BitSeq::from_vec_unchecked(bits)
}

pub fn bits_to_features(model: &SemanticModel, bits: &BitSeq) -> Result<FeatureTensor> {
    check_len("semantic bits", bits.len(), FEATURE_BITS)?;
    let (lo, hi) = model.clip_range();
    let data = bits
        .chunks_exact(8)
        .map(|b| lo + f32::from(byte_from_bits(b)) / 255.0 * (hi - lo))
        .collect();
    Ok(FeatureTensor { data })
}

/// Per-bit LLRs of the 8-bit pixel grid given a reconstructed pixel `p`,
/// modelling the true value as `p` plus Gaussian noise of std `sigma`.
///
/// Exact 256-term sums, scaled by the largest term and clipped to `L_MAX`.
pub fn pixel_llrs(p: f64, sigma: f64, out: &mut [f64; 8]) {
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut sums = [[0.0f64; 2]; 8];
    let mut add = |v: usize, e: f64| {
        for (j, s) in sums.iter_mut().enumerate() {
            s[(v >> (7 - j)) & 1] += e;
        }
    };
    // nearest grid level carries the largest exponent
    let nearest = (p * 255.0).round().clamp(0.0, 255.0) as usize;
    let d0 = p - nearest as f64 / 255.0;
    let step = 1.0 / 255.0;
    let decay = (-2.0 * inv * step * step).exp();
    if inv.is_finite() && decay > 0.0 {
        // consecutive Gaussian weights differ by a ratio that itself shrinks
        // geometrically by `decay`, so two exponentials cover the whole grid
        add(nearest, 1.0);
        let mut e = 1.0;
        let mut ratio = (inv * (2.0 * d0 * step - step * step)).exp();
        for v in nearest + 1..256 {
            e *= ratio;
            if e == 0.0 {
                break;
            }
            add(v, e);
            ratio *= decay;
        }
        let mut e = 1.0;
        let mut ratio = (inv * (-2.0 * d0 * step - step * step)).exp();
        for v in (0..nearest).rev() {
            e *= ratio;
            if e == 0.0 {
                break;
            }
            add(v, e);
            ratio *= decay;
        }
    } else {
        let tmax = -d0 * d0 * inv;
        for v in 0..256 {
            let d = p - v as f64 / 255.0;
            let e = (-d * d * inv - tmax).exp();
            if e > 0.0 {
                add(v, e);
            }
        }
    }
    for (o, [s0, s1]) in out.iter_mut().zip(sums) {
        *o = match (s0 > 0.0, s1 > 0.0) {
            (true, true) => (s0.ln() - s1.ln()).clamp(-L_MAX, L_MAX),
            (true, false) => L_MAX,
            (false, true) => -L_MAX,
            (false, false) => 0.0,
        };
    }
}

/// Soft demapping of a reconstructed image into LLRs over the 221,184 Y bits.
pub fn pixel_bit_llrs(model: &SemanticModel, img_hat: &ImageTensor) -> LlrSeq {
    let sigma = f64::from(model.sigma_s());
    let mut out = Vec::with_capacity(media::IMAGE_BITS);
    let mut buf = [0.0; 8];
    for &p in img_hat.values() {
        pixel_llrs(f64::from(p), sigma, &mut buf);
        out.extend_from_slice(&buf);
    }
    LlrSeq::from_vec_unchecked(out)
}

/// Re-encodes a Y-domain a-priori into a-priori LLRs over the semantic bits:
/// hard decision, dequantize, semantic encoding, feature quantization, then
/// `kappa * (1 - 2b)` per bit.
pub fn apriori_to_semantic_llrs(model: &SemanticModel, a2_y: &LlrSeq, kappa: f64) -> Result<LlrSeq> {
    check_len("Y-domain a-priori", a2_y.len(), media::IMAGE_BITS)?;
    let y_hat = media::dequantize_image(&a2_y.hard_decision())?;
    let bits = features_to_bits(model, &sem_encode(model, &y_hat));
    Ok(LlrSeq::from_vec_unchecked(
        bits.iter().map(|&b| kappa * (1.0 - 2.0 * f64::from(b))).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn model() -> SemanticModel {
        SemanticModel::with_random_weights(3, 0.0, 2.0, 0.05).unwrap()
    }

    fn random_image(seed: u64) -> ImageTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageTensor::from_fn(|_, _, _| rng.gen::<f32>()).unwrap()
    }

    #[test]
    fn shape_chain() {
        let m = model();
        let enc = m.encode_trace(&random_image(1));
        let shapes: Vec<_> = enc.iter().map(Tensor::shape).collect();
        assert_eq!(shapes, SHAPE_CHAIN[1..4]);
        let feat = FeatureTensor::new(enc[2].data.clone()).unwrap();
        let dec: Vec<_> = m.decode_trace(&feat).iter().map(Tensor::shape).collect();
        assert_eq!(dec, SHAPE_CHAIN[4..]);
    }

    #[test]
    fn zero_features_give_constant_output() {
        let mut m = model();
        m.decoder.iter_mut().for_each(|l| l.bias.fill(0.0));
        let img = sem_decode(&m, &FeatureTensor::new(vec![0.0; FEATURE_VALUES]).unwrap());
        assert!(img.values().iter().all(|v| *v == 0.5));
    }

    #[test]
    fn rejects_wrong_architecture() {
        let m = model();
        let mut layers: Vec<Layer> = m.layers().cloned().collect();
        let last = layers.last_mut().unwrap();
        last.kh = 3;
        last.kw = 3;
        last.weights = vec![0.0; last.weight_count()];
        assert!(matches!(SemanticModel::new(layers.clone(), 0.0, 1.0, 0.1), Err(Error::ShapeChain(_))));
        layers.pop();
        assert!(matches!(SemanticModel::new(layers, 0.0, 1.0, 0.1), Err(Error::ShapeChain(_))));
        let layers: Vec<Layer> = m.layers().cloned().collect();
        assert!(SemanticModel::new(layers.clone(), 1.0, 1.0, 0.1).is_err());
        assert!(SemanticModel::new(layers, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn payload_sizes() {
        assert_eq!(FEATURE_BITS, 67_712);
        assert_eq!(media::IMAGE_BITS, 221_184);
        let m = model();
        let bits = features_to_bits(&m, &sem_encode(&m, &random_image(2)));
        assert_eq!(bits.len(), FEATURE_BITS);
        assert!(bits_to_features(&m, &BitSeq::zeros(FEATURE_BITS - 8)).is_err());
    }

    #[test]
    fn feature_quantizer_endpoints_and_error() {
        let m = model();
        let (lo, hi) = m.clip_range();
        let mut vals = vec![lo; FEATURE_VALUES];
        vals[1] = hi;
        vals[2] = hi + 5.0;
        vals[3] = lo - 1.0;
        let bits = features_to_bits(&m, &FeatureTensor::new(vals).unwrap());
        assert_eq!(byte_from_bits(&bits[0..8]), 0);
        assert_eq!(byte_from_bits(&bits[8..16]), 255);
        assert_eq!(byte_from_bits(&bits[16..24]), 255);
        assert_eq!(byte_from_bits(&bits[24..32]), 0);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let feat = FeatureTensor::new((0..FEATURE_VALUES).map(|_| rng.gen_range(lo..hi)).collect()).unwrap();
        let back = bits_to_features(&m, &features_to_bits(&m, &feat)).unwrap();
        let bound = (hi - lo) / 510.0 + 1e-6;
        for (a, b) in feat.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= bound);
        }
        // grid values survive the round trip
        assert_eq!(features_to_bits(&m, &back), features_to_bits(&m, &feat));
    }

    /// Direct density sums, no log-domain tricks.
    fn pixel_oracle(p: f64, sigma: f64) -> [f64; 8] {
        let phi = |x: f64, mu: f64| {
            (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let mut out = [0.0; 8];
        for (j, o) in out.iter_mut().enumerate() {
            let (mut n0, mut n1) = (0.0, 0.0);
            for v in 0..256u32 {
                let d = phi(p, f64::from(v) / 255.0);
                if format!("{v:08b}").as_bytes()[j] == b'0' {
                    n0 += d;
                } else {
                    n1 += d;
                }
            }
            *o = (n0 / n1).ln().clamp(-L_MAX, L_MAX);
        }
        out
    }

    #[test]
    fn pixel_llrs_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut got = [0.0; 8];
        for _ in 0..300 {
            let p: f64 = rng.gen();
            let sigma = rng.gen_range(0.02..0.3);
            pixel_llrs(p, sigma, &mut got);
            let want = pixel_oracle(p, sigma);
            for j in 0..8 {
                assert!((got[j] - want[j]).abs() < 1e-9, "p={p} sigma={sigma} bit {j}: {} vs {}", got[j], want[j]);
            }
        }
    }

    #[test]
    fn pixel_llrs_degenerate_noise_and_midpoint() {
        let mut got = [0.0; 8];
        pixel_llrs(77.0 / 255.0, 1e-6, &mut got);
        let bits = format!("{:08b}", 77);
        for (j, c) in bits.bytes().enumerate() {
            assert_eq!(got[j], if c == b'0' { L_MAX } else { -L_MAX });
        }
        // midpoint between 100 and 101 (differ only in the LSB)
        pixel_llrs(100.5 / 255.0, 0.004, &mut got);
        assert!(got[7].abs() < 1e-9, "{}", got[7]);
    }

    #[test]
    fn semantic_apriori() {
        let m = model();
        let zero = apriori_to_semantic_llrs(&m, &LlrSeq::zeros(media::IMAGE_BITS), 2.0).unwrap();
        assert_eq!(zero.len(), FEATURE_BITS);
        let black = sem_encode(&m, &ImageTensor::filled(0.0).unwrap());
        let want: Vec<f64> = features_to_bits(&m, &black).iter().map(|&b| 2.0 * (1.0 - 2.0 * f64::from(b))).collect();
        assert_eq!(zero.into_vec(), want);
        let none = apriori_to_semantic_llrs(&m, &LlrSeq::zeros(media::IMAGE_BITS), 0.0).unwrap();
        assert!(none.iter().all(|v| *v == 0.0));
        assert!(apriori_to_semantic_llrs(&m, &LlrSeq::zeros(10), 2.0).is_err());
    }
}
