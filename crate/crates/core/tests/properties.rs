use std::sync::OnceLock;

use proptest::prelude::*;

use sfrelay::joint_decoder::Framing;
use sfrelay::semantic::{self, pixel_llrs};
use sfrelay::{hard_bit, BitSeq, LdpcCode, LlrSeq, L_MAX};

fn code() -> &'static LdpcCode {
    static CODE: OnceLock<LdpcCode> = OnceLock::new();
    CODE.get_or_init(|| LdpcCode::build(300, 2, 3, 21).unwrap())
}

fn bits(len: usize) -> impl Strategy<Value = BitSeq> {
    proptest::collection::vec(0u8..2, len).prop_map(|v| BitSeq::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encoding_is_linear_and_systematic(a in bits(code().k()), b in bits(code().k())) {
        let c = code();
        let (ca, cb) = (c.encode(&a).unwrap(), c.encode(&b).unwrap());
        let sum = BitSeq::new(a.iter().zip(b.iter()).map(|(x, y)| x ^ y).collect()).unwrap();
        let csum = c.encode(&sum).unwrap();
        prop_assert!(c.is_codeword(&ca));
        for i in 0..c.n() {
            prop_assert_eq!(csum[i], ca[i] ^ cb[i]);
        }
        for (j, &p) in c.info_positions().iter().enumerate() {
            prop_assert_eq!(ca[p], a[j]);
        }
    }

    #[test]
    fn decoder_keeps_a_clean_codeword(info in bits(code().k()), mag in 0.5f64..L_MAX, iters in 1usize..10) {
        let c = code();
        let cw = c.encode(&info).unwrap();
        let ch = LlrSeq::new(cw.iter().map(|&b| if b == 0 { mag } else { -mag }).collect()).unwrap();
        let (post, ext) = c.decode(&ch, &LlrSeq::zeros(c.n()), iters).unwrap();
        prop_assert_eq!(post.hard_decision(), cw);
        prop_assert!(post.iter().all(|l| l.abs() <= 3.0 * L_MAX));
        prop_assert_eq!(&post[..], &ext[..]);
    }

    #[test]
    fn framing_places_every_payload_bit(payload_len in 1usize..1200, seed in any::<u64>()) {
        let c = code();
        let f = Framing::new(c, payload_len);
        let payload: Vec<u8> = (0..payload_len).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
        let stream = f.encode(&BitSeq::new(payload.clone()).unwrap()).unwrap();
        prop_assert_eq!(stream.len(), f.blocks() * c.n());
        prop_assert_eq!(f.padding_bits() + payload_len, f.blocks() * c.k());
        let as_llr: Vec<f64> = stream.iter().map(|&b| f64::from(b)).collect();
        let back: Vec<u8> = f.gather(&as_llr).iter().map(|&v| v as u8).collect();
        prop_assert_eq!(back, payload);
        prop_assert!(f.padding_positions().all(|p| stream[p] == 0));
    }

    #[test]
    fn pixel_llrs_are_bounded_and_point_at_the_nearest_level(p in 0.0f64..=1.0, sigma in 1e-4f64..0.5) {
        let mut out = [0.0; 8];
        pixel_llrs(p, sigma, &mut out);
        prop_assert!(out.iter().all(|l| l.is_finite() && l.abs() <= L_MAX));
        // the MSB decision follows the side of the 0.5 boundary, away from it
        if (p - 0.5).abs() > 2.0 / 255.0 {
            prop_assert_eq!(hard_bit(out[0]), u8::from(p > 0.5));
        }
    }

    #[test]
    fn semantic_feature_bits_round_trip(seed in any::<u64>()) {
        let model = semantic::SemanticModel::with_random_weights(seed % 7, 0.0, 2.0, 0.05).unwrap();
        let img = sfrelay::ImageTensor::from_fn(|c, y, x| ((c * 31 + y * 7 + x * 3 + seed as usize) % 256) as f32 / 255.0).unwrap();
        let feat = semantic::sem_encode(&model, &img);
        let b = semantic::features_to_bits(&model, &feat);
        let back = semantic::bits_to_features(&model, &b).unwrap();
        prop_assert_eq!(semantic::features_to_bits(&model, &back), b);
        let step = 2.0 / 255.0;
        for (x, y) in feat.values().iter().zip(back.values()) {
            prop_assert!((x.clamp(0.0, 2.0) - y).abs() <= step / 2.0 + 1e-6);
        }
    }
}
