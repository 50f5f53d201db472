use wasm_bindgen::prelude::*;

use sfrelay::bounds::{rate_region, RateRegionModel};
use sfrelay::correlation::fc;
use sfrelay::harness::{self, SimConfig, SimContext, TrialOutcome};
use sfrelay::media::ImageTensor;
use sfrelay::semantic;

const MODEL: &[u8] = include_bytes!("../../core/fixtures/model.sfrw");
const IMAGES: [(&str, &[u8]); 4] = [
    ("astronaut", include_bytes!("../../core/fixtures/images/0_astronaut.png")),
    ("chelsea", include_bytes!("../../core/fixtures/images/1_chelsea.png")),
    ("coffee", include_bytes!("../../core/fixtures/images/2_coffee.png")),
    ("rocket", include_bytes!("../../core/fixtures/images/3_rocket.png")),
];

fn js_err(e: sfrelay::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Samples the correlation update on `points` evenly spaced LLRs in `[-l_max, l_max]`.
#[wasm_bindgen]
pub fn fc_curve(rho: f64, l_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    if !(0.0..=0.5).contains(&rho) || points < 2 || !(l_max > 0.0) {
        return Err(JsError::new("need rho in [0, 0.5], l_max > 0 and at least 2 points"));
    }
    let step = 2.0 * l_max / (points - 1) as f64;
    Ok((0..points).map(|i| fc(-l_max + step * i as f64, rho)).collect())
}

/// `[I(X;Y), H(X|U), I(Y;U), H(X|U,V), I(Y;U|V)]` for the binary model.
#[wasm_bindgen]
pub fn rate_bounds(rho: f64, q: f64, delta: f64) -> Result<Vec<f64>, JsError> {
    let b = rate_region(&RateRegionModel::new(rho, q, delta).map_err(js_err)?);
    Ok(vec![b.r0_min, b.r1_min_no_side, b.r2_min_no_side, b.r1_min, b.r2_min])
}

/// The full relay chain with the bundled model, codes and images.
#[wasm_bindgen]
pub struct Relay {
    ctx: SimContext,
}

#[wasm_bindgen]
impl Relay {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<Relay, JsError> {
        let model = semantic::read_model(MODEL).map_err(js_err)?;
        let images = IMAGES
            .iter()
            .map(|(_, png)| ImageTensor::decode_png(png))
            .collect::<Result<Vec<_>, _>>()
            .map_err(js_err)?;
        let ctx = SimContext::new(SimConfig::default(), model, images).map_err(js_err)?;
        Ok(Relay { ctx })
    }

    #[wasm_bindgen(js_name = imageNames)]
    pub fn image_names(&self) -> Vec<String> {
        IMAGES.iter().map(|(name, _)| name.to_string()).collect()
    }

    #[wasm_bindgen(js_name = globalIters)]
    pub fn global_iters(&self) -> usize {
        self.ctx.cfg.global_iters
    }

    /// Runs one trial and keeps every per-iteration reconstruction.
    pub fn simulate(&self, image: usize, snr_db: f64, rho: f64, seed: u64) -> Result<Trial, JsError> {
        let img = self.ctx.images.get(image).ok_or_else(|| JsError::new("no such image"))?;
        let outcome = harness::run_trial_with_images(&self.ctx, snr_db, rho, seed, img).map_err(js_err)?;
        Ok(Trial { original: img.clone(), outcome, local_iters: self.ctx.cfg.local_iters })
    }
}

#[wasm_bindgen]
pub struct Trial {
    original: ImageTensor,
    outcome: TrialOutcome,
    local_iters: usize,
}

fn rgba(img: &ImageTensor) -> Vec<u8> {
    let rgb = img.to_rgb8();
    rgb.pixels().flat_map(|p| [p[0], p[1], p[2], 255]).collect()
}

#[wasm_bindgen]
impl Trial {
    #[wasm_bindgen(js_name = edJoint)]
    pub fn ed_joint(&self) -> Vec<f64> {
        self.outcome.record.ed_joint.clone()
    }

    #[wasm_bindgen(js_name = edSemantic)]
    pub fn ed_semantic(&self) -> Vec<f64> {
        self.outcome.record.ed_semantic.clone()
    }

    /// Independent-decoding ED after the same LDPC budget as each global iteration.
    #[wasm_bindgen(js_name = edIndependent)]
    pub fn ed_independent(&self) -> Vec<f64> {
        let per_iter = &self.outcome.record.ed_independent_per_iter;
        (0..self.outcome.record.ed_joint.len())
            .map(|t| per_iter[((t + 1) * self.local_iters - 1).min(per_iter.len() - 1)])
            .collect()
    }

    /// RGBA pixels (96x96) of `kind` ("original", "joint", "semantic" or
    /// "independent") after global iteration `iter`.
    pub fn image(&self, kind: &str, iter: usize) -> Result<Vec<u8>, JsError> {
        let o = &self.outcome;
        let img = match kind {
            "original" => Some(&self.original),
            "joint" => o.joint_images.get(iter),
            "semantic" => o.semantic_images.get(iter),
            "independent" => o.independent_images.get(((iter + 1) * self.local_iters - 1).min(o.independent_images.len().saturating_sub(1))),
            _ => return Err(JsError::new("unknown image kind")),
        };
        img.map(rgba).ok_or_else(|| JsError::new("iteration out of range"))
    }
}
