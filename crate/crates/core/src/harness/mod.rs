//! Monte-Carlo experiment driver.
//!
//! One trial simulates the whole chain for one image at one operating point:
//! source quantization, S-D LDPC + BPSK/AWGN, intra-link BSC to the relay,
//! semantic encoding + R-D LDPC + BPSK/AWGN, then joint and independent
//! decoding at the destination.

mod config;
mod output;

pub use config::{parse_list, ConfigFile, ListSpec, SimConfig};
pub use output::{summarize, write_csv, write_summary_csv, SummaryRow, CSV_HEADER};

use std::path::{Path, PathBuf};

use crate::channel::{bpsk_awgn, bsc_corrupt, channel_llr, ChannelParams, IntraLinkModel};
use crate::correlation::CorrelationEstimate;
use crate::joint_decoder::{self, Framing, TraceReference};
use crate::ldpc::LdpcCode;
use crate::media::{self, ImageTensor};
use crate::semantic::{self, SemanticModel};
use crate::{Error, Result};

/// Wall-clock timer; reads zero where the platform has no clock (wasm32).
struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Stopwatch(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        return 0.0;
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial: the master seed chained through SplitMix64 with the
/// SNR index, rho index and trial index, in that order.
pub fn trial_seed(master: u64, snr_index: usize, rho_index: usize, trial: usize) -> u64 {
    [snr_index, rho_index, trial]
        .iter()
        .fold(splitmix64(master), |h, &i| splitmix64(h ^ i as u64))
}

/// Per-process stream seeds derived from a trial seed.
fn stream_seed(trial_seed: u64, stream: u64) -> u64 {
    splitmix64(trial_seed ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

const STREAM_SD_NOISE: u64 = 1;
const STREAM_INTRA_LINK: u64 = 2;
const STREAM_RD_NOISE: u64 = 3;

/// Everything a trial needs that is shared across the sweep.
#[derive(Debug, Clone)]
pub struct SimContext {
    pub cfg: SimConfig,
    pub sd_code: LdpcCode,
    pub rd_code: LdpcCode,
    pub model: SemanticModel,
    pub images: Vec<ImageTensor>,
}

/// Location of the bundled fixtures (model and 4-image mini-set).
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// PNG files of a directory, sorted by name.
pub fn load_image_dir(dir: impl AsRef<Path>) -> Result<Vec<ImageTensor>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no PNG images in {}", dir.display())));
    }
    paths.iter().map(ImageTensor::load_png).collect()
}

impl SimContext {
    pub fn new(cfg: SimConfig, model: SemanticModel, images: Vec<ImageTensor>) -> Result<Self> {
        cfg.validate()?;
        if images.is_empty() {
            return Err(Error::Config("at least one image is required".into()));
        }
        let sd_code = LdpcCode::build(cfg.code_n, cfg.code_dv, cfg.code_dc, cfg.sd_code_seed)?;
        let rd_code = LdpcCode::build(cfg.code_n, cfg.code_dv, cfg.code_dc, cfg.rd_code_seed)?;
        Ok(SimContext { cfg, sd_code, rd_code, model, images })
    }

    /// Loads the model and images named in the config (bundled fixtures when unset).
    pub fn load(cfg: SimConfig) -> Result<Self> {
        let model_path = cfg.model.clone().unwrap_or_else(|| fixtures_dir().join("model.sfrw"));
        let image_dir = cfg.images.clone().unwrap_or_else(|| fixtures_dir().join("images"));
        let model = semantic::load_model(&model_path)?;
        let images = load_image_dir(&image_dir)?;
        Self::new(cfg, model, images)
    }

    /// Image used by trial `t`: round-robin over the image set.
    pub fn image_for_trial(&self, trial: usize) -> &ImageTensor {
        &self.images[trial % self.images.len()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub rho: f64,
    pub trial: usize,
    pub seed: u64,
    /// Joint ED after the initial round and each global iteration.
    pub ed_joint: Vec<f64>,
    pub ber_joint: Vec<f64>,
    /// ED of the semantic reconstruction at each iteration.
    pub ed_semantic: Vec<f64>,
    /// Independent decoding after each of its iterations, aligned with `ed_joint`
    /// only at the final entry.
    pub ed_independent_per_iter: Vec<f64>,
    pub ed_independent: f64,
    pub ber_independent: f64,
    /// ED between the destination's semantic image and the error-free semantic
    /// reconstruction of the source image.
    pub ed_semantic_vs_reference: f64,
    pub rd_block_errors: usize,
    pub rd_blocks: usize,
    pub wall_time_s: f64,
}

/// A trial's record plus, when requested, its per-iteration images.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub joint_images: Vec<ImageTensor>,
    pub semantic_images: Vec<ImageTensor>,
    pub independent_images: Vec<ImageTensor>,
}

fn simulate(
    ctx: &SimContext,
    snr_db: f64,
    rho: f64,
    trial: usize,
    seed: u64,
    img: &ImageTensor,
    keep_images: bool,
) -> Result<TrialOutcome> {
    let start = Stopwatch::start();
    let cfg = &ctx.cfg;
    let model = &ctx.model;
    let intra = IntraLinkModel::new(rho)?;

    // source -> destination
    let x = media::quantize_image(img);
    let sd = Framing::new(&ctx.sd_code, media::IMAGE_BITS);
    let sd_params = ChannelParams::new(snr_db, stream_seed(seed, STREAM_SD_NOISE))?;
    let y1 = channel_llr(&bpsk_awgn(&sd.encode(&x)?, &sd_params), &sd_params);

    // source -> relay -> destination
    let y_bits = bsc_corrupt(&x, &intra, stream_seed(seed, STREAM_INTRA_LINK));
    let relay_img = media::dequantize_image(&y_bits)?;
    let sem_bits = semantic::features_to_bits(model, &semantic::sem_encode(model, &relay_img));
    let rd = Framing::new(&ctx.rd_code, semantic::FEATURE_BITS);
    let rd_params = ChannelParams::new(cfg.snr_rd, stream_seed(seed, STREAM_RD_NOISE))?;
    let y2 = channel_llr(&bpsk_awgn(&rd.encode(&sem_bits)?, &rd_params), &rd_params);

    let reference = TraceReference::new(img.clone());
    let est = CorrelationEstimate::new(rho)?;
    let joint = joint_decoder::joint_decode(
        &y1,
        &y2,
        &ctx.sd_code,
        &ctx.rd_code,
        model,
        &est,
        &cfg.decoder_config(),
        Some(&reference),
        keep_images,
    )?;
    let indep = joint_decoder::independent_decode_trace(&y1, &ctx.sd_code, cfg.independent_iters())?;

    let k = ctx.rd_code.k();
    let rd_blocks = rd.blocks();
    let rd_block_errors = (0..rd_blocks)
        .filter(|b| {
            let r = b * k..((b + 1) * k).min(semantic::FEATURE_BITS);
            joint.semantic_bits[r.clone()] != sem_bits[r]
        })
        .count();

    let clean_sem = semantic::bits_to_features(
        model,
        &semantic::features_to_bits(model, &semantic::sem_encode(model, img)),
    )?;
    let clean_sem_img = semantic::sem_decode(model, &clean_sem);
    let final_sem = semantic::sem_decode(model, &semantic::bits_to_features(model, &joint.semantic_bits)?);

    let indep_images: Vec<ImageTensor> =
        indep.iter().map(media::dequantize_image).collect::<Result<_>>()?;
    let ed_independent_per_iter: Vec<f64> =
        indep_images.iter().map(|i| media::euclidean_distance(i, img)).collect();
    let last = indep.last().expect("at least one iteration");

    let recs = &joint.trace.records;
    let record = TrialRecord {
        snr_db,
        rho,
        trial,
        seed,
        ed_joint: recs.iter().map(|r| r.ed_joint.unwrap_or(f64::NAN)).collect(),
        ber_joint: recs.iter().map(|r| r.ber.unwrap_or(f64::NAN)).collect(),
        ed_semantic: recs.iter().map(|r| r.ed_semantic.unwrap_or(f64::NAN)).collect(),
        ed_independent: *ed_independent_per_iter.last().expect("non-empty"),
        ed_independent_per_iter,
        ber_independent: last.bit_error_rate(&x)?,
        ed_semantic_vs_reference: media::euclidean_distance(&final_sem, &clean_sem_img),
        rd_block_errors,
        rd_blocks,
        wall_time_s: start.seconds(),
    };
    let (joint_images, semantic_images) = if keep_images {
        recs.iter()
            .map(|r| (r.joint_image.clone().expect("kept"), r.semantic_image.clone().expect("kept")))
            .unzip()
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(TrialOutcome {
        record,
        joint_images,
        semantic_images,
        independent_images: if keep_images { indep_images } else { Vec::new() },
    })
}

/// Simulates one operating point for one image.
pub fn run_trial(
    ctx: &SimContext,
    snr_db: f64,
    rho: f64,
    trial: usize,
    trial_seed: u64,
    img: &ImageTensor,
) -> Result<TrialRecord> {
    simulate(ctx, snr_db, rho, trial, trial_seed, img, false).map(|o| o.record)
}

/// Same as [`run_trial`] but keeps the per-iteration images.
pub fn run_trial_with_images(
    ctx: &SimContext,
    snr_db: f64,
    rho: f64,
    trial_seed: u64,
    img: &ImageTensor,
) -> Result<TrialOutcome> {
    simulate(ctx, snr_db, rho, 0, trial_seed, img, true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub snr_db: f64,
    pub rho: f64,
    pub trial: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    /// Sorted by (SNR index, rho index, trial).
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
}

#[derive(Debug, Clone, Copy)]
struct Task {
    snr_index: usize,
    rho_index: usize,
    trial: usize,
}

/// Worker cap from `SFRELAY_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("SFRELAY_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs the full SNR x rho x trial cross product.
pub fn run_sweep(ctx: &SimContext) -> SweepResult {
    let cfg = &ctx.cfg;
    let mut tasks = Vec::new();
    for snr_index in 0..cfg.snr_sd_list.len() {
        for rho_index in 0..cfg.rho_list.len() {
            for trial in 0..cfg.trials {
                tasks.push(Task { snr_index, rho_index, trial });
            }
        }
    }
    let run = |t: &Task| {
        let (snr, rho) = (cfg.snr_sd_list[t.snr_index], cfg.rho_list[t.rho_index]);
        let seed = trial_seed(cfg.master_seed, t.snr_index, t.rho_index, t.trial);
        let out = run_trial(ctx, snr, rho, t.trial, seed, ctx.image_for_trial(t.trial));
        (*t, out)
    };
    let results = map_tasks(&tasks, run, cfg.threads.or_else(threads_from_env));

    let mut ok: Vec<(Task, TrialRecord)> = Vec::new();
    let mut failures = Vec::new();
    for (t, r) in results {
        match r {
            Ok(rec) => ok.push((t, rec)),
            Err(e) => failures.push(TrialFailure {
                snr_db: cfg.snr_sd_list[t.snr_index],
                rho: cfg.rho_list[t.rho_index],
                trial: t.trial,
                error: e.to_string(),
            }),
        }
    }
    ok.sort_by_key(|(t, _)| (t.snr_index, t.rho_index, t.trial));
    SweepResult { records: ok.into_iter().map(|(_, r)| r).collect(), failures }
}

#[cfg(feature = "parallel")]
fn map_tasks<T: Sync, R: Send>(tasks: &[T], f: impl Fn(&T) -> R + Sync + Send, threads: Option<usize>) -> Vec<R> {
    use rayon::prelude::*;
    let go = || tasks.par_iter().map(&f).collect();
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(go),
        None => go(),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_tasks<T: Sync, R: Send>(tasks: &[T], f: impl Fn(&T) -> R + Sync + Send, _threads: Option<usize>) -> Vec<R> {
    tasks.iter().map(f).collect()
}

/// Writes `{kind}_iter{t}.png` for kind in independent, joint, semantic.
pub fn dump_iteration_images(
    ctx: &SimContext,
    snr_db: f64,
    rho: f64,
    img: &ImageTensor,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<(TrialRecord, Vec<PathBuf>)> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let outcome = run_trial_with_images(ctx, snr_db, rho, seed, img)?;
    let iters = ctx.cfg.global_iters + 1;
    // independent decoding runs local_iters iterations per joint round; sample at round ends
    let step = ctx.cfg.local_iters;
    let mut files = Vec::with_capacity(3 * iters);
    for t in 0..iters {
        let indep = &outcome.independent_images[((t + 1) * step - 1).min(outcome.independent_images.len() - 1)];
        for (kind, image) in [
            ("independent", indep),
            ("joint", &outcome.joint_images[t]),
            ("semantic", &outcome.semantic_images[t]),
        ] {
            let path = out_dir.join(format!("{kind}_iter{t}.png"));
            image.save_png(&path)?;
            files.push(path);
        }
    }
    Ok((outcome.record, files))
}
