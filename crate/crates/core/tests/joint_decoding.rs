//! End-to-end behaviour of the joint decoder on the bundled fixtures.

use sfrelay::harness::{run_trial, SimConfig, SimContext, TrialRecord};

fn context(global_iters: usize) -> SimContext {
    SimContext::load(SimConfig { global_iters, ..SimConfig::default() }).unwrap()
}

fn trial(ctx: &SimContext, snr: f64, rho: f64, seed: u64) -> TrialRecord {
    run_trial(ctx, snr, rho, 0, seed, ctx.image_for_trial(seed as usize)).unwrap()
}

#[test]
fn uninformative_relay_reduces_to_independent_decoding() {
    let ctx = context(7);
    for (snr, seed) in [(-3.0, 1), (1.0, 2)] {
        let r = trial(&ctx, snr, 0.5, seed);
        // the correlation update nulls every exchanged LLR at rho = 0.5
        assert_eq!(r.ber_joint.last(), Some(&r.ber_independent));
        assert_eq!(r.ed_joint.last(), Some(&r.ed_independent));
        assert_eq!(r.ed_joint, r.ed_independent_per_iter);
    }
}

#[test]
fn clean_link_is_a_fixed_point() {
    let ctx = context(4);
    let r = trial(&ctx, 30.0, 0.35, 3);
    assert!(r.ber_joint.iter().all(|&b| b == 0.0), "{:?}", r.ber_joint);
    assert!(r.ed_joint.iter().all(|&e| e == 0.0));
    assert_eq!(r.ed_independent, 0.0);
}

#[test]
fn trials_are_deterministic() {
    let ctx = context(2);
    let mut a = trial(&ctx, 0.0, 0.1, 4);
    let mut b = trial(&ctx, 0.0, 0.1, 4);
    a.wall_time_s = 0.0;
    b.wall_time_s = 0.0;
    assert_eq!(a, b);
    assert_eq!(a.ed_joint.len(), 3);
    assert_eq!(a.ed_semantic.len(), 3);
    assert_ne!(trial(&ctx, 0.0, 0.1, 5).ed_joint, a.ed_joint);
}

#[test]
fn relay_link_delivers_the_features() {
    let ctx = context(1);
    let r = trial(&ctx, 0.0, 0.1, 6);
    // 20 dB on the relay link: every semantic block decodes
    assert_eq!(r.rd_block_errors, 0);
    assert_eq!(r.rd_blocks, 67_712usize.div_ceil(ctx.rd_code.k()));
    assert!(r.ed_semantic_vs_reference > 0.0);
}
