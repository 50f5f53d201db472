use std::collections::BTreeMap;
use std::io::Write;

use super::TrialRecord;
use crate::Result;

pub const CSV_HEADER: [&str; 8] =
    ["snr_db", "rho", "trial", "iter", "ed_joint", "ed_independent", "ber_joint", "ber_independent"];

/// One row per trial and iteration. Rows follow the record order.
pub fn write_csv(records: &[TrialRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        for (iter, (ed, ber)) in r.ed_joint.iter().zip(&r.ber_joint).enumerate() {
            w.write_record([
                r.snr_db.to_string(),
                r.rho.to_string(),
                r.trial.to_string(),
                iter.to_string(),
                ed.to_string(),
                r.ed_independent.to_string(),
                ber.to_string(),
                r.ber_independent.to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub snr_db: f64,
    pub rho: f64,
    pub iter: usize,
    pub trials: usize,
    pub mean_ed_joint: f64,
    pub mean_ed_independent: f64,
    pub mean_ed_semantic: f64,
    pub mean_ber_joint: f64,
    pub mean_ber_independent: f64,
}

/// Mean ED/BER per (SNR, rho, iteration), ordered by SNR, rho, iteration.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    #[derive(Default)]
    struct Acc {
        n: usize,
        sums: [f64; 5],
    }
    // grouped on values rounded to 1e-9
    let mut groups: BTreeMap<(i64, i64, usize), (f64, f64, Acc)> = BTreeMap::new();
    let key = |v: f64| (v * 1e9).round() as i64;
    for r in records {
        for iter in 0..r.ed_joint.len() {
            let entry = groups
                .entry((key(r.snr_db), key(r.rho), iter))
                .or_insert_with(|| (r.snr_db, r.rho, Acc::default()));
            let acc = &mut entry.2;
            acc.n += 1;
            let vals = [r.ed_joint[iter], r.ed_independent, r.ed_semantic[iter], r.ber_joint[iter], r.ber_independent];
            acc.sums.iter_mut().zip(vals).for_each(|(s, v)| *s += v);
        }
    }
    groups
        .into_iter()
        .map(|((_, _, iter), (snr_db, rho, acc))| {
            let m = |i: usize| acc.sums[i] / acc.n as f64;
            SummaryRow {
                snr_db,
                rho,
                iter,
                trials: acc.n,
                mean_ed_joint: m(0),
                mean_ed_independent: m(1),
                mean_ed_semantic: m(2),
                mean_ber_joint: m(3),
                mean_ber_independent: m(4),
            }
        })
        .collect()
}

pub fn write_summary_csv(rows: &[SummaryRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "snr_db",
        "rho",
        "iter",
        "trials",
        "mean_ed_joint",
        "mean_ed_independent",
        "mean_ed_semantic",
        "mean_ber_joint",
        "mean_ber_independent",
    ])?;
    for r in rows {
        w.write_record([
            r.snr_db.to_string(),
            r.rho.to_string(),
            r.iter.to_string(),
            r.trials.to_string(),
            r.mean_ed_joint.to_string(),
            r.mean_ed_independent.to_string(),
            r.mean_ed_semantic.to_string(),
            r.mean_ber_joint.to_string(),
            r.mean_ber_independent.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
