//! Regular LDPC codes: construction, systematic encoding and flooding
//! sum-product decoding with the exact tanh check rule.
//!
//! The construction is a random socket permutation (Gallager-style regular
//! bipartite graph) with a bounded repair pass that removes parallel edges
//! and 4-cycles. The encoder is derived by Gaussian elimination over GF(2);
//! `k = n - rank(H)` since dv = 2 codes are usually rank deficient.

use std::fmt::Write as _;
use std::path::Path;

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::media::BitSeq;
use crate::{clip_llr, Error, Result, L_MAX};

/// Log-likelihood ratios `ln(P(bit = 0) / P(bit = 1))`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LlrSeq(Vec<f64>);

impl LlrSeq {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite LLR {v}")));
        }
        Ok(LlrSeq(values))
    }

    pub fn zeros(len: usize) -> Self {
        LlrSeq(vec![0.0; len])
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        LlrSeq(values)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Hard decision; an LLR of exactly zero decides bit 0.
    pub fn hard_decision(&self) -> BitSeq {
        BitSeq::from_vec_unchecked(self.0.iter().map(|l| crate::hard_bit(*l)).collect())
    }

    /// Elementwise `self - other`.
    pub fn minus(&self, other: &LlrSeq) -> Result<LlrSeq> {
        check_len("LLR subtraction", other.len(), self.len())?;
        Ok(LlrSeq(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn mean_abs(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().map(|v| v.abs()).sum::<f64>() / self.0.len() as f64
    }
}

impl std::ops::Deref for LlrSeq {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::DerefMut for LlrSeq {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

pub(crate) fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::InvalidInput(format!("{what}: expected length {want}, got {got}")));
    }
    Ok(())
}

/// Rounds of the conflict-repair pass before a construction is accepted as is.
const REPAIR_ROUNDS: usize = 2000;

/// Largest check-message magnitude, `tanh(L_MAX / 2)` in the product domain.
fn tanh_clip() -> f64 {
    (L_MAX / 2.0).tanh()
}

/// A regular LDPC code. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LdpcCode {
    n: usize,
    m: usize,
    dv: usize,
    dc: usize,
    seed: u64,
    /// Check-major edge list: check `c` owns edges `c*dc .. (c+1)*dc`.
    edge_var: Vec<u32>,
    /// Variable-major edge index: variable `v` owns `var_edges[v*dv .. (v+1)*dv]`.
    var_edges: Vec<u32>,
    rank: usize,
    info_positions: Vec<usize>,
    parity_positions: Vec<usize>,
    /// For each parity position, the info bits (packed) whose XOR it carries.
    parity_rules: Vec<Vec<u64>>,
    residual_conflicts: usize,
}

impl LdpcCode {
    pub fn build(n: usize, dv: usize, dc: usize, seed: u64) -> Result<Self> {
        if n == 0 || dv == 0 || dc < 2 {
            return Err(Error::InvalidParameter(format!(
                "need n >= 1, dv >= 1, dc >= 2 (got n={n}, dv={dv}, dc={dc})"
            )));
        }
        if (n * dv) % dc != 0 {
            return Err(Error::InvalidParameter(format!(
                "n*dv = {} is not divisible by dc = {dc}",
                n * dv
            )));
        }
        let m = n * dv / dc;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        // socket s belongs to variable s / dv and is attached to check assign[s]
        let mut assign: Vec<usize> = (0..m).flat_map(|c| std::iter::repeat(c).take(dc)).collect();
        assign.shuffle(&mut rng);

        let mut residual = 0;
        for round in 0..=REPAIR_ROUNDS {
            let bad = conflicting_sockets(&assign, n, m, dv);
            residual = bad.len();
            if round == REPAIR_ROUNDS {
                break;
            }
            if bad.is_empty() {
                // A disconnected graph loses one unit of rank per extra
                // component, so join components before accepting.
                match split_sockets(&assign, n, m, dv) {
                    Some((s, t)) => assign.swap(s, t),
                    None => break,
                }
                continue;
            }
            for s in bad {
                let t = rng.gen_range(0..assign.len());
                assign.swap(s, t);
            }
        }

        let mut check_vars: Vec<Vec<u32>> = vec![Vec::with_capacity(dc); m];
        for (s, &c) in assign.iter().enumerate() {
            check_vars[c].push((s / dv) as u32);
        }
        let edge_var: Vec<u32> = check_vars.into_iter().flatten().collect();
        let mut var_edges = vec![0u32; n * dv];
        let mut fill = vec![0usize; n];
        for (e, &v) in edge_var.iter().enumerate() {
            let v = v as usize;
            var_edges[v * dv + fill[v]] = e as u32;
            fill[v] += 1;
        }

        let mut code = LdpcCode {
            n,
            m,
            dv,
            dc,
            seed,
            edge_var,
            var_edges,
            rank: 0,
            info_positions: Vec::new(),
            parity_positions: Vec::new(),
            parity_rules: Vec::new(),
            residual_conflicts: residual,
        };
        code.derive_encoder()?;
        Ok(code)
    }

    fn derive_encoder(&mut self) -> Result<()> {
        let words = self.n.div_ceil(64);
        let mut rows = self.dense_rows();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..self.n {
            let (w, bit) = (col / 64, 1u64 << (col % 64));
            let Some(r) = (rank..self.m).find(|&r| rows[r][w] & bit != 0) else {
                continue;
            };
            rows.swap(rank, r);
            let pivot = rows[rank].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && row[w] & bit != 0 {
                    row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
                }
            }
            pivots.push(col);
            rank += 1;
            if rank == self.m {
                break;
            }
        }
        let mut is_pivot = vec![false; self.n];
        pivots.iter().for_each(|&p| is_pivot[p] = true);
        let info: Vec<usize> = (0..self.n).filter(|&c| !is_pivot[c]).collect();
        if info.is_empty() {
            return Err(Error::InvalidParameter("code has no information bits (k = 0)".into()));
        }
        let info_words = info.len().div_ceil(64);
        let rules = pivots
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let mut rule = vec![0u64; info_words];
                for (j, &col) in info.iter().enumerate() {
                    if rows[i][col / 64] >> (col % 64) & 1 == 1 {
                        rule[j / 64] |= 1 << (j % 64);
                    }
                }
                rule
            })
            .collect();
        debug_assert_eq!(rows[0].len(), words);
        self.rank = rank;
        self.info_positions = info;
        self.parity_positions = pivots;
        self.parity_rules = rules;
        Ok(())
    }

    /// Parity-check matrix as GF(2) bitset rows (parallel edges cancel).
    pub fn dense_rows(&self) -> Vec<Vec<u64>> {
        let words = self.n.div_ceil(64);
        (0..self.m)
            .map(|c| {
                let mut row = vec![0u64; words];
                for &v in self.check(c) {
                    row[v as usize / 64] ^= 1 << (v % 64);
                }
                row
            })
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.n - self.rank
    }

    pub fn num_checks(&self) -> usize {
        self.m
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn variable_degree(&self) -> usize {
        self.dv
    }

    pub fn check_degree(&self) -> usize {
        self.dc
    }

    /// Parallel edges plus 4-cycle endpoints left after the repair budget ran out.
    pub fn residual_conflicts(&self) -> usize {
        self.residual_conflicts
    }

    /// Variables attached to check `c`.
    pub fn check(&self, c: usize) -> &[u32] {
        &self.edge_var[c * self.dc..(c + 1) * self.dc]
    }

    /// Checks attached to variable `v`.
    pub fn var_checks(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.var_edges[v * self.dv..(v + 1) * self.dv]
            .iter()
            .map(move |&e| e as usize / self.dc)
    }

    /// Codeword positions that carry the information bits, in info order.
    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == self.n
            && (0..self.m).all(|c| self.check(c).iter().fold(0u8, |acc, &v| acc ^ word[v as usize]) == 0)
    }

    pub fn encode(&self, info: &BitSeq) -> Result<BitSeq> {
        check_len("LDPC encode", info.len(), self.k())?;
        let mut word = vec![0u8; self.n];
        self.encode_into(info, &mut word);
        Ok(BitSeq::from_vec_unchecked(word))
    }

    pub(crate) fn encode_into(&self, info: &[u8], word: &mut [u8]) {
        let mut packed = vec![0u64; self.k().div_ceil(64)];
        for (j, (&b, &pos)) in info.iter().zip(&self.info_positions).enumerate() {
            packed[j / 64] |= u64::from(b) << (j % 64);
            word[pos] = b;
        }
        for (rule, &pos) in self.parity_rules.iter().zip(&self.parity_positions) {
            let ones: u32 = rule.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
            word[pos] = (ones & 1) as u8;
        }
    }

    /// Runs `local_iters` flooding sum-product iterations from a cold start.
    ///
    /// Returns the a-posteriori LLRs and `posterior - apriori`.
    pub fn decode(
        &self,
        channel_llr: &LlrSeq,
        apriori_llr: &LlrSeq,
        local_iters: usize,
    ) -> Result<(LlrSeq, LlrSeq)> {
        check_len("channel LLR", channel_llr.len(), self.n)?;
        check_len("a-priori LLR", apriori_llr.len(), self.n)?;
        let mut dec = BlockDecoder::new(self);
        let mut post = vec![0.0; self.n];
        dec.run(channel_llr, apriori_llr, local_iters, &mut post);
        let ext = post
            .iter()
            .zip(apriori_llr.iter())
            .map(|(p, a)| p - clip_llr(*a))
            .collect();
        Ok((LlrSeq::from_vec_unchecked(post), LlrSeq::from_vec_unchecked(ext)))
    }

    /// Writes the parity-check matrix in ALIST format.
    pub fn to_alist(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n, self.m);
        let _ = writeln!(s, "{} {}", self.dv, self.dc);
        let _ = writeln!(s, "{}", vec![self.dv.to_string(); self.n].join(" "));
        let _ = writeln!(s, "{}", vec![self.dc.to_string(); self.m].join(" "));
        for v in 0..self.n {
            let row: Vec<String> = self.var_checks(v).map(|c| (c + 1).to_string()).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        for c in 0..self.m {
            let row: Vec<String> = self.check(c).iter().map(|v| (v + 1).to_string()).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn write_alist(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_alist()).map_err(|e| Error::io(path, e))
    }
}

/// Parses the check lists of an ALIST file: returns `(n, rows)` with 0-based variable indices.
pub fn parse_alist(text: &str) -> Result<(usize, Vec<Vec<usize>>)> {
    let bad = |what: &str| Error::InvalidInput(format!("malformed ALIST: {what}"));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let nums = |l: Option<&str>| -> Result<Vec<usize>> {
        l.ok_or_else(|| bad("truncated"))?
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| bad("non-numeric token")))
            .collect()
    };
    let header = nums(lines.next())?;
    let [n, m] = header[..] else { return Err(bad("header")) };
    nums(lines.next())?;
    nums(lines.next())?;
    nums(lines.next())?;
    for _ in 0..n {
        nums(lines.next())?;
    }
    let rows = (0..m)
        .map(|_| {
            nums(lines.next())?
                .into_iter()
                .filter(|&v| v > 0)
                .map(|v| if v <= n { Ok(v - 1) } else { Err(bad("index out of range")) })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((n, rows))
}

/// Sockets that take part in a parallel edge or a 4-cycle (one socket per offending pair).
/// One socket from the first component and one from another, or `None` when
/// the Tanner graph is connected.
fn split_sockets(assign: &[usize], n: usize, m: usize, dv: usize) -> Option<(usize, usize)> {
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    // nodes 0..n are variables, n..n+m are checks
    let mut parent: Vec<usize> = (0..n + m).collect();
    for (s, &c) in assign.iter().enumerate() {
        let (a, b) = (find(&mut parent, s / dv), find(&mut parent, n + c));
        parent[a] = b;
    }
    let root = find(&mut parent, 0);
    let other = (0..assign.len()).find(|&s| find(&mut parent, s / dv) != root)?;
    let first = (0..assign.len()).rev().find(|&s| find(&mut parent, s / dv) == root)?;
    Some((first, other))
}

fn conflicting_sockets(assign: &[usize], n: usize, m: usize, dv: usize) -> Vec<usize> {
    let mut check_vars: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (s, &c) in assign.iter().enumerate() {
        check_vars[c].push(s / dv);
    }
    let mut bad = Vec::new();
    let mut seen_with = vec![usize::MAX; n];
    let mut first_socket = vec![0usize; n];
    for v in 0..n {
        let sockets = v * dv..(v + 1) * dv;
        for s in sockets.clone() {
            if sockets.clone().any(|t| t < s && assign[t] == assign[s]) {
                bad.push(s);
            }
        }
        for s in sockets {
            for &u in &check_vars[assign[s]] {
                if u <= v {
                    continue;
                }
                if seen_with[u] == v {
                    if assign[first_socket[u]] != assign[s] {
                        bad.push(s);
                    }
                } else {
                    seen_with[u] = v;
                    first_socket[u] = s;
                }
            }
        }
    }
    bad.sort_unstable();
    bad.dedup();
    bad
}

/// Sum-product decoder state for one block: the check-to-variable messages.
///
/// Messages persist across [`BlockDecoder::run`] calls, so repeated calls with
/// updated a-priori LLRs continue belief propagation instead of restarting it.
#[derive(Debug, Clone)]
pub struct BlockDecoder<'a> {
    code: &'a LdpcCode,
    c2v: Vec<f64>,
    q: Vec<f64>,
}

impl<'a> BlockDecoder<'a> {
    pub fn new(code: &'a LdpcCode) -> Self {
        BlockDecoder { code, c2v: vec![0.0; code.edge_var.len()], q: vec![0.0; code.dc] }
    }

    pub fn reset(&mut self) {
        self.c2v.fill(0.0);
    }

    /// Check-to-variable messages, one per edge in check-major order.
    pub fn messages(&self) -> &[f64] {
        &self.c2v
    }

    /// Sum of incoming check messages at variable `v`.
    pub fn incoming_sum(&self, v: usize) -> f64 {
        let dv = self.code.dv;
        self.code.var_edges[v * dv..(v + 1) * dv].iter().map(|&e| self.c2v[e as usize]).sum()
    }

    /// Runs `iters` flooding iterations and writes the posterior into `posterior`.
    ///
    /// Inputs are clipped to `L_MAX`; slices must all have length `n`.
    pub fn run(&mut self, channel: &[f64], apriori: &[f64], iters: usize, posterior: &mut [f64]) {
        let code = self.code;
        let (n, dc) = (code.n, code.dc);
        assert!(channel.len() == n && apriori.len() == n && posterior.len() == n);
        let tmax = tanh_clip();
        let totals = |c2v: &[f64], out: &mut [f64]| {
            for v in 0..n {
                let incoming: f64 =
                    code.var_edges[v * code.dv..(v + 1) * code.dv].iter().map(|&e| c2v[e as usize]).sum();
                out[v] = clip_llr(channel[v]) + clip_llr(apriori[v]) + incoming;
            }
        };
        totals(&self.c2v, posterior);
        for _ in 0..iters {
            for c in 0..code.m {
                let edges = c * dc..(c + 1) * dc;
                for (i, e) in edges.clone().enumerate() {
                    let v = code.edge_var[e] as usize;
                    self.q[i] = (clip_llr(posterior[v] - self.c2v[e]) / 2.0).tanh();
                }
                // leave-one-out products from a forward and a backward pass
                let mut fwd = 1.0;
                for (i, e) in edges.clone().enumerate() {
                    self.c2v[e] = fwd;
                    fwd *= self.q[i];
                }
                let mut bwd = 1.0;
                for (i, e) in edges.enumerate().rev() {
                    let p = self.c2v[e] * bwd;
                    self.c2v[e] = 2.0 * p.clamp(-tmax, tmax).atanh();
                    bwd *= self.q[i];
                }
            }
            totals(&self.c2v, posterior);
        }
    }
}
