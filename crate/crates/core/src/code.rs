//! Systematic streaming code constructions.
//!
//! Every family here emits channel packets `x[t] = (s[t], p[t])`: the source
//! packet of `k` sub-symbols rides in the clear and `r` parity sub-symbols are
//! a causal linear combination of the last `T` source packets. The families
//! differ only in which lags carry nonzero parity blocks:
//!
//! * `rlc` — random parity blocks on every lag 0..=T; maximizes the number of
//!   arbitrary erasures correctable within the decoding window.
//! * `maxspan` — the source is split into an urgent group of B sub-symbols and
//!   a deferred group of T-B; parity is the deferred-group combination plus a
//!   T-step-old copy of the urgent group. Maximizes correctable burst length.
//! * `erlc` — the embedded family interpolating between the two: the urgent
//!   group's parity is formed over lags 0..=T-delta and then transmitted
//!   `delta` slots late, so one parameter trades burst span against isolated
//!   erasure correction.
//!
//! All randomness is drawn through per-matrix seeds derived from one code
//! seed, so a `(family, parameters, seed, m)` tuple reconstructs the exact
//! same code on any platform.

use num::integer::gcd;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gf::{Fe, Field, GfError, Matrix};
use crate::seeds;

/// Default seed used when a code string does not pin one.
pub const DEFAULT_CODE_SEED: u64 = 0x00C0_FFEE;

/// Maximum constructor attempts when distance verification rejects a draw.
const MAX_RLC_RESAMPLES: usize = 8;

/// Largest delay at which `build_rlc` verifies its distance exhaustively.
const RLC_VERIFY_MAX_DELAY: usize = 12;

/// Errors from construction, encoding, and code-string parsing.
#[derive(Debug, Error)]
pub enum CodeError {
    #[error("invalid code parameters: {0}")]
    InvalidParams(&'static str),
    #[error("random code failed distance verification {0} times; inspect the seed")]
    DistanceVerification(usize),
    #[error("history gap: encoder needs the packet at time {0}")]
    HistoryGap(u64),
    #[error("wrong sub-symbol count: expected {expected}, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("cannot parse code '{input}': {reason}")]
    Parse { input: String, reason: String },
    #[error(transparent)]
    Field(#[from] GfError),
}

/// One source packet: `k` sub-symbols entering the encoder at `time`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourcePacket {
    pub time: u64,
    pub subs: Vec<Fe>,
}

/// One channel packet: the systematic copy of the source plus parity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelPacket {
    pub time: u64,
    pub source: Vec<Fe>,
    pub parity: Vec<Fe>,
}

/// Family-specific construction data.
#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// Two-group embedded construction; `maxspan` is the delta = T endpoint
    /// with the urgent-group combiner forced to identity.
    Embedded {
        u: usize,
        v: usize,
        delta: usize,
        repetition: bool,
    },
    Rlc { k: usize, r: usize },
}

/// A fully built code: parameters plus the lag-indexed parity blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    kind: Kind,
    delay: usize,
    field: Field,
    seed: u64,
    /// `blocks[j]` is the k x r parity contribution of the source packet
    /// `j` slots in the past; length `delay + 1`.
    blocks: Vec<Matrix>,
    /// Lags whose block is nonzero, ascending; everything else is skipped.
    active_lags: Vec<usize>,
}

impl CodeSpec {
    /// Source sub-symbols per packet.
    pub fn k(&self) -> usize {
        match self.kind {
            Kind::Embedded { u, v, .. } => u + v,
            Kind::Rlc { k, .. } => k,
        }
    }

    /// Parity sub-symbols per packet.
    pub fn r(&self) -> usize {
        match self.kind {
            Kind::Embedded { u, .. } => u,
            Kind::Rlc { r, .. } => r,
        }
    }

    /// Channel sub-symbols per packet.
    pub fn n(&self) -> usize {
        self.k() + self.r()
    }

    /// Decoding delay T: each source packet must be reproduced within T slots.
    pub fn delay(&self) -> usize {
        self.delay
    }

    /// Highest lag with a (potentially) nonzero parity block.
    pub fn memory(&self) -> usize {
        self.delay
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Rate k/n in lowest terms.
    pub fn rate(&self) -> (usize, usize) {
        let g = gcd(self.k(), self.n());
        (self.k() / g, self.n() / g)
    }

    /// Urgent-group width, for the embedded families.
    pub fn u(&self) -> Option<usize> {
        match self.kind {
            Kind::Embedded { u, .. } => Some(u),
            Kind::Rlc { .. } => None,
        }
    }

    /// Deferred-group width, for the embedded families.
    pub fn v(&self) -> Option<usize> {
        match self.kind {
            Kind::Embedded { v, .. } => Some(v),
            Kind::Rlc { .. } => None,
        }
    }

    /// Parity shift, for the embedded families.
    pub fn delta(&self) -> Option<usize> {
        match self.kind {
            Kind::Embedded { delta, .. } => Some(delta),
            Kind::Rlc { .. } => None,
        }
    }

    /// "erlc", "maxspan", or "rlc".
    pub fn family_tag(&self) -> &'static str {
        match self.kind {
            Kind::Embedded {
                repetition: true, ..
            } => "maxspan",
            Kind::Embedded { .. } => "erlc",
            Kind::Rlc { .. } => "rlc",
        }
    }

    /// Parity block at `lag`; zero beyond the memory.
    pub fn parity_block(&self, lag: usize) -> Option<&Matrix> {
        self.blocks.get(lag)
    }

    /// Lags with a nonzero parity block, ascending.
    pub fn active_lags(&self) -> &[usize] {
        &self.active_lags
    }

    /// Splits a source packet into (urgent, deferred) views. The deferred view
    /// is empty for `rlc` codes and for v = 0.
    pub fn split_source<'a>(&self, subs: &'a [Fe]) -> (&'a [Fe], &'a [Fe]) {
        match self.kind {
            Kind::Embedded { u, .. } => subs.split_at(u),
            Kind::Rlc { .. } => (subs, &subs[0..0]),
        }
    }

    /// Canonical one-line form, `family:key=value,...`; round-trips through
    /// [`parse_code`] including field width and seed.
    pub fn spec_string(&self) -> String {
        let m = self.field.m();
        let seed = self.seed;
        match self.kind {
            Kind::Embedded {
                u,
                v,
                delta,
                repetition,
            } => {
                if repetition {
                    format!("maxspan:B={u},T={},seed={seed},m={m}", self.delay)
                } else {
                    format!(
                        "erlc:u={u},v={v},delta={delta},T={},seed={seed},m={m}",
                        self.delay
                    )
                }
            }
            Kind::Rlc { k, r } => format!(
                "rlc:k={k},n={},T={},seed={seed},m={m}",
                k + r,
                self.delay
            ),
        }
    }
}

fn assemble(
    kind: Kind,
    delay: usize,
    field: Field,
    seed: u64,
    blocks: Vec<Matrix>,
) -> CodeSpec {
    let active_lags = blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.is_zero())
        .map(|(j, _)| j)
        .collect();
    CodeSpec {
        kind,
        delay,
        field,
        seed,
        blocks,
        active_lags,
    }
}

/// Shared assembly for the embedded two-group family; `force_identity`
/// replaces the lag-0 urgent combiner with I (the repetition endpoint).
fn build_embedded(
    u: usize,
    v: usize,
    delta: usize,
    delay: usize,
    field: &Field,
    seed: u64,
    force_identity: bool,
) -> Result<CodeSpec, CodeError> {
    if u < 1 {
        return Err(CodeError::InvalidParams("u must be at least 1"));
    }
    if delay < 1 {
        return Err(CodeError::InvalidParams("delay T must be at least 1"));
    }
    if delta > delay {
        return Err(CodeError::InvalidParams("delta must satisfy 0 <= delta <= T"));
    }
    let k = u + v;
    let r = u;
    let mut blocks = vec![Matrix::zeros(k, r); delay + 1];
    // Deferred-group combination over lags 1..=T-1.
    for j in 1..delay {
        let g = field.seeded_random_matrix(v, u, seeds::derive(seed, "erlc-g", &[j as u64]));
        for row in 0..v {
            blocks[j].row_mut(u + row).copy_from_slice(g.row(row));
        }
    }
    // Urgent-group combination over lags 0..=T-delta, transmitted delta late.
    for l in 0..=delay - delta {
        let h = if l == 0 && force_identity {
            Matrix::identity(u)
        } else {
            field.seeded_random_matrix(u, u, seeds::derive(seed, "erlc-h", &[l as u64]))
        };
        for row in 0..u {
            let dst = blocks[delta + l].row_mut(row);
            for (d, &s) in dst.iter_mut().zip(h.row(row)) {
                *d ^= s;
            }
        }
    }
    Ok(assemble(
        Kind::Embedded {
            u,
            v,
            delta,
            repetition: force_identity,
        },
        delay,
        field.clone(),
        seed,
        blocks,
    ))
}

/// Embedded two-group code with urgent width `u`, deferred width `v`, parity
/// shift `delta`, and delay `T`. Rate (u+v)/(2u+v).
pub fn build_erlc(
    u: usize,
    v: usize,
    delta: usize,
    delay: usize,
    field: &Field,
    seed: u64,
) -> Result<CodeSpec, CodeError> {
    build_embedded(u, v, delta, delay, field, seed, false)
}

/// Maximum-span layout: urgent width `B`, deferred width `T - B`, shift T,
/// urgent combiner pinned to identity (a T-slot-late copy). Rate T/(T+B).
pub fn build_maxspan(
    b: usize,
    delay: usize,
    field: &Field,
    seed: u64,
) -> Result<CodeSpec, CodeError> {
    if b > delay {
        return Err(CodeError::InvalidParams("B must satisfy 1 <= B <= T"));
    }
    build_embedded(b, delay - b, delay, delay, field, seed, true)
}

/// Random linear convolutional code (k, n) with memory T: every lag carries a
/// fresh random k x (n-k) parity block. For small delays the constructor
/// verifies the delay-constrained distance exhaustively and redraws on the
/// (rare) bad sample; beyond that the distance holds with probability
/// 1 - O(1/q) per draw and is left to the analyzers.
pub fn build_rlc(
    k: usize,
    n: usize,
    delay: usize,
    field: &Field,
    seed: u64,
) -> Result<CodeSpec, CodeError> {
    if k < 1 || n <= k {
        return Err(CodeError::InvalidParams("rlc needs n > k >= 1"));
    }
    if delay < 1 {
        return Err(CodeError::InvalidParams("delay T must be at least 1"));
    }
    let r = n - k;
    // Distance target: the delay-constrained analog of the Singleton bound,
    // met with equality by random draws over a large field.
    let target = 1 + r * (delay + 1) / n;
    for attempt in 0..=MAX_RLC_RESAMPLES {
        let blocks: Vec<Matrix> = (0..=delay)
            .map(|j| {
                field.seeded_random_matrix(
                    k,
                    r,
                    seeds::derive(seed, "rlc-q", &[attempt as u64, j as u64]),
                )
            })
            .collect();
        let spec = assemble(Kind::Rlc { k, r }, delay, field.clone(), seed, blocks);
        if delay > RLC_VERIFY_MAX_DELAY {
            return Ok(spec);
        }
        if crate::metrics::column_distance_oracle(&spec, target) == Some(target) {
            return Ok(spec);
        }
    }
    Err(CodeError::DistanceVerification(MAX_RLC_RESAMPLES + 1))
}

/// Parity for time `time` given a way to fetch any source packet's
/// sub-symbols. `fetch` is called only for in-range times; times before 0
/// contribute zero by construction.
pub(crate) fn parity_with(
    spec: &CodeSpec,
    time: u64,
    mut fetch: impl FnMut(u64) -> Vec<Fe>,
) -> Vec<Fe> {
    let field = &spec.field;
    let mut parity = vec![0 as Fe; spec.r()];
    for &lag in &spec.active_lags {
        if (lag as u64) > time {
            continue;
        }
        let subs = fetch(time - lag as u64);
        debug_assert_eq!(subs.len(), spec.k());
        let block = &spec.blocks[lag];
        for (i, &s) in subs.iter().enumerate() {
            if s != 0 {
                field.axpy(&mut parity, block.row(i), s);
            }
        }
    }
    parity
}

/// Encodes one packet. `history` must hold the source packets for times
/// `max(0, i - T) ..= i - 1` in ascending order (later packets than needed may
/// be omitted from the front; times before 0 are implicitly zero).
pub fn encode(
    spec: &CodeSpec,
    history: &[SourcePacket],
    current: &SourcePacket,
) -> Result<ChannelPacket, CodeError> {
    let k = spec.k();
    if current.subs.len() != k {
        return Err(CodeError::WrongArity {
            expected: k,
            got: current.subs.len(),
        });
    }
    let t = current.time;
    let oldest = t.saturating_sub(spec.memory() as u64);
    // Index the needed suffix of history by time and validate contiguity.
    let needed = (t - oldest) as usize;
    if history.len() < needed {
        let missing = oldest + history.len() as u64;
        return Err(CodeError::HistoryGap(missing));
    }
    let tail = &history[history.len() - needed..];
    for (slot, p) in tail.iter().enumerate() {
        let expect = oldest + slot as u64;
        if p.time != expect {
            return Err(CodeError::HistoryGap(expect));
        }
        if p.subs.len() != k {
            return Err(CodeError::WrongArity {
                expected: k,
                got: p.subs.len(),
            });
        }
    }
    let parity = parity_with(spec, t, |tau| {
        if tau == t {
            current.subs.clone()
        } else {
            tail[(tau - oldest) as usize].subs.clone()
        }
    });
    Ok(ChannelPacket {
        time: t,
        source: current.subs.clone(),
        parity,
    })
}

/// Stateful convenience encoder that keeps its own sliding history.
pub struct StreamEncoder {
    spec: CodeSpec,
    history: std::collections::VecDeque<SourcePacket>,
    next_time: u64,
}

impl StreamEncoder {
    pub fn new(spec: CodeSpec) -> StreamEncoder {
        StreamEncoder {
            spec,
            history: std::collections::VecDeque::new(),
            next_time: 0,
        }
    }

    pub fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    /// Encodes the next packet in stream order.
    pub fn push(&mut self, subs: Vec<Fe>) -> Result<ChannelPacket, CodeError> {
        let current = SourcePacket {
            time: self.next_time,
            subs,
        };
        let hist: Vec<SourcePacket> = self.history.iter().cloned().collect();
        let packet = encode(&self.spec, &hist, &current)?;
        self.history.push_back(current);
        while self.history.len() > self.spec.memory() {
            self.history.pop_front();
        }
        self.next_time += 1;
        Ok(packet)
    }
}

/// Generator matrix of the code truncated to `horizon + 1` packet slots:
/// block row j, block column t carries the lag-(t-j) map from source packet j
/// to channel packet t. Block-upper-triangular with identity on the
/// systematic columns of the diagonal.
pub fn truncated_generator(spec: &CodeSpec, horizon: usize) -> Matrix {
    let (k, n) = (spec.k(), spec.n());
    let slots = horizon + 1;
    let mut g = Matrix::zeros(k * slots, n * slots);
    for t in 0..slots {
        for row in 0..k {
            g.set(t * k + row, t * n + row, 1);
        }
        for &lag in spec.active_lags() {
            if lag > t {
                break;
            }
            let j = t - lag;
            let block = &spec.blocks[lag];
            for row in 0..k {
                for col in 0..spec.r() {
                    let val = block.get(row, col);
                    if val != 0 {
                        g.set(j * k + row, t * n + k + col, val);
                    }
                }
            }
        }
    }
    g
}

/// Deterministic random-access source stream: packet `t` is a pure function
/// of (seed, t), so shards and lazy encoders can fetch history in any order.
pub struct SourceStream {
    field: Field,
    k: usize,
    rng: ChaCha8Rng,
}

impl SourceStream {
    pub fn new(field: Field, k: usize, seed: u64) -> SourceStream {
        SourceStream {
            field,
            k,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The k sub-symbols of source packet `t`.
    pub fn packet(&mut self, t: u64) -> Vec<Fe> {
        self.rng.set_word_pos(t as u128 * self.k as u128);
        (0..self.k)
            .map(|_| self.field.random_element(&mut self.rng))
            .collect()
    }
}

/// A code selection for simulation: either a real code or the uncoded
/// passthrough baseline (loss rate = channel erasure rate).
#[derive(Debug, Clone, PartialEq)]
pub enum CodeChoice {
    Uncoded,
    Coded(Box<CodeSpec>),
}

impl CodeChoice {
    pub fn spec_string(&self) -> String {
        match self {
            CodeChoice::Uncoded => "uncoded".into(),
            CodeChoice::Coded(s) => s.spec_string(),
        }
    }

    pub fn family_tag(&self) -> &'static str {
        match self {
            CodeChoice::Uncoded => "uncoded",
            CodeChoice::Coded(s) => s.family_tag(),
        }
    }
}

fn parse_kv<'a>(
    input: &str,
    body: &'a str,
    allowed: &[&str],
) -> Result<Vec<(&'a str, u64)>, CodeError> {
    let mut out = Vec::new();
    for part in body.split(',') {
        let Some((key, val)) = part.split_once('=') else {
            return Err(CodeError::Parse {
                input: input.into(),
                reason: format!("expected key=value, got '{part}'"),
            });
        };
        if !allowed.contains(&key) {
            return Err(CodeError::Parse {
                input: input.into(),
                reason: format!("unknown key '{key}'"),
            });
        }
        if out.iter().any(|&(k, _)| k == key) {
            return Err(CodeError::Parse {
                input: input.into(),
                reason: format!("duplicate key '{key}'"),
            });
        }
        let v: u64 = val.parse().map_err(|_| CodeError::Parse {
            input: input.into(),
            reason: format!("bad integer '{val}'"),
        })?;
        out.push((key, v));
    }
    Ok(out)
}

fn take(kv: &[(&str, u64)], key: &str) -> Option<u64> {
    kv.iter().find(|&&(k, _)| k == key).map(|&(_, v)| v)
}

fn require(input: &str, kv: &[(&str, u64)], key: &str) -> Result<u64, CodeError> {
    take(kv, key).ok_or_else(|| CodeError::Parse {
        input: input.into(),
        reason: format!("missing key '{key}'"),
    })
}

/// Parses the code grammar:
/// `erlc:u=..,v=..,delta=..,T=..`, `maxspan:B=..,T=..`, `rlc:k=..,n=..,T=..`
/// (each optionally with `seed=..` and `m=..`), or `uncoded`.
pub fn parse_code(
    input: &str,
    default_field_m: u32,
    default_seed: u64,
) -> Result<CodeChoice, CodeError> {
    if input == "uncoded" {
        return Ok(CodeChoice::Uncoded);
    }
    let Some((family, body)) = input.split_once(':') else {
        return Err(CodeError::Parse {
            input: input.into(),
            reason: "expected 'family:key=value,...' or 'uncoded'".into(),
        });
    };
    let spec = match family {
        "erlc" => {
            let kv = parse_kv(input, body, &["u", "v", "delta", "T", "seed", "m"])?;
            let field = Field::new(take(&kv, "m").map_or(default_field_m, |m| m as u32))?;
            build_erlc(
                require(input, &kv, "u")? as usize,
                require(input, &kv, "v")? as usize,
                require(input, &kv, "delta")? as usize,
                require(input, &kv, "T")? as usize,
                &field,
                take(&kv, "seed").unwrap_or(default_seed),
            )?
        }
        "maxspan" => {
            let kv = parse_kv(input, body, &["B", "T", "seed", "m"])?;
            let field = Field::new(take(&kv, "m").map_or(default_field_m, |m| m as u32))?;
            build_maxspan(
                require(input, &kv, "B")? as usize,
                require(input, &kv, "T")? as usize,
                &field,
                take(&kv, "seed").unwrap_or(default_seed),
            )?
        }
        "rlc" => {
            let kv = parse_kv(input, body, &["k", "n", "T", "seed", "m"])?;
            let field = Field::new(take(&kv, "m").map_or(default_field_m, |m| m as u32))?;
            build_rlc(
                require(input, &kv, "k")? as usize,
                require(input, &kv, "n")? as usize,
                require(input, &kv, "T")? as usize,
                &field,
                take(&kv, "seed").unwrap_or(default_seed),
            )?
        }
        other => {
            return Err(CodeError::Parse {
                input: input.into(),
                reason: format!("unknown family '{other}'"),
            })
        }
    };
    Ok(CodeChoice::Coded(Box::new(spec)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f16() -> Field {
        Field::new(16).unwrap()
    }

    fn random_stream(spec: &CodeSpec, len: usize, seed: u64) -> Vec<Vec<Fe>> {
        let mut src = SourceStream::new(spec.field().clone(), spec.k(), seed);
        (0..len as u64).map(|t| src.packet(t)).collect()
    }

    #[test]
    fn rates_match_the_family_formulas() {
        let f = f16();
        assert_eq!(build_erlc(11, 1, 10, 12, &f, 1).unwrap().rate(), (12, 23));
        assert_eq!(build_maxspan(11, 12, &f, 1).unwrap().rate(), (12, 23));
        assert_eq!(build_rlc(12, 23, 12, &f, 1).unwrap().rate(), (12, 23));
        // v = 0 collapses to rate 1/2 regardless of u.
        assert_eq!(build_erlc(3, 0, 4, 6, &f, 1).unwrap().rate(), (1, 2));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let f = f16();
        assert!(build_erlc(0, 1, 2, 4, &f, 1).is_err());
        assert!(build_erlc(1, 1, 5, 4, &f, 1).is_err());
        assert!(build_maxspan(5, 4, &f, 1).is_err());
        assert!(build_rlc(3, 3, 4, &f, 1).is_err());
        assert!(build_rlc(3, 2, 4, &f, 1).is_err());
    }

    #[test]
    fn zero_source_encodes_to_zero_parity() {
        let f = f16();
        let spec = build_erlc(2, 1, 3, 5, &f, 7).unwrap();
        let mut enc = StreamEncoder::new(spec.clone());
        for _ in 0..10 {
            let p = enc.push(vec![0; spec.k()]).unwrap();
            assert!(p.parity.iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn maxspan_equals_embedded_with_identity_urgent_combiner() {
        let f = f16();
        let (b, t, seed) = (4, 6, 99);
        let ms = build_maxspan(b, t, &f, seed).unwrap();
        let er = build_embedded(b, t - b, t, t, &f, seed, true).unwrap();
        assert_eq!(ms.blocks, er.blocks);
        // And it differs from the plain draw only in the lag-T urgent block.
        let plain = build_erlc(b, t - b, t, t, &f, seed).unwrap();
        assert_eq!(ms.blocks[1..t], plain.blocks[1..t]);
        assert_ne!(ms.blocks[t], plain.blocks[t]);
    }

    #[test]
    fn repetition_endpoint_copies_the_urgent_group_t_slots_late() {
        let f = f16();
        let t = 5;
        let spec = build_maxspan(t, t, &f, 3).unwrap(); // v = 0: pure repetition
        let stream = random_stream(&spec, 12, 8);
        let mut enc = StreamEncoder::new(spec.clone());
        for (i, subs) in stream.iter().enumerate() {
            let pkt = enc.push(subs.clone()).unwrap();
            if i >= t {
                assert_eq!(pkt.parity, stream[i - t]);
            } else {
                assert!(pkt.parity.iter().all(|&x| x == 0));
            }
        }
    }

    #[test]
    fn encode_matches_the_truncated_generator() {
        let f = f16();
        for spec in [
            build_erlc(2, 1, 3, 4, &f, 5).unwrap(),
            build_maxspan(2, 4, &f, 5).unwrap(),
            build_rlc(2, 3, 4, &f, 5).unwrap(),
        ] {
            let horizon = spec.delay();
            let g = truncated_generator(&spec, horizon);
            let stream = random_stream(&spec, horizon + 1, 42);
            let flat: Vec<Fe> = stream.concat();
            let channel = spec.field().vec_mat(&flat, &g);
            let mut enc = StreamEncoder::new(spec.clone());
            for (t, subs) in stream.iter().enumerate() {
                let pkt = enc.push(subs.clone()).unwrap();
                let n = spec.n();
                assert_eq!(&channel[t * n..t * n + spec.k()], pkt.source.as_slice());
                assert_eq!(&channel[t * n + spec.k()..(t + 1) * n], pkt.parity.as_slice());
            }
        }
    }

    #[test]
    fn history_contract_is_enforced() {
        let f = f16();
        let spec = build_erlc(1, 1, 2, 3, &f, 1).unwrap();
        let s = |time, val: Fe| SourcePacket {
            time,
            subs: vec![val, val],
        };
        // Gap: time 2 missing from history for a time-3 packet.
        let err = encode(&spec, &[s(0, 1), s(1, 2)], &s(3, 4)).unwrap_err();
        assert!(matches!(err, CodeError::HistoryGap(_)));
        // Wrong arity.
        let bad = SourcePacket {
            time: 0,
            subs: vec![1],
        };
        assert!(matches!(
            encode(&spec, &[], &bad),
            Err(CodeError::WrongArity { .. })
        ));
        // Extra old history beyond the memory is tolerated.
        let hist = vec![s(0, 1), s(1, 2), s(2, 3)];
        encode(&spec, &hist, &s(3, 4)).unwrap();
    }

    #[test]
    fn source_stream_is_random_access_and_deterministic() {
        let f = f16();
        let mut a = SourceStream::new(f.clone(), 3, 11);
        let mut b = SourceStream::new(f.clone(), 3, 11);
        let p9 = a.packet(9);
        let p5 = a.packet(5);
        assert_eq!(b.packet(5), p5);
        assert_eq!(b.packet(9), p9);
        assert_eq!(a.packet(5), p5);
        let mut c = SourceStream::new(f, 3, 12);
        assert_ne!(c.packet(5), p5);
    }

    #[test]
    fn spec_strings_round_trip() {
        let f = f16();
        let specs = [
            build_erlc(2, 1, 3, 5, &f, 77).unwrap(),
            build_maxspan(3, 5, &f, 77).unwrap(),
            build_rlc(2, 3, 5, &f, 77).unwrap(),
        ];
        for spec in specs {
            let s = spec.spec_string();
            let CodeChoice::Coded(back) = parse_code(&s, 16, 0).unwrap() else {
                panic!("parsed to uncoded");
            };
            assert_eq!(*back, spec, "round trip failed for {s}");
        }
        assert_eq!(parse_code("uncoded", 16, 0).unwrap(), CodeChoice::Uncoded);
    }

    #[test]
    fn parse_applies_defaults_and_rejects_junk() {
        let choice = parse_code("erlc:u=2,v=1,delta=3,T=5", 8, 123).unwrap();
        let CodeChoice::Coded(spec) = choice else {
            panic!()
        };
        assert_eq!(spec.seed(), 123);
        assert_eq!(spec.field().m(), 8);

        for bad in [
            "erlc:u=2",
            "erlc:u=2,v=1,delta=3,T=5,bogus=1",
            "erlc:u=2,u=2,v=1,delta=3,T=5",
            "blah:x=1",
            "erlc",
            "rlc:k=2,n=3,T=5,m=9",
        ] {
            assert!(parse_code(bad, 16, 0).is_err(), "accepted {bad}");
        }
    }
}
