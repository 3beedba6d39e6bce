//! Delay-constrained distance and span analyzers.
//!
//! Two quantities govern what a streaming code corrects within its decoding
//! window of T+1 packets: the *column distance* d_T (any d_T − 1 erasures
//! anywhere in the window are survivable) and the *column span* c_T (any
//! single erasure burst up to c_T − 1 is survivable). This module measures
//! both exactly by brute force over erasure patterns (`column_distance_oracle`,
//! `column_span_oracle`), evaluates the closed forms known for the embedded
//! family (`closed_form_cT`, `closed_form_dT` — the latter only in its
//! validity regime delta ≥ R(T+1)), and scores (c_T, d_T) pairs against the
//! rate tradeoff bound
//!
//! ```text
//! (R/(1−R))·c_T + d_T ≤ T + 1 + 1/(1−R)
//! ```
//!
//! which at R = 1/2 collapses to c_T + d_T ≤ T + 3. All bound arithmetic is
//! exact rational; nothing here is floating point except CSV rendering.

use itertools::Itertools;
use num::rational::Ratio;
use thiserror::Error;

use crate::code::CodeSpec;
use crate::elim::Eliminator;
use crate::fmt6;
use crate::gf::Matrix;

/// Unknown-count threshold above which `recoverable` switches from the
/// incremental sparse eliminator (fast for the many tiny probes of a distance
/// scan) to one dense split-rank elimination (fast for the few huge probes of
/// a long-delay span check, where sparse fill-in is ruinous).
const DENSE_UNKNOWNS: usize = 512;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("distance closed form needs delta >= R(T+1); use the oracle instead")]
    OutOfRegime,
    #[error("rate must be expressible as (u+v)/(2u+v), i.e. lie in [1/2, 1)")]
    UnsupportedRate,
}

/// True iff source packet 0 is uniquely determined by the deadline from the
/// unerased packets of the window. `pattern[t]` = erased, over positions
/// 0..=T (the deadline position is always T).
///
/// Each received packet pins its own source sub-symbols and contributes its
/// parity equations; erased packets' sub-symbols are the unknowns. Because
/// the system is linear, recoverability is a property of the coefficient
/// structure alone, so the elimination runs homogeneously (all constants 0)
/// and asks whether every position-0 unknown is forced.
pub fn recoverable(spec: &CodeSpec, pattern: &[bool]) -> bool {
    let delay = spec.delay();
    assert_eq!(pattern.len(), delay + 1, "pattern must cover positions 0..=T");
    if !pattern[0] {
        return true;
    }
    let k = spec.k();
    let r = spec.r();
    if pattern.iter().filter(|&&e| e).count() * k >= DENSE_UNKNOWNS {
        return recoverable_dense(spec, pattern);
    }
    let mut elim = Eliminator::new(spec.field().clone());
    for t in 0..=delay {
        if pattern[t] {
            continue;
        }
        let mut per_col: Vec<Vec<(u64, crate::gf::Fe)>> = vec![Vec::new(); r];
        for &lag in spec.active_lags() {
            if lag > t {
                break;
            }
            let tau = t - lag;
            if !pattern[tau] {
                continue;
            }
            let block = spec.parity_block(lag).unwrap();
            for i in 0..k {
                let var = (tau * k + i) as u64;
                for (p, &c) in block.row(i).iter().enumerate() {
                    if c != 0 {
                        per_col[p].push((var, c));
                    }
                }
            }
        }
        for terms in per_col {
            if !terms.is_empty() {
                elim.add_equation(terms, 0);
            }
        }
        if (0..k).all(|i| elim.is_resolved(i as u64)) {
            return true;
        }
    }
    (0..k).all(|i| elim.is_resolved(i as u64))
}

/// Dense equivalent of [`recoverable`]: one coefficient matrix, one
/// left-to-right elimination. Columns are ordered with every other erased
/// position's unknowns first and position 0's k unknowns last, so a single
/// pass yields rank(others) and rank(all) together; the position-0 symbols
/// are all forced exactly when their columns are independent modulo the span
/// of the others, i.e. when the trailing block contributes k fresh pivots.
fn recoverable_dense(spec: &CodeSpec, pattern: &[bool]) -> bool {
    if !pattern[0] {
        return true;
    }
    let delay = spec.delay();
    let k = spec.k();
    let r = spec.r();
    let mut col_of = vec![usize::MAX; delay + 1];
    let mut cols = 0;
    for t in 1..=delay {
        if pattern[t] {
            col_of[t] = cols;
            cols += k;
        }
    }
    let prefix = cols;
    col_of[0] = cols;
    cols += k;
    let touches_unknowns = |t: usize| {
        spec.active_lags()
            .iter()
            .take_while(|&&lag| lag <= t)
            .any(|&lag| pattern[t - lag])
    };
    let contributing: Vec<usize> = (0..=delay)
        .filter(|&t| !pattern[t] && touches_unknowns(t))
        .collect();
    let mut m = Matrix::zeros(contributing.len() * r, cols);
    for (slot, &t) in contributing.iter().enumerate() {
        for &lag in spec.active_lags() {
            if lag > t {
                break;
            }
            let tau = t - lag;
            if !pattern[tau] {
                continue;
            }
            let block = spec.parity_block(lag).unwrap();
            for p in 0..r {
                let row = m.row_mut(slot * r + p);
                for i in 0..k {
                    let c = block.get(i, p);
                    if c != 0 {
                        row[col_of[tau] + i] = c;
                    }
                }
            }
        }
    }
    let (others, total) = spec.field().column_ranks(&m, prefix);
    total - others == k
}

/// Confirms the column span equals `expected` with two probes instead of a
/// full scan: a burst of expected − 1 must be survivable and one of expected
/// must not. Erasing more packets never adds information, so burst
/// recoverability is monotone in length and the pair pins the value exactly —
/// this is what makes long-delay codes checkable, where each probe is a large
/// elimination and [`column_span_oracle`]'s search would repeat it many times.
pub fn column_span_verify(spec: &CodeSpec, expected: usize) -> bool {
    let delay = spec.delay();
    if expected < 1 || expected > delay + 1 {
        return false;
    }
    let survives = |b: usize| {
        let mut p = vec![false; delay + 1];
        p[..b].fill(true);
        recoverable(spec, &p)
    };
    survives(expected - 1) && !survives(expected)
}

/// Exact column span: 1 + the longest recoverable burst starting at position
/// 0. Erasing more can never help, so recoverability is monotone in the burst
/// length and a binary search over [1, T+1] finds the first failing length;
/// time invariance of the constructions makes bursts at position 0 exhaustive.
pub fn column_span_oracle(spec: &CodeSpec) -> usize {
    let delay = spec.delay();
    let fails = |b: usize| {
        let mut p = vec![false; delay + 1];
        p[..b].fill(true);
        !recoverable(spec, &p)
    };
    // The all-erased window always fails (no observations), so a failing
    // length exists in [1, T+1].
    let (mut lo, mut hi) = (1, delay + 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if fails(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    debug_assert!(fails(lo));
    lo
}

/// Exact column distance by exhaustive enumeration: the smallest w such that
/// some pattern erasing position 0 plus w − 1 of the positions 1..=T defeats
/// recovery. Returns `None` when no failing pattern exists at weights up to
/// `max_weight_cap` (d_T exceeds the cap). Feasible for small T or low caps:
/// the scan visits sum of C(T, w−1) patterns.
pub fn column_distance_oracle(spec: &CodeSpec, max_weight_cap: usize) -> Option<usize> {
    let delay = spec.delay();
    for w in 1..=max_weight_cap {
        for combo in (1..=delay).combinations(w - 1) {
            let mut p = vec![false; delay + 1];
            p[0] = true;
            for i in combo {
                p[i] = true;
            }
            if !recoverable(spec, &p) {
                return Some(w);
            }
        }
    }
    None
}

/// Number of `recoverable` probes `column_distance_oracle` would run at this
/// delay and cap; used to refuse infeasible requests up front.
pub fn distance_oracle_cost(delay: usize, max_weight_cap: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1; // C(delay, w-1), starting at w-1 = 0
    for w in 1..=max_weight_cap {
        total = total.saturating_add(binom);
        let picked = (w - 1) as u128;
        if picked >= delay as u128 {
            break;
        }
        binom = binom.saturating_mul(delay as u128 - picked) / (picked + 1);
    }
    total
}

/// Closed-form column span of the embedded construction: one more than the
/// larger of the simultaneous-recovery burst count floor(u(T+1)/(2u+v)) and
/// the sequential-recovery count floor(u·delta/(u+v)).
pub fn closed_form_ct(u: usize, v: usize, delta: usize, delay: usize) -> usize {
    assert!(u >= 1 && delta <= delay);
    let simultaneous = u * (delay + 1) / (2 * u + v);
    let sequential = u * delta / (u + v);
    simultaneous.max(sequential) + 1
}

/// Closed-form column distance floor(u(T−delta)/(u+v)) + 2, valid only in the
/// regime delta ≥ R(T+1) (equivalently delta(2u+v) ≥ (u+v)(T+1)); outside it
/// no closed form is known and the oracle is the only source.
pub fn closed_form_dt(
    u: usize,
    v: usize,
    delta: usize,
    delay: usize,
) -> Result<usize, MetricsError> {
    assert!(u >= 1 && delta <= delay);
    if delta * (2 * u + v) < (u + v) * (delay + 1) {
        return Err(MetricsError::OutOfRegime);
    }
    Ok(u * (delay - delta) / (u + v) + 2)
}

fn ratio(n: usize) -> Ratio<i64> {
    Ratio::from_integer(n as i64)
}

/// Right-hand side of the tradeoff bound: T + 1 + 1/(1−R).
pub fn tradeoff_rhs(rate: Ratio<i64>, delay: usize) -> Ratio<i64> {
    let one = Ratio::from_integer(1);
    ratio(delay + 1) + (one - rate).recip()
}

/// Largest d_T the tradeoff bound permits at a given span, additionally
/// clamped by d_T ≤ c_T.
pub fn tradeoff_bound(rate: Ratio<i64>, delay: usize, c_t: usize) -> Ratio<i64> {
    let one = Ratio::from_integer(1);
    let unclamped = tradeoff_rhs(rate, delay) - rate / (one - rate) * ratio(c_t);
    unclamped.min(ratio(c_t))
}

/// Exact slack of the tradeoff bound at an achieved (c_T, d_T); nonnegative
/// for every real code, zero exactly when the pair meets the bound.
pub fn bound_slack(rate: Ratio<i64>, delay: usize, c_t: usize, d_t: usize) -> Ratio<i64> {
    let one = Ratio::from_integer(1);
    tradeoff_rhs(rate, delay) - (rate / (one - rate) * ratio(c_t) + ratio(d_t))
}

/// Smallest (u, v) realizing rate (u+v)/(2u+v): u = q−p, v = 2p−q for
/// R = p/q in lowest terms. Defined exactly for 1/2 ≤ R < 1.
pub fn rate_to_groups(rate: Ratio<i64>) -> Result<(usize, usize), MetricsError> {
    let (p, q) = (*rate.numer(), *rate.denom());
    if p <= 0 || q <= 0 || q - p < 1 || 2 * p - q < 0 {
        return Err(MetricsError::UnsupportedRate);
    }
    Ok(((q - p) as usize, (2 * p - q) as usize))
}

/// One row of the span/distance tradeoff sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub delta: usize,
    pub c_t: usize,
    pub d_t: usize,
    /// Bound value at this row's span (clamped by d_T ≤ c_T).
    pub bound_dt: Ratio<i64>,
    pub slack: Ratio<i64>,
}

/// Closed-form (c_T, d_T) of the embedded family for every shift in the
/// distance regime, delta ∈ [ceil(R(T+1)), T], with the bound alongside. At
/// R = 1/2 every row meets the bound with equality: c_T + d_T = T + 3.
pub fn tradeoff_table(rate: Ratio<i64>, delay: usize) -> Result<Vec<TradeoffRow>, MetricsError> {
    let (u, v) = rate_to_groups(rate)?;
    let first = (rate * ratio(delay + 1)).ceil().to_integer() as usize;
    let mut rows = Vec::new();
    for delta in first..=delay {
        let c_t = closed_form_ct(u, v, delta, delay);
        let d_t = closed_form_dt(u, v, delta, delay).expect("sweep stays in regime");
        rows.push(TradeoffRow {
            delta,
            c_t,
            d_t,
            bound_dt: tradeoff_bound(rate, delay, c_t),
            slack: bound_slack(rate, delay, c_t, d_t),
        });
    }
    Ok(rows)
}

/// Full analyzer output for one code; `None` marks a value that was not
/// computed (oracle skipped, or no closed form for the family/regime).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub code_id: String,
    pub u: Option<usize>,
    pub v: Option<usize>,
    pub delta: Option<usize>,
    pub delay: usize,
    pub field_m: u32,
    pub seed: u64,
    pub rate: (usize, usize),
    pub c_closed: Option<usize>,
    pub d_closed: Option<usize>,
    pub c_oracle: Option<usize>,
    pub d_oracle: Option<usize>,
    /// (R/(1−R))·c_T + d_T using oracle values when present, else closed.
    pub bound_lhs: Option<Ratio<i64>>,
    pub bound_rhs: Ratio<i64>,
    pub bound_slack: Option<Ratio<i64>>,
    pub optimal: Option<bool>,
}

/// Analyzes one code: closed forms where the family has them, oracles on
/// request. `distance_cap = None` skips the distance oracle; the span oracle
/// runs whenever `span_oracle` is set (cost is linear in T).
pub fn analyze(spec: &CodeSpec, span_oracle: bool, distance_cap: Option<usize>) -> MetricReport {
    let (u, v, delta) = (spec.u(), spec.v(), spec.delta());
    let delay = spec.delay();
    let c_closed = u.map(|u| closed_form_ct(u, v.unwrap(), delta.unwrap(), delay));
    let d_closed =
        u.and_then(|u| closed_form_dt(u, v.unwrap(), delta.unwrap(), delay).ok());
    let c_oracle = span_oracle.then(|| column_span_oracle(spec));
    let d_oracle = distance_cap.and_then(|cap| column_distance_oracle(spec, cap));
    let (rn, rd) = spec.rate();
    let rate = Ratio::new(rn as i64, rd as i64);
    let bound_rhs = tradeoff_rhs(rate, delay);
    let pair = match (c_oracle.or(c_closed), d_oracle.or(d_closed)) {
        (Some(c), Some(d)) => Some((c, d)),
        _ => None,
    };
    let slack = pair.map(|(c, d)| bound_slack(rate, delay, c, d));
    MetricReport {
        code_id: spec.spec_string(),
        u,
        v,
        delta,
        delay,
        field_m: spec.field().m(),
        seed: spec.seed(),
        rate: (rn, rd),
        c_closed,
        d_closed,
        c_oracle,
        d_oracle,
        bound_lhs: slack.map(|s| bound_rhs - s),
        bound_rhs,
        bound_slack: slack,
        optimal: slack.map(|s| s == Ratio::from_integer(0)),
    }
}

impl MetricReport {
    pub fn csv_header() -> &'static str {
        "code_id,u,v,delta,T,field_m,seed,R_num,R_den,cT_closed,dT_closed,cT_oracle,dT_oracle,bound_rhs,bound_lhs,optimal_flag"
    }

    pub fn csv_row(&self) -> String {
        fn opt(x: Option<usize>) -> String {
            x.map_or_else(String::new, |v| v.to_string())
        }
        let rat = |r: Option<Ratio<i64>>| {
            r.map_or_else(String::new, |r| {
                fmt6(*r.numer() as f64 / *r.denom() as f64)
            })
        };
        // code_id embeds commas (the code grammar), so it is CSV-quoted.
        format!(
            "\"{}\",{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.code_id,
            opt(self.u),
            opt(self.v),
            opt(self.delta),
            self.delay,
            self.field_m,
            self.seed,
            self.rate.0,
            self.rate.1,
            opt(self.c_closed),
            opt(self.d_closed),
            opt(self.c_oracle),
            opt(self.d_oracle),
            rat(Some(self.bound_rhs)),
            rat(self.bound_lhs),
            self.optimal.map_or_else(String::new, |b| b.to_string()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_erlc, build_maxspan, build_rlc, CodeSpec};
    use crate::gf::Field;

    fn f16() -> Field {
        Field::new(16).unwrap()
    }

    /// Known-good (u, v, delta, T) → (c_T, d_T) anchor rows for the family.
    const ANCHOR_ROWS: [(usize, usize, usize, usize, usize, usize); 9] = [
        (11, 1, 10, 12, 10, 3),
        (11, 1, 11, 12, 11, 2),
        (49, 1, 36, 50, 36, 15),
        (49, 1, 44, 50, 44, 7),
        (39, 1, 32, 40, 32, 9),
        (39, 1, 36, 40, 36, 5),
        (79, 1, 48, 80, 48, 33),
        (79, 1, 52, 80, 52, 29),
        (79, 1, 60, 80, 60, 21),
    ];

    #[test]
    fn closed_forms_reproduce_all_anchor_rows() {
        for (u, v, delta, t, c, d) in ANCHOR_ROWS {
            assert_eq!(closed_form_ct(u, v, delta, t), c, "c for {u},{v},{delta},{t}");
            assert_eq!(
                closed_form_dt(u, v, delta, t),
                Ok(d),
                "d for {u},{v},{delta},{t}"
            );
        }
    }

    #[test]
    fn distance_closed_form_rejects_small_shifts() {
        assert_eq!(closed_form_dt(1, 1, 4, 6), Err(MetricsError::OutOfRegime));
        // Shift-at-delay endpoint is always in regime and gives 2.
        assert_eq!(closed_form_dt(1, 1, 5, 5), Ok(2));
        assert_eq!(closed_form_dt(3, 0, 4, 6), Ok(4));
    }

    #[test]
    fn recoverable_handles_the_trivial_patterns() {
        let spec = build_erlc(2, 1, 3, 4, &f16(), 5).unwrap();
        assert!(recoverable(&spec, &[false; 5]));
        assert!(!recoverable(&spec, &[true; 5]));
        // Unerased position 0 is recoverable regardless of the rest.
        assert!(recoverable(&spec, &[false, true, true, true, true]));
    }

    #[test]
    fn burst_probes_match_the_known_span_at_delay_12() {
        let spec = build_erlc(11, 1, 10, 12, &f16(), 1).unwrap();
        let mut burst9 = vec![false; 13];
        burst9[..9].fill(true);
        assert!(recoverable(&spec, &burst9));
        let mut burst10 = vec![false; 13];
        burst10[..10].fill(true);
        assert!(!recoverable(&spec, &burst10));
        assert_eq!(column_span_oracle(&spec), 10);
    }

    #[test]
    fn oracles_match_closed_forms_on_the_delay_12_anchors() {
        for (delta, c, d) in [(10, 10, 3), (11, 11, 2)] {
            let spec = build_erlc(11, 1, delta, 12, &f16(), 1).unwrap();
            assert_eq!(column_span_oracle(&spec), c);
            assert_eq!(column_distance_oracle(&spec, 13), Some(d));
        }
    }

    #[test]
    fn oracles_match_closed_forms_on_small_rate_half_codes() {
        // (u=1, v=0) is the R = 1/2 member of the family; closed forms say
        // c = max(floor((T+1)/2), delta) + 1 and d = T − delta + 2.
        let spec = build_erlc(1, 0, 4, 6, &f16(), 2).unwrap();
        assert_eq!(closed_form_ct(1, 0, 4, 6), 5);
        assert_eq!(closed_form_dt(1, 0, 4, 6), Ok(4));
        assert_eq!(column_span_oracle(&spec), 5);
        assert_eq!(column_distance_oracle(&spec, 8), Some(4));
    }

    #[test]
    fn repetition_endpoint_measures_span_b_plus_one_distance_two() {
        let spec = build_maxspan(3, 5, &f16(), 3).unwrap();
        assert_eq!(column_span_oracle(&spec), 4);
        assert_eq!(column_distance_oracle(&spec, 7), Some(2));
        assert_eq!(closed_form_ct(3, 2, 5, 5), 4);
        assert_eq!(closed_form_dt(3, 2, 5, 5), Ok(2));
    }

    #[test]
    fn random_convolutional_code_meets_its_distance_target() {
        // d = 1 + floor((n-k)(T+1)/n) for the verified small-delay range.
        let spec = build_rlc(1, 2, 6, &f16(), 4).unwrap();
        assert_eq!(column_distance_oracle(&spec, 8), Some(4));
        let spec = build_rlc(2, 3, 5, &f16(), 4).unwrap();
        assert_eq!(column_distance_oracle(&spec, 7), Some(3));
    }

    /// Literal definition of recoverability: restrict the truncated generator
    /// to unerased block-columns; s[0] is pinned iff that restriction has
    /// rank equal to k plus the rank of the same restriction without the
    /// first k rows (no codeword differing in block 0 matches the received
    /// positions).
    fn recoverable_by_rank(spec: &CodeSpec, pattern: &[bool]) -> bool {
        let (k, n) = (spec.k(), spec.n());
        let delay = spec.delay();
        let g = crate::code::truncated_generator(spec, delay);
        let kept: Vec<usize> = (0..=delay)
            .filter(|&t| !pattern[t])
            .flat_map(|t| t * n..(t + 1) * n)
            .collect();
        let mut full = crate::gf::Matrix::zeros(g.rows(), kept.len());
        for (j, &col) in kept.iter().enumerate() {
            for i in 0..g.rows() {
                full.set(i, j, g.get(i, col));
            }
        }
        let mut tail = crate::gf::Matrix::zeros(g.rows() - k, kept.len());
        for (j, &col) in kept.iter().enumerate() {
            for i in k..g.rows() {
                tail.set(i - k, j, g.get(i, col));
            }
        }
        let f = spec.field();
        f.rank(&full) == k + f.rank(&tail)
    }

    #[test]
    fn elimination_agrees_with_the_rank_definition_on_all_small_patterns() {
        let f = f16();
        let specs = [
            build_erlc(2, 1, 3, 4, &f, 9).unwrap(),
            build_erlc(1, 0, 3, 4, &f, 9).unwrap(),
            build_maxspan(2, 4, &f, 9).unwrap(),
            build_rlc(2, 3, 4, &f, 9).unwrap(),
        ];
        for spec in &specs {
            for bits in 0u32..32 {
                let pattern: Vec<bool> = (0..5).map(|i| bits >> i & 1 == 1).collect();
                assert_eq!(
                    recoverable(spec, &pattern),
                    recoverable_by_rank(spec, &pattern),
                    "{} pattern {pattern:?}",
                    spec.spec_string()
                );
            }
        }
    }

    #[test]
    fn dense_split_rank_agrees_with_the_incremental_path() {
        let f = f16();
        let specs = [
            build_erlc(3, 2, 4, 6, &f, 7).unwrap(),
            build_erlc(2, 0, 5, 6, &f, 7).unwrap(),
            build_maxspan(3, 6, &f, 7).unwrap(),
            build_rlc(3, 5, 6, &f, 7).unwrap(),
        ];
        for spec in &specs {
            for bits in 0u32..128 {
                let pattern: Vec<bool> = (0..7).map(|i| bits >> i & 1 == 1).collect();
                assert_eq!(
                    recoverable_dense(spec, &pattern),
                    recoverable(spec, &pattern),
                    "{} pattern {pattern:?}",
                    spec.spec_string()
                );
            }
        }
    }

    #[test]
    fn two_probe_verify_matches_the_full_scan() {
        let spec = build_erlc(11, 1, 10, 12, &f16(), 1).unwrap();
        let span = column_span_oracle(&spec);
        assert!(column_span_verify(&spec, span));
        assert!(!column_span_verify(&spec, span - 1));
        assert!(!column_span_verify(&spec, span + 1));
        assert!(!column_span_verify(&spec, 0));
        assert!(!column_span_verify(&spec, 14));
    }

    #[test]
    fn verify_crosses_the_dense_threshold_on_a_long_delay_code() {
        // 44 × 50 unknowns puts both probes on the dense path.
        let spec = build_erlc(49, 1, 44, 50, &f16(), 1).unwrap();
        assert!(column_span_verify(&spec, 44));
        assert!(!column_span_verify(&spec, 43));
    }

    #[test]
    fn erasure_supersets_stay_unrecoverable() {
        let spec = build_erlc(2, 1, 3, 4, &f16(), 9).unwrap();
        for bits in 0u32..32 {
            let pattern: Vec<bool> = (0..5).map(|i| bits >> i & 1 == 1).collect();
            if recoverable(&spec, &pattern) {
                continue;
            }
            for extra in 0..5 {
                let mut worse = pattern.clone();
                worse[extra] = true;
                assert!(!recoverable(&spec, &worse));
            }
        }
    }

    #[test]
    fn tradeoff_table_at_rate_half_meets_the_bound_everywhere() {
        let half = Ratio::new(1, 2);
        let rows = tradeoff_table(half, 10).unwrap();
        assert_eq!(rows.first().unwrap().delta, 6);
        let first = &rows[0];
        assert_eq!((first.c_t, first.d_t), (7, 6));
        for row in &rows {
            assert_eq!(row.c_t + row.d_t, 13, "sum at delta={}", row.delta);
            assert_eq!(row.slack, Ratio::from_integer(0));
        }
        // Endpoint delta = T is the repetition point (T+1, 2).
        let last = rows.last().unwrap();
        assert_eq!((last.delta, last.c_t, last.d_t), (10, 11, 2));
    }

    #[test]
    fn tradeoff_table_reproduces_the_delay_12_anchors() {
        let rows = tradeoff_table(Ratio::new(12, 23), 12).unwrap();
        for (delta, c, d) in [(10, 10, 3), (11, 11, 2)] {
            let row = rows.iter().find(|r| r.delta == delta).unwrap();
            assert_eq!((row.c_t, row.d_t), (c, d));
            assert!(row.slack >= Ratio::from_integer(0));
        }
    }

    #[test]
    fn bound_clamps_to_span_at_the_extreme() {
        // c_T = T+1 at R = 1/2 leaves room for d_T = 2 exactly.
        assert_eq!(
            tradeoff_bound(Ratio::new(1, 2), 10, 11),
            Ratio::from_integer(2)
        );
        // Tiny spans would allow d > c; the clamp keeps d ≤ c.
        assert_eq!(
            tradeoff_bound(Ratio::new(1, 2), 10, 2),
            Ratio::from_integer(2)
        );
    }

    #[test]
    fn anchor_rows_satisfy_the_bound_with_nonnegative_slack() {
        for (u, v, delta, t, c, d) in ANCHOR_ROWS {
            let rate = Ratio::new((u + v) as i64, (2 * u + v) as i64);
            let slack = bound_slack(rate, t, c, d);
            assert!(slack >= Ratio::from_integer(0), "{u},{v},{delta},{t}");
        }
    }

    #[test]
    fn rate_groups_round_trip() {
        assert_eq!(rate_to_groups(Ratio::new(1, 2)), Ok((1, 0)));
        assert_eq!(rate_to_groups(Ratio::new(3, 5)), Ok((2, 1)));
        assert_eq!(rate_to_groups(Ratio::new(7, 10)), Ok((3, 4)));
        assert_eq!(rate_to_groups(Ratio::new(12, 23)), Ok((11, 1)));
        assert!(rate_to_groups(Ratio::new(1, 3)).is_err());
        assert!(rate_to_groups(Ratio::new(1, 1)).is_err());
    }

    #[test]
    fn distance_cost_estimates_binomial_sums() {
        assert_eq!(distance_oracle_cost(12, 3), 1 + 12 + 66);
        assert_eq!(distance_oracle_cost(4, 10), 16); // caps at all subsets
        assert!(distance_oracle_cost(50, 15) > 1_000_000_000);
    }

    #[test]
    fn analyze_fills_closed_oracle_and_bound_columns() {
        let spec = build_erlc(11, 1, 10, 12, &f16(), 1).unwrap();
        let report = analyze(&spec, true, Some(13));
        assert_eq!(report.c_closed, Some(10));
        assert_eq!(report.d_closed, Some(3));
        assert_eq!(report.c_oracle, Some(10));
        assert_eq!(report.d_oracle, Some(3));
        assert_eq!(report.rate, (12, 23));
        assert!(report.bound_slack.unwrap() >= Ratio::from_integer(0));
        assert_eq!(report.optimal, Some(false));
        assert_eq!(
            report.bound_lhs.unwrap() + report.bound_slack.unwrap(),
            report.bound_rhs
        );
        let row = report.csv_row();
        assert!(row.starts_with("\"erlc:u=11,v=1,delta=10,T=12"));
        // Columns outside the quoted code_id match the header.
        let tail_cols = row.rsplit('"').next().unwrap().split(',').count() - 1;
        assert_eq!(
            tail_cols,
            MetricReport::csv_header().split(',').count() - 1
        );
    }
}
