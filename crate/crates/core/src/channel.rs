//! Erasure channel models and burst statistics.
//!
//! Stochastic models (Gilbert-Elliott and its serial-state Fritchman
//! generalization) draw their state transitions and their good-state loss
//! coin from two independent streams derived from the trace seed. That split
//! is deliberate: sweeping the good-state loss rate ε with a fixed seed
//! leaves the burst process bit-identical, so paired comparisons across an ε
//! grid measure code behavior, not sampling noise.
//!
//! The deterministic models — the periodic channel whose period forces one
//! burst per decoding window, and the sliding-window adversary enumerator —
//! exercise exactly the patterns the metrics analyzers reason about.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::seeds;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("invalid channel parameters: {0}")]
    BadParams(&'static str),
    #[error("enumeration too large: at least {at_least} admissible traces (cap {cap})")]
    EnumerationTooLarge { at_least: u64, cap: u64 },
}

/// Two-state Markov loss model: a good state losing with probability
/// `epsilon` and a bad state losing with probability 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GilbertElliottParams {
    /// Good → bad transition probability per step.
    pub alpha: f64,
    /// Bad → good transition probability per step.
    pub beta: f64,
    /// Loss probability in the good state.
    pub epsilon: f64,
}

/// One good state plus `n_error_states` serial error states; each error
/// state advances with probability `beta`, so burst lengths are negative
/// binomial with minimum `n_error_states`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FritchmanParams {
    pub n_error_states: usize,
    /// Good → first error state probability per step.
    pub alpha: f64,
    /// Advance probability out of each error state.
    pub beta: f64,
    /// Loss probability in the good state.
    pub epsilon: f64,
}

/// A reproducible erasure sequence: `erased[t]` is true when packet t is lost.
#[derive(Debug, Clone, PartialEq)]
pub struct ErasureTrace {
    pub erased: Vec<bool>,
    pub seed: u64,
    pub model_tag: &'static str,
}

impl ErasureTrace {
    pub fn len(&self) -> usize {
        self.erased.len()
    }

    pub fn is_empty(&self) -> bool {
        self.erased.is_empty()
    }

    /// Fraction of erased positions.
    pub fn erasure_rate(&self) -> f64 {
        if self.erased.is_empty() {
            return 0.0;
        }
        self.erased.iter().filter(|&&e| e).count() as f64 / self.erased.len() as f64
    }

    /// Run-length encoding for debugging: counts suffixed c (clear) / e (erased).
    pub fn rle_string(&self) -> String {
        let mut out = String::new();
        let mut i = 0;
        while i < self.erased.len() {
            let val = self.erased[i];
            let start = i;
            while i < self.erased.len() && self.erased[i] == val {
                i += 1;
            }
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&format!("{}{}", i - start, if val { 'e' } else { 'c' }));
        }
        out
    }
}

fn check_prob(p: f64, what: &'static str) -> Result<(), ChannelError> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(ChannelError::BadParams(what));
    }
    Ok(())
}

/// Stationary loss rate of the Gilbert-Elliott channel:
/// β/(α+β)·ε + α/(α+β), degenerating to ε when the chain never moves.
pub fn ge_loss_rate(params: &GilbertElliottParams) -> f64 {
    let (a, b) = (params.alpha, params.beta);
    if a + b == 0.0 {
        return params.epsilon;
    }
    b / (a + b) * params.epsilon + a / (a + b)
}

/// Standard error of the empirical loss rate over `length` steps, from the
/// central limit theorem for the two-state chain: the per-step variance is
/// p(1−p) plus the autocovariance tail 2(1−ε)²·π_G·π_B·λ/(1−λ), where
/// λ = 1 − α − β is the chain's second eigenvalue.
pub fn ge_loss_stderr(params: &GilbertElliottParams, length: u64) -> f64 {
    let (a, b, eps) = (params.alpha, params.beta, params.epsilon);
    let p = ge_loss_rate(params);
    let mut var = p * (1.0 - p);
    if a + b > 0.0 {
        let lambda = 1.0 - a - b;
        assert!(lambda.abs() < 1.0, "degenerate chain");
        let pi_b = a / (a + b);
        var += 2.0 * (1.0 - eps).powi(2) * pi_b * (1.0 - pi_b) * lambda / (1.0 - lambda);
    }
    (var / length as f64).sqrt()
}

/// Markov trace shared by both stochastic models: `n_error` serial error
/// states, transition drawn first, then the loss coin (good state only; error
/// states always lose). State and loss streams are independent so the burst
/// process does not depend on epsilon.
fn markov_trace(
    n_error: usize,
    alpha: f64,
    beta: f64,
    epsilon: f64,
    length: u64,
    seed: u64,
    model_tag: &'static str,
) -> ErasureTrace {
    let mut state_rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, "channel-state", &[]));
    let mut loss_rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, "channel-loss", &[]));
    let mut erased = Vec::with_capacity(length as usize);
    let mut state = 0usize; // 0 = good, 1..=n_error = error chain
    for _ in 0..length {
        state = if state == 0 {
            if state_rng.gen::<f64>() < alpha {
                1
            } else {
                0
            }
        } else if state_rng.gen::<f64>() < beta {
            (state + 1) % (n_error + 1)
        } else {
            state
        };
        let lost = if state == 0 {
            epsilon > 0.0 && loss_rng.gen::<f64>() < epsilon
        } else {
            true
        };
        erased.push(lost);
    }
    ErasureTrace {
        erased,
        seed,
        model_tag,
    }
}

/// Gilbert-Elliott trace, starting in the good state; deterministic in seed.
pub fn ge_trace(
    params: &GilbertElliottParams,
    length: u64,
    seed: u64,
) -> Result<ErasureTrace, ChannelError> {
    check_prob(params.alpha, "alpha must be a probability")?;
    check_prob(params.beta, "beta must be a probability")?;
    check_prob(params.epsilon, "epsilon must be a probability")?;
    Ok(markov_trace(
        1,
        params.alpha,
        params.beta,
        params.epsilon,
        length,
        seed,
        "ge",
    ))
}

/// Fritchman trace, starting in the good state; with one error state the
/// draw structure matches `ge_trace` bit for bit.
pub fn fritchman_trace(
    params: &FritchmanParams,
    length: u64,
    seed: u64,
) -> Result<ErasureTrace, ChannelError> {
    if params.n_error_states < 1 {
        return Err(ChannelError::BadParams("need at least one error state"));
    }
    check_prob(params.alpha, "alpha must be a probability")?;
    check_prob(params.beta, "beta must be a probability")?;
    check_prob(params.epsilon, "epsilon must be a probability")?;
    Ok(markov_trace(
        params.n_error_states,
        params.alpha,
        params.beta,
        params.epsilon,
        length,
        seed,
        "fritchman",
    ))
}

/// Deterministic periodic channel: period T + c_T − d_T + 1 with the first
/// c_T − 1 positions of each period erased. A code whose metrics are exactly
/// (c_T, d_T) decodes it losslessly, and its loss rate is what the rate
/// tradeoff bound prices.
pub fn periodic_trace(
    c_t: usize,
    d_t: usize,
    delay: usize,
    n_periods: usize,
) -> Result<ErasureTrace, ChannelError> {
    if !(1 <= d_t && d_t <= c_t && c_t <= delay + 1) {
        return Err(ChannelError::BadParams("need 1 <= d_T <= c_T <= T+1"));
    }
    let period = delay + c_t - d_t + 1;
    let mut erased = Vec::with_capacity(period * n_periods);
    for _ in 0..n_periods {
        for i in 0..period {
            erased.push(i < c_t - 1);
        }
    }
    Ok(ErasureTrace {
        erased,
        seed: 0,
        model_tag: "periodic",
    })
}

/// Sliding-window adversary: in every window of `window` consecutive
/// positions, erasures must form either a single burst of length ≤ `burst`
/// or at most `isolated` arbitrary positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversaryParams {
    pub burst: usize,
    pub isolated: usize,
    pub window: usize,
}

impl AdversaryParams {
    fn validate(&self) -> Result<(), ChannelError> {
        if !(self.isolated <= self.burst && self.burst <= self.window && self.window >= 1) {
            return Err(ChannelError::BadParams("need N <= B <= W, W >= 1"));
        }
        Ok(())
    }

    fn window_ok(&self, w: &[bool]) -> bool {
        let count = w.iter().filter(|&&e| e).count();
        if count <= self.isolated {
            return true;
        }
        let first = w.iter().position(|&e| e).unwrap();
        let last = w.iter().rposition(|&e| e).unwrap();
        last - first + 1 == count && count <= self.burst
    }

    /// Validator: true iff every length-W window of the trace is admissible
    /// (a shorter trace is checked as a single window).
    pub fn admissible(&self, trace: &[bool]) -> bool {
        if trace.len() <= self.window {
            return self.window_ok(trace);
        }
        (0..=trace.len() - self.window).all(|s| self.window_ok(&trace[s..s + self.window]))
    }
}

/// Every admissible trace over `[0, horizon)`, by depth-first extension with
/// window-level pruning. Fails with a size error when more than `cap` traces
/// exist. Intended for small windows (roughly W ≤ 13, horizon ≤ 2W).
pub fn adversary_patterns(
    params: &AdversaryParams,
    horizon: usize,
    cap: u64,
) -> Result<Vec<Vec<bool>>, ChannelError> {
    params.validate()?;
    let mut out: Vec<Vec<bool>> = Vec::new();
    let mut prefix: Vec<bool> = Vec::with_capacity(horizon);
    // A prefix is viable iff its complete windows are admissible; each push
    // completes at most the window ending at the new position.
    fn extend(
        p: &AdversaryParams,
        horizon: usize,
        cap: u64,
        prefix: &mut Vec<bool>,
        out: &mut Vec<Vec<bool>>,
    ) -> Result<(), ChannelError> {
        if prefix.len() == horizon {
            if out.len() as u64 >= cap {
                return Err(ChannelError::EnumerationTooLarge {
                    at_least: cap + 1,
                    cap,
                });
            }
            out.push(prefix.clone());
            return Ok(());
        }
        for bit in [false, true] {
            prefix.push(bit);
            let ok = if prefix.len() >= p.window {
                p.window_ok(&prefix[prefix.len() - p.window..])
            } else {
                // Partial windows are re-checked once complete; still prune
                // prefixes that already violate as a whole.
                p.window_ok(prefix)
            };
            if ok {
                extend(p, horizon, cap, prefix, out)?;
            }
            prefix.pop();
        }
        Ok(())
    }
    extend(params, horizon, cap, &mut prefix, &mut out)?;
    Ok(out)
}

/// Counts maximal runs of consecutive erasures by length.
pub fn burst_histogram(trace: &ErasureTrace) -> BTreeMap<usize, u64> {
    let mut hist = BTreeMap::new();
    let mut run = 0usize;
    for &e in &trace.erased {
        if e {
            run += 1;
        } else if run > 0 {
            *hist.entry(run).or_insert(0) += 1;
            run = 0;
        }
    }
    if run > 0 {
        *hist.entry(run).or_insert(0) += 1;
    }
    hist
}

/// Geometric burst-length pmf P(L = l) = β(1−β)^(l−1), the Gilbert-Elliott
/// burst law (bad-state sojourn) at ε = 0.
pub fn geometric_pmf(beta: f64, l: usize) -> f64 {
    if l == 0 {
        return 0.0;
    }
    beta * (1.0 - beta).powi(l as i32 - 1)
}

/// Negative-binomial burst-length pmf for the Fritchman chain with `n` error
/// states: P(L = l) = C(l−1, n−1) β^n (1−β)^(l−n) for l ≥ n.
pub fn neg_binomial_pmf(n: usize, beta: f64, l: usize) -> f64 {
    if l < n || n == 0 {
        return 0.0;
    }
    let mut binom = 1.0;
    for i in 0..n - 1 {
        binom *= (l - 1 - i) as f64 / (i + 1) as f64;
    }
    binom * beta.powi(n as i32) * (1.0 - beta).powi((l - n) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_burst(hist: &BTreeMap<usize, u64>) -> (f64, u64, usize) {
        let total: u64 = hist.values().sum();
        let weighted: u64 = hist.iter().map(|(&l, &c)| l as u64 * c).sum();
        let min = hist.keys().next().copied().unwrap_or(0);
        (weighted as f64 / total as f64, total, min)
    }

    #[test]
    fn traces_are_reproducible_and_seed_sensitive() {
        let p = GilbertElliottParams {
            alpha: 0.01,
            beta: 0.5,
            epsilon: 0.001,
        };
        let a = ge_trace(&p, 10_000, 7).unwrap();
        let b = ge_trace(&p, 10_000, 7).unwrap();
        let c = ge_trace(&p, 10_000, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.erased, c.erased);
    }

    #[test]
    fn zero_alpha_gives_iid_erasures_at_rate_epsilon() {
        let p = GilbertElliottParams {
            alpha: 0.0,
            beta: 0.5,
            epsilon: 0.1,
        };
        let trace = ge_trace(&p, 100_000, 3).unwrap();
        let sigma = (0.1 * 0.9 / 100_000.0_f64).sqrt();
        assert!((trace.erasure_rate() - 0.1).abs() < 4.0 * sigma);
        assert!(burst_histogram(&trace).keys().all(|&l| l < 10));
    }

    #[test]
    fn immediate_exit_makes_every_burst_length_one() {
        let p = GilbertElliottParams {
            alpha: 0.2,
            beta: 1.0,
            epsilon: 0.0,
        };
        let trace = ge_trace(&p, 50_000, 11).unwrap();
        let hist = burst_histogram(&trace);
        assert!(!hist.is_empty());
        assert!(hist.keys().all(|&l| l == 1));
    }

    #[test]
    fn empirical_loss_rate_matches_the_stationary_formula() {
        let p = GilbertElliottParams {
            alpha: 5e-4,
            beta: 0.5,
            epsilon: 1e-2,
        };
        let expect = ge_loss_rate(&p);
        assert!((expect - 1.099e-2).abs() < 1e-5);
        let trace = ge_trace(&p, 1_000_000, 42).unwrap();
        let sigma = ge_loss_stderr(&p, 1_000_000);
        assert!(
            (trace.erasure_rate() - expect).abs() < 3.0 * sigma,
            "rate {} vs {expect} (sigma {sigma})",
            trace.erasure_rate()
        );
    }

    #[test]
    fn single_error_state_fritchman_equals_gilbert_elliott_exactly() {
        let f = FritchmanParams {
            n_error_states: 1,
            alpha: 0.02,
            beta: 0.4,
            epsilon: 0.005,
        };
        let g = GilbertElliottParams {
            alpha: 0.02,
            beta: 0.4,
            epsilon: 0.005,
        };
        let a = fritchman_trace(&f, 100_000, 13).unwrap();
        let b = ge_trace(&g, 100_000, 13).unwrap();
        assert_eq!(a.erased, b.erased);
    }

    #[test]
    fn epsilon_sweep_preserves_the_burst_process() {
        let mk = |eps| {
            ge_trace(
                &GilbertElliottParams {
                    alpha: 0.01,
                    beta: 0.5,
                    epsilon: eps,
                },
                50_000,
                5,
            )
            .unwrap()
        };
        let lo = mk(0.0);
        let hi = mk(0.02);
        // Every state-driven erasure of the eps=0 trace persists at higher
        // eps, and the eps=0 histogram is exactly the state burst process.
        for (a, b) in lo.erased.iter().zip(&hi.erased) {
            assert!(!a || *b);
        }
        let extra = hi.erased.iter().filter(|&&e| e).count()
            - lo.erased.iter().filter(|&&e| e).count();
        assert!(extra > 0, "good-state losses should add erasures");
    }

    #[test]
    fn fritchman_bursts_are_negative_binomial_shaped() {
        let p = FritchmanParams {
            n_error_states: 8,
            alpha: 0.01,
            beta: 0.5,
            epsilon: 0.0,
        };
        let trace = fritchman_trace(&p, 1_000_000, 9).unwrap();
        let (mean, bursts, min) = mean_burst(&burst_histogram(&trace));
        assert!(bursts > 5_000, "need bursts for a stable mean, got {bursts}");
        assert!((mean - 16.0).abs() < 0.02 * 16.0, "mean {mean}");
        assert_eq!(min, 8);
    }

    #[test]
    fn periodic_trace_erases_a_burst_per_period() {
        let t = periodic_trace(10, 3, 12, 2).unwrap();
        assert_eq!(t.len(), 40);
        let expect: Vec<bool> = (0..40).map(|i| i % 20 < 9).collect();
        assert_eq!(t.erased, expect);
        assert_eq!(periodic_trace(4, 4, 6, 3).unwrap().len(), 21);
        assert!(periodic_trace(1, 1, 5, 2).unwrap().erased.iter().all(|&e| !e));
        assert!(periodic_trace(3, 4, 6, 1).is_err());
    }

    #[test]
    fn adversary_validator_matches_the_window_rule() {
        let p = AdversaryParams {
            burst: 3,
            isolated: 2,
            window: 5,
        };
        let mut fig: Vec<bool> = vec![true, true, true];
        fig.extend([false; 4]);
        fig.extend([true, true, true]);
        assert!(p.admissible(&fig));
        assert!(p.admissible(&[false; 12]));
        let mut spread = vec![false; 12];
        spread[0] = true;
        spread[2] = true;
        spread[4] = true;
        assert!(!p.admissible(&spread));
    }

    #[test]
    fn enumerated_traces_all_pass_their_own_validator() {
        let p = AdversaryParams {
            burst: 2,
            isolated: 1,
            window: 3,
        };
        let traces = adversary_patterns(&p, 6, 1_000_000).unwrap();
        assert!(traces.iter().all(|t| p.admissible(t)));
        assert!(traces.contains(&vec![false; 6]));
        // Exhaustiveness: every admissible 6-bit string is present.
        let mut expect = 0u64;
        for bits in 0u64..64 {
            let t: Vec<bool> = (0..6).map(|i| bits >> i & 1 == 1).collect();
            if p.admissible(&t) {
                expect += 1;
                assert!(traces.contains(&t), "missing {t:?}");
            }
        }
        assert_eq!(traces.len() as u64, expect);
    }

    #[test]
    fn enumeration_cap_reports_a_size_error() {
        let p = AdversaryParams {
            burst: 3,
            isolated: 2,
            window: 5,
        };
        match adversary_patterns(&p, 12, 10) {
            Err(ChannelError::EnumerationTooLarge { at_least, cap }) => {
                assert_eq!(cap, 10);
                assert!(at_least > 10);
            }
            other => panic!("expected size error, got {other:?}"),
        }
    }

    #[test]
    fn histogram_counts_maximal_runs() {
        let t = ErasureTrace {
            erased: vec![true, true, false, true],
            seed: 0,
            model_tag: "test",
        };
        let hist = burst_histogram(&t);
        assert_eq!(hist.get(&2), Some(&1));
        assert_eq!(hist.get(&1), Some(&1));
        let clear = ErasureTrace {
            erased: vec![false; 5],
            seed: 0,
            model_tag: "test",
        };
        assert!(burst_histogram(&clear).is_empty());
    }

    #[test]
    fn burst_pmfs_are_normalized_with_the_right_means() {
        let geo_total: f64 = (1..200).map(|l| geometric_pmf(0.5, l)).sum();
        assert!((geo_total - 1.0).abs() < 1e-9);
        let geo_mean: f64 = (1..200).map(|l| l as f64 * geometric_pmf(0.5, l)).sum();
        assert!((geo_mean - 2.0).abs() < 1e-9);
        let nb_total: f64 = (1..400).map(|l| neg_binomial_pmf(8, 0.5, l)).sum();
        assert!((nb_total - 1.0).abs() < 1e-9);
        let nb_mean: f64 = (1..400).map(|l| l as f64 * neg_binomial_pmf(8, 0.5, l)).sum();
        assert!((nb_mean - 16.0).abs() < 1e-9);
        assert_eq!(neg_binomial_pmf(8, 0.5, 7), 0.0);
    }

    #[test]
    fn rle_round_trips_the_shape() {
        let t = ErasureTrace {
            erased: vec![false, false, true, true, true, false],
            seed: 0,
            model_tag: "test",
        };
        assert_eq!(t.rle_string(), "2c 3e 1c");
    }
}
