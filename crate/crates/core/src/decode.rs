//! Streaming elimination decoder with per-packet deadlines.
//!
//! The decoder walks the channel output once. Each erased packet registers
//! its k source sub-symbols as unknowns; each received packet pins its own
//! sub-symbols and, when its parity touches anything still unknown, donates
//! r linear equations to an incremental Gauss-Jordan engine. A source packet
//! is *lost* when any of its sub-symbols is still unresolved T slots after it
//! entered the encoder — even if the decoder pieces it together later, which
//! it keeps doing for one extra slot (a *late recovery*), because every value
//! recovered decontaminates the parity equations still in flight. One slot
//! past the deadline nothing can reference the packet any more: its
//! unknowns, values, and any equations touching them are retired, which
//! bounds both memory and work regardless of stream length.
//!
//! Long clean stretches cost almost nothing: a received packet whose parity
//! window contains no unknowns is counted and dropped without ever forming —
//! or even computing — its equations. The harness exploits that by handing
//! the decoder a parity *closure*, so encoding work is also skipped outside
//! erasure neighborhoods.

use crate::channel::ErasureTrace;
use crate::code::{self, ChannelPacket, CodeSpec, SourceStream};
use crate::elim::Eliminator;
use crate::gf::Fe;

/// Loss accounting for one decoded stream. Counts are packet-level: a source
/// packet is lost iff any of its sub-symbols missed the deadline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LossReport {
    pub total_packets: u64,
    pub lost_packets: u64,
    /// Packets recovered after their deadline but before retirement.
    pub late_recoveries: u64,
}

impl LossReport {
    pub fn loss_rate(&self) -> f64 {
        if self.total_packets == 0 {
            return 0.0;
        }
        self.lost_packets as f64 / self.total_packets as f64
    }
}

impl std::ops::Add for LossReport {
    type Output = LossReport;
    fn add(self, rhs: LossReport) -> LossReport {
        LossReport {
            total_packets: self.total_packets + rhs.total_packets,
            lost_packets: self.lost_packets + rhs.lost_packets,
            late_recoveries: self.late_recoveries + rhs.late_recoveries,
        }
    }
}

impl std::iter::Sum for LossReport {
    fn sum<I: Iterator<Item = LossReport>>(iter: I) -> LossReport {
        iter.fold(LossReport::default(), |a, b| a + b)
    }
}

/// Outcome of a deadline check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Recovered,
    Lost,
}

/// What one decoder step produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub time: u64,
    /// Sub-symbols resolved during this step: (packet time, index, value).
    pub resolved: Vec<(u64, usize, Fe)>,
    /// Deadline verdict issued this step, if one fell inside the counted
    /// region: (packet time, verdict).
    pub deadline: Option<(u64, Verdict)>,
}

enum Slot {
    Vacant,
    Received(Vec<Fe>),
    Erased { unresolved: usize, counted_lost: bool },
}

struct SlotEntry {
    time: u64,
    slot: Slot,
}

/// Sliding-window decoder state for one stream.
pub struct Decoder {
    spec: CodeSpec,
    elim: Eliminator,
    ring: Vec<SlotEntry>,
    /// Next time slot to be processed.
    now: u64,
    /// First processed time; references before it carry no parity content
    /// (the caller conditions parity on everything earlier being known).
    first: u64,
    /// Deadlines at or after this time are counted.
    count_from: u64,
    report: LossReport,
}

impl Decoder {
    pub fn new(spec: CodeSpec) -> Decoder {
        Decoder::with_range(spec, 0, 0)
    }

    /// Decoder for a shard: processing starts at `first` (everything earlier
    /// is treated as delivered out of band) and only deadlines at or after
    /// `count_from` are counted.
    pub fn with_range(spec: CodeSpec, first: u64, count_from: u64) -> Decoder {
        assert!(count_from >= first);
        let ring_len = spec.delay() + 2;
        let ring = (0..ring_len)
            .map(|_| SlotEntry {
                time: u64::MAX,
                slot: Slot::Vacant,
            })
            .collect();
        Decoder {
            elim: Eliminator::new(spec.field().clone()),
            spec,
            ring,
            now: first,
            first,
            count_from,
            report: LossReport::default(),
        }
    }

    pub fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    /// Counts so far (deadlines issued in the counted region).
    pub fn report(&self) -> LossReport {
        self.report
    }

    fn entry_mut(&mut self, time: u64) -> &mut SlotEntry {
        let len = self.ring.len() as u64;
        let e = &mut self.ring[(time % len) as usize];
        debug_assert_eq!(e.time, time, "slot ring corrupted");
        e
    }

    /// Feeds the observation for the next time slot; `None` means erased.
    pub fn step(&mut self, y: Option<ChannelPacket>) -> StepOutcome {
        match y {
            None => self.step_erased(),
            Some(p) => {
                assert_eq!(p.time, self.now, "packets must arrive in stream order");
                assert_eq!(p.source.len(), self.spec.k());
                assert_eq!(p.parity.len(), self.spec.r());
                let parity = p.parity;
                self.step_received(p.source, move || parity)
            }
        }
    }

    /// Erased slot: register unknowns, then close out the step.
    pub(crate) fn step_erased(&mut self) -> StepOutcome {
        let t = self.occupy_next();
        let k = self.spec.k();
        self.entry_mut(t).slot = Slot::Erased {
            unresolved: k,
            counted_lost: false,
        };
        self.finish_step(t, Vec::new())
    }

    /// Received slot. `parity` is only invoked when the packet's parity
    /// window contains unresolved unknowns — the caller may compute it lazily.
    pub(crate) fn step_received(
        &mut self,
        source: Vec<Fe>,
        parity: impl FnOnce() -> Vec<Fe>,
    ) -> StepOutcome {
        let t = self.occupy_next();
        debug_assert_eq!(source.len(), self.spec.k());
        self.entry_mut(t).slot = Slot::Received(source);
        let resolved = if self.references_unknowns(t) {
            self.feed_equations(t, parity());
            self.drain_events()
        } else {
            Vec::new()
        };
        self.finish_step(t, resolved)
    }

    fn occupy_next(&mut self) -> u64 {
        let t = self.now;
        self.now += 1;
        let len = self.ring.len() as u64;
        let e = &mut self.ring[(t % len) as usize];
        debug_assert!(
            matches!(e.slot, Slot::Vacant),
            "slot for time {t} not retired before reuse"
        );
        e.time = t;
        t
    }

    /// Any unresolved sub-symbol inside packet t's parity window?
    fn references_unknowns(&self, t: u64) -> bool {
        let len = self.ring.len() as u64;
        for &lag in self.spec.active_lags() {
            if lag as u64 > t {
                break;
            }
            let tau = t - lag as u64;
            if tau < self.first {
                break;
            }
            let e = &self.ring[(tau % len) as usize];
            debug_assert_eq!(e.time, tau);
            if let Slot::Erased { unresolved, .. } = e.slot {
                if unresolved > 0 {
                    return true;
                }
            }
        }
        false
    }

    /// Forms packet t's r parity equations: known sub-symbols fold into the
    /// constant side, erased ones become variables (time·k + index).
    fn feed_equations(&mut self, t: u64, parity: Vec<Fe>) {
        let k = self.spec.k();
        let r = self.spec.r();
        debug_assert_eq!(parity.len(), r);
        let field = self.spec.field().clone();
        let mut rhs = parity;
        let mut terms: Vec<Vec<(u64, Fe)>> = vec![Vec::new(); r];
        let len = self.ring.len() as u64;
        for &lag in self.spec.active_lags() {
            if lag as u64 > t {
                break;
            }
            let tau = t - lag as u64;
            if tau < self.first {
                break;
            }
            let block = self.spec.parity_block(lag).unwrap();
            let e = &self.ring[(tau % len) as usize];
            debug_assert_eq!(e.time, tau);
            match &e.slot {
                Slot::Received(vals) => {
                    for (i, &val) in vals.iter().enumerate() {
                        if val != 0 {
                            field.axpy(&mut rhs, block.row(i), val);
                        }
                    }
                }
                Slot::Erased { .. } => {
                    for i in 0..k {
                        let var = tau * k as u64 + i as u64;
                        for (p, &c) in block.row(i).iter().enumerate() {
                            if c != 0 {
                                terms[p].push((var, c));
                            }
                        }
                    }
                }
                Slot::Vacant => unreachable!("live window slot is vacant"),
            }
        }
        for (p, t_terms) in terms.into_iter().enumerate() {
            if t_terms.is_empty() {
                debug_assert_eq!(rhs[p], 0, "parity inconsistent with known data");
            } else {
                self.elim.add_equation(t_terms, rhs[p]);
            }
        }
    }

    /// Applies resolution events to the slot ledger.
    fn drain_events(&mut self) -> Vec<(u64, usize, Fe)> {
        let k = self.spec.k() as u64;
        let events = self.elim.take_events();
        let mut out = Vec::with_capacity(events.len());
        for (var, val) in events {
            let (tau, i) = (var / k, (var % k) as usize);
            let entry = self.entry_mut(tau);
            match &mut entry.slot {
                Slot::Erased {
                    unresolved,
                    counted_lost,
                } => {
                    *unresolved -= 1;
                    if *unresolved == 0 && *counted_lost {
                        self.report.late_recoveries += 1;
                    }
                }
                _ => unreachable!("resolution event for a known slot"),
            }
            out.push((tau, i, val));
        }
        out
    }

    /// Deadline verdict for t − T, then retirement of t − (T+1).
    fn finish_step(&mut self, t: u64, resolved: Vec<(u64, usize, Fe)>) -> StepOutcome {
        let delay = self.spec.delay() as u64;
        let mut deadline = None;
        if let Some(d) = t.checked_sub(delay) {
            if d >= self.count_from {
                self.report.total_packets += 1;
                let entry = self.entry_mut(d);
                let lost = match &mut entry.slot {
                    Slot::Received(_) => false,
                    Slot::Erased {
                        unresolved,
                        counted_lost,
                    } => {
                        if *unresolved > 0 {
                            *counted_lost = true;
                            true
                        } else {
                            false
                        }
                    }
                    Slot::Vacant => unreachable!("deadline for a vacant slot"),
                };
                if lost {
                    self.report.lost_packets += 1;
                }
                deadline = Some((d, if lost { Verdict::Lost } else { Verdict::Recovered }));
            }
            if let Some(r) = d.checked_sub(1) {
                if r >= self.first {
                    self.retire(r);
                }
            }
        }
        StepOutcome {
            time: t,
            resolved,
            deadline,
        }
    }

    /// Drops every trace of time `r`: resolved values, unresolved unknowns,
    /// and any equations still referencing them.
    fn retire(&mut self, r: u64) {
        let k = self.spec.k();
        let entry = self.entry_mut(r);
        if matches!(entry.slot, Slot::Erased { .. }) {
            for i in 0..k {
                self.elim.drop_var(r * k as u64 + i as u64);
            }
        }
        let entry = self.entry_mut(r);
        entry.slot = Slot::Vacant;
        entry.time = u64::MAX;
    }

    #[cfg(test)]
    fn pending_rows(&self) -> usize {
        self.elim.active_rows()
    }

    pub(crate) fn inconsistencies(&self) -> usize {
        self.elim.inconsistencies()
    }
}

/// Decodes a full trace against a seeded random source stream and returns the
/// loss accounting over every packet of the trace. The stream is flushed with
/// T clean slots past the end so every packet gets its full decoding window.
pub fn run(spec: &CodeSpec, trace: &ErasureTrace, source_seed: u64) -> LossReport {
    run_range(spec, trace, source_seed, 0, trace.len() as u64)
}

/// Shard variant: counts only deadlines in [count_from, count_to), processing
/// from 2(T+1) steps earlier so the elimination state warms up; parity
/// contributions from before the warmup are conditioned away (the shard
/// treats them as delivered). Shards tiled this way sum to the full run.
pub fn run_range(
    spec: &CodeSpec,
    trace: &ErasureTrace,
    source_seed: u64,
    count_from: u64,
    count_to: u64,
) -> LossReport {
    assert!(count_from <= count_to && count_to <= trace.len() as u64);
    let delay = spec.delay() as u64;
    let first = count_from.saturating_sub(2 * (delay + 1));
    let mut dec = Decoder::with_range(spec.clone(), first, count_from);
    let mut src = SourceStream::new(spec.field().clone(), spec.k(), source_seed);
    let k = spec.k();
    for t in first..count_to + delay {
        let erased = (t as usize) < trace.erased.len() && trace.erased[t as usize];
        let outcome = if erased {
            dec.step_erased()
        } else {
            let source = src.packet(t);
            dec.step_received(source, || {
                code::parity_with(spec, t, |tau| {
                    if tau < first {
                        vec![0; k]
                    } else {
                        src.packet(tau)
                    }
                })
            })
        };
        if cfg!(debug_assertions) {
            for &(tau, i, val) in &outcome.resolved {
                assert_eq!(val, src.packet(tau)[i], "decoder soundness at time {tau}");
            }
        }
    }
    debug_assert_eq!(dec.inconsistencies(), 0, "consistent data produced a contradiction");
    dec.report()
}
