//! Property suites over randomly drawn codes: linearity of the encoder,
//! generator/stream agreement, monotonicity of recoverability, decoder
//! soundness, and trace reproducibility. Each runs 1000 cases.

use std::sync::OnceLock;

use proptest::prelude::*;

use streamcode::channel::{fritchman_trace, ErasureTrace, FritchmanParams};
use streamcode::code::{
    build_erlc, build_maxspan, build_rlc, truncated_generator, CodeSpec, SourceStream,
    StreamEncoder,
};
use streamcode::decode;
use streamcode::gf::{Fe, Field};
use streamcode::metrics::recoverable;

fn f16() -> Field {
    static FIELD: OnceLock<Field> = OnceLock::new();
    FIELD.get_or_init(|| Field::new(16).unwrap()).clone()
}

/// Construction parameters for a small code of any family, delay at most 6.
#[derive(Debug, Clone)]
enum Params {
    Embedded { u: usize, v: usize, delta: usize, delay: usize, seed: u64 },
    Repetition { b: usize, delay: usize, seed: u64 },
    Random { k: usize, extra: usize, delay: usize, seed: u64 },
}

fn build(params: &Params) -> CodeSpec {
    let f = f16();
    match *params {
        Params::Embedded { u, v, delta, delay, seed } => {
            build_erlc(u, v, delta, delay, &f, seed).unwrap()
        }
        Params::Repetition { b, delay, seed } => build_maxspan(b, delay, &f, seed).unwrap(),
        Params::Random { k, extra, delay, seed } => {
            build_rlc(k, k + extra, delay, &f, seed).unwrap()
        }
    }
}

fn any_params() -> impl Strategy<Value = Params> {
    prop_oneof![
        (1..=3usize, 0..=2usize, 2..=6usize, any::<u64>()).prop_flat_map(
            |(u, v, delay, seed)| (1..=delay)
                .prop_map(move |delta| Params::Embedded { u, v, delta, delay, seed })
        ),
        (1..=6usize, any::<u64>()).prop_flat_map(|(delay, seed)| (1..=delay)
            .prop_map(move |b| Params::Repetition { b, delay, seed })),
        (1..=3usize, 1..=2usize, 2..=6usize, any::<u64>()).prop_map(
            |(k, extra, delay, seed)| Params::Random { k, extra, delay, seed }
        ),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// A field combination of two source streams encodes to the same
    /// combination of their parities, packet by packet.
    #[test]
    fn parity_is_linear_in_the_source(
        params in any_params(),
        seed_x in any::<u64>(),
        seed_y in any::<u64>(),
        lambda in any::<Fe>(),
    ) {
        let spec = build(&params);
        let f = spec.field().clone();
        let k = spec.k();
        let mut src_x = SourceStream::new(f.clone(), k, seed_x);
        let mut src_y = SourceStream::new(f.clone(), k, seed_y);
        let mut enc_x = StreamEncoder::new(spec.clone());
        let mut enc_y = StreamEncoder::new(spec.clone());
        let mut enc_z = StreamEncoder::new(spec);
        for t in 0..5u64 {
            let x = src_x.packet(t);
            let y = src_y.packet(t);
            let z: Vec<Fe> = x.iter().zip(&y).map(|(&a, &b)| a ^ f.mul(lambda, b)).collect();
            let px = enc_x.push(x).unwrap();
            let py = enc_y.push(y).unwrap();
            let pz = enc_z.push(z).unwrap();
            let want: Vec<Fe> = px
                .parity
                .iter()
                .zip(&py.parity)
                .map(|(&a, &b)| a ^ f.mul(lambda, b))
                .collect();
            prop_assert_eq!(&pz.parity, &want, "at t={}", t);
        }
    }

    /// Multiplying the flattened source by the truncated generator gives the
    /// same wire symbols as streaming the packets through the encoder.
    #[test]
    fn generator_matrix_agrees_with_the_stream_encoder(
        params in any_params(),
        horizon in 1..=5usize,
        seed in any::<u64>(),
    ) {
        let spec = build(&params);
        let f = spec.field().clone();
        let g = truncated_generator(&spec, horizon);
        let mut src = SourceStream::new(f.clone(), spec.k(), seed);
        let flat: Vec<Fe> = (0..=horizon as u64).flat_map(|t| src.packet(t)).collect();
        let by_matrix = f.vec_mat(&flat, &g);
        let mut enc = StreamEncoder::new(spec);
        let mut by_stream = Vec::new();
        for t in 0..=horizon as u64 {
            let p = enc.push(src.packet(t)).unwrap();
            by_stream.extend(p.source);
            by_stream.extend(p.parity);
        }
        prop_assert_eq!(by_matrix, by_stream);
    }

    /// Recoverability is monotone: dropping an erasure never breaks recovery
    /// and adding one never enables it.
    #[test]
    fn recoverability_is_monotone_in_the_erasure_set(
        params in any_params(),
        mask in any::<u32>(),
    ) {
        let spec = build(&params);
        let t = spec.delay();
        let mut pattern: Vec<bool> = (0..=t).map(|i| mask >> i & 1 == 1).collect();
        pattern[0] = true;
        if recoverable(&spec, &pattern) {
            for i in 0..=t {
                if pattern[i] {
                    let mut fewer = pattern.clone();
                    fewer[i] = false;
                    prop_assert!(recoverable(&spec, &fewer), "dropping erasure {} broke it", i);
                }
            }
        } else {
            for i in 0..=t {
                if !pattern[i] {
                    let mut more = pattern.clone();
                    more[i] = true;
                    prop_assert!(!recoverable(&spec, &more), "adding erasure {} enabled it", i);
                }
            }
        }
    }

    /// On any trace the decoder counts each deadline once, never loses more
    /// packets than were erased, and (checked inside the decoder under debug
    /// assertions) only ever emits ground-truth symbols.
    #[test]
    fn decoder_is_sound_on_arbitrary_traces(
        params in any_params(),
        erased in prop::collection::vec(any::<bool>(), 30..60),
        source_seed in any::<u64>(),
    ) {
        let spec = build(&params);
        let erasures = erased.iter().filter(|&&e| e).count() as u64;
        let len = erased.len() as u64;
        let trace = ErasureTrace { erased, seed: 0, model_tag: "synthetic" };
        let report = decode::run(&spec, &trace, source_seed);
        prop_assert_eq!(report.total_packets, len);
        prop_assert!(report.lost_packets <= erasures);
        prop_assert!(report.late_recoveries <= report.lost_packets);
    }

    /// A trace is a pure function of its seed, and raising the good-state
    /// loss rate on the same seed only adds erasures.
    #[test]
    fn traces_are_reproducible_and_epsilon_coupled(
        n_error in 1..=4usize,
        alpha in 0.001..0.3f64,
        beta in 0.05..0.9f64,
        eps_lo in 0.0..0.2f64,
        eps_gap in 0.0..0.2f64,
        seed in any::<u64>(),
    ) {
        let make = |eps: f64| {
            let params = FritchmanParams { n_error_states: n_error, alpha, beta, epsilon: eps };
            fritchman_trace(&params, 1000, seed).unwrap()
        };
        let heavy = make(eps_lo + eps_gap);
        prop_assert_eq!(&heavy, &make(eps_lo + eps_gap));
        let light = make(eps_lo);
        prop_assert!(
            light.erased.iter().zip(&heavy.erased).all(|(&l, &h)| !l || h),
            "an erasure vanished when epsilon rose"
        );
    }
}
