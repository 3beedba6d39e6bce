//! Command-line surface. Every run echoes its fully-resolved configuration
//! as a `# config …` CSV comment (stdout and any output file), so results
//! are reproducible from the artifact alone. Check subcommands print one
//! machine-readable `PASS …`/`FAIL …` line and exit nonzero on failure.
//!
//! `STREAMCODE_FIELD_M` (8 or 16) overrides the default symbol field;
//! an explicit `m=` in a code spec or `--field-m` wins over the env.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use num::rational::Ratio;
use rayon::prelude::*;

use crate::channel::{adversary_patterns, periodic_trace, AdversaryParams, ErasureTrace};
use crate::code::{parse_code, CodeChoice, CodeSpec, DEFAULT_CODE_SEED};
use crate::decode;
use crate::metrics::{
    analyze, column_distance_oracle, column_span_oracle, distance_oracle_cost, tradeoff_table,
    MetricReport,
};
use crate::seeds::derive;
use crate::sim::{
    default_eps_grid, figure_bundle, histogram_csv, run_experiment, ChannelModel,
    ExperimentConfig,
};

/// Probe budget above which brute-force distance scans are refused.
const ORACLE_PROBE_BUDGET: u128 = 5_000_000;

#[derive(Parser, Debug)]
#[command(
    name = "streamcode",
    version,
    about = "Low-delay streaming erasure codes: metrics, simulation, and checks"
)]
pub struct Cli {
    /// Master seed; code sampling and channel traces derive from it.
    #[arg(long, global = true, default_value_t = DEFAULT_CODE_SEED)]
    pub seed: u64,
    /// Worker-thread cap for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Closed-form and (optionally) measured reliability metrics for one
    /// embedded code.
    Metrics {
        /// Urgent-group width.
        #[arg(long)]
        u: usize,
        /// Deferred-group width.
        #[arg(long)]
        v: usize,
        /// Parity shift of the urgent combiner.
        #[arg(long)]
        delta: usize,
        /// Decoding delay.
        #[arg(long = "T")]
        delay: usize,
        /// Field size exponent (default from STREAMCODE_FIELD_M, else 16).
        #[arg(long)]
        field_m: Option<u32>,
        /// Measure span (and distance, when affordable) by erasure probes.
        #[arg(long)]
        oracle: bool,
        /// Distance-scan weight cap; forces the scan even when expensive.
        #[arg(long)]
        distance_cap: Option<usize>,
        /// Write the CSV here as well as stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Loss-rate sweep of one or more codes over a channel model.
    Simulate {
        /// Channel model: ge or fritchman.
        #[arg(long)]
        model: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Total Markov states (2 for ge; N+1 for fritchman).
        #[arg(long, default_value_t = 2)]
        n_states: usize,
        /// Comma-separated ε values (default: 10 log-spaced in [1e-3, 2e-2]).
        #[arg(long)]
        eps_grid: Option<String>,
        /// Channel length per trial.
        #[arg(long, default_value_t = 1_000_000)]
        len: usize,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        /// Code specs, e.g. erlc:u=11,v=1,delta=10,T=12 rlc:k=12,n=23,T=12.
        #[arg(long, num_args = 1.., required = true)]
        codes: Vec<String>,
        /// Experiment name recorded in the config header.
        #[arg(long, default_value = "sim")]
        name: String,
        /// Write the loss CSV here (stdout otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Burst-histogram side file (default: derived from --out).
        #[arg(long)]
        hist_out: Option<PathBuf>,
    },
    /// Span/distance tradeoff table against the rate bound.
    Tradeoff {
        /// Rates as p/q or decimals, e.g. --R 1/2 --R 0.6.
        #[arg(long = "R", num_args = 1.., default_values = ["1/2", "3/5", "7/10"])]
        rates: Vec<String>,
        #[arg(long = "T", default_value_t = 80)]
        delay: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Burst-length histogram of a channel's pure burst process.
    Histogram {
        #[arg(long)]
        model: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 2)]
        n_states: usize,
        #[arg(long, default_value_t = 1_000_000)]
        len: usize,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode every admissible trace of a windowed burst/isolated adversary.
    AdversaryCheck {
        /// Code spec string.
        #[arg(long)]
        code: String,
        /// Longest admissible burst per window.
        #[arg(long = "B")]
        burst: usize,
        /// Most isolated erasures per window.
        #[arg(long = "N")]
        isolated: usize,
        /// Window length (default: T+1).
        #[arg(long = "W")]
        window: Option<usize>,
        /// Trace length to enumerate (default: 2(T+1)).
        #[arg(long)]
        horizon: Option<usize>,
        /// Enumeration budget.
        #[arg(long, default_value_t = 5_000_000)]
        cap: u64,
    },
    /// Replay the worst periodic pattern the code's metrics promise it
    /// survives; expects zero loss.
    PeriodicCheck {
        /// Code spec string.
        #[arg(long)]
        code: String,
        /// Periods to replay (at least 100).
        #[arg(long, default_value_t = 200)]
        periods: usize,
    },
    /// Regenerate a named experiment bundle as CSV files.
    Figure {
        /// One of: ge_t12, ge_t50, fritch_t40, fritch_t80, tradeoff.
        name: String,
        #[arg(long, default_value = "figures")]
        out_dir: PathBuf,
        /// Full-scale channel length (10^7 instead of 10^6).
        #[arg(long)]
        full: bool,
        /// Channel-length override.
        #[arg(long)]
        len: Option<usize>,
    },
}

/// Default field exponent: STREAMCODE_FIELD_M when set, else 16.
fn env_field_m() -> Result<u32> {
    match std::env::var("STREAMCODE_FIELD_M") {
        Err(_) => Ok(16),
        Ok(s) => match s.parse() {
            Ok(m @ (8 | 16)) => Ok(m),
            _ => bail!("STREAMCODE_FIELD_M must be 8 or 16, got `{s}`"),
        },
    }
}

fn parse_rate(s: &str) -> Result<Ratio<i64>> {
    let bad = || format!("rate `{s}` is not p/q or a decimal in (0, 1)");
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.parse().with_context(bad)?;
        let q: i64 = q.parse().with_context(bad)?;
        if q <= 0 {
            bail!(bad());
        }
        return Ok(Ratio::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            bail!(bad());
        }
        let num: i64 = format!("{whole}{frac}").parse().with_context(bad)?;
        return Ok(Ratio::new(num, 10i64.pow(frac.len() as u32)));
    }
    Ok(Ratio::from_integer(s.parse().with_context(bad)?))
}

fn parse_eps_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("bad epsilon `{p}`"))
        })
        .collect()
}

fn write_output(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        None => print!("{text}"),
        Some(path) => {
            std::fs::write(path, text)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

/// The coded spec behind a CLI code string, or an error for `uncoded`.
fn coded_spec(input: &str, field_m: u32, seed: u64) -> Result<CodeSpec> {
    match parse_code(input, field_m, seed)? {
        CodeChoice::Coded(spec) => Ok(*spec),
        CodeChoice::Uncoded => bail!("`{input}` carries no parity to check"),
    }
}

/// Runs the distance scan only when its probe count fits the budget; an
/// explicit cap insists (and errors when even that is infeasible).
fn distance_scan_cap(delay: usize, explicit: Option<usize>) -> Result<Option<usize>> {
    let cap = explicit.unwrap_or(delay + 1);
    let cost = distance_oracle_cost(delay, cap);
    if cost > ORACLE_PROBE_BUDGET {
        if explicit.is_some() {
            bail!(
                "distance scan needs about {cost} recoverability probes \
                 (budget {ORACLE_PROBE_BUDGET}); lower --distance-cap"
            );
        }
        eprintln!(
            "note: skipping the distance scan (about {cost} probes); \
             pass --distance-cap to force a bounded scan"
        );
        return Ok(None);
    }
    Ok(Some(cap))
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        // Best-effort: the global pool can only be sized once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let seed = cli.seed;
    match cli.cmd {
        Cmd::Metrics {
            u,
            v,
            delta,
            delay,
            field_m,
            oracle,
            distance_cap,
            out,
        } => {
            let m = match field_m {
                Some(m) => m,
                None => env_field_m()?,
            };
            let field = crate::gf::Field::new(m)?;
            let spec = crate::code::build_erlc(u, v, delta, delay, &field, seed)?;
            let d_cap = if oracle {
                distance_scan_cap(delay, distance_cap)?
            } else {
                None
            };
            let report = analyze(&spec, oracle, d_cap);
            let mut text = format!(
                "# config cmd=metrics u={u} v={v} delta={delta} T={delay} m={m} seed={seed} \
                 oracle={oracle} distance_cap={}\n",
                d_cap.map(|c| c.to_string()).unwrap_or_default(),
            );
            text.push_str(MetricReport::csv_header());
            text.push('\n');
            text.push_str(&report.csv_row());
            text.push('\n');
            print!("{text}");
            if let Some(path) = out {
                std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Cmd::Simulate {
            model,
            alpha,
            beta,
            n_states,
            eps_grid,
            len,
            trials,
            codes,
            name,
            out,
            hist_out,
        } => {
            let field_m = env_field_m()?;
            let model = ChannelModel::from_parts(&model, alpha, beta, n_states)?;
            let eps = match eps_grid {
                Some(s) => parse_eps_grid(&s)?,
                None => default_eps_grid(),
            };
            let codes = codes
                .iter()
                .map(|s| parse_code(s, field_m, seed).map_err(Into::into))
                .collect::<Result<Vec<_>>>()?;
            let config = ExperimentConfig {
                name,
                model,
                codes,
                eps_grid: eps,
                channel_len: len,
                trials,
                master_seed: seed,
            };
            config.validate()?;
            if out.is_some() {
                // Echo the header on stdout; in stdout mode the CSV carries it.
                println!("{}", config.config_line());
            }
            let shown = trials.min(8);
            let derived: Vec<String> = (0..shown)
                .map(|t| derive(seed, "trace", &[t]).to_string())
                .collect();
            println!("# derived trace_seeds={}", derived.join(","));
            let hist_path = hist_out.or_else(|| {
                out.as_ref().map(|p| {
                    let stem = p.file_stem().unwrap_or_default().to_string_lossy();
                    p.with_file_name(format!("{stem}_hist.csv"))
                })
            });
            if let Some(path) = &hist_path {
                let hist = histogram_csv(&config.model, config.channel_len, trials, seed)?;
                std::fs::write(path, hist)
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {}", path.display());
            }
            let report = run_experiment(config)?;
            write_output(&report.loss_csv(), out.as_deref())?;
            Ok(())
        }
        Cmd::Tradeoff { rates, delay, out } => {
            let mut text = format!(
                "# config cmd=tradeoff rates={} T={delay} seed={seed}\n",
                rates.join(",")
            );
            text.push_str("R_num,R_den,delta,c_T,d_T,bound_dT,slack\n");
            for r in &rates {
                let rate = parse_rate(r)?;
                for row in tradeoff_table(rate, delay)? {
                    writeln!(
                        text,
                        "{},{},{},{},{},{},{}",
                        rate.numer(),
                        rate.denom(),
                        row.delta,
                        row.c_t,
                        row.d_t,
                        row.bound_dt,
                        row.slack
                    )
                    .unwrap();
                }
            }
            write_output(&text, out.as_deref())
        }
        Cmd::Histogram {
            model,
            alpha,
            beta,
            n_states,
            len,
            trials,
            out,
        } => {
            let model = ChannelModel::from_parts(&model, alpha, beta, n_states)?;
            let text = histogram_csv(&model, len, trials, seed)?;
            write_output(&text, out.as_deref())
        }
        Cmd::AdversaryCheck {
            code,
            burst,
            isolated,
            window,
            horizon,
            cap,
        } => {
            let spec = coded_spec(&code, env_field_m()?, seed)?;
            let delay = spec.delay();
            let window = window.unwrap_or(delay + 1);
            let horizon = horizon.unwrap_or(2 * (delay + 1));
            let params = AdversaryParams {
                burst,
                isolated,
                window,
            };
            println!(
                "# config cmd=adversary-check code={} B={burst} N={isolated} W={window} \
                 horizon={horizon} cap={cap} seed={seed}",
                spec.spec_string()
            );
            let patterns = adversary_patterns(&params, horizon, cap)?;
            let failing = patterns.par_iter().find_first(|pattern| {
                let trace = ErasureTrace {
                    erased: (*pattern).clone(),
                    seed: 0,
                    model_tag: "adversary",
                };
                decode::run(&spec, &trace, seed).lost_packets > 0
            });
            match failing {
                None => {
                    println!(
                        "PASS adversary code={} B={burst} N={isolated} W={window} \
                         horizon={horizon} patterns={}",
                        spec.spec_string(),
                        patterns.len()
                    );
                    Ok(())
                }
                Some(pattern) => {
                    let trace = ErasureTrace {
                        erased: pattern.clone(),
                        seed: 0,
                        model_tag: "adversary",
                    };
                    println!(
                        "FAIL adversary code={} B={burst} N={isolated} W={window} \
                         horizon={horizon} pattern={}",
                        spec.spec_string(),
                        trace.rle_string()
                    );
                    bail!("adversary check failed");
                }
            }
        }
        Cmd::PeriodicCheck { code, periods } => {
            if periods < 100 {
                bail!("need at least 100 periods for a meaningful replay, got {periods}");
            }
            let spec = coded_spec(&code, env_field_m()?, seed)?;
            let delay = spec.delay();
            let report = analyze(&spec, false, None);
            let (c_t, d_t) = match report.c_closed.zip(report.d_closed) {
                Some(pair) => pair,
                None => {
                    // No closed form for this family/regime: measure.
                    let cap = distance_scan_cap(delay, None)?.ok_or_else(|| {
                        anyhow::anyhow!("distance scan infeasible; no metrics to replay")
                    })?;
                    let c = column_span_oracle(&spec);
                    let d = column_distance_oracle(&spec, cap)
                        .ok_or_else(|| anyhow::anyhow!("no failing pattern within the cap"))?;
                    (c, d)
                }
            };
            println!(
                "# config cmd=periodic-check code={} c_T={c_t} d_T={d_t} periods={periods} \
                 seed={seed}",
                spec.spec_string()
            );
            let trace = periodic_trace(c_t, d_t, delay, periods)?;
            let loss = decode::run(&spec, &trace, seed);
            if loss.lost_packets == 0 {
                println!(
                    "PASS periodic code={} c_T={c_t} d_T={d_t} periods={periods} packets={}",
                    spec.spec_string(),
                    loss.total_packets
                );
                Ok(())
            } else {
                println!(
                    "FAIL periodic code={} c_T={c_t} d_T={d_t} periods={periods} lost={} of {}",
                    spec.spec_string(),
                    loss.lost_packets,
                    loss.total_packets
                );
                bail!("periodic check failed");
            }
        }
        Cmd::Figure {
            name,
            out_dir,
            full,
            len,
        } => {
            println!(
                "# config cmd=figure name={name} out_dir={} full={full} len={} seed={seed}",
                out_dir.display(),
                len.map(|l| l.to_string()).unwrap_or_default(),
            );
            let written = figure_bundle(&name, &out_dir, full, len, seed)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}
