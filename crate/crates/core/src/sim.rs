//! Experiment harness: sweeps coded streams over channel models and emits
//! stable CSV.
//!
//! Pairing discipline: the channel trace for a given trial is seeded
//! independently of the code and of ε, so every code at a given (ε, trial)
//! cell decodes the *same* trace, and sweeping ε only adds isolated erasures
//! on top of an identical burst process (the models draw burst structure and
//! isolated-loss coins from separate streams). Comparisons across codes and
//! across ε are therefore paired, which is what makes small loss differences
//! at 10⁻⁵ resolvable with one trace per cell.
//!
//! `n_states` everywhere in configs and CSV is the *total* number of Markov
//! states: 2 for the two-state model, N+1 for the N-error-state model.
//!
//! Every CSV starts with a `# config …` comment line that round-trips: the
//! key=value pairs parse back into the exact `ExperimentConfig` (floats are
//! printed in shortest round-trip form), so a result file is also a rerun
//! recipe.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num::rational::Ratio;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{
    burst_histogram, fritchman_trace, ge_trace, neg_binomial_pmf, ChannelError, ErasureTrace,
    FritchmanParams, GilbertElliottParams,
};
use crate::code::{parse_code, CodeChoice, CodeError};
use crate::decode;
use crate::fmt6;
use crate::metrics::{tradeoff_table, MetricsError};
use crate::seeds::derive;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("bad experiment config: {0}")]
    BadConfig(String),
    #[error("config header: {0}")]
    Header(String),
    #[error("unknown figure bundle `{0}`")]
    UnknownBundle(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Erasure channel family with its burst parameters; ε varies per experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    Ge { alpha: f64, beta: f64 },
    Fritchman { n_error_states: usize, alpha: f64, beta: f64 },
}

impl ChannelModel {
    pub fn tag(&self) -> &'static str {
        match self {
            ChannelModel::Ge { .. } => "ge",
            ChannelModel::Fritchman { .. } => "fritchman",
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            ChannelModel::Ge { alpha, .. } | ChannelModel::Fritchman { alpha, .. } => alpha,
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            ChannelModel::Ge { beta, .. } | ChannelModel::Fritchman { beta, .. } => beta,
        }
    }

    /// Number of error states in the chain (1 for the two-state model).
    pub fn n_error_states(&self) -> usize {
        match *self {
            ChannelModel::Ge { .. } => 1,
            ChannelModel::Fritchman { n_error_states, .. } => n_error_states,
        }
    }

    /// Total Markov states, the `n_states` reported in CSV.
    pub fn n_states_total(&self) -> usize {
        self.n_error_states() + 1
    }

    /// Builds the model from CSV/CLI fields; `n_states` is total states.
    pub fn from_parts(tag: &str, alpha: f64, beta: f64, n_states: usize) -> Result<Self, SimError> {
        match tag {
            "ge" => {
                if n_states != 2 {
                    return Err(SimError::BadConfig(format!(
                        "two-state model must have n_states=2, got {n_states}"
                    )));
                }
                Ok(ChannelModel::Ge { alpha, beta })
            }
            "fritchman" => {
                if n_states < 2 {
                    return Err(SimError::BadConfig(format!(
                        "n_states must be at least 2, got {n_states}"
                    )));
                }
                Ok(ChannelModel::Fritchman {
                    n_error_states: n_states - 1,
                    alpha,
                    beta,
                })
            }
            other => Err(SimError::BadConfig(format!("unknown model `{other}`"))),
        }
    }

    pub fn trace(&self, epsilon: f64, length: usize, seed: u64) -> Result<ErasureTrace, SimError> {
        Ok(match *self {
            ChannelModel::Ge { alpha, beta } => ge_trace(
                &GilbertElliottParams { alpha, beta, epsilon },
                length as u64,
                seed,
            )?,
            ChannelModel::Fritchman {
                n_error_states,
                alpha,
                beta,
            } => fritchman_trace(
                &FritchmanParams {
                    n_error_states,
                    alpha,
                    beta,
                    epsilon,
                },
                length as u64,
                seed,
            )?,
        })
    }

    /// Probability a burst has the given length under this model.
    pub fn burst_pmf(&self, length: usize) -> f64 {
        neg_binomial_pmf(self.n_error_states(), self.beta(), length)
    }
}

/// Full description of one sweep: codes × ε grid × trials on one channel.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ChannelModel,
    pub codes: Vec<CodeChoice>,
    pub eps_grid: Vec<f64>,
    pub channel_len: usize,
    pub trials: u64,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::BadConfig(msg));
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return bad(format!("name `{}` must be [A-Za-z0-9_-]+", self.name));
        }
        if self.codes.is_empty() {
            return bad("at least one code is required".into());
        }
        if self.eps_grid.is_empty() {
            return bad("epsilon grid is empty".into());
        }
        for &e in &self.eps_grid {
            if !(0.0..1.0).contains(&e) {
                return bad(format!("epsilon {e} outside [0, 1)"));
            }
        }
        if self.channel_len < 10_000 {
            return bad(format!(
                "channel_len {} below the 10000 floor for meaningful rates",
                self.channel_len
            ));
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        Ok(())
    }

    /// The `# config` comment line; `parse_config_header` inverts it exactly.
    pub fn config_line(&self) -> String {
        let eps = self
            .eps_grid
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let codes = self
            .codes
            .iter()
            .map(|c| c.spec_string())
            .collect::<Vec<_>>()
            .join(";");
        format!(
            "# config name={} model={} alpha={} beta={} n_states={} eps={} len={} trials={} seed={} codes={}",
            self.name,
            self.model.tag(),
            self.model.alpha(),
            self.model.beta(),
            self.model.n_states_total(),
            eps,
            self.channel_len,
            self.trials,
            self.master_seed,
            codes,
        )
    }
}

/// Aggregated result for one (ε, code) cell.
#[derive(Debug, Clone)]
pub struct SimRow {
    pub eps_idx: usize,
    pub epsilon: f64,
    pub code_idx: usize,
    pub uncoded_loss: f64,
    pub coded_loss: f64,
    pub stderr: f64,
    pub lost: u64,
    pub total: u64,
    pub late_recoveries: u64,
    pub bursts_observed: u64,
    pub max_burst: usize,
}

#[derive(Debug)]
pub struct SimReport {
    pub config: ExperimentConfig,
    pub rows: Vec<SimRow>,
}

impl SimReport {
    pub fn row(&self, eps_idx: usize, code_idx: usize) -> &SimRow {
        &self.rows[eps_idx * self.config.codes.len() + code_idx]
    }

    pub fn loss_csv(&self) -> String {
        let cfg = &self.config;
        let mut out = String::new();
        out.push_str(&cfg.config_line());
        out.push('\n');
        out.push_str(
            "model,alpha,beta,n_states,epsilon,code,u,v,delta,T,R_num,R_den,channel_len,\
             master_seed,uncoded_loss,coded_loss,stderr,bursts_observed,max_burst\n",
        );
        for row in &self.rows {
            let code = &cfg.codes[row.code_idx];
            let (u, v, delta, t, rn, rd) = match code {
                CodeChoice::Uncoded => (None, None, None, None, 1u64, 1u64),
                CodeChoice::Coded(s) => {
                    let (rn, rd) = s.rate();
                    (
                        s.u(),
                        s.v(),
                        s.delta(),
                        Some(s.delay()),
                        rn as u64,
                        rd as u64,
                    )
                }
            };
            let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},\"{}\",{},{},{},{},{},{},{},{},{},{},{},{},{}",
                cfg.model.tag(),
                cfg.model.alpha(),
                cfg.model.beta(),
                cfg.model.n_states_total(),
                row.epsilon,
                code.spec_string(),
                opt(u),
                opt(v),
                opt(delta),
                opt(t),
                rn,
                rd,
                cfg.channel_len,
                cfg.master_seed,
                fmt6(row.uncoded_loss),
                fmt6(row.coded_loss),
                fmt6(row.stderr),
                row.bursts_observed,
                row.max_burst,
            )
            .unwrap();
        }
        out
    }
}

/// Reconstructs the experiment from a CSV `# config` line (first line of the
/// file or the line itself).
pub fn parse_config_header(text: &str) -> Result<ExperimentConfig, SimError> {
    let line = text
        .lines()
        .find(|l| l.starts_with("# config "))
        .ok_or_else(|| SimError::Header("no `# config` line found".into()))?;
    let mut fields = std::collections::HashMap::new();
    for pair in line.trim_start_matches("# config ").split_whitespace() {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| SimError::Header(format!("malformed pair `{pair}`")))?;
        if fields.insert(k.to_string(), v.to_string()).is_some() {
            return Err(SimError::Header(format!("duplicate key `{k}`")));
        }
    }
    let get = |k: &str| {
        fields
            .get(k)
            .cloned()
            .ok_or_else(|| SimError::Header(format!("missing key `{k}`")))
    };
    let num = |k: &str| -> Result<f64, SimError> {
        get(k)?
            .parse()
            .map_err(|_| SimError::Header(format!("bad number for `{k}`")))
    };
    let int = |k: &str| -> Result<u64, SimError> {
        get(k)?
            .parse()
            .map_err(|_| SimError::Header(format!("bad integer for `{k}`")))
    };
    let model = ChannelModel::from_parts(&get("model")?, num("alpha")?, num("beta")?, int("n_states")? as usize)?;
    let master_seed = int("seed")?;
    let mut eps_grid = Vec::new();
    for part in get("eps")?.split(',') {
        eps_grid.push(
            part.parse()
                .map_err(|_| SimError::Header(format!("bad epsilon `{part}`")))?,
        );
    }
    let mut codes = Vec::new();
    for part in get("codes")?.split(';') {
        // Spec strings in headers are canonical: they embed m= and seed=, so
        // the defaults here never shape the outcome.
        codes.push(parse_code(part, 16, master_seed)?);
    }
    let config = ExperimentConfig {
        name: get("name")?,
        model,
        codes,
        eps_grid,
        channel_len: int("len")? as usize,
        trials: int("trials")?,
        master_seed,
    };
    config.validate()?;
    Ok(config)
}

/// Ten log-spaced points covering the sweep range used by the bundles.
pub fn default_eps_grid() -> Vec<f64> {
    let (lo, hi) = (1e-3f64, 2e-2f64);
    let n = 10;
    (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

struct Cell {
    lost: u64,
    total: u64,
    late: u64,
    erased: u64,
    bursts: u64,
    max_burst: usize,
}

/// Runs the sweep. Work is parallel over (ε, code, trial) cells; results are
/// deterministic for a fixed config regardless of thread count.
pub fn run_experiment(config: ExperimentConfig) -> Result<SimReport, SimError> {
    config.validate()?;
    let n_codes = config.codes.len();
    let cells: Vec<(usize, usize, u64)> = (0..config.eps_grid.len())
        .flat_map(|e| (0..n_codes).map(move |c| (e, c)))
        .flat_map(|(e, c)| (0..config.trials).map(move |t| (e, c, t)))
        .collect();
    let results: Result<Vec<Cell>, SimError> = cells
        .par_iter()
        .map(|&(e_idx, c_idx, trial)| {
            let trace_seed = derive(config.master_seed, "trace", &[trial]);
            let trace = config
                .model
                .trace(config.eps_grid[e_idx], config.channel_len, trace_seed)?;
            let hist = burst_histogram(&trace);
            let bursts = hist.values().sum();
            let max_burst = hist.keys().next_back().copied().unwrap_or(0);
            let erased = trace.erased.iter().filter(|&&x| x).count() as u64;
            let (lost, total, late) = match &config.codes[c_idx] {
                CodeChoice::Uncoded => (erased, trace.len() as u64, 0),
                CodeChoice::Coded(spec) => {
                    let source_seed = derive(
                        config.master_seed,
                        "source",
                        &[e_idx as u64, c_idx as u64, trial],
                    );
                    let report = decode::run(spec, &trace, source_seed);
                    (
                        report.lost_packets,
                        report.total_packets,
                        report.late_recoveries,
                    )
                }
            };
            Ok(Cell {
                lost,
                total,
                late,
                erased,
                bursts,
                max_burst,
            })
        })
        .collect();
    let results = results?;
    let trials = config.trials as usize;
    let mut rows = Vec::with_capacity(config.eps_grid.len() * n_codes);
    for e_idx in 0..config.eps_grid.len() {
        for c_idx in 0..n_codes {
            let base = (e_idx * n_codes + c_idx) * trials;
            let cell_group = &results[base..base + trials];
            let lost: u64 = cell_group.iter().map(|c| c.lost).sum();
            let total: u64 = cell_group.iter().map(|c| c.total).sum();
            let late: u64 = cell_group.iter().map(|c| c.late).sum();
            let erased: u64 = cell_group.iter().map(|c| c.erased).sum();
            let bursts: u64 = cell_group.iter().map(|c| c.bursts).sum();
            let max_burst = cell_group.iter().map(|c| c.max_burst).max().unwrap_or(0);
            let p = if total == 0 { 0.0 } else { lost as f64 / total as f64 };
            let stderr = if total == 0 {
                0.0
            } else {
                (p * (1.0 - p) / total as f64).sqrt()
            };
            rows.push(SimRow {
                eps_idx: e_idx,
                epsilon: config.eps_grid[e_idx],
                code_idx: c_idx,
                uncoded_loss: erased as f64
                    / (config.channel_len as u64 * config.trials) as f64,
                coded_loss: p,
                stderr,
                lost,
                total,
                late_recoveries: late,
                bursts_observed: bursts,
                max_burst,
            });
        }
    }
    Ok(SimReport { config, rows })
}

/// Burst-length histogram CSV measured on the pure burst process (ε = 0),
/// with the model's burst-length pmf alongside for comparison.
pub fn histogram_csv(
    model: &ChannelModel,
    channel_len: usize,
    trials: u64,
    master_seed: u64,
) -> Result<String, SimError> {
    if channel_len < 10_000 {
        return Err(SimError::BadConfig(format!(
            "channel_len {channel_len} below the 10000 floor for meaningful rates"
        )));
    }
    let mut merged = std::collections::BTreeMap::new();
    for trial in 0..trials {
        let trace = model.trace(0.0, channel_len, derive(master_seed, "trace", &[trial]))?;
        for (len, count) in burst_histogram(&trace) {
            *merged.entry(len).or_insert(0u64) += count;
        }
    }
    let mut out = format!(
        "# config model={} alpha={} beta={} n_states={} eps=0 len={} trials={} seed={}\n",
        model.tag(),
        model.alpha(),
        model.beta(),
        model.n_states_total(),
        channel_len,
        trials,
        master_seed,
    );
    out.push_str("burst_length,count,expected_pmf\n");
    for (len, count) in merged {
        writeln!(out, "{},{},{}", len, count, fmt6(model.burst_pmf(len))).unwrap();
    }
    Ok(out)
}

pub fn bundle_names() -> [&'static str; 5] {
    ["ge_t12", "ge_t50", "fritch_t40", "fritch_t80", "tradeoff"]
}

fn bundle_config(
    name: &str,
    len: usize,
    master_seed: u64,
) -> Result<Option<ExperimentConfig>, SimError> {
    let (model, code_strs): (ChannelModel, Vec<&str>) = match name {
        "ge_t12" => (
            ChannelModel::Ge { alpha: 5e-4, beta: 0.5 },
            vec![
                "uncoded",
                "rlc:k=12,n=23,T=12",
                "maxspan:B=11,T=12",
                "erlc:u=11,v=1,delta=10,T=12",
                "erlc:u=11,v=1,delta=11,T=12",
            ],
        ),
        "ge_t50" => (
            ChannelModel::Ge { alpha: 1e-5, beta: 0.1 },
            vec![
                "uncoded",
                "rlc:k=50,n=99,T=50",
                "maxspan:B=49,T=50",
                "erlc:u=49,v=1,delta=36,T=50",
                "erlc:u=49,v=1,delta=44,T=50",
            ],
        ),
        "fritch_t40" => (
            ChannelModel::Fritchman { n_error_states: 8, alpha: 1e-5, beta: 0.5 },
            vec![
                "uncoded",
                "rlc:k=40,n=79,T=40",
                "maxspan:B=39,T=40",
                "erlc:u=39,v=1,delta=32,T=40",
                "erlc:u=39,v=1,delta=36,T=40",
            ],
        ),
        "fritch_t80" => (
            ChannelModel::Fritchman { n_error_states: 19, alpha: 1e-5, beta: 0.5 },
            vec![
                "uncoded",
                "rlc:k=80,n=159,T=80",
                "maxspan:B=79,T=80",
                "erlc:u=79,v=1,delta=48,T=80",
                "erlc:u=79,v=1,delta=52,T=80",
                "erlc:u=79,v=1,delta=60,T=80",
            ],
        ),
        "tradeoff" => return Ok(None),
        other => return Err(SimError::UnknownBundle(other.to_string())),
    };
    let codes = code_strs
        .iter()
        .map(|s| parse_code(s, 16, master_seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(ExperimentConfig {
        name: name.to_string(),
        model,
        codes,
        eps_grid: default_eps_grid(),
        channel_len: len,
        trials: 1,
        master_seed,
    }))
}

fn tradeoff_csv(delay: usize) -> Result<String, SimError> {
    let mut out = format!("# config name=tradeoff T={delay} rates=1/2,3/5,7/10\n");
    out.push_str("R_num,R_den,delta,c_T,d_T,bound_dT,slack\n");
    for (num, den) in [(1i64, 2i64), (3, 5), (7, 10)] {
        for row in tradeoff_table(Ratio::new(num, den), delay)? {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                num, den, row.delta, row.c_t, row.d_t, row.bound_dt, row.slack
            )
            .unwrap();
        }
    }
    Ok(out)
}

/// Writes the CSV set for one named figure bundle and returns the paths.
/// Sim bundles produce a loss sweep and a burst histogram; `tradeoff` is
/// analytic. `full` selects the long channel (10⁷ vs 10⁶ slots); an explicit
/// `len_override` wins over both.
pub fn figure_bundle(
    name: &str,
    out_dir: &Path,
    full: bool,
    len_override: Option<usize>,
    master_seed: u64,
) -> Result<Vec<PathBuf>, SimError> {
    std::fs::create_dir_all(out_dir)?;
    let len = len_override.unwrap_or(if full { 10_000_000 } else { 1_000_000 });
    let mut written = Vec::new();
    match bundle_config(name, len, master_seed)? {
        None => {
            let path = out_dir.join("tradeoff.csv");
            std::fs::write(&path, tradeoff_csv(80)?)?;
            written.push(path);
        }
        Some(config) => {
            let hist = histogram_csv(&config.model, config.channel_len, config.trials, master_seed)?;
            let report = run_experiment(config)?;
            let path = out_dir.join(format!("{name}.csv"));
            std::fs::write(&path, report.loss_csv())?;
            written.push(path);
            let hist_path = out_dir.join(format!("{name}_hist.csv"));
            std::fs::write(&hist_path, hist)?;
            written.push(hist_path);
        }
    }
    Ok(written)
}
