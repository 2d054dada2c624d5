//! Experiment configuration: a JSON file merged with command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    Predict,
    Sample,
    Solve,
    FgumSim,
    BpThreshold,
    BpDecode,
    Qaoa,
    RegevVerify,
    Table1,
    CycleAudit,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Predict => "predict",
            Verb::Sample => "sample",
            Verb::Solve => "solve",
            Verb::FgumSim => "fgum-sim",
            Verb::BpThreshold => "bp-threshold",
            Verb::BpDecode => "bp-decode",
            Verb::Qaoa => "qaoa",
            Verb::RegevVerify => "regev-verify",
            Verb::Table1 => "table1",
            Verb::CycleAudit => "cycle-audit",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    #[default]
    JsonLines,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Budget {
    #[default]
    Smoke,
    Desk,
    Full,
}

/// A `(k, D)` pair, written `k,D` on the command line and `[k, D]` in JSON.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct KD {
    pub k: usize,
    pub d: usize,
}

impl From<(usize, usize)> for KD {
    fn from((k, d): (usize, usize)) -> Self {
        Self { k, d }
    }
}

impl From<KD> for (usize, usize) {
    fn from(kd: KD) -> Self {
        (kd.k, kd.d)
    }
}

impl FromStr for KD {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (k, d) = s
            .split_once([',', ':', 'x'])
            .ok_or_else(|| format!("expected k,D, got {s:?}"))?;
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
        Ok(Self {
            k: parse(k)?,
            d: parse(d)?,
        })
    }
}

impl fmt::Display for KD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k, self.d)
    }
}

/// Every knob of every verb. Fields left unset fall back to per-verb
/// defaults (or, for `table1`, to the budget tier).
#[derive(Clone, Debug, Default, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "xorsat-lab", version, about = "Max-k-XORSAT workbench")]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// What to run.
    #[arg(value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verb: Option<Verb>,

    /// JSON config file; flags given on the command line override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long = "D")]
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Block size (n = k·b variables, m = D·b constraints).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    /// Number of variables; must be divisible by k.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// `(k,D)` rows, e.g. `--grid 3,4 --grid 3,6`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<KD>>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Seeds for repeated runs, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,

    /// Existing instance file (from `sample`).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<PathBuf>,
    /// prange | turbo-prange | sa | greedy
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<u64>,
    /// Independent annealing restarts per instance.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sa_restarts: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_start: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_end: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Block-erasure rates, comma separated and increasing.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossover: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,

    /// Code length for the Regev verifier (≤ 6).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Code dimension for the Regev verifier; defaults to m/2.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// perfect | zero | interpolated:θ | random:strength
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoder: Option<String>,
    /// leaders | random | alpha:α
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub garbage: Option<usize>,

    /// Instances drawn by `cycle-audit`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<Budget>,

    /// Main output file (stdout if omitted).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Also append result records (JSON lines) here.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<PathBuf>,
    /// Log file for JSON-lines progress events (stderr if omitted).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
    /// Worker threads; XORSAT_LAB_THREADS caps this.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $over:ident; $($f:ident),* $(,)?) => {
        $( if $over.$f.is_some() { $base.$f = $over.$f; } )*
    };
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        serde_json::from_str(text).map_err(|e| anyhow::anyhow!("config: {e}"))
    }

    /// Fields set in `over` win.
    pub fn overlay(mut self, over: Self) -> Self {
        overlay!(self, over;
            verb, config, k, d, b, n, grid, seed, seeds, instance, solver, sweeps,
            sa_restarts, beta_start, beta_end, trials, rates, crossover, max_iters,
            population, p, restarts, m, dim, decoder, bias, garbage, samples, budget,
            output, format, records, log, threads,
        );
        self
    }

    /// Loads the config file named by `--config` (if any) under the flags.
    pub fn resolve(flags: Self) -> anyhow::Result<Self> {
        let merged = match &flags.config {
            Some(path) => Self::from_file(path)?.overlay(flags),
            None => flags,
        };
        merged.validate()?;
        Ok(merged)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.verb.is_none() {
            bail!("config.verb: no verb given");
        }
        if let (Some(n), Some(k), Some(b)) = (self.n, self.k, self.b) {
            if n != k * b {
                bail!("config.n: n={n} but k·b={}", k * b);
            }
        }
        if let (Some(n), Some(k)) = (self.n, self.k) {
            if k == 0 || n % k != 0 {
                bail!("config.n: n={n} is not a multiple of k={k}");
            }
        }
        if matches!(&self.seeds, Some(s) if s.is_empty()) {
            bail!("config.seeds: must be nonempty");
        }
        if matches!(&self.grid, Some(g) if g.is_empty()) {
            bail!("config.grid: must be nonempty");
        }
        if let Some(rates) = &self.rates {
            if rates.windows(2).any(|w| w[0] > w[1]) || rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
                bail!("config.rates: must be increasing values in [0,1]");
            }
        }
        if self.threads == Some(0) {
            bail!("config.threads: must be positive");
        }
        Ok(())
    }

    pub fn verb(&self) -> Verb {
        self.verb.expect("validated")
    }

    pub fn kd(&self) -> anyhow::Result<(usize, usize)> {
        match (self.k, self.d) {
            (Some(k), Some(d)) => Ok((k, d)),
            _ => bail!("config.k / config.D: both are required for {}", self.verb().name()),
        }
    }

    /// Block size from `b`, or from `n` and `k`.
    pub fn block_size(&self, default: usize) -> anyhow::Result<usize> {
        match (self.b, self.n, self.k) {
            (Some(b), _, _) => Ok(b),
            (None, Some(n), Some(k)) => Ok(n / k),
            _ => Ok(default),
        }
    }

    pub fn seed_list(&self) -> Vec<u64> {
        match (&self.seeds, self.seed) {
            (Some(s), _) => s.clone(),
            (None, Some(s)) => vec![s],
            (None, None) => vec![0],
        }
    }

    /// Worker count: flag or config, else all cores; capped by the env var.
    pub fn worker_threads(&self) -> usize {
        let cap = std::env::var("XORSAT_LAB_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&v| v > 0);
        let want = self
            .threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        cap.map_or(want, |c| want.min(c))
    }
}
