//! Table reproduction: one row of solver scores per `(k, D)`.

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;
use xorsat_core::bp::{dqi_bp_score, DEConfig};
use xorsat_core::ensemble::sample_instance;
use xorsat_core::{rng, solvers, theory};
use xorsat_quantum::qaoa::{optimize_path, OptimizeOptions};

use crate::config::Budget;
use crate::reference::{self, Column};

/// Frozen knobs of a budget tier.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetSpec {
    pub budget: Budget,
    /// Number of variables; `b = n / k`.
    pub n: usize,
    pub seeds: usize,
    pub sa_sweeps: u64,
    pub sa_restarts: u32,
    pub de: DEConfig,
    pub qaoa_p: usize,
    pub qaoa_restarts: usize,
}

impl BudgetSpec {
    pub fn of(budget: Budget) -> Self {
        match budget {
            Budget::Smoke => Self {
                budget,
                n: 840,
                seeds: 2,
                sa_sweeps: 200,
                sa_restarts: 1,
                de: DEConfig {
                    population_size: 10_000,
                    max_iters: 400,
                    bisection_tol: 2e-3,
                    stagnation_window: 100,
                    ..DEConfig::default()
                },
                qaoa_p: 1,
                qaoa_restarts: 2,
            },
            Budget::Desk => Self {
                budget,
                n: 2520,
                seeds: 20,
                sa_sweeps: 10_000,
                sa_restarts: 4,
                de: DEConfig::default(),
                qaoa_p: 4,
                qaoa_restarts: 4,
            },
            Budget::Full => Self {
                budget,
                n: 2520,
                seeds: 20,
                sa_sweeps: 1_000_000,
                sa_restarts: 4,
                de: DEConfig {
                    bisection_tol: 2.5e-4,
                    ..DEConfig::default()
                },
                qaoa_p: 10,
                qaoa_restarts: 8,
            },
        }
    }

    /// Tolerance against the published values that this tier is expected to meet.
    pub fn tolerance(&self) -> f64 {
        match self.budget {
            Budget::Smoke => 0.03,
            Budget::Desk | Budget::Full => 0.005,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Row {
    pub k: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub prange_analytic: f64,
    pub prange_empirical: f64,
    pub simulated_annealing: f64,
    pub dqi_bp: f64,
    pub regev_fgum: f64,
    pub turbo_prange: f64,
    pub qaoa: f64,
    pub qaoa_p: usize,
    pub bold: String,
    pub reference_bold: String,
    pub bold_matches: bool,
}

impl Table1Row {
    pub const HEADER: [&'static str; 13] = [
        "k",
        "D",
        "prange_analytic",
        "prange_empirical",
        "simulated_annealing",
        "dqi_bp",
        "regev_fgum",
        "turbo_prange",
        "qaoa",
        "qaoa_p",
        "bold",
        "reference_bold",
        "bold_matches",
    ];

    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.d.to_string(),
            format!("{:.5}", self.prange_analytic),
            format!("{:.5}", self.prange_empirical),
            format!("{:.5}", self.simulated_annealing),
            format!("{:.5}", self.dqi_bp),
            format!("{:.5}", self.regev_fgum),
            format!("{:.5}", self.turbo_prange),
            format!("{:.5}", self.qaoa),
            self.qaoa_p.to_string(),
            self.bold.clone(),
            self.reference_bold.clone(),
            self.bold_matches.to_string(),
        ]
    }
}

/// Bold column among the five compared methods.
pub fn bold_of(prange: f64, sa: f64, dqi_bp: f64, fgum: f64, qaoa: f64) -> Column {
    reference::best(&[
        (Column::Prange, prange),
        (Column::SimulatedAnnealing, sa),
        (Column::DqiBp, dqi_bp),
        (Column::RegevFgum, fgum),
        (Column::Qaoa, qaoa),
    ])
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean Prange and Turbo Prange scores over `seeds` fresh instances.
pub fn empirical_prange(k: usize, d: usize, n: usize, seeds: usize, seed: u64) -> anyhow::Result<(f64, f64)> {
    if n % k != 0 {
        bail!("n={n} is not a multiple of k={k}");
    }
    let scores = (0..seeds as u64)
        .into_par_iter()
        .map(|i| {
            let s = rng::child_seed(seed, i);
            let inst = sample_instance(k, d, n / k, s)?;
            Ok((
                solvers::prange(&inst, s).score,
                solvers::turbo_prange(&inst, s, false).score,
            ))
        })
        .collect::<xorsat_core::Result<Vec<_>>>()?;
    let (p, t): (Vec<f64>, Vec<f64>) = scores.into_iter().unzip();
    Ok((mean(&p), mean(&t)))
}

/// Best-of-restarts annealing score on one instance.
pub fn annealing_score(
    k: usize,
    d: usize,
    n: usize,
    sweeps: u64,
    restarts: u32,
    seed: u64,
) -> anyhow::Result<f64> {
    let inst = sample_instance(k, d, n / k, seed)?;
    let cfg = solvers::SAConfig {
        sweeps,
        seeds: restarts,
        seed,
        ..Default::default()
    };
    Ok(solvers::simulated_annealing(&inst, &cfg)?.score)
}

pub fn row(k: usize, d: usize, spec: &BudgetSpec, seed: u64) -> anyhow::Result<Table1Row> {
    let published = reference::lookup(k, d).with_context(|| format!("({k},{d}) is not a table row"))?;
    let th = theory::report(k, d)?;
    let (prange_empirical, turbo_prange) = empirical_prange(k, d, spec.n, spec.seeds, seed)?;
    let simulated_annealing =
        annealing_score(k, d, spec.n, spec.sa_sweeps, spec.sa_restarts, rng::child_seed(seed, 1 << 20))?;
    let dqi_bp = dqi_bp_score(k, d, &DEConfig { seed, ..spec.de })?;
    let qaoa_opts = OptimizeOptions {
        restarts: spec.qaoa_restarts,
        seed,
        ..Default::default()
    };
    let qaoa = optimize_path(k, d, spec.qaoa_p, &qaoa_opts)?
        .last()
        .map(|r| r.satisfied_fraction)
        .expect("p >= 1");
    let bold = bold_of(th.prange_score, simulated_annealing, dqi_bp, th.fgum_score, qaoa);
    Ok(Table1Row {
        k,
        d,
        prange_analytic: th.prange_score,
        prange_empirical,
        simulated_annealing,
        dqi_bp,
        regev_fgum: th.fgum_score,
        turbo_prange,
        qaoa,
        qaoa_p: spec.qaoa_p,
        bold: bold.name().into(),
        reference_bold: published.bold.name().into(),
        bold_matches: bold == published.bold,
    })
}

/// Rows in grid order. Rows run one after another; each fans out internally.
pub fn table1(grid: &[(usize, usize)], spec: &BudgetSpec, seed: u64) -> anyhow::Result<Vec<Table1Row>> {
    if let Some(&(k, d)) = grid.iter().find(|&&(k, d)| reference::lookup(k, d).is_none()) {
        bail!("config.grid: ({k},{d}) is not a table row");
    }
    grid.iter().map(|&(k, d)| row(k, d, spec, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiers_grow() {
        let (s, d, f) = (
            BudgetSpec::of(Budget::Smoke),
            BudgetSpec::of(Budget::Desk),
            BudgetSpec::of(Budget::Full),
        );
        assert!(s.sa_sweeps < d.sa_sweeps && d.sa_sweeps < f.sa_sweeps);
        assert!(s.qaoa_p < d.qaoa_p && d.qaoa_p < f.qaoa_p);
        assert!(s.de.population_size <= d.de.population_size);
        for spec in [s, d, f] {
            spec.de.validate().unwrap();
            assert_eq!(spec.n % 840, 0, "n divisible by every k in the grid");
        }
    }

    // Theory values plus the published SA and QAOA columns must reproduce
    // the published bold cells.
    #[test]
    fn bolding_from_theory_columns() {
        for r in &reference::TABLE1 {
            let th = theory::report(r.k, r.d).unwrap();
            let bold = bold_of(th.prange_score, r.simulated_annealing, r.dqi_bp, th.fgum_score, r.qaoa);
            assert_eq!(bold, r.bold, "({},{})", r.k, r.d);
        }
    }

    #[test]
    fn unknown_row_rejected() {
        let err = table1(&[(3, 9)], &BudgetSpec::of(Budget::Smoke), 0).unwrap_err();
        assert!(err.to_string().contains("(3,9)"));
    }
}
