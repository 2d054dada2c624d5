//! Classical solvers: Prange, Turbo Prange, simulated annealing and greedy
//! bit-flip descent.

use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::ensemble::{block_partition, Instance};
use crate::error::{Error, Result};
use crate::gf2::{GF2Vector, Insert, RowEchelon};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Prange,
    TurboPrange,
    Sa,
    Greedy,
}

impl SolverKind {
    pub fn tag(self) -> &'static str {
        match self {
            SolverKind::Prange => "prange",
            SolverKind::TurboPrange => "turbo-prange",
            SolverKind::Sa => "sa",
            SolverKind::Greedy => "greedy",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub assignment: GF2Vector,
    pub satisfied: usize,
    pub score: f64,
    pub solver: SolverKind,
    pub seed: u64,
    pub sweeps_or_iters: u64,
    pub wall_time: f64,
    /// Number of equations solved exactly (Prange-type solvers only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub packed_equations: Option<usize>,
}

impl SolveResult {
    fn new(
        inst: &Instance,
        x: GF2Vector,
        solver: SolverKind,
        seed: u64,
        iters: u64,
        start: Instant,
    ) -> Self {
        let satisfied = inst.satisfied(&x);
        Self {
            assignment: x,
            satisfied,
            score: satisfied as f64 / inst.m() as f64,
            solver,
            seed,
            sweeps_or_iters: iters,
            wall_time: start.elapsed().as_secs_f64(),
            packed_equations: None,
        }
    }

    pub fn assignment(&self) -> &GF2Vector {
        &self.assignment
    }

    /// Recounts satisfied constraints through the dense matrix product.
    pub fn verify(&self, inst: &Instance) -> bool {
        let bx = match inst.b_matrix().mat_vec(self.assignment()) {
            Ok(bx) => bx,
            Err(_) => return false,
        };
        let violated = bx.distance(inst.v()).expect("same length");
        self.satisfied == inst.m() - violated
    }
}

/// Prange: solve a maximal independent subset of equations taken in a
/// seed-shuffled order; free variables are zero.
pub fn prange(inst: &Instance, seed: u64) -> SolveResult {
    let start = Instant::now();
    let mut order: Vec<usize> = (0..inst.m()).collect();
    rng::shuffle(&mut rng::stream(seed, 0), &mut order);
    let mut ech = RowEchelon::new(inst.n());
    for &w in &order {
        ech.insert_support(inst.constraint_vars(w), inst.v().get(w));
        if ech.rank() == inst.n() {
            break;
        }
    }
    let mut r = SolveResult::new(inst, ech.solve(), SolverKind::Prange, seed, 1, start);
    r.packed_equations = Some(ech.rank());
    r
}

/// Turbo Prange: pack whole blocks of the partition while their rows stay
/// independent, solve them, then flip the defining variable of every
/// unpacked block whose majority is unsatisfied.
pub fn turbo_prange(inst: &Instance, seed: u64, extra_greedy: bool) -> SolveResult {
    let start = Instant::now();
    let part = block_partition(inst);
    let mut order: Vec<usize> = (0..part.blocks.len()).collect();
    rng::shuffle(&mut rng::stream(seed, 0), &mut order);
    let mut ech = RowEchelon::new(inst.n());
    let mut packed = vec![false; part.blocks.len()];
    for &blk in &order {
        let cp = ech.checkpoint();
        let fits = part.blocks[blk].iter().all(|&w| {
            matches!(
                ech.insert_support(inst.constraint_vars(w), inst.v().get(w)),
                Insert::Pivot(_)
            )
        });
        if fits {
            packed[blk] = true;
        } else {
            ech.rollback(cp);
        }
    }
    let mut x = ech.solve();
    let d = inst.d();
    for (blk, block) in part.blocks.iter().enumerate() {
        if packed[blk] {
            continue;
        }
        let sat = block
            .iter()
            .filter(|&&w| inst.parity(w, &x) == inst.v().get(w))
            .count();
        if d - sat > sat {
            x.flip(part.defining_variable[blk]);
        }
    }
    let mut iters = 1;
    if extra_greedy {
        let (y, flips) = descend(inst, x, seed);
        x = y;
        iters += flips;
    }
    let mut r = SolveResult::new(inst, x, SolverKind::TurboPrange, seed, iters, start);
    r.packed_equations = Some(ech.rank());
    r
}

/// Incremental bookkeeping of unsatisfied constraints per variable.
struct FlipState<'a> {
    inst: &'a Instance,
    x: GF2Vector,
    unsat: Vec<bool>,
    unsat_per_var: Vec<u32>,
    violated: usize,
}

impl<'a> FlipState<'a> {
    fn new(inst: &'a Instance, x: GF2Vector) -> Self {
        let unsat: Vec<bool> = (0..inst.m())
            .map(|w| inst.parity(w, &x) != inst.v().get(w))
            .collect();
        let mut unsat_per_var = vec![0u32; inst.n()];
        let mut violated = 0;
        for (w, &u) in unsat.iter().enumerate() {
            if u {
                violated += 1;
                for &j in inst.constraint_vars(w) {
                    unsat_per_var[j] += 1;
                }
            }
        }
        Self {
            inst,
            x,
            unsat,
            unsat_per_var,
            violated,
        }
    }

    /// Change in the number of violated constraints if `j` were flipped.
    #[inline]
    fn delta(&self, j: usize) -> i64 {
        self.inst.d() as i64 - 2 * i64::from(self.unsat_per_var[j])
    }

    fn flip(&mut self, j: usize) {
        self.x.flip(j);
        for &w in self.inst.var_constraints(j) {
            let now = !self.unsat[w];
            self.unsat[w] = now;
            if now {
                self.violated += 1;
                for &i in self.inst.constraint_vars(w) {
                    self.unsat_per_var[i] += 1;
                }
            } else {
                self.violated -= 1;
                for &i in self.inst.constraint_vars(w) {
                    self.unsat_per_var[i] -= 1;
                }
            }
        }
    }

    fn satisfied(&self) -> usize {
        self.inst.m() - self.violated
    }
}

/// Greedy descent: sweep variables in seed-shuffled order, flipping any with
/// strictly positive gain, until a sweep makes no flip. Returns the flip count.
fn descend(inst: &Instance, start: GF2Vector, seed: u64) -> (GF2Vector, u64) {
    let mut st = FlipState::new(inst, start);
    let mut order: Vec<usize> = (0..inst.n()).collect();
    let mut r = rng::stream(seed, 1);
    let mut flips = 0;
    loop {
        rng::shuffle(&mut r, &mut order);
        let mut changed = false;
        for &j in &order {
            if st.delta(j) < 0 {
                st.flip(j);
                flips += 1;
                changed = true;
            }
        }
        if !changed {
            return (st.x, flips);
        }
    }
}

/// Greedy bit-flip local search from `start`.
pub fn greedy(inst: &Instance, start: &GF2Vector, seed: u64) -> Result<SolveResult> {
    if start.len() != inst.n() {
        return Err(Error::DimensionMismatch {
            expected: inst.n(),
            found: start.len(),
        });
    }
    let t = Instant::now();
    let (x, flips) = descend(inst, start.clone(), seed);
    Ok(SolveResult::new(inst, x, SolverKind::Greedy, seed, flips, t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// `β` linear in the sweep index.
    Linear,
    /// `β` geometric in the sweep index.
    Geometric,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SAConfig {
    pub sweeps: u64,
    pub beta_start: f64,
    pub beta_end: f64,
    /// Independent restarts; the best is returned.
    pub seeds: u32,
    pub schedule: Schedule,
    pub seed: u64,
}

impl Default for SAConfig {
    fn default() -> Self {
        Self {
            sweeps: 10_000,
            beta_start: 0.2,
            beta_end: 4.0,
            seeds: 4,
            schedule: Schedule::Linear,
            seed: 0,
        }
    }
}

impl SAConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sweeps >= 1
            && self.seeds >= 1
            && self.beta_start >= 0.0
            && self.beta_start <= self.beta_end
            && !(self.schedule == Schedule::Geometric && self.beta_start <= 0.0);
        if !ok {
            return Err(Error::InvalidParams(format!("invalid SA config {self:?}")));
        }
        Ok(())
    }

    /// Inverse temperature at sweep `t`.
    pub fn beta(&self, t: u64) -> f64 {
        if self.beta_start == self.beta_end || self.sweeps == 1 {
            return self.beta_end;
        }
        let f = t as f64 / (self.sweeps - 1) as f64;
        if self.beta_end.is_infinite() {
            return if t == 0 { self.beta_start } else { f64::INFINITY };
        }
        match self.schedule {
            Schedule::Linear => self.beta_start + (self.beta_end - self.beta_start) * f,
            Schedule::Geometric => self.beta_start * (self.beta_end / self.beta_start).powf(f),
        }
    }
}

/// One annealing run. If `trace` is given, the satisfied count after every
/// sweep is appended to it. Returns the best assignment seen.
pub fn anneal_run(
    inst: &Instance,
    cfg: &SAConfig,
    seed: u64,
    mut trace: Option<&mut Vec<usize>>,
) -> (GF2Vector, usize) {
    let mut r = rng::stream(seed, 0);
    let start = GF2Vector::random(inst.n(), &mut r);
    let mut st = FlipState::new(inst, start);
    let mut best = (st.x.clone(), st.satisfied());
    let mut order: Vec<usize> = (0..inst.n()).collect();
    let d = inst.d();
    // Acceptance thresholds as fractions of 2^64, indexed by (delta + D) / 2.
    let mut threshold = vec![0u64; d + 1];
    for t in 0..cfg.sweeps {
        let beta = cfg.beta(t);
        for (i, th) in threshold.iter_mut().enumerate() {
            let delta = 2 * i as i64 - d as i64;
            *th = if delta <= 0 {
                u64::MAX
            } else {
                let p = (-beta * delta as f64).exp();
                (p * 18_446_744_073_709_551_616.0).min(u64::MAX as f64) as u64
            };
        }
        rng::shuffle(&mut r, &mut order);
        for &j in &order {
            let delta = st.delta(j);
            let th = threshold[((delta + d as i64) / 2) as usize];
            if th == u64::MAX || r.next_u64() < th {
                st.flip(j);
            }
        }
        let s = st.satisfied();
        if s > best.1 {
            best = (st.x.clone(), s);
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(s);
        }
    }
    best
}

/// Best of `cfg.seeds` independent annealing runs.
pub fn simulated_annealing(inst: &Instance, cfg: &SAConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let t = Instant::now();
    let mut best: Option<(GF2Vector, usize)> = None;
    for i in 0..cfg.seeds {
        let run = anneal_run(inst, cfg, rng::child_seed(cfg.seed, u64::from(i)), None);
        if best.as_ref().map_or(true, |b| run.1 > b.1) {
            best = Some(run);
        }
    }
    let (x, _) = best.expect("at least one seed");
    Ok(SolveResult::new(
        inst,
        x,
        SolverKind::Sa,
        cfg.seed,
        cfg.sweeps,
        t,
    ))
}
