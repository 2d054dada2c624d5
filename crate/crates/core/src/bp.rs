//! Belief propagation on the binary symmetric channel for the dual code
//! `C⊥ = {d : B^T d = 0}` (bit degree `k`, check degree `D`), and density
//! evolution for its asymptotic threshold.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{sample_instance, Instance};
use crate::error::{Error, Result};
use crate::gf2::{GF2Matrix, GF2Vector};
use crate::rng;
use crate::theory;

/// Messages are clamped to this magnitude so that `tanh` stays invertible.
const LLR_CLAMP: f64 = 30.0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BPResult {
    pub decoded: GF2Vector,
    pub converged: bool,
    pub iterations: usize,
}

/// Edge layout for message passing: check `x` owns edges `x*D .. x*D + D`;
/// `bit_edges[w*k + i]` is the edge joining bit `w` to its `i`-th check.
struct Graph<'a> {
    inst: &'a Instance,
    bit_edges: Vec<usize>,
}

impl<'a> Graph<'a> {
    fn new(inst: &'a Instance) -> Self {
        let (k, d) = (inst.k(), inst.d());
        let mut bit_edges = vec![0; inst.m() * k];
        let mut fill = vec![0; inst.m()];
        for x in 0..inst.n() {
            for (t, &w) in inst.var_constraints(x).iter().enumerate() {
                // constraint_vars(w) is ascending and has one var per layer,
                // so the slot of x is its layer.
                let slot = x / inst.b();
                debug_assert_eq!(inst.constraint_vars(w)[slot], x);
                bit_edges[w * k + slot] = x * d + t;
                fill[w] += 1;
            }
        }
        debug_assert!(fill.iter().all(|&f| f == k));
        Self { inst, bit_edges }
    }

    fn syndrome_zero(&self, hard: &GF2Vector) -> bool {
        (0..self.inst.n()).all(|x| {
            self.inst
                .var_constraints(x)
                .iter()
                .fold(false, |acc, &w| acc ^ hard.get(w))
                == false
        })
    }
}

fn llr(crossover: f64) -> f64 {
    ((1.0 - crossover) / crossover).ln().min(LLR_CLAMP)
}

/// Check-node rule on the edges of one check, in place: every outgoing
/// message is `2 atanh` of the product of the other incoming `tanh(m/2)`.
fn check_update(msgs: &mut [f64], scratch: &mut Vec<f64>) {
    scratch.clear();
    scratch.extend(msgs.iter().map(|&m| (0.5 * m).tanh()));
    let len = msgs.len();
    // Exclusive products via prefix/suffix sweeps.
    let mut prefix = 1.0;
    for i in 0..len {
        msgs[i] = prefix;
        prefix *= scratch[i];
    }
    let mut suffix = 1.0;
    for i in (0..len).rev() {
        let p = (msgs[i] * suffix).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
        msgs[i] = (2.0 * p.atanh()).clamp(-LLR_CLAMP, LLR_CLAMP);
        suffix *= scratch[i];
    }
}

/// Flooding sum-product decoding of `received` (length `m`) on `BSC(crossover)`.
/// Stops as soon as the hard decision is a codeword.
pub fn bp_decode(
    inst: &Instance,
    received: &GF2Vector,
    crossover: f64,
    max_iters: usize,
) -> Result<BPResult> {
    if received.len() != inst.m() {
        return Err(Error::DimensionMismatch {
            expected: inst.m(),
            found: received.len(),
        });
    }
    if !(crossover > 0.0 && crossover < 0.5) {
        return Err(Error::OutOfRange {
            name: "crossover",
            value: crossover,
            lo: 0.0,
            hi: 0.5,
        });
    }
    let g = Graph::new(inst);
    let (k, d, m) = (inst.k(), inst.d(), inst.m());
    let l0 = llr(crossover);
    let channel: Vec<f64> = (0..m)
        .map(|w| if received.get(w) { -l0 } else { l0 })
        .collect();
    let mut hard = received.clone();
    if g.syndrome_zero(&hard) {
        return Ok(BPResult {
            decoded: hard,
            converged: true,
            iterations: 0,
        });
    }
    // Edge messages, check-major. Start with bit-to-check = channel.
    let mut msgs = vec![0.0; inst.n() * d];
    for w in 0..m {
        for &e in &g.bit_edges[w * k..(w + 1) * k] {
            msgs[e] = channel[w];
        }
    }
    let mut scratch = Vec::with_capacity(d);
    for it in 1..=max_iters {
        for chunk in msgs.chunks_mut(d) {
            check_update(chunk, &mut scratch);
        }
        for w in 0..m {
            let edges = &g.bit_edges[w * k..(w + 1) * k];
            let total: f64 = channel[w] + edges.iter().map(|&e| msgs[e]).sum::<f64>();
            hard.set(w, total < 0.0);
            for &e in edges {
                msgs[e] = (total - msgs[e]).clamp(-LLR_CLAMP, LLR_CLAMP);
            }
        }
        if g.syndrome_zero(&hard) {
            return Ok(BPResult {
                decoded: hard,
                converged: true,
                iterations: it,
            });
        }
    }
    Ok(BPResult {
        decoded: hard,
        converged: false,
        iterations: max_iters,
    })
}

/// Uniformly random codeword of the dual code.
pub fn random_codeword(inst: &Instance, seed: u64) -> GF2Vector {
    let bt: GF2Matrix = inst.bt_matrix();
    let sol = bt
        .solve(&GF2Vector::zeros(inst.n()))
        .expect("dimensions agree")
        .expect("homogeneous system is consistent");
    let mut r = rng::stream(seed, 0);
    let mut c = GF2Vector::zeros(inst.m());
    for basis in &sol.nullspace {
        if r.next_u64() & 1 == 1 {
            c.xor_assign(basis).expect("same length");
        }
    }
    c
}

/// Finite-size block success count: `trials` fresh instances, each decoding
/// a codeword sent through `BSC(crossover)`. With `random_codeword` false the
/// all-zero codeword is sent.
pub fn bp_block_trials(
    k: usize,
    d: usize,
    b: usize,
    crossover: f64,
    trials: usize,
    max_iters: usize,
    seed: u64,
    random_codeword_sent: bool,
) -> Result<usize> {
    let mut ok = 0;
    for t in 0..trials {
        let s = rng::child_seed(seed, t as u64);
        let inst = sample_instance(k, d, b, s)?;
        let sent = if random_codeword_sent {
            random_codeword(&inst, rng::child_seed(s, 1))
        } else {
            GF2Vector::zeros(inst.m())
        };
        let mut r = rng::stream(rng::child_seed(s, 2), 0);
        let mut received = sent.clone();
        for w in 0..inst.m() {
            if rng::unit_f64(&mut r) < crossover {
                received.flip(w);
            }
        }
        let res = bp_decode(&inst, &received, crossover, max_iters)?;
        if res.converged && res.decoded == sent {
            ok += 1;
        }
    }
    Ok(ok)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DEConfig {
    pub population_size: usize,
    pub max_iters: usize,
    /// Message error probability treated as zero.
    pub target_error: f64,
    pub bisection_tol: f64,
    /// Give up once the error has not improved by 0.1% for this many iterations.
    pub stagnation_window: usize,
    pub seed: u64,
}

impl Default for DEConfig {
    fn default() -> Self {
        Self {
            population_size: 100_000,
            max_iters: 2000,
            target_error: 1e-4,
            bisection_tol: 5e-4,
            stagnation_window: 200,
            seed: 0,
        }
    }
}

impl DEConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 10_000
            || self.max_iters == 0
            || !(self.target_error > 0.0)
            || !(self.bisection_tol > 0.0)
            || self.stagnation_window == 0
        {
            return Err(Error::InvalidParams(format!("invalid DE config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DEOutcome {
    pub converged: bool,
    pub iterations: usize,
    pub error: f64,
}

const CHUNK: usize = 4096;

/// Hard-decision error of a symmetric LLR density, `E[1 / (1 + e^{|L|})]`.
fn smooth_error(pop: &[f64]) -> f64 {
    pop.iter().map(|&l| 1.0 / (1.0 + l.abs().exp())).sum::<f64>() / pop.len() as f64
}

/// Population-dynamics density evolution at one crossover, all-zero codeword.
pub fn de_run(k: usize, d: usize, crossover: f64, cfg: &DEConfig) -> Result<DEOutcome> {
    cfg.validate()?;
    if k < 2 || d < 2 {
        return Err(Error::InvalidParams(format!("degrees must be >= 2 (k={k}, D={d})")));
    }
    if !(crossover > 0.0 && crossover < 0.5) {
        return Err(Error::OutOfRange {
            name: "crossover",
            value: crossover,
            lo: 0.0,
            hi: 0.5,
        });
    }
    let n = cfg.population_size;
    let l0 = llr(crossover);
    let base = rng::child_seed(cfg.seed, crossover.to_bits());
    let channel_sample = |r: &mut rng::Stream| {
        if rng::unit_f64(r) < crossover {
            -l0
        } else {
            l0
        }
    };
    // Bit-to-check population.
    let mut bits: Vec<f64> = vec![0.0; n];
    bits.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut r = rng::stream(base, c as u64);
        for v in chunk {
            *v = channel_sample(&mut r);
        }
    });
    let mut checks = vec![0.0; n];
    let mut best = smooth_error(&bits);
    let mut best_at = 0;
    for it in 1..=cfg.max_iters {
        let seed_it = rng::child_seed(base, it as u64);
        let src = &bits;
        checks.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let mut r = rng::stream(seed_it, 2 * c as u64);
            for out in chunk {
                let mut prod = 1.0;
                for _ in 0..d - 1 {
                    prod *= (0.5 * src[rng::below(&mut r, n as u64) as usize]).tanh();
                }
                let p = prod.clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                *out = 2.0 * p.atanh();
            }
        });
        let src = &checks;
        bits.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let mut r = rng::stream(seed_it, 2 * c as u64 + 1);
            for out in chunk {
                let mut s = channel_sample(&mut r);
                for _ in 0..k - 1 {
                    s += src[rng::below(&mut r, n as u64) as usize];
                }
                *out = s.clamp(-LLR_CLAMP, LLR_CLAMP);
            }
        });
        let err = smooth_error(&bits);
        if err < cfg.target_error {
            return Ok(DEOutcome {
                converged: true,
                iterations: it,
                error: err,
            });
        }
        if err < best * (1.0 - 1e-3) {
            best = err;
            best_at = it;
        } else if it - best_at >= cfg.stagnation_window {
            return Ok(DEOutcome {
                converged: false,
                iterations: it,
                error: err,
            });
        }
    }
    Ok(DEOutcome {
        converged: false,
        iterations: cfg.max_iters,
        error: smooth_error(&bits),
    })
}

/// BP threshold by bisection over the crossover probability.
pub fn de_threshold(k: usize, d: usize, cfg: &DEConfig) -> Result<f64> {
    cfg.validate()?;
    let (mut lo, mut hi) = (0.0, 0.5);
    while hi - lo > cfg.bisection_tol {
        let mid = 0.5 * (lo + hi);
        if de_run(k, d, mid, cfg)?.converged {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// DQI+BP satisfied fraction from the density-evolution threshold.
pub fn dqi_bp_score(k: usize, d: usize, cfg: &DEConfig) -> Result<f64> {
    theory::bp_score_from_threshold(de_threshold(k, d, cfg)?)
}
