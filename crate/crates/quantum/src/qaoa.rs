//! Depth-p QAOA on D-regular max-k-XORSAT.
//!
//! On a locally treelike instance the root-constraint expectation equals its
//! value on the infinite (D,k)-biregular hypertree. [`tree_energy`] evaluates
//! that value with a path-sum over the 2p+1 time slices of the
//! bra/observable/ket sandwich; [`lightcone_statevector_energy`] is an
//! independent brute-force statevector simulation of the explicit light cone.
//!
//! Conventions: `U = Π_j e^{-iβ_j ΣX} e^{-iγ_j Σ Z…Z}` applied to `|+⟩^n`,
//! and a constraint counts as satisfied when its Z-parity is +1.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use xorsat_core::rng;

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Largest depth accepted by [`tree_energy`] by default. Memory use is
/// about `3 · 16 · 2^{2p+1}` bytes (1.5 GB at p = 12).
pub const DEFAULT_MAX_TREE_DEPTH: usize = 12;

/// Default qubit limit of the statevector oracle.
pub const DEFAULT_MAX_QUBITS: usize = 28;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let params = Self { gammas, betas };
        params.validate()?;
        Ok(params)
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            gammas: vec![0.0; p],
            betas: vec![0.0; p],
        }
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() || self.gammas.len() != self.betas.len() {
            return Err(Error::InvalidParams(format!(
                "need p >= 1 gammas and betas of equal length, got {} and {}",
                self.gammas.len(),
                self.betas.len()
            )));
        }
        if self.gammas.iter().chain(&self.betas).any(|a| !a.is_finite()) {
            return Err(Error::InvalidParams("angles must be finite".into()));
        }
        Ok(())
    }

    /// Flat `[γ_1..γ_p, β_1..β_p]`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    pub fn from_flat(x: &[f64]) -> Self {
        let p = x.len() / 2;
        Self {
            gammas: x[..p].to_vec(),
            betas: x[p..2 * p].to_vec(),
        }
    }

    /// Linear interpolation to depth p+1 (the usual INTERP warm start).
    pub fn interpolate(&self) -> Self {
        let p = self.p();
        let lift = |a: &[f64]| -> Vec<f64> {
            (0..=p)
                .map(|i| {
                    let left = if i > 0 { a[i - 1] } else { 0.0 };
                    let right = if i < p { a[i] } else { 0.0 };
                    (i as f64 / p as f64) * left + ((p - i) as f64 / p as f64) * right
                })
                .collect()
        };
        Self {
            gammas: lift(&self.gammas),
            betas: lift(&self.betas),
        }
    }

    /// Appends an identity layer; the energy is unchanged.
    pub fn pad(&self) -> Self {
        let mut out = self.clone();
        out.gammas.push(0.0);
        out.betas.push(0.0);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeEvalResult {
    pub k: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub p: usize,
    pub satisfied_fraction: f64,
    pub params: QaoaParams,
    pub optimizer_evals: usize,
}

fn check_kd(k: usize, d: usize) -> Result<()> {
    if k < 2 || d < 2 {
        return Err(Error::InvalidParams(format!(
            "need k >= 2 and D >= 2, got k={k}, D={d}"
        )));
    }
    Ok(())
}

fn wht(a: &mut [Complex64]) {
    let n = a.len();
    let mut h = 1;
    while h < n {
        for block in a.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, t) = (*x + *y, *x - *y);
                *x = s;
                *y = t;
            }
        }
        h *= 2;
    }
}

/// Root satisfaction probability on the infinite (D,k)-biregular tree.
pub fn tree_energy(k: usize, d: usize, params: &QaoaParams) -> Result<f64> {
    tree_energy_with_limit(k, d, params, DEFAULT_MAX_TREE_DEPTH)
}

pub fn tree_energy_with_limit(
    k: usize,
    d: usize,
    params: &QaoaParams,
    max_p: usize,
) -> Result<f64> {
    check_kd(k, d)?;
    params.validate()?;
    let p = params.p();
    if p > max_p {
        return Err(Error::DepthBudget { p, max: max_p });
    }
    // Slots: 0..p-1 hold ket values z^1..z^p, slot p the shared middle
    // value, slots p+1..2p the bra values w^p..w^1.
    let slots = 2 * p + 1;
    let n = 1usize << slots;
    let bit = |a: usize, s: usize| (a >> s) & 1;

    let mix: Vec<[Complex64; 2]> = params
        .betas
        .iter()
        .map(|&b| [Complex64::new(b.cos(), 0.0), Complex64::new(0.0, -b.sin())])
        .collect();
    let f: Vec<Complex64> = (0..n)
        .map(|a| {
            let mut amp = Complex64::new(0.5, 0.0);
            for j in 0..p {
                let z_next = if j + 1 == p { bit(a, p) } else { bit(a, j + 1) };
                let w_next = if j + 1 == p { bit(a, p) } else { bit(a, 2 * p - j - 1) };
                let ket = mix[j][z_next ^ bit(a, j)];
                let bra = mix[j][w_next ^ bit(a, 2 * p - j)];
                amp *= ket * bra.conj();
            }
            amp
        })
        .collect();

    let mut phase = vec![0.0; slots];
    for j in 0..p {
        phase[j] = params.gammas[j];
        phase[2 * p - j] = -params.gammas[j];
    }
    // Walsh transform of F(c) = exp(-i Σ_s Γ_s (-1)^{c_s}) factorizes per slot.
    let f_hat: Vec<Complex64> = (0..n)
        .map(|y| {
            (0..slots).fold(Complex64::new(1.0, 0.0), |acc, s| {
                let g = phase[s];
                acc * if bit(y, s) == 0 {
                    Complex64::new(2.0 * g.cos(), 0.0)
                } else {
                    Complex64::new(0.0, -2.0 * g.sin())
                }
            })
        })
        .collect();

    let inv_n = 1.0 / n as f64;
    let mut branch = vec![Complex64::new(1.0, 0.0); n];
    let mut work = vec![Complex64::default(); n];
    for _ in 0..p {
        for ((w, fa), ga) in work.iter_mut().zip(&f).zip(&branch) {
            *w = fa * ga;
        }
        wht(&mut work);
        for (w, fh) in work.iter_mut().zip(&f_hat) {
            *w = w.powu((k - 1) as u32) * fh;
        }
        wht(&mut work);
        for (g, w) in branch.iter_mut().zip(&work) {
            *g = (w * inv_n).powu((d - 1) as u32);
        }
    }
    for (a, ((w, fa), ga)) in work.iter_mut().zip(&f).zip(&branch).enumerate() {
        let sign = if bit(a, p) == 0 { 1.0 } else { -1.0 };
        *w = fa * ga * sign;
    }
    wht(&mut work);
    let obs: Complex64 = work
        .iter()
        .zip(&f_hat)
        .map(|(h, fh)| h.powu(k as u32) * fh)
        .sum::<Complex64>()
        * inv_n;
    debug_assert!(obs.im.abs() < 1e-8, "imaginary residue {}", obs.im);
    Ok((1.0 + obs.re) / 2.0)
}

/// Explicit light cone: qubits, k-subsets, and the observed constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct LightConeGraph {
    qubits: usize,
    constraints: Vec<Vec<usize>>,
    root: usize,
}

impl LightConeGraph {
    pub fn new(qubits: usize, constraints: Vec<Vec<usize>>, root: usize) -> Result<Self> {
        if root >= constraints.len() {
            return Err(Error::InvalidParams("root constraint out of range".into()));
        }
        for c in &constraints {
            let mut sorted = c.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != c.len() || c.iter().any(|&q| q >= qubits) {
                return Err(Error::InvalidParams(format!("bad constraint {c:?}")));
            }
        }
        Ok(Self {
            qubits,
            constraints,
            root,
        })
    }

    /// `k (1 + Σ_{t=1..p} ((D-1)(k-1))^t)`, or `None` on overflow.
    pub fn tree_qubit_count(k: usize, d: usize, p: usize) -> Option<usize> {
        let branching = (d - 1).checked_mul(k - 1)?;
        let mut level = 1usize;
        let mut total = 1usize;
        for _ in 0..p {
            level = level.checked_mul(branching)?;
            total = total.checked_add(level)?;
        }
        total.checked_mul(k)
    }

    /// Depth-p neighbourhood of a constraint in the (D,k)-biregular tree.
    /// Qubits of the root constraint are labelled 0..k-1.
    pub fn tree(k: usize, d: usize, p: usize, max_qubits: usize) -> Result<Self> {
        check_kd(k, d)?;
        let qubits = Self::tree_qubit_count(k, d, p).unwrap_or(usize::MAX);
        if qubits > max_qubits {
            return Err(Error::LightConeTooLarge {
                qubits,
                max: max_qubits,
            });
        }
        let mut constraints = vec![(0..k).collect::<Vec<_>>()];
        let mut frontier: Vec<usize> = (0..k).collect();
        let mut next_label = k;
        for _ in 0..p {
            let mut next = Vec::new();
            for &var in &frontier {
                for _ in 1..d {
                    let mut c = vec![var];
                    for _ in 1..k {
                        c.push(next_label);
                        next.push(next_label);
                        next_label += 1;
                    }
                    constraints.push(c);
                }
            }
            frontier = next;
        }
        debug_assert_eq!(next_label, qubits);
        Self::new(qubits, constraints, 0)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn constraints(&self) -> &[Vec<usize>] {
        &self.constraints
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Renames qubit `q` to `perm[q]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.qubits {
            return Err(Error::InvalidParams("permutation length".into()));
        }
        let constraints = self
            .constraints
            .iter()
            .map(|c| c.iter().map(|&q| perm[q]).collect())
            .collect();
        Self::new(self.qubits, constraints, self.root)
    }
}

/// Statevector simulator for one light cone. Caches the per-basis-state
/// count of violated constraints, so repeated evaluations are cheap.
pub struct LightConeSimulator {
    qubits: usize,
    constraints: usize,
    violated: Vec<u8>,
    root_mask: u64,
    root_offsets: Vec<usize>,
}

impl LightConeSimulator {
    pub fn new(graph: &LightConeGraph, max_qubits: usize) -> Result<Self> {
        let q = graph.qubits;
        if q > max_qubits || q > 40 {
            return Err(Error::LightConeTooLarge {
                qubits: q,
                max: max_qubits.min(40),
            });
        }
        if graph.constraints.len() > u8::MAX as usize {
            return Err(Error::InvalidParams("too many constraints".into()));
        }
        let masks: Vec<u64> = graph
            .constraints
            .iter()
            .map(|c| c.iter().fold(0u64, |m, &i| m | 1 << i))
            .collect();
        let violated = (0..1u64 << q)
            .map(|x| masks.iter().filter(|&&m| (x & m).count_ones() & 1 == 1).count() as u8)
            .collect();
        let root = &graph.constraints[graph.root];
        let root_offsets = (0..1usize << root.len())
            .map(|r| {
                root.iter()
                    .enumerate()
                    .filter(|(j, _)| r >> j & 1 == 1)
                    .fold(0usize, |acc, (_, &qb)| acc | 1 << qb)
            })
            .collect();
        Ok(Self {
            qubits: q,
            constraints: masks.len(),
            violated,
            root_mask: masks[graph.root],
            root_offsets,
        })
    }

    fn phases(&self, gamma: f64) -> Vec<Complex64> {
        (0..=self.constraints)
            .map(|o| {
                let c = self.constraints as f64 - 2.0 * o as f64;
                Complex64::from_polar(1.0, -gamma * c)
            })
            .collect()
    }

    /// Root satisfaction probability after the depth-p circuit.
    pub fn energy(&self, params: &QaoaParams) -> Result<f64> {
        params.validate()?;
        let p = params.p();
        let dim = 1usize << self.qubits;
        let amp0 = Complex64::new((dim as f64).powf(-0.5), 0.0);
        let mut state: Option<Vec<Complex64>> = None;
        if p > 1 {
            let mut psi = vec![amp0; dim];
            for j in 0..p - 1 {
                let ph = self.phases(params.gammas[j]);
                for (a, &o) in psi.iter_mut().zip(&self.violated) {
                    *a *= ph[o as usize];
                }
                let (c, s) = (params.betas[j].cos(), params.betas[j].sin());
                let ms = Complex64::new(0.0, -s);
                for qb in 0..self.qubits {
                    let h = 1usize << qb;
                    for block in psi.chunks_mut(2 * h) {
                        let (lo, hi) = block.split_at_mut(h);
                        for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                            let (a, b) = (*x, *y);
                            *x = a * c + b * ms;
                            *y = a * ms + b * c;
                        }
                    }
                }
            }
            state = Some(psi);
        }
        // Final layer: the remaining mixers off the root commute with the
        // observable, so each root-complement configuration is independent.
        let ph = self.phases(params.gammas[p - 1]);
        let (c, s) = (params.betas[p - 1].cos(), params.betas[p - 1].sin());
        let ms = Complex64::new(0.0, -s);
        let width = self.root_offsets.len();
        let root_bits = width.trailing_zeros();
        let mut local = vec![Complex64::default(); width];
        let mut total = 0.0;
        let mut base: u64 = 0;
        loop {
            for (r, off) in self.root_offsets.iter().enumerate() {
                let idx = base as usize | off;
                let a = state.as_ref().map_or(amp0, |psi| psi[idx]);
                local[r] = a * ph[self.violated[idx] as usize];
            }
            for j in 0..root_bits {
                let h = 1usize << j;
                for block in local.chunks_mut(2 * h) {
                    let (lo, hi) = block.split_at_mut(h);
                    for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                        let (a, b) = (*x, *y);
                        *x = a * c + b * ms;
                        *y = a * ms + b * c;
                    }
                }
            }
            for (r, a) in local.iter().enumerate() {
                let sign = if r.count_ones() & 1 == 0 { 1.0 } else { -1.0 };
                total += sign * a.norm_sqr();
            }
            base = ((base | self.root_mask) + 1) & !self.root_mask;
            if base >= dim as u64 {
                break;
            }
        }
        Ok((1.0 + total) / 2.0)
    }
}

/// Brute-force satisfaction probability of the root constraint on the
/// explicit depth-p light cone (at most [`DEFAULT_MAX_QUBITS`] qubits).
pub fn lightcone_statevector_energy(k: usize, d: usize, params: &QaoaParams) -> Result<f64> {
    params.validate()?;
    let graph = LightConeGraph::tree(k, d, params.p(), DEFAULT_MAX_QUBITS)?;
    LightConeSimulator::new(&graph, DEFAULT_MAX_QUBITS)?.energy(params)
}

#[derive(Clone, Debug)]
pub struct OptimizeOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_tree_depth: usize,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            seed: 0,
            max_tree_depth: DEFAULT_MAX_TREE_DEPTH,
            nelder_mead: NelderMeadOptions {
                initial_step: 0.05,
                ..Default::default()
            },
        }
    }
}

fn local_search(
    k: usize,
    d: usize,
    start: &QaoaParams,
    opts: &OptimizeOptions,
) -> Result<(QaoaParams, f64, usize)> {
    tree_energy_with_limit(k, d, start, opts.max_tree_depth)?;
    let m = nelder_mead(
        |x| -tree_energy_with_limit(k, d, &QaoaParams::from_flat(x), opts.max_tree_depth)
            .unwrap_or(f64::NEG_INFINITY),
        &start.to_flat(),
        &opts.nelder_mead,
    );
    Ok((QaoaParams::from_flat(&m.x), -m.value, m.evals))
}

/// Per-depth optima for p = 1..=p_max. Each restart is an independent chain
/// of depths seeded by its own stream; depth q+1 starts from both the
/// interpolated and the zero-padded depth-q optimum of the same chain, so
/// the reported value can only grow with depth and with restarts.
pub fn optimize_path(
    k: usize,
    d: usize,
    p_max: usize,
    opts: &OptimizeOptions,
) -> Result<Vec<TreeEvalResult>> {
    check_kd(k, d)?;
    if p_max == 0 || opts.restarts == 0 {
        return Err(Error::InvalidParams("need p >= 1 and restarts >= 1".into()));
    }
    if p_max > opts.max_tree_depth {
        return Err(Error::DepthBudget {
            p: p_max,
            max: opts.max_tree_depth,
        });
    }
    let chains: Vec<Result<Vec<(QaoaParams, f64, usize)>>> = (0..opts.restarts as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::stream(opts.seed, i);
            let gamma = 0.05 + 0.95 * rng::unit_f64(&mut g);
            let beta = 0.05 + 0.7 * rng::unit_f64(&mut g);
            let mut best = local_search(k, d, &QaoaParams::zeros(1).with(gamma, beta), opts)?;
            let mut path = vec![best.clone()];
            for _ in 1..p_max {
                let (prev, _, _) = &best;
                let a = local_search(k, d, &prev.interpolate(), opts)?;
                let b = local_search(k, d, &prev.pad(), opts)?;
                let evals = a.2 + b.2;
                best = if a.1 >= b.1 { a } else { b };
                best.2 = evals;
                path.push(best.clone());
            }
            Ok(path)
        })
        .collect();
    let chains = chains.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((0..p_max)
        .map(|q| {
            let evals = chains.iter().map(|c| c[q].2).sum();
            let winner = chains
                .iter()
                .map(|c| &c[q])
                .fold(None::<&(QaoaParams, f64, usize)>, |acc, x| match acc {
                    Some(a) if a.1 >= x.1 => Some(a),
                    _ => Some(x),
                })
                .expect("at least one restart");
            TreeEvalResult {
                k,
                d,
                p: q + 1,
                satisfied_fraction: winner.1,
                params: winner.0.clone(),
                optimizer_evals: evals,
            }
        })
        .collect())
}

/// Best depth-p angles found by [`optimize_path`].
pub fn optimize(k: usize, d: usize, p: usize, restarts: usize, seed: u64) -> Result<TreeEvalResult> {
    let opts = OptimizeOptions {
        restarts,
        seed,
        ..Default::default()
    };
    let mut path = optimize_path(k, d, p, &opts)?;
    Ok(path.pop().expect("nonempty path"))
}

impl QaoaParams {
    fn with(mut self, gamma: f64, beta: f64) -> Self {
        self.gammas[0] = gamma;
        self.betas[0] = beta;
        self
    }
}
