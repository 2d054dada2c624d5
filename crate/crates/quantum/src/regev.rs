//! Exact statevector simulation of Regev's reduction over F₂ for tiny codes.
//!
//! Vectors in F₂^m are `usize` bit masks (coordinate i is bit i). The
//! register layout is `first | second << m | output << 2m | garbage << 3m`;
//! once the first register has been uncomputed it is dropped and the
//! remaining registers shift down by m.
//!
//! Decoders are unitaries on (second ⊗ output ⊗ garbage) built from layers:
//! fractional powers of the minimum-distance lookup permutation and
//! controlled two-level rotations. This covers the perfect decoder, the
//! identity ("zero") decoder and a family of random imperfect ones.

use num_complex::Complex64;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use xorsat_core::{rng, GF2Matrix, GF2Vector};

use crate::error::{Error, Result};

pub const MAX_M: usize = 6;
pub const MAX_GARBAGE: usize = 4;

const NORM_TOL: f64 = 1e-12;

fn parity(x: usize) -> bool {
    x.count_ones() & 1 == 1
}

fn chi(v: usize, x: usize) -> f64 {
    if parity(v & x) {
        -1.0
    } else {
        1.0
    }
}

fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// In-place normalized Walsh–Hadamard on `count` bits starting at `lo`.
fn hadamard_bits(a: &mut [Complex64], lo: usize, count: usize) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for bit in lo..lo + count {
        let h = 1usize << bit;
        for block in a.chunks_mut(2 * h) {
            let (l, r) = block.split_at_mut(h);
            for (x, y) in l.iter_mut().zip(r.iter_mut()) {
                let (p, q) = (*x, *y);
                *x = (p + q) * s;
                *y = (p - q) * s;
            }
        }
    }
}

/// The code C = {Bx} and its dual C⊥ = {d : Bᵀd = 0}.
#[derive(Clone, Debug)]
pub struct Code {
    m: usize,
    n: usize,
    columns: Vec<usize>,
    dual: Vec<usize>,
    in_code: Vec<bool>,
}

impl Code {
    pub fn new(b: &GF2Matrix) -> Result<Self> {
        let (m, n) = (b.rows(), b.cols());
        if m == 0 || m > MAX_M {
            return Err(Error::InvalidParams(format!("need 1 <= m <= {MAX_M}, got {m}")));
        }
        let rank = b.rank();
        if rank != n {
            return Err(Error::RankDeficient { rank, cols: n });
        }
        let columns: Vec<usize> = (0..n)
            .map(|j| (0..m).filter(|&i| b.get(i, j)).fold(0, |a, i| a | 1 << i))
            .collect();
        let dual: Vec<usize> = (0..1usize << m)
            .filter(|&d| columns.iter().all(|&c| !parity(c & d)))
            .collect();
        let in_code = (0..1usize << m)
            .map(|x| dual.iter().all(|&d| !parity(x & d)))
            .collect();
        Ok(Self {
            m,
            n,
            columns,
            dual,
            in_code,
        })
    }

    /// Random m×n matrix of full column rank.
    pub fn random(m: usize, n: usize, seed: u64) -> Result<Self> {
        if n > m {
            return Err(Error::InvalidParams(format!("need n <= m, got {n} > {m}")));
        }
        for attempt in 0.. {
            let mut g = rng::stream(seed, attempt);
            let b = GF2Matrix::random(m, n, &mut g);
            if b.rank() == n {
                return Self::new(&b);
            }
        }
        unreachable!()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dual(&self) -> &[usize] {
        &self.dual
    }

    pub fn contains(&self, x: usize) -> bool {
        self.in_code[x]
    }

    pub fn syndrome(&self, y: usize) -> usize {
        self.columns
            .iter()
            .enumerate()
            .fold(0, |s, (j, &c)| s | (parity(c & y) as usize) << j)
    }

    /// Minimum-weight representative of each syndrome class (ties broken by
    /// smallest integer value).
    pub fn coset_leaders(&self) -> Vec<usize> {
        let mut leaders = vec![usize::MAX; 1 << self.n];
        let mut order: Vec<usize> = (0..1usize << self.m).collect();
        order.sort_by_key(|&e| (e.count_ones(), e));
        for e in order {
            let s = self.syndrome(e);
            if leaders[s] == usize::MAX {
                leaders[s] = e;
            }
        }
        leaders
    }

    /// `y ↦ y + leader(syndrome(y))`, always an element of C⊥.
    pub fn lookup_table(&self) -> Vec<usize> {
        let leaders = self.coset_leaders();
        (0..1usize << self.m)
            .map(|y| y ^ leaders[self.syndrome(y)])
            .collect()
    }
}

/// Amplitudes P over F₂^m and their Hadamard transform P̃.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasFunction {
    m: usize,
    values: Vec<Complex64>,
    hadamard: Vec<Complex64>,
}

impl BiasFunction {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        let len = values.len();
        if !len.is_power_of_two() || len < 2 || len > 1 << MAX_M {
            return Err(Error::InvalidParams(format!("length {len} is not 2^m, 1<=m<={MAX_M}")));
        }
        let norm = norm_sqr(&values);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParams(format!("Σ|P|² = {norm}, expected 1")));
        }
        let m = len.trailing_zeros() as usize;
        let mut hadamard = values.clone();
        hadamard_bits(&mut hadamard, 0, m);
        Ok(Self {
            m,
            values,
            hadamard,
        })
    }

    /// Builds P from a prescribed P̃ (normalized first).
    pub fn from_hadamard(mut tilde: Vec<Complex64>) -> Result<Self> {
        let norm = norm_sqr(&tilde).sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParams("zero amplitude vector".into()));
        }
        tilde.iter_mut().for_each(|z| *z /= norm);
        let m = tilde.len().trailing_zeros() as usize;
        hadamard_bits(&mut tilde, 0, m);
        let norm = norm_sqr(&tilde).sqrt();
        tilde.iter_mut().for_each(|z| *z /= norm);
        Self::new(tilde)
    }

    pub fn uniform(m: usize) -> Result<Self> {
        let a = Complex64::new((1usize << m) as f64, 0.0).sqrt().inv();
        Self::new(vec![a; 1 << m])
    }

    /// `P(x) = √α^{|x|} √(1-α)^{m-|x|}`, so |P|² is i.i.d. Bernoulli(α).
    pub fn p_alpha(m: usize, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParams(format!("alpha {alpha} outside [0,1]")));
        }
        let values = (0..1usize << m)
            .map(|x| {
                let w = x.count_ones() as i32;
                Complex64::new(alpha.sqrt().powi(w) * (1.0 - alpha).sqrt().powi(m as i32 - w), 0.0)
            })
            .collect();
        Self::new(values)
    }

    /// Random complex P with P̃ supported on the given set.
    pub fn random_with_hadamard_support(m: usize, support: &[usize], seed: u64) -> Result<Self> {
        let mut g = rng::stream(seed, 0);
        let mut tilde = vec![Complex64::default(); 1 << m];
        for &e in support {
            tilde[e] = Complex64::from_polar(0.2 + rng::unit_f64(&mut g), 2.0 * PI * rng::unit_f64(&mut g));
        }
        Self::from_hadamard(tilde)
    }

    /// Random complex P with full support.
    pub fn random(m: usize, seed: u64) -> Result<Self> {
        let all: Vec<usize> = (0..1usize << m).collect();
        let mut g = rng::stream(seed, 1);
        let mut values: Vec<Complex64> = all
            .iter()
            .map(|_| Complex64::from_polar(rng::unit_f64(&mut g), 2.0 * PI * rng::unit_f64(&mut g)))
            .collect();
        let norm = norm_sqr(&values).sqrt();
        values.iter_mut().for_each(|z| *z /= norm);
        Self::new(values)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn hadamard(&self) -> &[Complex64] {
        &self.hadamard
    }

    /// ⟨S|H|S⟩ for a diagonal objective: Σ_x |P(x)|² H(x).
    pub fn expectation(&self, h: &[f64]) -> f64 {
        self.values.iter().zip(h).map(|(p, w)| p.norm_sqr() * w).sum()
    }
}

/// Two-level unitary `[[c, -s̄], [s, c]]` acting on basis states i, j.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Givens {
    pub i: usize,
    pub j: usize,
    pub c: f64,
    pub s: (f64, f64),
}

impl Givens {
    pub fn new(i: usize, j: usize, angle: f64, phase: f64) -> Self {
        let s = Complex64::from_polar(angle.sin(), phase);
        Self {
            i,
            j,
            c: angle.cos(),
            s: (s.re, s.im),
        }
    }

    fn sin(&self) -> Complex64 {
        Complex64::new(self.s.0, self.s.1)
    }

    fn apply(&self, a: &mut [Complex64], i: usize, j: usize, inverse: bool) {
        let s = if inverse { -self.sin() } else { self.sin() };
        let (x, y) = (a[i], a[j]);
        a[i] = x * self.c - s.conj() * y;
        a[j] = s * x + y * self.c;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Layer {
    /// `Π^θ = (I+Π)/2 + e^{iπθ}(I-Π)/2` where Π xors `table[second]` into
    /// the output register.
    XorPower { table: Vec<usize>, theta: f64 },
    /// Per value of the second register, rotations on (output, garbage).
    OnSecond(Vec<Vec<Givens>>),
    /// Per value of the output register, rotations on (second, garbage).
    OnOutput(Vec<Vec<Givens>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderSpec {
    pub label: String,
    pub m: usize,
    pub garbage: usize,
    pub layers: Vec<Layer>,
}

#[derive(Clone, Copy)]
struct Layout {
    first: usize,
    m: usize,
}

impl Layout {
    fn second_shift(&self) -> usize {
        self.first
    }
    fn output_shift(&self) -> usize {
        self.first + self.m
    }
    fn garbage_shift(&self) -> usize {
        self.first + 2 * self.m
    }
}

impl DecoderSpec {
    pub fn zero(m: usize) -> Self {
        Self {
            label: "zero".into(),
            m,
            garbage: 0,
            layers: Vec::new(),
        }
    }

    pub fn perfect(code: &Code) -> Self {
        Self::interpolated(code, 1.0)
    }

    pub fn interpolated(code: &Code, theta: f64) -> Self {
        Self {
            label: if theta == 1.0 {
                "perfect".into()
            } else {
                format!("interpolated:{theta}")
            },
            m: code.m,
            garbage: 0,
            layers: vec![Layer::XorPower {
                table: code.lookup_table(),
                theta,
            }],
        }
    }

    /// `perfect`, `zero` or `interpolated:θ`.
    pub fn parse(code: &Code, name: &str) -> Result<Self> {
        match name {
            "perfect" => Ok(Self::perfect(code)),
            "zero" => Ok(Self::zero(code.m)),
            _ => {
                let theta = name
                    .strip_prefix("interpolated:")
                    .and_then(|t| t.parse::<f64>().ok())
                    .filter(|t| t.is_finite())
                    .ok_or_else(|| Error::InvalidParams(format!("unknown decoder {name:?}")))?;
                Ok(Self::interpolated(code, theta))
            }
        }
    }

    /// A partial lookup followed by random controlled rotations that leak
    /// amplitude into wrong outputs and scramble the garbage. `strength` in
    /// [0,1] scales every deviation from the perfect decoder.
    pub fn random(code: &Code, garbage: usize, strength: f64, seed: u64) -> Result<Self> {
        if garbage > MAX_GARBAGE {
            return Err(Error::InvalidParams(format!("garbage {garbage} > {MAX_GARBAGE}")));
        }
        let mut g = rng::stream(seed, 7);
        let m = code.m;
        let theta = 1.0 - strength * rng::unit_f64(&mut g);
        let dim = 1usize << (m + garbage);
        let rotations = |g: &mut dyn RngCore| -> Vec<Vec<Givens>> {
            (0..1usize << m)
                .map(|_| {
                    (0..2)
                        .map(|_| {
                            let i = rng::below(g, dim as u64) as usize;
                            let j = (i + 1 + rng::below(g, dim as u64 - 1) as usize) % dim;
                            let angle = strength * rng::unit_f64(g) * PI / 2.0;
                            Givens::new(i, j, angle, 2.0 * PI * rng::unit_f64(g))
                        })
                        .collect()
                })
                .collect()
        };
        let layers = vec![
            Layer::XorPower {
                table: code.lookup_table(),
                theta,
            },
            Layer::OnSecond(rotations(&mut g)),
            Layer::OnOutput(rotations(&mut g)),
        ];
        let spec = Self {
            label: format!("random:{seed}:{strength}"),
            m,
            garbage,
            layers,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > MAX_M || self.garbage > MAX_GARBAGE {
            return Err(Error::InvalidParams(format!(
                "need 1 <= m <= {MAX_M} and garbage <= {MAX_GARBAGE}"
            )));
        }
        let controls = 1usize << self.m;
        let targets = 1usize << (self.m + self.garbage);
        for layer in &self.layers {
            match layer {
                Layer::XorPower { table, theta } => {
                    if table.len() != controls || table.iter().any(|&a| a >= controls) {
                        return Err(Error::NonUnitary("lookup table has wrong shape".into()));
                    }
                    if !theta.is_finite() {
                        return Err(Error::NonUnitary("non-finite power".into()));
                    }
                }
                Layer::OnSecond(rots) | Layer::OnOutput(rots) => {
                    if rots.len() != controls {
                        return Err(Error::NonUnitary("rotation list has wrong shape".into()));
                    }
                    for r in rots.iter().flatten() {
                        let n = r.c * r.c + r.sin().norm_sqr();
                        if r.i >= targets || r.j >= targets || r.i == r.j || (n - 1.0).abs() > 1e-12 {
                            return Err(Error::NonUnitary(format!("bad rotation {r:?}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn apply(&self, a: &mut [Complex64], lay: Layout, inverse: bool) {
        let m = self.m;
        let mask = (1usize << m) - 1;
        let firsts = 1usize << lay.first;
        let layers: Box<dyn Iterator<Item = &Layer>> = if inverse {
            Box::new(self.layers.iter().rev())
        } else {
            Box::new(self.layers.iter())
        };
        for layer in layers {
            match layer {
                Layer::XorPower { table, theta } => {
                    let t = if inverse { -theta } else { *theta };
                    let ph = Complex64::from_polar(1.0, PI * t);
                    for idx in 0..a.len() {
                        let shift = table[(idx >> lay.second_shift()) & mask];
                        let partner = idx ^ (shift << lay.output_shift());
                        if partner > idx {
                            let (x, y) = (a[idx], a[partner]);
                            let (sum, diff) = ((x + y) * 0.5, (x - y) * 0.5);
                            a[idx] = sum + ph * diff;
                            a[partner] = sum - ph * diff;
                        }
                    }
                }
                Layer::OnSecond(rots) => {
                    let place = |t: usize| t << lay.output_shift();
                    for (ctrl, list) in rots.iter().enumerate() {
                        for f in 0..firsts {
                            let base = f | ctrl << lay.second_shift();
                            apply_list(a, list, base, place, inverse);
                        }
                    }
                }
                Layer::OnOutput(rots) => {
                    let place =
                        |t: usize| (t & mask) << lay.second_shift() | (t >> m) << lay.garbage_shift();
                    for (ctrl, list) in rots.iter().enumerate() {
                        for f in 0..firsts {
                            let base = f | ctrl << lay.output_shift();
                            apply_list(a, list, base, place, inverse);
                        }
                    }
                }
            }
        }
    }

    /// Largest deviation of U†U from the identity on random inputs.
    pub fn unitarity_defect(&self, trials: usize, seed: u64) -> f64 {
        let lay = Layout { first: 0, m: self.m };
        let len = 1usize << (2 * self.m + self.garbage);
        let mut g = rng::stream(seed, 3);
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let mut a: Vec<Complex64> = (0..len)
                .map(|_| Complex64::new(rng::unit_f64(&mut g) - 0.5, rng::unit_f64(&mut g) - 0.5))
                .collect();
            let n = norm_sqr(&a).sqrt();
            a.iter_mut().for_each(|z| *z /= n);
            let orig = a.clone();
            self.apply(&mut a, lay, false);
            worst = worst.max((norm_sqr(&a) - 1.0).abs());
            self.apply(&mut a, lay, true);
            let err = a.iter().zip(&orig).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            worst = worst.max(err);
        }
        worst
    }
}

fn apply_list(
    a: &mut [Complex64],
    list: &[Givens],
    base: usize,
    place: impl Fn(usize) -> usize,
    inverse: bool,
) {
    if inverse {
        for r in list.iter().rev() {
            r.apply(a, base | place(r.i), base | place(r.j), true);
        }
    } else {
        for r in list {
            r.apply(a, base | place(r.i), base | place(r.j), false);
        }
    }
}

fn check_inputs(code: &Code, p: &BiasFunction, dec: &DecoderSpec) -> Result<()> {
    if p.m != code.m || dec.m != code.m {
        return Err(Error::InvalidParams(format!(
            "size mismatch: code m={}, P m={}, decoder m={}",
            code.m, p.m, dec.m
        )));
    }
    dec.validate()
}

/// ε_d for every d ∈ C⊥ (in the order of [`Code::dual`]) and their mean ε.
pub fn measure_epsilon(code: &Code, p: &BiasFunction, dec: &DecoderSpec) -> Result<(f64, Vec<f64>)> {
    check_inputs(code, p, dec)?;
    let m = code.m;
    let lay = Layout { first: 0, m };
    let len = 1usize << (2 * m + dec.garbage);
    let per: Vec<f64> = code
        .dual
        .iter()
        .map(|&d| {
            let mut a = vec![Complex64::default(); len];
            for (e, amp) in p.hadamard.iter().enumerate() {
                a[d ^ e] = *amp;
            }
            dec.apply(&mut a, lay, false);
            let ok: f64 = a
                .iter()
                .enumerate()
                .filter(|(idx, _)| (idx >> m) & ((1 << m) - 1) == d)
                .map(|(_, z)| z.norm_sqr())
                .sum();
            (1.0 - ok).max(0.0)
        })
        .collect();
    let eps = per.iter().sum::<f64>() / per.len() as f64;
    Ok((eps, per))
}

/// Everything observed in one run of Steps 1–9 for a fixed v.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReductionRun {
    pub v: usize,
    /// Probability that Step 5 succeeds.
    pub postselect_prob: f64,
    /// Normalization applied at Step 5 in the form of 𝒩_dec.
    pub n_dec: f64,
    /// Norm of the state after each of Steps 1–9.
    pub step_norms: Vec<f64>,
    /// Norm of the first register's nonzero part after Step 6.
    pub residual_first: f64,
    pub actual: Vec<f64>,
    pub target: Vec<f64>,
    /// D_actual conditioned on C; all zeros if D_actual misses C entirely.
    pub algo: Vec<f64>,
    pub codeword_mass: f64,
    pub trace_distance: f64,
    /// 1/(𝒩_target² |C⊥|).
    pub target_weight: f64,
}

impl ReductionRun {
    pub fn tv_actual_target(&self) -> f64 {
        tv(&self.actual, &self.target)
    }

    pub fn tv_algo_actual(&self) -> f64 {
        tv(&self.algo, &self.actual)
    }

    /// tr[Xᵛ H X⁻ᵛ ρ(v)] with ρ(v) the diagonal state of D_algo.
    pub fn score(&self, h: &[f64]) -> f64 {
        self.algo
            .iter()
            .enumerate()
            .map(|(c, w)| w * h[c ^ self.v])
            .sum()
    }

    pub fn target_score(&self, h: &[f64]) -> f64 {
        self.target
            .iter()
            .enumerate()
            .map(|(c, w)| w * h[c ^ self.v])
            .sum()
    }
}

pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Executes Steps 1–9 for one shift `v` (as a bit mask).
pub fn run_shift(code: &Code, v: usize, p: &BiasFunction, dec: &DecoderSpec) -> Result<ReductionRun> {
    check_inputs(code, p, dec)?;
    let m = code.m;
    let mask = (1usize << m) - 1;
    if v > mask {
        return Err(Error::InvalidParams(format!("shift {v} has more than {m} bits")));
    }
    let full = Layout { first: m, m };
    let len = 1usize << (3 * m + dec.garbage);
    let mut norms = Vec::with_capacity(9);

    // 1: |C⊥⟩ ⊗ Σ_e P̃(e)|e⟩
    let mut a = vec![Complex64::default(); len];
    let amp = (code.dual.len() as f64).sqrt().recip();
    for &d in &code.dual {
        for (e, pe) in p.hadamard.iter().enumerate() {
            a[d | e << m] = pe * amp;
        }
    }
    norms.push(norm_sqr(&a).sqrt());
    // 2: Z^{-v} on the first register
    for (idx, z) in a.iter_mut().enumerate() {
        *z *= chi(v, idx & mask);
    }
    norms.push(norm_sqr(&a).sqrt());
    // 3: second += first
    let mut b = vec![Complex64::default(); len];
    for (idx, z) in a.iter().enumerate() {
        b[idx ^ (idx & mask) << m] = *z;
    }
    a = b;
    norms.push(norm_sqr(&a).sqrt());
    // 4: U_dec on (second, output, garbage)
    dec.apply(&mut a, full, false);
    norms.push(norm_sqr(&a).sqrt());
    // 5: postselect output == first
    for (idx, z) in a.iter_mut().enumerate() {
        if (idx >> (2 * m)) & mask != idx & mask {
            *z = Complex64::default();
        }
    }
    let postselect_prob = norm_sqr(&a);
    if postselect_prob <= 0.0 {
        return Err(Error::InvalidParams("decoder never succeeds".into()));
    }
    let scale = postselect_prob.sqrt().recip();
    a.iter_mut().for_each(|z| *z *= scale);
    norms.push(norm_sqr(&a).sqrt());
    // 6: first -= output, then drop the first register
    let mut b = vec![Complex64::default(); len];
    for (idx, z) in a.iter().enumerate() {
        b[idx ^ (idx >> (2 * m)) & mask] = *z;
    }
    let residual_first = b
        .iter()
        .enumerate()
        .filter(|(idx, _)| idx & mask != 0)
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let mut a: Vec<Complex64> = b.into_iter().step_by(1 << m).collect();
    norms.push(norm_sqr(&a).sqrt());
    // 7: U_dec†
    let reduced = Layout { first: 0, m };
    dec.apply(&mut a, reduced, true);
    norms.push(norm_sqr(&a).sqrt());
    // 8: Z^v on the corrupted-codeword register
    for (idx, z) in a.iter_mut().enumerate() {
        *z *= chi(v, idx & mask);
    }
    norms.push(norm_sqr(&a).sqrt());

    let mut t = vec![Complex64::default(); 1 << m];
    for (y, ty) in t.iter_mut().enumerate() {
        for &d in &code.dual {
            *ty += p.hadamard[y ^ d] * chi(v, y ^ d);
        }
    }
    let t_norm_sqr = norm_sqr(&t);
    let t_norm = t_norm_sqr.sqrt();
    t.iter_mut().for_each(|z| *z /= t_norm);
    let overlap: Complex64 = t.iter().zip(&a).map(|(x, y)| x.conj() * y).sum();
    let trace_distance = (1.0 - overlap.norm_sqr()).max(0.0).sqrt();

    // 9: Hadamard on the remaining first register and measure it
    hadamard_bits(&mut a, 0, m);
    norms.push(norm_sqr(&a).sqrt());
    let mut actual = vec![0.0; 1 << m];
    for (idx, z) in a.iter().enumerate() {
        actual[idx & mask] += z.norm_sqr();
    }
    hadamard_bits(&mut t, 0, m);
    let target: Vec<f64> = t.iter().map(|z| z.norm_sqr()).collect();
    let codeword_mass: f64 = (0..1usize << m)
        .filter(|&x| code.in_code[x])
        .map(|x| actual[x])
        .sum();
    let algo = (0..1usize << m)
        .map(|x| {
            if code.in_code[x] && codeword_mass > 0.0 {
                actual[x] / codeword_mass
            } else {
                0.0
            }
        })
        .collect();
    Ok(ReductionRun {
        v,
        postselect_prob,
        n_dec: scale * amp,
        step_norms: norms,
        residual_first,
        actual,
        target,
        algo,
        codeword_mass,
        trace_distance,
        target_weight: t_norm_sqr / code.dual.len() as f64,
    })
}

/// Step 1–9 outcome for `v` given as a vector: (D_algo, postselect_prob).
pub fn run_reduction(
    b: &GF2Matrix,
    v: &GF2Vector,
    p: &BiasFunction,
    dec: &DecoderSpec,
) -> Result<(Vec<f64>, f64)> {
    let code = Code::new(b)?;
    if v.len() != code.m {
        return Err(Error::InvalidParams(format!("v has length {}, need {}", v.len(), code.m)));
    }
    let mask = v.ones().fold(0usize, |acc, i| acc | 1 << i);
    let run = run_shift(&code, mask, p, dec)?;
    Ok((run.algo, run.postselect_prob))
}

/// Runs every shift v ∈ F₂^m.
pub fn all_shifts(code: &Code, p: &BiasFunction, dec: &DecoderSpec) -> Result<Vec<ReductionRun>> {
    check_inputs(code, p, dec)?;
    (0..1usize << code.m)
        .into_par_iter()
        .map(|v| run_shift(code, v, p, dec))
        .collect()
}

/// `1 - |x|/m`.
pub fn fraction_satisfied(m: usize) -> Vec<f64> {
    (0..1usize << m)
        .map(|x| 1.0 - x.count_ones() as f64 / m as f64)
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorBoundReport {
    pub epsilon: f64,
    /// E_v tr[Xᵛ H X⁻ᵛ ρ(v)].
    pub lhs: f64,
    /// ⟨S|H|S⟩.
    pub objective: f64,
    /// ⟨S|H|S⟩ − 2√ε.
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    /// Same with H = 1 − |x|/m.
    pub corollary_lhs: f64,
    pub corollary_rhs: f64,
    pub corollary_holds: bool,
    /// E_v[score under D_target weighted by 1/(𝒩_target²|C⊥|)]; equals ⟨S|H|S⟩.
    pub weighted_target_score: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistanceReport {
    pub epsilon: f64,
    pub mean_trace_distance: f64,
    pub mean_tv_actual_target: f64,
    pub mean_tv_algo_actual: f64,
    /// max_v [TV(D_actual, D_target) − trace distance]; never positive.
    pub worst_tv_excess: f64,
    pub trace_bound_holds: bool,
    pub tv_bound_holds: bool,
    pub algo_bound_holds: bool,
}

const BOUND_TOL: f64 = 1e-12;

pub fn verify_error_bound(
    code: &Code,
    p: &BiasFunction,
    dec: &DecoderSpec,
    h: &[f64],
) -> Result<ErrorBoundReport> {
    if h.len() != 1 << code.m || h.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::InvalidParams("objective must have 2^m entries in [0,1]".into()));
    }
    let runs = all_shifts(code, p, dec)?;
    let (eps, _) = measure_epsilon(code, p, dec)?;
    Ok(error_bound_from_runs(code, p, &runs, eps, h))
}

fn error_bound_from_runs(
    code: &Code,
    p: &BiasFunction,
    runs: &[ReductionRun],
    eps: f64,
    h: &[f64],
) -> ErrorBoundReport {
    let count = runs.len() as f64;
    let mean = |f: &dyn Fn(&ReductionRun) -> f64| runs.iter().map(f).sum::<f64>() / count;
    let lhs = mean(&|r| r.score(h));
    let objective = p.expectation(h);
    let rhs = objective - 2.0 * eps.sqrt();
    let fs = fraction_satisfied(code.m);
    let corollary_lhs = mean(&|r| r.score(&fs));
    let corollary_rhs = p.expectation(&fs) - 2.0 * eps.sqrt();
    ErrorBoundReport {
        epsilon: eps,
        lhs,
        objective,
        rhs,
        slack: lhs - rhs,
        holds: lhs >= rhs - BOUND_TOL,
        corollary_lhs,
        corollary_rhs,
        corollary_holds: corollary_lhs >= corollary_rhs - BOUND_TOL,
        weighted_target_score: mean(&|r| r.target_weight * r.target_score(h)),
    }
}

pub fn verify_distance_bounds(code: &Code, p: &BiasFunction, dec: &DecoderSpec) -> Result<DistanceReport> {
    let runs = all_shifts(code, p, dec)?;
    let (eps, _) = measure_epsilon(code, p, dec)?;
    Ok(distance_from_runs(&runs, eps))
}

fn distance_from_runs(runs: &[ReductionRun], eps: f64) -> DistanceReport {
    let count = runs.len() as f64;
    let mean = |f: &dyn Fn(&ReductionRun) -> f64| runs.iter().map(f).sum::<f64>() / count;
    let mean_trace_distance = mean(&|r| r.trace_distance);
    let mean_tv_actual_target = mean(&|r| r.tv_actual_target());
    let mean_tv_algo_actual = mean(&|r| r.tv_algo_actual());
    let worst_tv_excess = runs
        .iter()
        .map(|r| r.tv_actual_target() - r.trace_distance)
        .fold(f64::NEG_INFINITY, f64::max);
    DistanceReport {
        epsilon: eps,
        mean_trace_distance,
        mean_tv_actual_target,
        mean_tv_algo_actual,
        worst_tv_excess,
        trace_bound_holds: mean_trace_distance <= eps.sqrt() + BOUND_TOL,
        tv_bound_holds: mean_tv_actual_target <= eps.sqrt() + BOUND_TOL,
        algo_bound_holds: mean_tv_algo_actual <= eps.sqrt().sqrt() + BOUND_TOL,
    }
}

/// Both reports from a single enumeration over v.
pub fn verify_all(
    code: &Code,
    p: &BiasFunction,
    dec: &DecoderSpec,
    h: &[f64],
) -> Result<(ErrorBoundReport, DistanceReport)> {
    if h.len() != 1 << code.m || h.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::InvalidParams("objective must have 2^m entries in [0,1]".into()));
    }
    let runs = all_shifts(code, p, dec)?;
    let (eps, _) = measure_epsilon(code, p, dec)?;
    Ok((
        error_bound_from_runs(code, p, &runs, eps, h),
        distance_from_runs(&runs, eps),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn repetition() -> Code {
        Code::new(&GF2Matrix::from_strs(&["1", "1"]).unwrap()).unwrap()
    }

    #[test]
    fn repetition_code_structure() {
        let c = repetition();
        assert_eq!(c.dual(), &[0, 3]);
        assert!(c.contains(0) && c.contains(3) && !c.contains(1));
        assert_eq!(c.coset_leaders(), vec![0, 1]);
    }

    #[test]
    fn uniform_p_on_repetition_code() {
        let c = repetition();
        let p = BiasFunction::uniform(2).unwrap();
        let dec = DecoderSpec::perfect(&c);
        for v in 0..4 {
            let r = run_shift(&c, v, &p, &dec).unwrap();
            assert!((r.postselect_prob - 1.0).abs() < 1e-12);
            assert!((r.algo[0] - 0.5).abs() < 1e-12 && (r.algo[3] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_decoder_epsilon_closed_form() {
        // Only d = 0 is ever decoded correctly, so ε = 1 − 1/|C⊥|.
        let c = repetition();
        let p = BiasFunction::p_alpha(2, 0.2).unwrap();
        let (eps, per) = measure_epsilon(&c, &p, &DecoderSpec::zero(2)).unwrap();
        assert_eq!(per.len(), 2);
        assert!(per[0].abs() < 1e-15 && (per[1] - 1.0).abs() < 1e-15);
        assert!((eps - 0.5).abs() < 1e-15);
        let r = run_shift(&c, 1, &p, &DecoderSpec::zero(2)).unwrap();
        assert!((r.postselect_prob - 0.5).abs() < 1e-12);
        assert!((r.algo.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_is_an_involution() {
        let p = BiasFunction::random(4, 3).unwrap();
        let mut h = p.hadamard().to_vec();
        hadamard_bits(&mut h, 0, 4);
        for (x, y) in h.iter().zip(p.values()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn decoders_are_unitary() {
        let c = Code::random(4, 2, 1).unwrap();
        for dec in [
            DecoderSpec::perfect(&c),
            DecoderSpec::interpolated(&c, 0.37),
            DecoderSpec::random(&c, 2, 0.5, 9).unwrap(),
        ] {
            assert!(dec.unitarity_defect(3, 0) < 1e-12, "{}", dec.label);
        }
    }

    #[test]
    fn parse_decoder_names() {
        let c = repetition();
        assert_eq!(DecoderSpec::parse(&c, "zero").unwrap().layers.len(), 0);
        let d = DecoderSpec::parse(&c, "interpolated:0.25").unwrap();
        assert!(matches!(d.layers[0], Layer::XorPower { theta, .. } if theta == 0.25));
        assert!(DecoderSpec::parse(&c, "interpolated:x").is_err());
        assert!(DecoderSpec::parse(&c, "magic").is_err());
    }

    #[test]
    fn rejects_rank_deficient_and_bad_objective() {
        let b = GF2Matrix::from_strs(&["11", "11", "00"]).unwrap();
        assert!(matches!(Code::new(&b), Err(Error::RankDeficient { rank: 1, cols: 2 })));
        let c = repetition();
        let p = BiasFunction::uniform(2).unwrap();
        let h = vec![0.0, 1.5, 0.0, 0.0];
        assert!(verify_error_bound(&c, &p, &DecoderSpec::perfect(&c), &h).is_err());
    }

    #[test]
    fn broken_rotation_is_rejected() {
        let c = repetition();
        let mut dec = DecoderSpec::random(&c, 0, 0.3, 1).unwrap();
        if let Layer::OnSecond(rots) = &mut dec.layers[1] {
            rots[0][0].c = 2.0;
        }
        assert!(matches!(dec.validate(), Err(Error::NonUnitary(_))));
    }
}
