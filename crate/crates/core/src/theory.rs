//! Closed-form predictions for the Gallager ensemble.
//!
//! Combinatorial quantities (`Î*_D`, `σ_D`) are evaluated in exact rationals
//! and converted at the boundary, so identities between them hold to the last
//! bit of the float conversion.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// `ν_14^{[k]} √(k/2)` for `k = 3..=6`, the depth-14 QAOA large-degree
/// constants tabulated from the tree-limit analysis. Data, not derived here.
pub const QAOA_P14_NU_SQRT_HALF_K: [(usize, f64); 4] =
    [(3, 0.7865), (4, 0.8666), (5, 0.9243), (6, 0.9686)];

/// Large-`D` coefficient of the FGUM / Turbo-Prange advantage, `1/√(2π)`.
pub fn fgum_asymptotic_constant() -> f64 {
    1.0 / (2.0 * std::f64::consts::PI).sqrt()
}

/// `(k, D)` pair with the validity range of the main pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub k: usize,
    #[serde(rename = "D")]
    pub d: usize,
}

impl TheoryParams {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        check_kd(k, d)?;
        Ok(Self { k, d })
    }
}

/// All predictions for one `(k, D)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub k: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub e_max: f64,
    pub alpha_min: f64,
    pub p0: f64,
    pub i_hat_star: f64,
    #[serde(rename = "sigma_D")]
    pub sigma_d: f64,
    pub fgum_score: f64,
    pub turbo_prange_score: f64,
    pub prange_score: f64,
}

impl TheoryReport {
    pub const CSV_HEADER: &'static str =
        "k,D,e_max,alpha_min,p0,i_hat_star,sigma_D,fgum_score,turbo_prange_score,prange_score";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12}",
            self.k,
            self.d,
            self.e_max,
            self.alpha_min,
            self.p0,
            self.i_hat_star,
            self.sigma_d,
            self.fgum_score,
            self.turbo_prange_score,
            self.prange_score
        )
    }
}

fn check_kd(k: usize, d: usize) -> Result<()> {
    if k < 3 || d <= k {
        return Err(Error::InvalidParams(format!(
            "expected 3 <= k < D, got k={k}, D={d}"
        )));
    }
    Ok(())
}

/// Predictions for `(k, D)`; `p0` is evaluated at `alpha_min`.
pub fn report(k: usize, d: usize) -> Result<TheoryReport> {
    let e = e_max(k, d)?;
    let a = alpha_min(k, d)?;
    Ok(TheoryReport {
        k,
        d,
        e_max: e,
        alpha_min: a,
        p0: p0(a, d)?,
        i_hat_star: i_hat_star(d)?,
        sigma_d: sigma_d(d)?,
        fgum_score: fgum_score(k, d)?,
        turbo_prange_score: turbo_prange_score(k, d)?,
        prange_score: prange_score(k, d)?,
    })
}

/// Bit-flip rate on the dual code for a target unsatisfied fraction `alpha`.
pub fn alpha_perp(alpha: f64) -> Result<f64> {
    check_range("alpha", alpha, 0.0, 0.5)?;
    Ok(0.5 - (alpha * (1.0 - alpha)).sqrt())
}

/// Satisfied fraction achieved when a decoder corrects flip rate `eps_star`.
pub fn bp_score_from_threshold(eps_star: f64) -> Result<f64> {
    check_range("eps_star", eps_star, 0.0, 0.5)?;
    Ok(0.5 + (eps_star * (1.0 - eps_star)).sqrt())
}

/// Probability of the all-zero syndrome outcome per block.
pub fn p0(alpha: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidParams(format!("D must be >= 2, got {d}")));
    }
    let half = 2f64.powi(d as i32 - 1);
    check_range("alpha", alpha, 0.0, 1.0 - 1.0 / half)?;
    Ok(alpha * half / (half - 1.0))
}

fn binom(n: usize, r: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().expect("finite rational")
}

/// Exact `Î*_D`: mean Hamming weight over the nonzero coset leaders.
pub fn i_hat_star_exact(d: usize) -> Result<BigRational> {
    if d < 2 {
        return Err(Error::InvalidParams(format!("D must be >= 2, got {d}")));
    }
    let mut num = BigInt::zero();
    let mut den = BigInt::zero();
    for w in 1..=(d - 1) / 2 {
        let c = binom(d, w);
        num += &c * BigInt::from(w);
        den += c;
    }
    let mut q_num = BigRational::from_integer(num);
    let mut q_den = BigRational::from_integer(den);
    if d % 2 == 0 {
        let half = BigRational::new(binom(d, d / 2), BigInt::from(2));
        q_num += &half * BigRational::from_integer(BigInt::from(d / 2));
        q_den += half;
    }
    Ok(q_num / q_den)
}

pub fn i_hat_star(d: usize) -> Result<f64> {
    i_hat_star_exact(d).map(|q| to_f64(&q))
}

/// Exact `σ_D = 2^{-D} Σ_s C(D,s) max(s, D-s)`.
pub fn sigma_d_exact(d: usize) -> Result<BigRational> {
    if d < 1 {
        return Err(Error::InvalidParams("D must be >= 1".into()));
    }
    let total: BigInt = (0..=d)
        .map(|s| binom(d, s) * BigInt::from(s.max(d - s)))
        .sum();
    Ok(BigRational::new(total, BigInt::one() << d))
}

pub fn sigma_d(d: usize) -> Result<f64> {
    sigma_d_exact(d).map(|q| to_f64(&q))
}

fn g(e: f64, k: usize, d: usize) -> f64 {
    let df = d as f64;
    e - e / df - (k as f64 - 1.0) / df * (1.0 - (1.0 - e).powi(d as i32))
}

/// Largest root in `(0, 1)` of `e = e/D + ((k-1)/D)(1 - (1-e)^D)`.
pub fn e_max(k: usize, d: usize) -> Result<f64> {
    check_kd(k, d)?;
    // Scan down from 1 (where g > 0) for the first sign change, avoiding the
    // trivial root at 0.
    let step = 1e-3;
    let mut hi = 1.0;
    let mut lo = None;
    for i in 1..1000 {
        let e = 1.0 - i as f64 * step;
        if g(e, k, d) <= 0.0 {
            lo = Some(e);
            break;
        }
        hi = e;
    }
    let mut lo = lo.ok_or(Error::NoRoot { k, d })?;
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if g(mid, k, d) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest unsatisfied fraction reachable through the FGUM decoder.
pub fn alpha_min(k: usize, d: usize) -> Result<f64> {
    Ok((1.0 - e_max(k, d)?) * (1.0 - 2f64.powi(1 - d as i32)))
}

pub fn fgum_score(k: usize, d: usize) -> Result<f64> {
    let e = e_max(k, d)?;
    let tail = 1.0 - 2f64.powi(1 - d as i32);
    Ok(1.0 - (1.0 - e) * tail * i_hat_star(d)? / d as f64)
}

pub fn turbo_prange_score(k: usize, d: usize) -> Result<f64> {
    let e = e_max(k, d)?;
    Ok(e + sigma_d(d)? / d as f64 * (1.0 - e))
}

pub fn prange_score(k: usize, d: usize) -> Result<f64> {
    if k < 2 || d <= k {
        return Err(Error::InvalidParams(format!(
            "expected k < D, got k={k}, D={d}"
        )));
    }
    Ok(0.5 * (1.0 + k as f64 / d as f64))
}

/// Positive root of `x = (k-1)(1 - e^{-x})`.
pub fn x_k(k: usize) -> Result<f64> {
    if k < 3 {
        return Err(Error::InvalidParams(format!("x_k needs k >= 3, got {k}")));
    }
    let c = k as f64 - 1.0;
    let h = |x: f64| c * (1.0 - (-x).exp()) - x;
    // h > 0 just above 0 (slope k-2) and h(c) < 0.
    let (mut lo, mut hi) = (1e-6, c);
    while hi - lo > 1e-14 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ν √(k/2)` for depth-14 QAOA from the stored table.
pub fn qaoa_p14_constant(k: usize) -> Option<f64> {
    QAOA_P14_NU_SQRT_HALF_K
        .iter()
        .find(|(kk, _)| *kk == k)
        .map(|&(_, c)| c)
}

/// Large-degree estimates `(QAOA, FGUM)` of the satisfied fraction.
///
/// `p` only labels which tabulated `nu` is being used; it does not enter the
/// formula.
pub fn asymptotic_comparison(k: usize, d: usize, _p: usize, nu: f64) -> (f64, f64) {
    let qaoa = 0.5 + nu * (k as f64 / (2.0 * (d as f64 - 1.0))).sqrt();
    let fgum = 0.5 + fgum_asymptotic_constant() / (d as f64).sqrt();
    (qaoa, fgum)
}

/// Estimated number of parity checks touching `nu` erased bits out of `m`.
pub fn expected_equations(nu: f64, k: usize, d: usize, m: f64) -> f64 {
    let df = d as f64;
    let n = m * k as f64 / df;
    nu / df + (n - m / df) * (1.0 - (1.0 - nu / m).powi(d as i32))
}

/// Coset-leader set `I_D` of the repetition code `{0^D, 1^D}`.
///
/// Words are `D`-bit integers printed most-significant bit first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IDSet {
    pub d: usize,
    pub members: Vec<u64>,
    pub j_split: Vec<u64>,
}

/// Largest block size accepted by [`build_id`]; the set has `2^{D-1}` words.
pub const MAX_ID_BLOCK: usize = 30;

pub fn build_id(d: usize) -> Result<IDSet> {
    if !(2..=MAX_ID_BLOCK).contains(&d) {
        return Err(Error::InvalidParams(format!(
            "build_ID supports 2 <= D <= {MAX_ID_BLOCK}, got {d}"
        )));
    }
    let msb = 1u64 << (d - 1);
    let mut members = Vec::with_capacity(1 << (d - 1));
    let mut j_split = Vec::new();
    for y in 0..(1u64 << d) {
        let w = y.count_ones() as usize;
        if 2 * w < d {
            members.push(y);
        } else if 2 * w == d && y & msb == 0 {
            members.push(y);
            j_split.push(y);
        }
    }
    Ok(IDSet {
        d,
        members,
        j_split,
    })
}

impl IDSet {
    pub fn word_string(&self, y: u64) -> String {
        (0..self.d)
            .rev()
            .map(|i| if y >> i & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn total_weight(&self) -> u64 {
        self.members.iter().map(|y| u64::from(y.count_ones())).sum()
    }

    /// Checks the coset-leader axioms exhaustively: one representative per
    /// complementary pair, minimal total weight, and a symmetric split.
    pub fn verify(&self) -> Result<()> {
        let d = self.d;
        let full = (1u64 << d) - 1;
        let fail = |msg: &str| Err(Error::InvalidParams(format!("I_{d}: {msg}")));
        if self.members.len() != 1 << (d - 1) {
            return fail("wrong size");
        }
        let mut seen = vec![false; 1 << d];
        for &y in &self.members {
            if y > full || seen[y as usize] || seen[(y ^ full) as usize] {
                return fail("not one word per complementary pair");
            }
            seen[y as usize] = true;
        }
        let min_weight: u64 = (0..1u64 << d)
            .filter(|&y| y < y ^ full)
            .map(|y| u64::from(y.count_ones().min((y ^ full).count_ones())))
            .sum();
        if self.total_weight() != min_weight {
            return fail("total weight not minimal");
        }
        if d % 2 == 0 {
            let balanced = binom(d, d / 2).to_usize().unwrap_or(usize::MAX);
            if self.j_split.len() * 2 != balanced {
                return fail("split has wrong size");
            }
            let mut covered = vec![false; 1 << d];
            for &y in &self.j_split {
                if 2 * y.count_ones() as usize != d {
                    return fail("split contains an unbalanced word");
                }
                covered[y as usize] = true;
                covered[(y ^ full) as usize] = true;
            }
            let all = (0..1u64 << d)
                .filter(|y| 2 * y.count_ones() as usize == d)
                .all(|y| covered[y as usize]);
            if !all {
                return fail("split does not cover the balanced words");
            }
        } else if !self.j_split.is_empty() {
            return fail("odd D has no split");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: [(usize, usize); 15] = [
        (3, 4),
        (3, 5),
        (3, 6),
        (3, 7),
        (3, 8),
        (4, 5),
        (4, 6),
        (4, 7),
        (4, 8),
        (5, 6),
        (5, 7),
        (5, 8),
        (6, 7),
        (6, 8),
        (7, 8),
    ];

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn alpha_perp_values() {
        assert_eq!(alpha_perp(0.0).unwrap(), 0.5);
        assert!(close(alpha_perp(0.5).unwrap(), 0.0, 1e-15));
        assert!(close(alpha_perp(0.1).unwrap(), 0.2, 1e-15));
        assert!(alpha_perp(0.6).is_err());
        assert!(alpha_perp(-0.01).is_err());
    }

    #[test]
    fn bp_score_values() {
        assert_eq!(bp_score_from_threshold(0.0).unwrap(), 0.5);
        assert_eq!(bp_score_from_threshold(0.5).unwrap(), 1.0);
        assert!(close(bp_score_from_threshold(0.0841).unwrap(), 0.7776, 1e-4));
        assert!(bp_score_from_threshold(0.51).is_err());
    }

    #[test]
    fn i_hat_star_values() {
        assert_eq!(i_hat_star(3).unwrap(), 1.0);
        assert_eq!(
            i_hat_star_exact(4).unwrap(),
            BigRational::new(10.into(), 7.into())
        );
        assert_eq!(
            i_hat_star_exact(6).unwrap(),
            BigRational::new(66.into(), 31.into())
        );
    }

    #[test]
    fn sigma_values() {
        assert_eq!(sigma_d(3).unwrap(), 2.25);
        assert_eq!(sigma_d(4).unwrap(), 2.75);
        assert_eq!(sigma_d(8).unwrap(), 5.09375);
    }

    #[test]
    fn sigma_identity_exact() {
        for d in 2..=24 {
            let lhs = sigma_d_exact(d).unwrap();
            let factor = BigRational::new(BigInt::from(2), BigInt::one() << d) - BigRational::one();
            let rhs = BigRational::from_integer(BigInt::from(d))
                + factor * i_hat_star_exact(d).unwrap();
            assert_eq!(lhs, rhs, "D={d}");
        }
    }

    #[test]
    fn p0_values() {
        assert_eq!(p0(0.0, 5).unwrap(), 0.0);
        assert!(close(p0(0.5, 3).unwrap(), 2.0 / 3.0, 1e-15));
        assert!(p0(0.8, 3).is_err());
        let a = alpha_min(3, 6).unwrap();
        assert!(close(a, 0.6039, 1e-3));
        assert!(close(p0(a, 6).unwrap(), 0.6234, 1e-3));
    }

    #[test]
    fn e_max_values() {
        assert!(close(e_max(3, 6).unwrap(), 0.3766, 2e-4));
        assert!(close(e_max(3, 4).unwrap(), 0.6576, 2e-4));
        assert!(close(e_max(7, 8).unwrap(), 0.8570, 2e-4));
        assert!(e_max(2, 4).is_err());
        assert!(e_max(4, 4).is_err());
    }

    #[test]
    fn e_max_is_a_root() {
        for (k, d) in GRID {
            let e = e_max(k, d).unwrap();
            assert!(g(e, k, d).abs() < 1e-11, "({k},{d})");
            assert!(e > 0.0 && e < 1.0);
        }
    }

    #[test]
    fn scores_against_table() {
        let fgum = [(3, 4, 0.8930), (5, 6, 0.9312), (7, 8, 0.9481), (3, 6, 0.7857)];
        for (k, d, want) in fgum {
            assert!(close(fgum_score(k, d).unwrap(), want, 1e-4), "({k},{d})");
        }
        assert!(close(turbo_prange_score(4, 5).unwrap(), 0.9216, 1e-4));
        assert_eq!(prange_score(3, 4).unwrap(), 0.875);
        assert_eq!(prange_score(3, 8).unwrap(), 0.6875);
        assert!(close(prange_score(6, 7).unwrap(), 0.92857, 1e-5));
    }

    #[test]
    fn grid_identities() {
        for (k, d) in GRID {
            let f = fgum_score(k, d).unwrap();
            let t = turbo_prange_score(k, d).unwrap();
            assert!(close(f, t, 1e-12), "({k},{d}) {f} vs {t}");
            let a = alpha_min(k, d).unwrap();
            assert!(close(p0(a, d).unwrap(), 1.0 - e_max(k, d).unwrap(), 1e-12));
        }
    }

    #[test]
    fn expected_equations_balances_at_threshold() {
        for (k, d) in GRID {
            let m = 1.0e4;
            let e = e_max(k, d).unwrap();
            let eq = expected_equations(e * m, k, d, m);
            assert!(close(eq, e * m, 1e-6), "({k},{d})");
        }
    }

    #[test]
    fn x_k_values() {
        let x3 = x_k(3).unwrap();
        assert!(close(x3, 1.5936, 1e-4));
        assert!((2.0 * (1.0 - (-x3).exp()) - x3).abs() < 1e-9);
        let x50 = x_k(50).unwrap();
        assert!(close(x50 / 49.0, 1.0 - (-x50).exp(), 1e-6));
        assert!(close(x50 / 49.0, 1.0, 1e-6));
        assert!(x_k(2).is_err());
    }

    #[test]
    fn e_max_scales_like_x_k() {
        let e = e_max(3, 200).unwrap();
        assert!((e * 200.0 - x_k(3).unwrap()).abs() <= 0.05);
    }

    #[test]
    fn sigma_asymptotics() {
        let d = 256;
        let lhs = (sigma_d(d).unwrap() / d as f64 - 0.5) * (d as f64).sqrt();
        let c = fgum_asymptotic_constant();
        assert!((lhs - c).abs() / c < 0.02, "{lhs}");
    }

    #[test]
    fn asymptotic_comparison_values() {
        assert!(close(fgum_asymptotic_constant(), 0.3989, 1e-4));
        for d in [10usize, 50, 200] {
            let c3 = qaoa_p14_constant(3).unwrap();
            let nu = c3 / (1.5f64).sqrt();
            let (q, _) = asymptotic_comparison(3, d, 14, nu);
            assert!(close(q, 0.5 + c3 / ((d - 1) as f64).sqrt(), 1e-12));
        }
        for (k, c) in QAOA_P14_NU_SQRT_HALF_K {
            assert!(c > fgum_asymptotic_constant());
            let nu = c / (k as f64 / 2.0).sqrt();
            let (q, f) = asymptotic_comparison(k, 10_000, 14, nu);
            assert!(q > f, "k={k}");
        }
    }

    #[test]
    fn build_id_small_cases() {
        let i3 = build_id(3).unwrap();
        let words: Vec<String> = i3.members.iter().map(|&y| i3.word_string(y)).collect();
        assert_eq!(words, ["000", "001", "010", "100"]);
        let i2 = build_id(2).unwrap();
        let words: Vec<String> = i2.members.iter().map(|&y| i2.word_string(y)).collect();
        assert_eq!(words, ["00", "01"]);
        let i4 = build_id(4).unwrap();
        assert_eq!(i4.members.len(), 8);
        assert_eq!(i4.j_split.len(), 3);
        assert_eq!(i4.members.iter().filter(|y| y.count_ones() <= 1).count(), 5);
    }

    #[test]
    fn build_id_axioms() {
        for d in 2..=12 {
            build_id(d).unwrap().verify().unwrap();
        }
        assert!(build_id(1).is_err());
    }

    #[test]
    fn i_hat_star_matches_id_set() {
        // Mean weight of nonzero members; for even D the split counts half of
        // the balanced words, matching the half-weight in the closed form.
        for d in 2..=12 {
            let id = build_id(d).unwrap();
            let nonzero = (id.members.len() - 1) as f64;
            let mean = id.total_weight() as f64 / nonzero;
            assert!(close(mean, i_hat_star(d).unwrap(), 1e-12), "D={d}");
        }
    }

    #[test]
    fn report_csv() {
        let r = report(3, 6).unwrap();
        let row = r.csv_row();
        assert!(row.starts_with("3,6,0.37"));
        assert_eq!(row.split(',').count(), TheoryReport::CSV_HEADER.split(',').count());
    }
}
