//! The block-erasure channel induced by the fine-grained unambiguous
//! measurement.
//!
//! Each block of the partition is either revealed exactly or erased. Erased
//! bits of the dual codeword are recoverable iff the erased columns of
//! `B^T` (equivalently, the erased rows of `B`) are linearly independent.

use serde::{Deserialize, Serialize};

use crate::ensemble::{block_partition, sample_instance, BlockPartition, Instance};
use crate::error::{check_range, Error, Result};
use crate::gf2::{Insert, RowEchelon};
use crate::rng;
use crate::theory;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErasureTrial {
    pub erased_blocks: Vec<usize>,
    pub nu: usize,
    pub recovered: bool,
}

/// True iff the rows of `B` in the given blocks are linearly independent.
pub fn blocks_recoverable(inst: &Instance, part: &BlockPartition, blocks: &[usize]) -> bool {
    let mut ech = RowEchelon::new(inst.n());
    blocks.iter().all(|&blk| {
        part.blocks[blk].iter().all(|&w| {
            matches!(
                ech.insert_support(inst.constraint_vars(w), false),
                Insert::Pivot(_)
            )
        })
    })
}

/// One trial: every block is erased independently with probability `rate`.
pub fn erasure_trial<R: rand::RngCore>(
    inst: &Instance,
    part: &BlockPartition,
    rate: f64,
    rng: &mut R,
) -> ErasureTrial {
    let erased_blocks: Vec<usize> = (0..part.blocks.len())
        .filter(|_| rng::unit_f64(rng) < rate)
        .collect();
    let recovered = blocks_recoverable(inst, part, &erased_blocks);
    ErasureTrial {
        nu: erased_blocks.len() * inst.d(),
        erased_blocks,
        recovered,
    }
}

/// Fraction of `trials` block-erasure patterns at `rate` that are recoverable
/// on a fixed instance.
pub fn simulate_block_erasure(
    inst: &Instance,
    erasure_rate: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check_range("erasure_rate", erasure_rate, 0.0, 1.0)?;
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be positive".into()));
    }
    let part = block_partition(inst);
    let mut r = rng::stream(seed, 0);
    let ok = (0..trials)
        .filter(|_| erasure_trial(inst, &part, erasure_rate, &mut r).recovered)
        .count();
    Ok(ok as f64 / trials as f64)
}

/// Largest erasure rate at which a coupled erasure pattern stays recoverable.
///
/// Each block draws `u ~ U[0,1)` and is erased at rate `r` iff `u < r`, so the
/// erased sets are nested in `r`. Blocks are inserted in increasing `u` until
/// the first dependency; the pattern is recoverable exactly for `r <= u` of
/// that block (1.0 if no dependency ever occurs).
pub fn critical_rate(inst: &Instance, seed: u64) -> f64 {
    let part = block_partition(inst);
    let mut r = rng::stream(seed, 0);
    let mut keyed: Vec<(f64, usize)> = (0..part.blocks.len())
        .map(|blk| (rng::unit_f64(&mut r), blk))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ech = RowEchelon::new(inst.n());
    for (u, blk) in keyed {
        for &w in &part.blocks[blk] {
            if let Insert::Dependent { .. } = ech.insert_support(inst.constraint_vars(w), false) {
                return u;
            }
        }
    }
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurve {
    pub k: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub b: usize,
    pub erasure_rates: Vec<f64>,
    pub successes: Vec<usize>,
    pub success_probs: Vec<f64>,
    pub trials_per_point: usize,
    /// 95% Wilson score half-width per point.
    pub confidence_halfwidth: Vec<f64>,
    /// Sorted per-trial critical rates (see [`critical_rate`]).
    pub critical_rates: Vec<f64>,
}

/// Half-width of the 95% Wilson score interval.
pub fn wilson_halfwidth(successes: usize, trials: usize) -> f64 {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z = 1.959_963_984_540_054_f64;
    let z2 = z * z;
    z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

impl ThresholdCurve {
    /// Rate at which the success curve crosses `level`, by linear
    /// interpolation between grid points.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .erasure_rates
            .iter()
            .copied()
            .zip(self.success_probs.iter().copied())
            .collect();
        pts.windows(2).find_map(|w| {
            let ((r0, p0), (r1, p1)) = (w[0], w[1]);
            if p0 >= level && p1 < level {
                Some(r0 + (p0 - level) / (p0 - p1) * (r1 - r0))
            } else {
                None
            }
        })
    }

    /// Empirical quantile of the critical rate; the `q`-quantile is the rate
    /// at which the success probability is `1 - q`.
    pub fn critical_quantile(&self, q: f64) -> f64 {
        let n = self.critical_rates.len();
        let idx = ((q * n as f64).floor() as usize).min(n - 1);
        self.critical_rates[idx]
    }

    /// Distance between the 90% and 10% success rates.
    pub fn transition_width(&self) -> f64 {
        self.critical_quantile(0.9) - self.critical_quantile(0.1)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("rate,successes,trials,ci_halfwidth\n");
        for i in 0..self.erasure_rates.len() {
            out.push_str(&format!(
                "{},{},{},{:.6}\n",
                self.erasure_rates[i],
                self.successes[i],
                self.trials_per_point,
                self.confidence_halfwidth[i]
            ));
        }
        out
    }
}

/// Success curve over `rates` with a fresh instance per trial. Trial `t`
/// uses instance seed `child_seed(seed, t)`, shared across all rates.
pub fn threshold_scan(
    k: usize,
    d: usize,
    b: usize,
    rates: &[f64],
    trials: usize,
    seed: u64,
) -> Result<ThresholdCurve> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be positive".into()));
    }
    for &r in rates {
        check_range("erasure_rate", r, 0.0, 1.0)?;
    }
    if rates.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams("rates must be sorted ascending".into()));
    }
    let mut critical = Vec::with_capacity(trials);
    for t in 0..trials {
        let s = rng::child_seed(seed, t as u64);
        let inst = sample_instance(k, d, b, s)?;
        critical.push(critical_rate(&inst, rng::child_seed(s, 1)));
    }
    critical.sort_by(f64::total_cmp);
    Ok(curve_from_critical(k, d, b, rates, critical))
}

fn curve_from_critical(
    k: usize,
    d: usize,
    b: usize,
    rates: &[f64],
    critical: Vec<f64>,
) -> ThresholdCurve {
    let trials = critical.len();
    let successes: Vec<usize> = rates
        .iter()
        .map(|&r| critical.iter().filter(|&&c| r <= c).count())
        .collect();
    ThresholdCurve {
        k,
        d,
        b,
        erasure_rates: rates.to_vec(),
        success_probs: successes
            .iter()
            .map(|&s| s as f64 / trials as f64)
            .collect(),
        confidence_halfwidth: successes
            .iter()
            .map(|&s| wilson_halfwidth(s, trials))
            .collect(),
        successes,
        trials_per_point: trials,
        critical_rates: critical,
    }
}

/// `(p0(alpha, D), D - alpha Î*_D)`: success probability of the block
/// measurement and expected satisfied constraints per block.
pub fn fgum_outcome_distribution(alpha: f64, d: usize) -> Result<(f64, f64)> {
    let p = theory::p0(alpha, d)?;
    Ok((p, d as f64 - alpha * theory::i_hat_star(d)?))
}
