//! Gallager-ensemble instances of `D`-regular max-`k`-XORSAT.
//!
//! The transposed constraint matrix `A = B^T` (`kb x Db`) is `k` stacked
//! layers `[I_b ... I_b] P_i`. Row `i*b + j` of `A` is variable `i*b + j` of
//! the optimization problem and column `w` is constraint `w`; constraint `w`
//! contains exactly one variable per layer, namely `i*b + (sigma_i(w) mod b)`.
//!
//! The first layer partitions the `m = Db` constraints into `b` blocks of
//! size `D`; block `j` is the support of variable `j`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{GF2Matrix, GF2Vector};
use crate::rng;

/// A sampled max-k-XORSAT instance. Only the permutations and the target
/// vector are authoritative; the sparse incidence structure is derived.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    k: usize,
    d: usize,
    b: usize,
    seed: u64,
    perms: Vec<Vec<usize>>,
    v: GF2Vector,
    constraint_vars: Vec<usize>,
    var_constraints: Vec<usize>,
}

/// On-disk form of an [`Instance`], fields in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub k: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub b: usize,
    pub seed: u64,
    pub perms: Vec<Vec<usize>>,
    pub v: String,
}

/// Validates `D > k >= 2`, `b >= 1`: the range the ensemble is defined on.
pub fn validate_params(k: usize, d: usize, b: usize) -> Result<()> {
    if k < 2 || d <= k || b == 0 {
        return Err(Error::InvalidParams(format!(
            "Gallager ensemble needs D > k >= 2 and b >= 1 (got k={k}, D={d}, b={b})"
        )));
    }
    Ok(())
}

/// Draws an instance: permutation `i` from sub-stream `i`, `v` from sub-stream `k`.
pub fn sample_instance(k: usize, d: usize, b: usize, seed: u64) -> Result<Instance> {
    validate_params(k, d, b)?;
    let len = d * b;
    let perms = (0..k)
        .map(|i| rng::permutation(&mut rng::stream(seed, i as u64), len))
        .collect();
    let v = GF2Vector::random(len, &mut rng::stream(seed, k as u64));
    Instance::from_perms(k, d, b, seed, perms, v)
}

impl Instance {
    /// Builds an instance from explicit permutations.
    ///
    /// Unlike [`sample_instance`] this accepts any `k, D >= 2`, which lets
    /// tests construct degenerate shapes such as `k >= D`.
    pub fn from_perms(
        k: usize,
        d: usize,
        b: usize,
        seed: u64,
        perms: Vec<Vec<usize>>,
        v: GF2Vector,
    ) -> Result<Self> {
        if k < 2 || d < 2 || b == 0 {
            return Err(Error::InvalidParams(format!(
                "need k >= 2, D >= 2, b >= 1 (got k={k}, D={d}, b={b})"
            )));
        }
        let m = d * b;
        if perms.len() != k {
            return Err(Error::MalformedInstance(format!(
                "expected {k} permutations, found {}",
                perms.len()
            )));
        }
        for (i, p) in perms.iter().enumerate() {
            let mut seen = vec![false; m];
            if p.len() != m {
                return Err(Error::MalformedInstance(format!(
                    "permutation {i} has length {}, expected {m}",
                    p.len()
                )));
            }
            for &x in p {
                if x >= m || std::mem::replace(&mut seen[x], true) {
                    return Err(Error::MalformedInstance(format!(
                        "permutation {i} is not a bijection on [0, {m})"
                    )));
                }
            }
        }
        if v.len() != m {
            return Err(Error::MalformedInstance(format!(
                "target vector has length {}, expected {m}",
                v.len()
            )));
        }
        let mut constraint_vars = Vec::with_capacity(m * k);
        for w in 0..m {
            for (i, p) in perms.iter().enumerate() {
                constraint_vars.push(i * b + p[w] % b);
            }
        }
        let n = k * b;
        let mut fill = vec![0usize; n];
        let mut var_constraints = vec![0usize; n * d];
        for w in 0..m {
            for &x in &constraint_vars[w * k..(w + 1) * k] {
                var_constraints[x * d + fill[x]] = w;
                fill[x] += 1;
            }
        }
        debug_assert!(fill.iter().all(|&f| f == d));
        Ok(Self {
            k,
            d,
            b,
            seed,
            perms,
            v,
            constraint_vars,
            var_constraints,
        })
    }

    /// All permutations the identity: `A` is `k` copies of `[I_b ... I_b]`.
    pub fn identity(k: usize, d: usize, b: usize, v: GF2Vector) -> Result<Self> {
        let perms = vec![(0..d * b).collect(); k];
        Self::from_perms(k, d, b, 0, perms, v)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of constraints, `D b`.
    pub fn m(&self) -> usize {
        self.d * self.b
    }

    /// Number of variables, `k b`.
    pub fn n(&self) -> usize {
        self.k * self.b
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn v(&self) -> &GF2Vector {
        &self.v
    }

    /// Variables of constraint `w` (one per layer, ascending).
    #[inline]
    pub fn constraint_vars(&self, w: usize) -> &[usize] {
        &self.constraint_vars[w * self.k..(w + 1) * self.k]
    }

    /// Constraints containing variable `x`, ascending.
    #[inline]
    pub fn var_constraints(&self, x: usize) -> &[usize] {
        &self.var_constraints[x * self.d..(x + 1) * self.d]
    }

    /// The `m x n` constraint matrix `B`.
    pub fn b_matrix(&self) -> GF2Matrix {
        let supports: Vec<Vec<usize>> = (0..self.m())
            .map(|w| self.constraint_vars(w).to_vec())
            .collect();
        GF2Matrix::from_supports(self.n(), &supports).expect("indices in range")
    }

    /// The `n x m` matrix `A = B^T`, the parity checks of the dual code.
    pub fn bt_matrix(&self) -> GF2Matrix {
        let supports: Vec<Vec<usize>> = (0..self.n())
            .map(|x| self.var_constraints(x).to_vec())
            .collect();
        GF2Matrix::from_supports(self.m(), &supports).expect("indices in range")
    }

    /// Recounts the row and column weights of `B` from its dense form and
    /// checks both adjacency views agree with it.
    pub fn check_regularity(&self) -> Result<()> {
        let b = self.b_matrix();
        for w in 0..self.m() {
            let weight = b.row(w).weight();
            if weight != self.k {
                return Err(Error::MalformedInstance(format!(
                    "constraint {w} has weight {weight}, expected {}",
                    self.k
                )));
            }
        }
        let bt = b.transpose();
        for x in 0..self.n() {
            let col = bt.row(x);
            if col.weight() != self.d || col.ones().ne(self.var_constraints(x).iter().copied()) {
                return Err(Error::MalformedInstance(format!(
                    "variable {x} does not sit in exactly {} listed constraints",
                    self.d
                )));
            }
        }
        Ok(())
    }

    /// Parity `(B x)_w` of constraint `w` under assignment `x`.
    #[inline]
    pub fn parity(&self, w: usize, x: &GF2Vector) -> bool {
        self.constraint_vars(w)
            .iter()
            .fold(false, |acc, &j| acc ^ x.get(j))
    }

    /// Number of constraints `w` with `(B x)_w = v_w`.
    pub fn satisfied(&self, x: &GF2Vector) -> usize {
        assert_eq!(x.len(), self.n(), "assignment length");
        (0..self.m())
            .filter(|&w| self.parity(w, x) == self.v.get(w))
            .count()
    }

    /// Tanner graph with variables as check vertices and constraints as bits.
    pub fn tanner_graph(&self) -> TannerGraph {
        TannerGraph::new(
            self.m(),
            (0..self.n())
                .map(|x| self.var_constraints(x).to_vec())
                .collect(),
        )
        .expect("instance supports are in range")
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            k: self.k,
            d: self.d,
            b: self.b,
            seed: self.seed,
            perms: self.perms.clone(),
            v: self.v.to_string(),
        }
    }

    pub fn from_file(file: InstanceFile) -> Result<Self> {
        let v: GF2Vector = file.v.parse()?;
        Self::from_perms(file.k, file.d, file.b, file.seed, file.perms, v)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(s).map_err(|e| Error::MalformedInstance(e.to_string()))?;
        Self::from_file(file)
    }
}

/// Partition of the constraints into disjoint blocks of size `D`, each equal
/// to the support of one defining variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    pub blocks: Vec<Vec<usize>>,
    pub defining_variable: Vec<usize>,
}

/// Blocks from the first layer of `A`: block `j` is the support of variable `j`.
pub fn block_partition(inst: &Instance) -> BlockPartition {
    let blocks = (0..inst.b())
        .map(|j| inst.var_constraints(j).to_vec())
        .collect();
    BlockPartition {
        blocks,
        defining_variable: (0..inst.b()).collect(),
    }
}

impl BlockPartition {
    /// Checks disjointness, coverage, block size and the defining-variable property.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        if self.blocks.len() != self.defining_variable.len() {
            return Err(Error::MalformedInstance(
                "one defining variable per block required".into(),
            ));
        }
        let mut owner = vec![usize::MAX; inst.m()];
        for (i, block) in self.blocks.iter().enumerate() {
            if block.len() != inst.d() {
                return Err(Error::MalformedInstance(format!(
                    "block {i} has {} constraints, expected {}",
                    block.len(),
                    inst.d()
                )));
            }
            for &w in block {
                if w >= inst.m() || owner[w] != usize::MAX {
                    return Err(Error::MalformedInstance(format!(
                        "constraint {w} is out of range or in two blocks"
                    )));
                }
                owner[w] = i;
            }
            let mut support = inst.var_constraints(self.defining_variable[i]).to_vec();
            let mut sorted = block.clone();
            support.sort_unstable();
            sorted.sort_unstable();
            if support != sorted {
                return Err(Error::MalformedInstance(format!(
                    "defining variable of block {i} does not match its support"
                )));
            }
        }
        if let Some(w) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::MalformedInstance(format!(
                "constraint {w} is not covered by any block"
            )));
        }
        Ok(())
    }

    /// Block index of every constraint.
    pub fn block_of(&self, m: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; m];
        for (i, block) in self.blocks.iter().enumerate() {
            for &w in block {
                out[w] = i;
            }
        }
        out
    }
}

/// Bipartite Tanner graph: check vertices with explicit supports over bit vertices.
#[derive(Clone, Debug)]
pub struct TannerGraph {
    bits: usize,
    check_bits: Vec<Vec<usize>>,
    bit_checks: Vec<Vec<usize>>,
}

impl TannerGraph {
    pub fn new(bits: usize, check_bits: Vec<Vec<usize>>) -> Result<Self> {
        let mut bit_checks = vec![Vec::new(); bits];
        for (c, support) in check_bits.iter().enumerate() {
            for &w in support {
                if w >= bits {
                    return Err(Error::IndexOutOfRange {
                        index: w,
                        bound: bits,
                    });
                }
                bit_checks[w].push(c);
            }
        }
        Ok(Self {
            bits,
            check_bits,
            bit_checks,
        })
    }

    pub fn checks(&self) -> usize {
        self.check_bits.len()
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Exact number of cycles through `ell` distinct checks and `ell` distinct
    /// bits (`2 ell` edges), each undirected cycle counted once.
    pub fn count_short_cycles(&self, ell: usize) -> Result<u64> {
        match ell {
            2 => Ok(self.count_four_cycles()),
            3 => Ok(self.count_six_cycles()),
            _ => Err(Error::InvalidParams(format!(
                "cycle counting supports ell in {{2, 3}}, got {ell}"
            ))),
        }
    }

    fn count_four_cycles(&self) -> u64 {
        let mut overlap: HashMap<(usize, usize), u64> = HashMap::new();
        for checks in &self.bit_checks {
            for (a, &u) in checks.iter().enumerate() {
                for &w in &checks[a + 1..] {
                    *overlap.entry((u.min(w), u.max(w))).or_default() += 1;
                }
            }
        }
        overlap.values().map(|&c| c * c.saturating_sub(1) / 2).sum()
    }

    fn count_six_cycles(&self) -> u64 {
        let mut twice = 0u64;
        for (u1, n1) in self.check_bits.iter().enumerate() {
            for &w1 in n1 {
                for &u2 in &self.bit_checks[w1] {
                    if u2 <= u1 {
                        continue;
                    }
                    for &w2 in &self.check_bits[u2] {
                        if w2 == w1 {
                            continue;
                        }
                        for &u3 in &self.bit_checks[w2] {
                            if u3 <= u1 || u3 == u2 {
                                continue;
                            }
                            for &w3 in &self.check_bits[u3] {
                                if w3 != w1 && w3 != w2 && self.bit_checks[w3].contains(&u1) {
                                    twice += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        twice / 2
    }

    /// Fraction of vertices (checks and bits) whose radius-`2 ell` ball induces
    /// a forest.
    pub fn treelike_fraction(&self, ell: usize) -> f64 {
        let total = self.checks() + self.bits;
        if total == 0 {
            return 1.0;
        }
        // Vertex ids: checks first, then bits.
        let nc = self.checks();
        let neighbors = |x: usize| -> Box<dyn Iterator<Item = usize> + '_> {
            if x < nc {
                Box::new(self.check_bits[x].iter().map(move |&w| w + nc))
            } else {
                Box::new(self.bit_checks[x - nc].iter().copied())
            }
        };
        let mut stamp = vec![0u32; total];
        let mut ball = Vec::new();
        let mut frontier = Vec::new();
        let mut next = Vec::new();
        let mut treelike = 0usize;
        for (gen, root) in (1u32..).zip(0..total) {
            ball.clear();
            frontier.clear();
            stamp[root] = gen;
            ball.push(root);
            frontier.push(root);
            for _ in 0..2 * ell {
                next.clear();
                for &x in &frontier {
                    for y in neighbors(x) {
                        if stamp[y] != gen {
                            stamp[y] = gen;
                            ball.push(y);
                            next.push(y);
                        }
                    }
                }
                std::mem::swap(&mut frontier, &mut next);
            }
            let twice_edges: usize = ball
                .iter()
                .map(|&x| neighbors(x).filter(|&y| stamp[y] == gen).count())
                .sum();
            if twice_edges / 2 + 1 == ball.len() {
                treelike += 1;
            }
        }
        treelike as f64 / total as f64
    }
}

/// Exact count of `ell`-cycles (`ell` in {2, 3}) in the instance's Tanner graph.
pub fn count_short_cycles(inst: &Instance, ell: usize) -> Result<u64> {
    inst.tanner_graph().count_short_cycles(ell)
}

/// Fraction of Tanner-graph vertices whose radius-`2 ell` neighborhood is acyclic.
pub fn treelike_fraction(inst: &Instance, ell: usize) -> f64 {
    inst.tanner_graph().treelike_fraction(ell)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degrees_ok(inst: &Instance) -> bool {
        let bm = inst.b_matrix();
        let rows_ok = (0..inst.m()).all(|r| bm.row(r).weight() == inst.k());
        let bt = inst.bt_matrix();
        let cols_ok = (0..inst.n()).all(|c| bt.row(c).weight() == inst.d());
        rows_ok && cols_ok && bt == bm.transpose()
    }

    #[test]
    fn small_instance_shape() {
        let inst = sample_instance(3, 4, 2, 11).unwrap();
        assert_eq!((inst.m(), inst.n()), (8, 6));
        assert!(degrees_ok(&inst));
        inst.check_regularity().unwrap();
        assert_eq!(inst.v().len(), 8);
    }

    #[test]
    fn table_scale_shape() {
        let inst = sample_instance(3, 4, 840, 1).unwrap();
        assert_eq!((inst.n(), inst.m()), (2520, 3360));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(sample_instance(3, 3, 5, 0).is_err());
        assert!(sample_instance(1, 3, 5, 0).is_err());
        assert!(sample_instance(3, 4, 0, 0).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_instance(3, 6, 20, 99).unwrap();
        let b = sample_instance(3, 6, 20, 99).unwrap();
        let c = sample_instance(3, 6, 20, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.perms(), c.perms());
    }

    #[test]
    fn identity_instance_is_stacked_identity_blocks() {
        let inst = Instance::identity(3, 4, 2, GF2Vector::zeros(8)).unwrap();
        let bt = inst.bt_matrix();
        for layer in 0..3 {
            for j in 0..2 {
                let row = bt.row(layer * 2 + j);
                let expected: Vec<usize> = (0..8).filter(|w| w % 2 == j).collect();
                assert_eq!(row.ones().collect::<Vec<_>>(), expected);
            }
        }
        let part = block_partition(&inst);
        assert_eq!(part.blocks, vec![vec![0, 2, 4, 6], vec![1, 3, 5, 7]]);
        part.validate(&inst).unwrap();
    }

    #[test]
    fn partition_of_k2_d3_has_b_blocks() {
        let inst = sample_instance(2, 3, 2, 5).unwrap();
        let part = block_partition(&inst);
        assert_eq!(part.blocks.len(), 2);
        part.validate(&inst).unwrap();
    }

    #[test]
    fn json_round_trip_and_field_order() {
        let inst = sample_instance(3, 4, 3, 8).unwrap();
        let json = inst.to_json();
        assert!(json.starts_with(r#"{"k":3,"D":4,"b":3,"seed":8,"perms":[["#));
        assert_eq!(Instance::from_json(&json).unwrap(), inst);
    }

    #[test]
    fn malformed_files_rejected() {
        let mut file = sample_instance(3, 4, 2, 1).unwrap().to_file();
        file.perms[1][0] = file.perms[1][1];
        assert!(Instance::from_file(file.clone()).is_err());
        let mut file2 = sample_instance(3, 4, 2, 1).unwrap().to_file();
        file2.v.pop();
        assert!(Instance::from_file(file2).is_err());
    }

    #[test]
    fn toy_cycle_counts() {
        // A path-like tree: checks {0,1}, {1,2}, {2,3}.
        let tree = TannerGraph::new(4, vec![vec![0, 1], vec![1, 2], vec![2, 3]]).unwrap();
        assert_eq!(tree.count_short_cycles(2).unwrap(), 0);
        assert_eq!(tree.count_short_cycles(3).unwrap(), 0);
        assert_eq!(tree.treelike_fraction(2), 1.0);

        let square = TannerGraph::new(3, vec![vec![0, 1, 2], vec![0, 1]]).unwrap();
        assert_eq!(square.count_short_cycles(2).unwrap(), 1);

        // One hexagon: checks {0,1}, {1,2}, {2,0}.
        let hex = TannerGraph::new(3, vec![vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap();
        assert_eq!(hex.count_short_cycles(2).unwrap(), 0);
        assert_eq!(hex.count_short_cycles(3).unwrap(), 1);
        assert_eq!(hex.treelike_fraction(2), 0.0);
        assert!(hex.count_short_cycles(4).is_err());
    }

    /// Brute-force 6-cycle count over all check triples and bit triples.
    fn six_cycles_brute(g: &TannerGraph) -> u64 {
        let adj = |c: usize, w: usize| g.check_bits[c].contains(&w);
        let mut count = 0;
        let (nc, nb) = (g.checks(), g.bits());
        for a in 0..nc {
            for b in a + 1..nc {
                for c in b + 1..nc {
                    // Cycle a-x-b-y-c-z-a with x, y, z distinct bits; three
                    // distinct cyclic orders of {a, b, c} up to reflection.
                    for (p, q, r) in [(a, b, c), (a, c, b), (b, a, c)] {
                        for x in 0..nb {
                            for y in 0..nb {
                                for z in 0..nb {
                                    if x != y
                                        && y != z
                                        && x != z
                                        && adj(p, x)
                                        && adj(q, x)
                                        && adj(q, y)
                                        && adj(r, y)
                                        && adj(r, z)
                                        && adj(p, z)
                                    {
                                        count += 1;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn six_cycles_match_brute_force() {
        for seed in 0..5 {
            let inst = sample_instance(2, 3, 3, seed).unwrap();
            let g = inst.tanner_graph();
            assert_eq!(g.count_short_cycles(3).unwrap(), six_cycles_brute(&g));
        }
    }
}
