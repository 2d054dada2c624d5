//! Bit-packed linear algebra over F2.
//!
//! Vectors and matrix rows are packed little-endian into `u64` words: bit `i`
//! lives in word `i / 64` at position `i % 64`. Bits past the logical length
//! of the final word are always zero, so word-wise equality, popcount and
//! parity never see garbage.
//!
//! Elimination everywhere goes through [`RowEchelon`], which inserts rows one
//! at a time and pivots on the lowest set bit that is not already a pivot.
//! The pivot order is a pure function of the insertion order, which keeps the
//! solvers built on top of it reproducible for a given seed.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

#[inline]
fn tail_mask(bits: usize) -> u64 {
    match bits % WORD {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// A vector over F2.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GF2Vector {
    len: usize,
    words: Vec<u64>,
}

impl GF2Vector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut len = 0;
        let mut words = Vec::new();
        for bit in bits {
            if len % WORD == 0 {
                words.push(0);
            }
            if bit {
                words[len / WORD] |= 1 << (len % WORD);
            }
            len += 1;
        }
        Self { len, words }
    }

    /// Builds a vector from packed words, clearing anything past `len`.
    pub fn from_words(len: usize, mut words: Vec<u64>) -> Result<Self> {
        if words.len() != words_for(len) {
            return Err(Error::DimensionMismatch {
                expected: words_for(len),
                found: words.len(),
            });
        }
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Ok(Self { len, words })
    }

    /// Vector with ones at the given positions.
    pub fn from_support(len: usize, support: &[usize]) -> Result<Self> {
        let mut v = Self::zeros(len);
        for &i in support {
            if i >= len {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    bound: len,
                });
            }
            v.set(i, true);
        }
        Ok(v)
    }

    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let words = (0..words_for(len)).map(|_| rng.next_u64()).collect();
        Self::from_words(len, words).expect("word count matches")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn dot(&self, other: &Self) -> Result<bool> {
        self.check_len(other.len)?;
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        Ok(ones & 1 == 1)
    }

    pub fn xor_assign(&mut self, other: &Self) -> Result<()> {
        self.check_len(other.len)?;
        xor_into(&mut self.words, &other.words);
        Ok(())
    }

    /// Number of positions where `self` and `other` differ.
    pub fn distance(&self, other: &Self) -> Result<usize> {
        self.check_len(other.len)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Indices of the set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * WORD + bit)
            })
        })
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    fn check_len(&self, other: usize) -> Result<()> {
        if self.len != other {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                found: other,
            });
        }
        Ok(())
    }
}

impl fmt::Display for GF2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for GF2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF2Vector({self})")
    }
}

impl FromStr for GF2Vector {
    type Err = Error;

    /// Parses a `0`/`1` string, bit 0 first.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::MalformedInstance(format!(
                    "unexpected character {other:?} in bit string"
                ))),
            })
            .collect::<Result<Vec<bool>>>()
            .map(GF2Vector::from_bits)
    }
}

/// Serialized as its `0`/`1` string.
impl serde::Serialize for GF2Vector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for GF2Vector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[inline]
fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// A dense row-major bit-packed matrix over F2.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GF2Matrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

/// Result of [`GF2Matrix::solve`]: one solution plus a basis of the kernel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub particular: GF2Vector,
    pub nullspace: Vec<GF2Vector>,
}

impl GF2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Stacks equal-length vectors as rows.
    pub fn from_rows(cols: usize, rows: &[GF2Vector]) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            m.row_words_mut(i).copy_from_slice(r.words());
        }
        Ok(m)
    }

    /// Parses rows written as `0`/`1` strings, e.g. `["110", "011"]`.
    pub fn from_strs(rows: &[&str]) -> Result<Self> {
        let parsed = rows
            .iter()
            .map(|s| s.parse::<GF2Vector>())
            .collect::<Result<Vec<_>>>()?;
        let cols = parsed.first().map_or(0, GF2Vector::len);
        Self::from_rows(cols, &parsed)
    }

    /// Matrix whose row `i` has ones exactly at `supports[i]`.
    pub fn from_supports(cols: usize, supports: &[Vec<usize>]) -> Result<Self> {
        let mut m = Self::zeros(supports.len(), cols);
        for (i, s) in supports.iter().enumerate() {
            for &j in s {
                if j >= cols {
                    return Err(Error::IndexOutOfRange {
                        index: j,
                        bound: cols,
                    });
                }
                m.set(i, j, true);
            }
        }
        Ok(m)
    }

    pub fn random<R: RngCore + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            let v = GF2Vector::random(cols, rng);
            m.row_words_mut(i).copy_from_slice(v.words());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "({r}, {c}) out of range");
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols, "({r}, {c}) out of range");
        let mask = 1u64 << (c % WORD);
        let w = &mut self.data[r * self.stride + c / WORD];
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> GF2Vector {
        GF2Vector {
            len: self.cols,
            words: self.row_words(r).to_vec(),
        }
    }

    pub fn column(&self, c: usize) -> GF2Vector {
        GF2Vector::from_bits((0..self.rows).map(|r| self.get(r, c)))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row(r).ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Rank over F2. Works on an internal copy.
    pub fn rank(&self) -> usize {
        let mut ech = RowEchelon::new(self.cols);
        for r in 0..self.rows {
            ech.insert(self.row_words(r), false);
        }
        ech.rank()
    }

    /// `M x` over F2.
    pub fn mat_vec(&self, x: &GF2Vector) -> Result<GF2Vector> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok(GF2Vector::from_bits((0..self.rows).map(|r| {
            let ones: u32 = self
                .row_words(r)
                .iter()
                .zip(x.words())
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            ones & 1 == 1
        })))
    }

    /// Solves `M x = b`. Returns `None` when the system is inconsistent.
    ///
    /// The particular solution has every free variable set to zero; the
    /// nullspace basis has one vector per free column.
    pub fn solve(&self, b: &GF2Vector) -> Result<Option<Solution>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: b.len(),
            });
        }
        let mut ech = RowEchelon::new(self.cols);
        for r in 0..self.rows {
            if let Insert::Dependent { consistent: false } = ech.insert(self.row_words(r), b.get(r))
            {
                return Ok(None);
            }
        }
        let particular = ech.solve();
        let mut is_pivot = vec![false; self.cols];
        for &p in ech.pivots() {
            is_pivot[p] = true;
        }
        let nullspace = (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| ech.kernel_vector(free))
            .collect();
        Ok(Some(Solution {
            particular,
            nullspace,
        }))
    }

    /// Whether the columns listed in `cols` are linearly independent.
    pub fn column_submatrix_full_rank(&self, cols: &[usize]) -> Result<bool> {
        for &c in cols {
            if c >= self.cols {
                return Err(Error::IndexOutOfRange {
                    index: c,
                    bound: self.cols,
                });
            }
        }
        let mut ech = RowEchelon::new(self.rows);
        for &c in cols {
            let col = self.column(c);
            if !matches!(ech.insert(col.words(), false), Insert::Pivot(_)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Submatrix made of the listed columns, in the listed order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let mut out = Self::zeros(self.rows, cols.len());
        for (j, &c) in cols.iter().enumerate() {
            if c >= self.cols {
                return Err(Error::IndexOutOfRange {
                    index: c,
                    bound: self.cols,
                });
            }
            for r in 0..self.rows {
                if self.get(r, c) {
                    out.set(r, j, true);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for GF2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GF2Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// Outcome of inserting one row into a [`RowEchelon`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Insert {
    /// The row was independent and now owns this pivot column.
    Pivot(usize),
    /// The row was in the span of the existing rows. `consistent` tells
    /// whether its right-hand side agreed with that combination.
    Dependent { consistent: bool },
}

/// Incremental row-echelon form with an attached right-hand side.
///
/// Each stored row has its pivot at its lowest set bit and no other stored
/// row has that bit. Rows can be removed again in LIFO order through
/// [`checkpoint`](Self::checkpoint) / [`rollback`](Self::rollback), which is
/// what all-or-nothing block packing needs.
#[derive(Clone, Debug)]
pub struct RowEchelon {
    cols: usize,
    stride: usize,
    rows: Vec<u64>,
    rhs: Vec<bool>,
    pivots: Vec<usize>,
    owner: Vec<u32>,
    scratch: Vec<u64>,
}

const NO_OWNER: u32 = u32::MAX;

impl RowEchelon {
    pub fn new(cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            cols,
            stride,
            rows: Vec::new(),
            rhs: Vec::new(),
            pivots: Vec::new(),
            owner: vec![NO_OWNER; cols],
            scratch: vec![0; stride],
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Pivot columns in insertion order.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduces `row` against the stored rows and stores it if independent.
    pub fn insert(&mut self, row: &[u64], rhs: bool) -> Insert {
        assert_eq!(row.len(), self.stride, "row width does not match");
        let mut work = std::mem::take(&mut self.scratch);
        work.copy_from_slice(row);
        let mut parity = rhs;
        let mut pivot = None;
        'scan: for w in 0..self.stride {
            loop {
                let word = work[w];
                if word == 0 {
                    break;
                }
                let c = w * WORD + word.trailing_zeros() as usize;
                let owner = self.owner[c];
                if owner == NO_OWNER {
                    pivot = Some(c);
                    break 'scan;
                }
                // The owner row has nothing below column c.
                let i = owner as usize;
                let src = &self.rows[i * self.stride + w..(i + 1) * self.stride];
                xor_into(&mut work[w..], src);
                parity ^= self.rhs[i];
            }
        }
        let out = match pivot {
            Some(c) => {
                self.owner[c] = self.pivots.len() as u32;
                self.pivots.push(c);
                self.rows.extend_from_slice(&work);
                self.rhs.push(parity);
                Insert::Pivot(c)
            }
            None => Insert::Dependent {
                consistent: !parity,
            },
        };
        self.scratch = work;
        out
    }

    /// Inserts a row given by its support.
    pub fn insert_support(&mut self, support: &[usize], rhs: bool) -> Insert {
        let mut row = vec![0u64; self.stride];
        for &c in support {
            assert!(c < self.cols, "column {c} out of range");
            row[c / WORD] ^= 1 << (c % WORD);
        }
        self.insert(&row, rhs)
    }

    pub fn checkpoint(&self) -> usize {
        self.pivots.len()
    }

    /// Drops every row stored after `checkpoint`.
    pub fn rollback(&mut self, checkpoint: usize) {
        while self.pivots.len() > checkpoint {
            let p = self.pivots.pop().expect("nonempty");
            self.owner[p] = NO_OWNER;
            self.rhs.pop();
            self.rows.truncate(self.pivots.len() * self.stride);
        }
    }

    /// Back-substitution with every free column set to zero.
    pub fn solve(&self) -> GF2Vector {
        self.back_substitute(GF2Vector::zeros(self.cols), true)
    }

    /// Kernel vector with free column `free` set and all other free columns clear.
    fn kernel_vector(&self, free: usize) -> GF2Vector {
        let mut x = GF2Vector::zeros(self.cols);
        x.set(free, true);
        self.back_substitute(x, false)
    }

    fn back_substitute(&self, mut x: GF2Vector, use_rhs: bool) -> GF2Vector {
        let mut order: Vec<usize> = (0..self.pivots.len()).collect();
        order.sort_unstable_by_key(|&i| std::cmp::Reverse(self.pivots[i]));
        for i in order {
            let row = &self.rows[i * self.stride..(i + 1) * self.stride];
            let ones: u32 = row
                .iter()
                .zip(&x.words)
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            let value = (ones & 1 == 1) ^ (use_rhs && self.rhs[i]);
            x.set(self.pivots[i], value);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn v(s: &str) -> GF2Vector {
        s.parse().unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(GF2Matrix::identity(3).rank(), 3);
        assert_eq!(GF2Matrix::zeros(4, 7).rank(), 0);
        let m = GF2Matrix::from_strs(&["110", "011", "101"]).unwrap();
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn solve_examples() {
        let s = GF2Matrix::identity(3).solve(&v("101")).unwrap().unwrap();
        assert_eq!(s.particular, v("101"));
        assert!(s.nullspace.is_empty());

        let m = GF2Matrix::from_strs(&["11"]).unwrap();
        let s = m.solve(&v("1")).unwrap().unwrap();
        assert!(s.particular == v("10") || s.particular == v("01"));
        assert_eq!(s.nullspace, vec![v("11")]);

        let m = GF2Matrix::from_strs(&["1", "1"]).unwrap();
        assert_eq!(m.solve(&v("10")).unwrap(), None);
    }

    #[test]
    fn solve_rejects_wrong_rhs_length() {
        let m = GF2Matrix::identity(3);
        assert!(matches!(
            m.solve(&v("10")),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mat_vec_examples() {
        assert_eq!(GF2Matrix::identity(2).mat_vec(&v("10")).unwrap(), v("10"));
        let m = GF2Matrix::from_strs(&["111"]).unwrap();
        assert_eq!(m.mat_vec(&v("111")).unwrap(), v("1"));
        let m = GF2Matrix::from_strs(&["111", "111"]).unwrap();
        assert_eq!(m.mat_vec(&v("000")).unwrap(), v("00"));
        assert!(m.mat_vec(&v("00")).is_err());
    }

    #[test]
    fn column_full_rank_examples() {
        let m = GF2Matrix::random(5, 9, &mut rng::stream(1, 0));
        assert!(m.column_submatrix_full_rank(&[]).unwrap());
        assert!(GF2Matrix::identity(4)
            .column_submatrix_full_rank(&[0, 2])
            .unwrap());
        let m = GF2Matrix::from_strs(&["1101", "0110", "1011"]).unwrap();
        assert_eq!(m.column(0), m.column(3));
        assert!(!m.column_submatrix_full_rank(&[0, 3]).unwrap());
        assert!(matches!(
            m.column_submatrix_full_rank(&[4]),
            Err(Error::IndexOutOfRange { index: 4, bound: 4 })
        ));
    }

    #[test]
    fn trailing_bits_stay_clear() {
        let x = GF2Vector::from_words(3, vec![u64::MAX]).unwrap();
        assert_eq!(x.weight(), 3);
        let mut m = GF2Matrix::zeros(2, 70);
        m.set(1, 69, true);
        let t = m.transpose();
        assert_eq!(t.rows(), 70);
        assert!(t.get(69, 1));
        assert_eq!(t.row_words(0)[0] >> 2, 0);
    }

    #[test]
    fn echelon_rollback_restores_state() {
        let mut ech = RowEchelon::new(4);
        assert_eq!(ech.insert_support(&[0, 1], true), Insert::Pivot(0));
        let cp = ech.checkpoint();
        assert_eq!(ech.insert_support(&[1, 2], false), Insert::Pivot(1));
        assert_eq!(
            ech.insert_support(&[0, 2], true),
            Insert::Dependent { consistent: true }
        );
        ech.rollback(cp);
        assert_eq!(ech.rank(), 1);
        assert_eq!(ech.insert_support(&[0, 2], false), Insert::Pivot(1));
        let x = ech.solve();
        // x0 + x1 = 1, x1 + x2 = 1 after reduction of [0,2] by [0,1].
        assert_eq!(x.get(0) ^ x.get(1), true);
        assert_eq!(x.get(0) ^ x.get(2), false);
    }
}
