//! QUBO and Ising objective types, the conversions between them, and the
//! positivity shift that makes every objective non-negative.
//!
//! Bitstrings are indexed little-endian: bit `k` of an index is `b_k`, and the
//! matching spin is `s_k = 1 - 2 b_k` (so `b_k = 0` is spin up).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MoqaError, Result};
use crate::linalg;

/// Largest `n` for which exhaustive enumeration of `2^n` bitstrings is allowed.
pub const BRUTE_FORCE_CAP: usize = 24;

/// Absolute tolerance used when checking that a shifted landscape is non-negative.
pub const SHIFT_TOLERANCE: f64 = 1e-9;

/// A vector of binary variables `b ∈ {0,1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVector(Vec<u8>);

/// A vector of spins `s ∈ {-1,+1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinVector(Vec<i8>);

impl BitVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = bits.iter().find(|&&b| b > 1) {
            return Err(MoqaError::invalid(format!("bit value {bad} is not 0 or 1")));
        }
        Ok(BitVector(bits))
    }

    pub fn from_index(index: u64, n: usize) -> Self {
        BitVector((0..n).map(|k| ((index >> k) & 1) as u8).collect())
    }

    pub fn index(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &b)| acc | (u64::from(b) << k))
    }

    pub fn to_spins(&self) -> SpinVector {
        SpinVector(self.0.iter().map(|&b| 1 - 2 * b as i8).collect())
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl SpinVector {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(MoqaError::invalid(format!("spin value {bad} is not +1 or -1")));
        }
        Ok(SpinVector(spins))
    }

    pub fn from_index(index: u64, n: usize) -> Self {
        BitVector::from_index(index, n).to_spins()
    }

    pub fn index(&self) -> u64 {
        self.to_bits().index()
    }

    /// `b = (1 - s) / 2`.
    pub fn to_bits(&self) -> BitVector {
        BitVector(self.0.iter().map(|&s| ((1 - s) / 2) as u8).collect())
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| f64::from(s)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Spin values of bitstring `index` as floats.
pub(crate) fn spins_of(index: u64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| if (index >> k) & 1 == 0 { 1.0 } else { -1.0 })
        .collect()
}

fn check_symmetric(n: usize, m: &[f64]) -> Result<()> {
    if m.len() != n * n {
        return Err(MoqaError::DimensionMismatch {
            expected: n * n,
            actual: m.len(),
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (upper, lower) = (m[i * n + j], m[j * n + i]);
            if upper != lower {
                return Err(MoqaError::SymmetryViolation {
                    row: i,
                    col: j,
                    upper,
                    lower,
                });
            }
        }
    }
    if let Some(bad) = m.iter().find(|v| !v.is_finite()) {
        return Err(MoqaError::invalid(format!("non-finite matrix entry {bad}")));
    }
    Ok(())
}

/// Symmetric QUBO matrix: `h(b) = bᵀ M b`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl QuboMatrix {
    /// Row-major `n × n` entries; rejects asymmetric input.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(MoqaError::invalid("QUBO needs at least one variable"));
        }
        check_symmetric(n, &entries)?;
        Ok(QuboMatrix { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn evaluate(&self, bits: &BitVector) -> Result<f64> {
        if bits.len() != self.n {
            return Err(MoqaError::DimensionMismatch {
                expected: self.n,
                actual: bits.len(),
            });
        }
        let b = bits.as_slice();
        let mut total = 0.0;
        for i in 0..self.n {
            if b[i] == 0 {
                continue;
            }
            for j in 0..self.n {
                if b[j] == 1 {
                    total += self.get(i, j);
                }
            }
        }
        Ok(total)
    }

    /// Ising form via `b = (1 - s) / 2`: `A = M/4`, `a = -1ᵀM/2`, `α = 1ᵀM1/4`,
    /// with the diagonal of `A` folded into `α`.
    pub fn to_ising(&self) -> IsingObjective {
        let n = self.n;
        let coupling: Vec<f64> = self.entries.iter().map(|v| v / 4.0).collect();
        let field: Vec<f64> = (0..n)
            .map(|j| -(0..n).map(|i| self.get(i, j)).sum::<f64>() / 2.0)
            .collect();
        let offset = self.entries.iter().sum::<f64>() / 4.0;
        IsingObjective::new(n, coupling, field, offset)
            .expect("QuboMatrix is validated symmetric")
    }
}

/// `qubo_to_ising` as a free function.
pub fn qubo_to_ising(q: &QuboMatrix) -> IsingObjective {
    q.to_ising()
}

/// One objective in spin form, `h(s) = sᵀ A s + aᵀ s + α`.
///
/// The coupling matrix is stored in full (symmetric) with a zero diagonal;
/// diagonal input is folded into the offset at construction since `s_i² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingObjective {
    n: usize,
    coupling: Vec<f64>,
    field: Vec<f64>,
    offset: f64,
}

impl IsingObjective {
    pub fn new(n: usize, mut coupling: Vec<f64>, field: Vec<f64>, offset: f64) -> Result<Self> {
        if n == 0 {
            return Err(MoqaError::invalid("objective needs at least one variable"));
        }
        check_symmetric(n, &coupling)?;
        if field.len() != n {
            return Err(MoqaError::DimensionMismatch {
                expected: n,
                actual: field.len(),
            });
        }
        if !offset.is_finite() || field.iter().any(|v| !v.is_finite()) {
            return Err(MoqaError::invalid("non-finite field or offset"));
        }
        let mut offset = offset;
        for i in 0..n {
            offset += coupling[i * n + i];
            coupling[i * n + i] = 0.0;
        }
        Ok(IsingObjective {
            n,
            coupling,
            field,
            offset,
        })
    }

    /// Build from the strict upper triangle, row-major (`(0,1), (0,2), …, (n-2,n-1)`).
    pub fn from_upper(n: usize, upper: &[f64], field: Vec<f64>, offset: f64) -> Result<Self> {
        let expected = n * n.saturating_sub(1) / 2;
        if upper.len() != expected {
            return Err(MoqaError::DimensionMismatch {
                expected,
                actual: upper.len(),
            });
        }
        let mut coupling = vec![0.0; n * n];
        let mut it = upper.iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = *it.next().unwrap();
                coupling[i * n + j] = v;
                coupling[j * n + i] = v;
            }
        }
        Self::new(n, coupling, field, offset)
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(n, vec![0.0; n * n], vec![0.0; n], value)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.n + j]
    }

    pub fn field(&self) -> &[f64] {
        &self.field
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Strict upper triangle, row-major.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.coupling(i, j));
            }
        }
        out
    }

    pub(crate) fn with_offset(&self, offset: f64) -> Self {
        IsingObjective {
            offset,
            ..self.clone()
        }
    }

    pub(crate) fn with_field(&self, field: Vec<f64>) -> Self {
        IsingObjective {
            field,
            ..self.clone()
        }
    }

    pub fn evaluate(&self, spins: &SpinVector) -> Result<f64> {
        if spins.len() != self.n {
            return Err(MoqaError::DimensionMismatch {
                expected: self.n,
                actual: spins.len(),
            });
        }
        Ok(self.evaluate_spins(&spins.to_f64()))
    }

    pub(crate) fn evaluate_spins(&self, s: &[f64]) -> f64 {
        let n = self.n;
        let mut quad = 0.0;
        for i in 0..n {
            let row = &self.coupling[i * n..(i + 1) * n];
            let inner: f64 = row.iter().zip(s).map(|(a, sj)| a * sj).sum();
            quad += s[i] * inner;
        }
        let lin: f64 = self.field.iter().zip(s).map(|(a, si)| a * si).sum();
        quad + lin + self.offset
    }

    /// Value at bitstring `index`.
    pub fn evaluate_index(&self, index: u64) -> f64 {
        self.evaluate_spins(&spins_of(index, self.n))
    }

    /// Values at all `2^n` bitstrings, indexed by bitstring.
    ///
    /// Walks each block of 1024 indices in Gray-code order with local-field
    /// updates, re-seeding from a direct evaluation at every block start.
    pub fn landscape(&self) -> Result<Vec<f64>> {
        let n = self.n;
        if n > BRUTE_FORCE_CAP {
            return Err(MoqaError::BruteForceCap {
                n,
                cap: BRUTE_FORCE_CAP,
            });
        }
        let block_bits = n.min(10);
        let block = 1usize << block_bits;
        let mut out = vec![0.0; 1usize << n];
        out.par_chunks_mut(block)
            .enumerate()
            .for_each(|(blk, chunk)| {
                let base = (blk as u64) << block_bits;
                let mut s = spins_of(base, n);
                let mut local: Vec<f64> = (0..n)
                    .map(|i| {
                        let row = &self.coupling[i * n..(i + 1) * n];
                        2.0 * row.iter().zip(&s).map(|(a, sj)| a * sj).sum::<f64>()
                            + self.field[i]
                    })
                    .collect();
                let mut energy = self.evaluate_spins(&s);
                chunk[0] = energy;
                let mut offset = 0usize;
                for g in 1..block {
                    let i = g.trailing_zeros() as usize;
                    energy -= 2.0 * s[i] * local[i];
                    s[i] = -s[i];
                    let row = &self.coupling[i * n..(i + 1) * n];
                    for (lj, a) in local.iter_mut().zip(row) {
                        *lj += 4.0 * a * s[i];
                    }
                    offset ^= 1 << i;
                    chunk[offset] = energy;
                }
            });
        Ok(out)
    }

    /// `(n+1) × (n+1)` matrix `[[A, a/2], [aᵀ/2, 0]]` with
    /// `(s,1)ᵀ Ã (s,1) + α = h(s)`.
    pub fn augmented_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
            (true, true) => self.coupling(i, j),
            (true, false) => self.field[i] / 2.0,
            (false, true) => self.field[j] / 2.0,
            (false, false) => 0.0,
        })
    }
}

/// How the positivity shift is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ShiftMode {
    /// `c = max_m { -(n+1) λ_min(Ã_m) - α_m }`.
    #[default]
    Spectral,
    /// `c = -min_{m,b} h_m(b)` by enumeration.
    Exact,
}

impl std::str::FromStr for ShiftMode {
    type Err = MoqaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(ShiftMode::Spectral),
            "exact" => Ok(ShiftMode::Exact),
            other => Err(MoqaError::invalid(format!("unknown shift mode '{other}'"))),
        }
    }
}

/// `M` Ising objectives over the same `n` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiObjectiveProblem {
    n: usize,
    objectives: Vec<IsingObjective>,
    shift_c: f64,
    pub metadata: BTreeMap<String, String>,
}

impl MultiObjectiveProblem {
    pub fn new(objectives: Vec<IsingObjective>) -> Result<Self> {
        let first = objectives
            .first()
            .ok_or_else(|| MoqaError::invalid("problem needs at least one objective"))?;
        let n = first.n();
        if let Some(bad) = objectives.iter().find(|o| o.n() != n) {
            return Err(MoqaError::DimensionMismatch {
                expected: n,
                actual: bad.n(),
            });
        }
        Ok(MultiObjectiveProblem {
            n,
            objectives,
            shift_c: 0.0,
            metadata: BTreeMap::new(),
        })
    }

    pub(crate) fn with_shift_recorded(mut self, shift_c: f64) -> Self {
        self.shift_c = shift_c;
        self
    }

    pub fn with_metadata(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_objectives(&self) -> usize {
        self.objectives.len()
    }

    pub fn objectives(&self) -> &[IsingObjective] {
        &self.objectives
    }

    /// Accumulated shift applied so far.
    pub fn shift_c(&self) -> f64 {
        self.shift_c
    }

    /// `max_m h_m(index)`.
    pub fn evaluate_max(&self, index: u64) -> f64 {
        let s = spins_of(index, self.n);
        self.objectives
            .iter()
            .map(|o| o.evaluate_spins(&s))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Landscape of every objective, `[m][index]`.
    pub fn landscapes(&self) -> Result<Vec<Vec<f64>>> {
        self.objectives.iter().map(IsingObjective::landscape).collect()
    }

    pub fn compute_shift(&self, mode: ShiftMode) -> Result<f64> {
        match mode {
            ShiftMode::Spectral => self.spectral_shift(),
            ShiftMode::Exact => self.exact_shift(BRUTE_FORCE_CAP),
        }
    }

    fn spectral_shift(&self) -> Result<f64> {
        let scale = (self.n + 1) as f64;
        let mut best = f64::NEG_INFINITY;
        for o in &self.objectives {
            let lambda = linalg::smallest_eigenvalue(&o.augmented_matrix())?;
            best = best.max(-scale * lambda - o.offset());
        }
        Ok(best)
    }

    /// Tightest valid shift, by enumerating all `2^n` bitstrings (`n ≤ cap`).
    pub fn exact_shift(&self, cap: usize) -> Result<f64> {
        if self.n > cap {
            return Err(MoqaError::BruteForceCap { n: self.n, cap });
        }
        let mut min = f64::INFINITY;
        for o in &self.objectives {
            let l = o.landscape()?;
            min = l.iter().copied().fold(min, f64::min);
        }
        Ok(-min)
    }

    /// Add `c` to every offset and record it.
    pub fn apply_shift(&self, c: f64) -> Self {
        MultiObjectiveProblem {
            n: self.n,
            objectives: self
                .objectives
                .iter()
                .map(|o| o.with_offset(o.offset() + c))
                .collect(),
            shift_c: self.shift_c + c,
            metadata: self.metadata.clone(),
        }
    }

    /// Compute and apply the shift in one go.
    pub fn shifted(&self, mode: ShiftMode) -> Result<Self> {
        let c = self.compute_shift(mode)?;
        Ok(self.apply_shift(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_bits(n: usize) -> impl Iterator<Item = BitVector> {
        (0..1u64 << n).map(move |i| BitVector::from_index(i, n))
    }

    #[test]
    fn single_variable_qubo_matches_identity_objective() {
        let q = QuboMatrix::new(1, vec![1.0]).unwrap();
        let o = q.to_ising();
        assert_eq!(o.coupling(0, 0), 0.0);
        assert_eq!(o.field(), &[-0.5]);
        assert_eq!(o.offset(), 0.5);
        let up = SpinVector::new(vec![1]).unwrap();
        let down = SpinVector::new(vec![-1]).unwrap();
        assert_eq!(o.evaluate(&up).unwrap(), 0.0);
        assert_eq!(o.evaluate(&down).unwrap(), 1.0);
    }

    #[test]
    fn zero_qubo_gives_zero_objective() {
        let o = QuboMatrix::new(3, vec![0.0; 9]).unwrap().to_ising();
        assert!(o.upper_triangle().iter().all(|&v| v == 0.0));
        assert!(o.field().iter().all(|&v| v == 0.0));
        assert_eq!(o.offset(), 0.0);
    }

    #[test]
    fn off_diagonal_qubo_agrees_at_every_bitstring() {
        let q = QuboMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let o = q.to_ising();
        for b in all_bits(2) {
            assert_eq!(q.evaluate(&b).unwrap(), o.evaluate(&b.to_spins()).unwrap());
        }
    }

    #[test]
    fn asymmetric_qubo_is_rejected() {
        let err = QuboMatrix::new(2, vec![0.0, 1.0, 2.0, 0.0]).unwrap_err();
        assert!(matches!(err, MoqaError::SymmetryViolation { row: 0, col: 1, .. }));
    }

    #[test]
    fn evaluate_examples() {
        let o = IsingObjective::constant(3, 7.0).unwrap();
        assert_eq!(o.evaluate(&SpinVector::new(vec![1, -1, 1]).unwrap()).unwrap(), 7.0);

        let o = IsingObjective::new(1, vec![0.0], vec![1.0], 2.0).unwrap();
        assert_eq!(o.evaluate(&SpinVector::new(vec![1]).unwrap()).unwrap(), 3.0);
        assert_eq!(o.evaluate(&SpinVector::new(vec![-1]).unwrap()).unwrap(), 1.0);

        let err = o.evaluate(&SpinVector::new(vec![1, 1]).unwrap()).unwrap_err();
        assert!(matches!(err, MoqaError::DimensionMismatch { expected: 1, actual: 2 }));
    }

    #[test]
    fn diagonal_folds_into_offset() {
        let o = IsingObjective::new(2, vec![1.5, 0.0, 0.0, 2.0], vec![0.0; 2], 1.0).unwrap();
        assert_eq!(o.coupling(0, 0), 0.0);
        assert_eq!(o.coupling(1, 1), 0.0);
        assert_eq!(o.offset(), 4.5);
    }

    #[test]
    fn spin_bit_round_trip() {
        for i in 0..16 {
            let b = BitVector::from_index(i, 4);
            assert_eq!(b.to_spins().to_bits(), b);
            assert_eq!(b.index(), i);
            assert_eq!(SpinVector::from_index(i, 4).index(), i);
        }
        assert!(SpinVector::new(vec![0]).is_err());
        assert!(BitVector::new(vec![2]).is_err());
    }

    #[test]
    fn augmented_matrix_examples() {
        let o = IsingObjective::new(1, vec![0.0], vec![2.0], 0.0).unwrap();
        let m = o.augmented_matrix();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let lambda = linalg::smallest_eigenvalue(&m).unwrap();
        assert!((lambda + 1.0).abs() < 1e-12);

        let o = IsingObjective::from_upper(3, &[1.0, -2.0, 0.5], vec![0.0; 3], 0.0).unwrap();
        let m = o.augmented_matrix();
        for i in 0..3 {
            assert_eq!(m[(3, i)], 0.0);
            assert_eq!(m[(i, 3)], 0.0);
        }
    }

    #[test]
    fn shift_of_single_field_objective() {
        let o = IsingObjective::new(1, vec![0.0], vec![1.0], 0.0).unwrap();
        let p = MultiObjectiveProblem::new(vec![o]).unwrap();
        let spectral = p.compute_shift(ShiftMode::Spectral).unwrap();
        let exact = p.compute_shift(ShiftMode::Exact).unwrap();
        assert!((spectral - 1.0).abs() < 1e-12);
        assert_eq!(exact, 1.0);
        let shifted = p.apply_shift(exact);
        assert_eq!(shifted.shift_c(), 1.0);
        let min = shifted.objectives()[0]
            .landscape()
            .unwrap()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert_eq!(min, 0.0);
    }

    #[test]
    fn exact_shift_is_zero_for_nonnegative_landscape_with_zero_minimum() {
        let q = QuboMatrix::new(2, vec![1.0, 0.0, 0.0, 2.0]).unwrap();
        let p = MultiObjectiveProblem::new(vec![q.to_ising()]).unwrap();
        assert_eq!(p.compute_shift(ShiftMode::Exact).unwrap(), 0.0);
    }

    #[test]
    fn shift_application_is_additive() {
        let o = IsingObjective::from_upper(2, &[0.3], vec![1.0, -2.0], 0.25).unwrap();
        let p = MultiObjectiveProblem::new(vec![o]).unwrap();
        assert_eq!(p.apply_shift(0.0), p);
        let twice = p.apply_shift(0.75).apply_shift(0.75);
        let once = p.apply_shift(1.5);
        assert_eq!(twice, once);
    }

    #[test]
    fn exact_shift_respects_cap() {
        let o = IsingObjective::constant(4, 1.0).unwrap();
        let p = MultiObjectiveProblem::new(vec![o]).unwrap();
        assert!(matches!(
            p.exact_shift(3),
            Err(MoqaError::BruteForceCap { n: 4, cap: 3 })
        ));
    }

    #[test]
    fn gray_code_landscape_matches_direct_evaluation() {
        let o = IsingObjective::from_upper(
            5,
            &[0.3, -1.2, 0.7, 0.1, 2.0, -0.4, 0.9, 1.1, -0.6, 0.25],
            vec![0.5, -1.0, 0.0, 1.5, -0.2],
            0.125,
        )
        .unwrap();
        let l = o.landscape().unwrap();
        for (i, v) in l.iter().enumerate() {
            assert!((v - o.evaluate_index(i as u64)).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_objective_sizes_rejected() {
        let a = IsingObjective::constant(2, 0.0).unwrap();
        let b = IsingObjective::constant(3, 0.0).unwrap();
        assert!(MultiObjectiveProblem::new(vec![a, b]).is_err());
        assert!(MultiObjectiveProblem::new(vec![]).is_err());
    }
}
