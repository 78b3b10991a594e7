use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{MoqaError, Result};
use crate::qubo::{SpinVector, BRUTE_FORCE_CAP};

/// Pauli-Z string as a bitmask: bit `k` set means `Z` acts on qubit `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PauliMask(pub u64);

impl PauliMask {
    pub fn weight(self) -> u32 {
        self.0.count_ones()
    }

    pub fn contains(self, qubit: usize) -> bool {
        (self.0 >> qubit) & 1 == 1
    }

    /// Qubit 0 first.
    pub fn bit_string(self, n: usize) -> String {
        (0..n)
            .map(|k| if self.contains(k) { '1' } else { '0' })
            .collect()
    }

    /// `Π_{k ∈ x} s_k` for the bitstring `index`.
    pub fn sign_at(self, index: u64) -> f64 {
        if (self.0 & index).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for PauliMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

/// Which construction produced a Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionMethod {
    Dense,
    Sparse,
    SymmetryReduced,
    Product,
}

impl std::str::FromStr for ExpansionMethod {
    type Err = MoqaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(ExpansionMethod::Dense),
            "sparse" => Ok(ExpansionMethod::Sparse),
            "symmetric" | "symmetry_reduced" => Ok(ExpansionMethod::SymmetryReduced),
            "product" => Ok(ExpansionMethod::Product),
            other => Err(MoqaError::invalid(format!("unknown expansion method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: ExpansionMethod,
    /// Set once [`SparsePauliHamiltonian::threshold`] has been applied.
    pub threshold: Option<f64>,
}

/// Diagonal Hamiltonian `Σ_x C(x) Z(x)` with only non-zero coefficients stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePauliHamiltonian {
    pub(crate) n: usize,
    pub(crate) level: u32,
    pub(crate) objectives: usize,
    pub(crate) shift_c: f64,
    pub(crate) provenance: Provenance,
    pub(crate) terms: BTreeMap<PauliMask, f64>,
}

/// Outcome of coefficient thresholding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport {
    pub removed: usize,
    /// `Σ |C(x)|` over removed terms; the exact worst-case pointwise error.
    pub removed_weight: f64,
    /// `θ · removed`, the coarser bound.
    pub error_bound: f64,
}

impl SparsePauliHamiltonian {
    pub fn new(
        n: usize,
        level: u32,
        objectives: usize,
        shift_c: f64,
        provenance: Provenance,
        terms: impl IntoIterator<Item = (PauliMask, f64)>,
    ) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(MoqaError::invalid(format!("n = {n} outside 1..=64")));
        }
        let mut map = BTreeMap::new();
        for (mask, c) in terms {
            if n < 64 && mask.0 >> n != 0 {
                return Err(MoqaError::invalid(format!("mask {mask} exceeds {n} qubits")));
            }
            if !c.is_finite() {
                return Err(MoqaError::invalid(format!("non-finite coefficient at {mask}")));
            }
            if c != 0.0 {
                *map.entry(mask).or_insert(0.0) += c;
            }
        }
        map.retain(|_, c| *c != 0.0);
        Ok(SparsePauliHamiltonian {
            n,
            level,
            objectives,
            shift_c,
            provenance,
            terms: map,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn num_objectives(&self) -> usize {
        self.objectives
    }

    pub fn shift_c(&self) -> f64 {
        self.shift_c
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mask: PauliMask) -> f64 {
        self.terms.get(&mask).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (PauliMask, f64)> + '_ {
        self.terms.iter().map(|(m, c)| (*m, *c))
    }

    /// Terms ordered by (Hamming weight, mask value).
    pub fn sorted_terms(&self) -> Vec<(PauliMask, f64)> {
        let mut out: Vec<_> = self.terms().collect();
        out.sort_by_key(|(m, _)| (m.weight(), m.0));
        out
    }

    pub fn max_weight(&self) -> u32 {
        self.terms.keys().map(|m| m.weight()).max().unwrap_or(0)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    pub fn evaluate(&self, spins: &SpinVector) -> Result<f64> {
        if spins.len() != self.n {
            return Err(MoqaError::DimensionMismatch {
                expected: self.n,
                actual: spins.len(),
            });
        }
        Ok(self.evaluate_index(spins.index()))
    }

    pub fn evaluate_index(&self, index: u64) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.sign_at(index)).sum()
    }

    /// Values at all `2^n` bitstrings via a fast Walsh–Hadamard transform.
    pub fn landscape(&self) -> Result<Vec<f64>> {
        if self.n > BRUTE_FORCE_CAP {
            return Err(MoqaError::BruteForceCap {
                n: self.n,
                cap: BRUTE_FORCE_CAP,
            });
        }
        let mut v = vec![0.0; 1usize << self.n];
        for (m, c) in &self.terms {
            v[m.0 as usize] = *c;
        }
        walsh_hadamard(&mut v);
        Ok(v)
    }

    /// Drop every term with `|C(x)| < θ`.
    pub fn threshold(&self, theta: f64) -> Result<(Self, ThresholdReport)> {
        if !(theta >= 0.0) {
            return Err(MoqaError::invalid(format!("threshold {theta} must be >= 0")));
        }
        let mut kept = BTreeMap::new();
        let mut removed = 0;
        let mut removed_weight = 0.0;
        for (m, c) in &self.terms {
            if c.abs() < theta {
                removed += 1;
                removed_weight += c.abs();
            } else {
                kept.insert(*m, *c);
            }
        }
        let out = SparsePauliHamiltonian {
            terms: kept,
            provenance: Provenance {
                method: self.provenance.method,
                threshold: Some(theta),
            },
            ..self.clone()
        };
        Ok((
            out,
            ThresholdReport {
                removed,
                removed_weight,
                error_bound: theta * removed as f64,
            },
        ))
    }
}

/// In-place unnormalized Walsh–Hadamard transform:
/// `out[b] = Σ_x in[x] · (-1)^{popcount(x & b)}`.
pub fn walsh_hadamard(v: &mut [f64]) {
    let len = v.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        h *= 2;
    }
}
