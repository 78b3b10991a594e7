//! Power allocations: compositions of the approximation level `p` over the
//! constant, linear and pairwise terms of one objective.
//!
//! Layout of an allocation vector of length `d = n(n+1)/2 + 1`:
//! slot `0` is the power of the constant, slots `1..=n` the powers of the
//! fields `a_i`, and slot `n + 1 + pair_index(i, j)` the power of the coupling
//! `A_ij` (`i < j`). Pairs are ordered lexicographically:
//! `(0,1), (0,2), …, (0,n-1), (1,2), …, (n-2,n-1)`.

use crate::error::{MoqaError, Result};
use crate::expansion::PauliMask;

/// Default refusal threshold for the number of allocations to enumerate.
pub const DEFAULT_ALLOCATION_BUDGET: f64 = 1e9;

/// Largest level whose factorial fits in `u128`.
pub const EXACT_MULTINOMIAL_MAX: u32 = 33;

/// Number of allocation slots for `n` variables.
pub fn slot_count(n: usize) -> usize {
    n * (n + 1) / 2 + 1
}

/// Index of the pair `(i, j)`, `i < j < n`, in lexicographic order.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_of_index(n: usize, index: usize) -> (usize, usize) {
    let mut rest = index;
    for i in 0..n {
        let row = n - i - 1;
        if rest < row {
            return (i, i + 1 + rest);
        }
        rest -= row;
    }
    panic!("pair index {index} out of range for n = {n}");
}

/// Bitmask of the Pauli-Z string a slot contributes when raised to an odd power.
pub(crate) fn slot_mask(n: usize, slot: usize) -> u64 {
    if slot == 0 {
        0
    } else if slot <= n {
        1 << (slot - 1)
    } else {
        let (i, j) = pair_of_index(n, slot - n - 1);
        (1 << i) | (1 << j)
    }
}

/// `binom(a, b)` as a float; exact while the value fits in 53 bits.
pub fn binomial_f64(a: u64, b: u64) -> f64 {
    if b > a {
        return 0.0;
    }
    let b = b.min(a - b);
    (0..b).fold(1.0, |acc, k| acc * (a - k) as f64 / (k + 1) as f64)
}

/// `binom(a, b)` in 128-bit arithmetic, `None` on overflow.
pub fn binomial_u128(a: u64, b: u64) -> Option<u128> {
    if b > a {
        return Some(0);
    }
    let b = b.min(a - b);
    let mut acc: u128 = 1;
    for k in 0..b {
        // acc * (a-k) is divisible by (k+1) at every step
        acc = acc.checked_mul(u128::from(a - k))? / u128::from(k + 1);
    }
    Some(acc)
}

/// Number of allocations of `level` over the slots of `n` variables:
/// `binom(level + n(n+1)/2, level)`.
pub fn allocation_count(n: usize, level: u32) -> f64 {
    binomial_f64(level as u64 + slot_count(n) as u64 - 1, level as u64)
}

/// `p! / Π v_i!` exactly, `None` if it does not fit in `u128`.
pub fn multinomial_exact(parts: &[u32]) -> Option<u128> {
    let mut total: u64 = 0;
    let mut acc: u128 = 1;
    for &v in parts {
        total += u64::from(v);
        acc = acc.checked_mul(binomial_u128(total, u64::from(v))?)?;
    }
    Some(acc)
}

/// `p! / Π v_i!` as a float: exact integer arithmetic up to level 33,
/// log-space beyond.
pub fn multinomial(parts: &[u32]) -> f64 {
    let level: u32 = parts.iter().sum();
    if level <= EXACT_MULTINOMIAL_MAX {
        if let Some(v) = multinomial_exact(parts) {
            return v as f64;
        }
    }
    let ln_fact = |k: u32| (2..=k).map(|i| f64::from(i).ln()).sum::<f64>();
    (ln_fact(level) - parts.iter().map(|&v| ln_fact(v)).sum::<f64>()).exp()
}

/// One composition of `p` over the `d` slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PowerAllocation {
    n: usize,
    powers: Vec<u32>,
}

impl PowerAllocation {
    pub fn new(n: usize, powers: Vec<u32>) -> Result<Self> {
        if powers.len() != slot_count(n) {
            return Err(MoqaError::DimensionMismatch {
                expected: slot_count(n),
                actual: powers.len(),
            });
        }
        Ok(PowerAllocation { n, powers })
    }

    pub fn powers(&self) -> &[u32] {
        &self.powers
    }

    pub fn level(&self) -> u32 {
        self.powers.iter().sum()
    }

    pub fn constant_power(&self) -> u32 {
        self.powers[0]
    }

    pub fn field_power(&self, i: usize) -> u32 {
        self.powers[1 + i]
    }

    /// Power of the coupling `(i, j)`, symmetric in its arguments; zero for `i == j`.
    pub fn pair_power(&self, i: usize, j: usize) -> u32 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Less => self.powers[1 + self.n + pair_index(self.n, i, j)],
            std::cmp::Ordering::Greater => self.powers[1 + self.n + pair_index(self.n, j, i)],
        }
    }

    /// Pauli-Z string of this summand: qubit `i` is active iff
    /// `l_i + Σ_j k_ij` is odd.
    pub fn mask(&self) -> PauliMask {
        let n = self.n;
        let mut x = 0u64;
        for k in 0..n {
            let t = self.field_power(k) + (0..n).map(|j| self.pair_power(k, j)).sum::<u32>();
            x |= u64::from(t % 2) << k;
        }
        PauliMask(x)
    }

    pub fn multinomial(&self) -> f64 {
        multinomial(&self.powers)
    }
}

/// `mask_of` as a free function.
pub fn mask_of(alloc: &PowerAllocation) -> PauliMask {
    alloc.mask()
}

/// Iterator over all allocations of `level` among the slots of `n` variables,
/// in lexicographically decreasing order: `(p,0,…,0), (p-1,1,0,…), …, (0,…,0,p)`.
#[derive(Debug, Clone)]
pub struct Allocations {
    n: usize,
    next: Option<Vec<u32>>,
}

impl Iterator for Allocations {
    type Item = PowerAllocation;

    fn next(&mut self) -> Option<PowerAllocation> {
        let current = self.next.take()?;
        let d = current.len();
        // successor: take one unit from the last non-zero slot before the end
        // and move it, together with everything after it, one slot right
        if let Some(i) = (0..d - 1).rev().find(|&i| current[i] > 0) {
            let mut succ = current.clone();
            let tail: u32 = succ[i + 1..].iter().sum();
            succ[i] -= 1;
            succ[i + 1] = tail + 1;
            for v in &mut succ[i + 2..] {
                *v = 0;
            }
            self.next = Some(succ);
        }
        Some(PowerAllocation {
            n: self.n,
            powers: current,
        })
    }
}

/// All allocations of `level` for `n` variables, refusing above the default budget.
pub fn allocations(n: usize, level: u32) -> Result<Allocations> {
    allocations_with_budget(n, level, DEFAULT_ALLOCATION_BUDGET)
}

pub fn allocations_with_budget(n: usize, level: u32, budget: f64) -> Result<Allocations> {
    if n == 0 || level == 0 {
        return Err(MoqaError::invalid("allocations need n >= 1 and p >= 1"));
    }
    let required = allocation_count(n, level);
    if required > budget {
        return Err(MoqaError::ResourceBudget {
            what: "allocation enumeration",
            required,
            budget,
        });
    }
    let mut first = vec![0; slot_count(n)];
    first[0] = level;
    Ok(Allocations {
        n,
        next: Some(first),
    })
}
