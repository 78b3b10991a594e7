//! Closed-form resource bounds for the enumeration route.

use serde::Serialize;

use super::allocation::{binomial_f64, binomial_u128};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceReport {
    pub n: usize,
    pub level: u32,
    pub objectives: usize,
    /// `(M+3) n² binom(p + (n²+n)/2, p)`.
    pub classical_steps: f64,
    /// `Σ_{k=1}^{2p} binom(n, k)`: non-identity Pauli terms that can be non-zero.
    pub max_terms: u128,
    /// `2^n`.
    pub dense_slots: f64,
    /// `M n² 2^n`, exhaustive evaluation of every objective.
    pub brute_force_steps: f64,
}

pub fn resource_report(n: usize, level: u32, objectives: usize) -> ResourceReport {
    let nf = n as f64;
    let pairs = (n * n + n) as u64 / 2;
    let classical_steps =
        (objectives as f64 + 3.0) * nf * nf * binomial_f64(u64::from(level) + pairs, u64::from(level));
    let max_terms = (1..=2 * u64::from(level))
        .map(|k| binomial_u128(n as u64, k).unwrap_or(u128::MAX))
        .fold(0u128, u128::saturating_add);
    let dense_slots = nf.exp2();
    ResourceReport {
        n,
        level,
        objectives,
        classical_steps,
        max_terms,
        dense_slots,
        brute_force_steps: objectives as f64 * nf * nf * dense_slots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_case() {
        let r = resource_report(1, 1, 1);
        assert_eq!(r.classical_steps, 8.0);
        assert_eq!(r.max_terms, 1);
        assert_eq!(r.dense_slots, 2.0);
    }

    #[test]
    fn term_bound_never_exceeds_dense_slots() {
        for n in 1..40 {
            for p in 1..6 {
                let r = resource_report(n, p, 3);
                assert!((r.max_terms as f64) <= r.dense_slots);
            }
        }
    }

    #[test]
    fn monotone_in_n_at_reference_settings() {
        let rows: Vec<_> = (1..60).map(|n| resource_report(n, 4, 10)).collect();
        for w in rows.windows(2) {
            assert!(w[1].classical_steps > w[0].classical_steps);
            assert!(w[1].max_terms > w[0].max_terms);
            assert!(w[1].brute_force_steps > w[0].brute_force_steps);
        }
        let last = rows.last().unwrap();
        assert!(last.classical_steps < last.brute_force_steps * 1e-3);
    }
}
