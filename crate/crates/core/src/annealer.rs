//! Simulated annealing over diagonal Pauli-Z Hamiltonians.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{MoqaError, Result};
use crate::expansion::{PauliMask, SparsePauliHamiltonian};
use crate::qubo::SpinVector;
use crate::rng::prng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnealSchedule {
    pub sweeps: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl AnnealSchedule {
    pub fn new(sweeps: usize, t_start: f64, t_end: f64, restarts: usize, seed: u64) -> Result<Self> {
        if sweeps == 0 || restarts == 0 {
            return Err(MoqaError::invalid("sweeps and restarts must be >= 1"));
        }
        if !(t_end > 0.0) || !(t_start >= t_end) || !t_start.is_finite() {
            return Err(MoqaError::invalid(format!(
                "need T_start >= T_end > 0, got {t_start} and {t_end}"
            )));
        }
        Ok(AnnealSchedule {
            sweeps,
            t_start,
            t_end,
            restarts,
            seed,
        })
    }

    /// 5000 sweeps, 8 restarts, `T_start = max|C|`, `T_end = 1e-3 · median|C|`
    /// over the non-identity terms.
    pub fn default_for(h: &SparsePauliHamiltonian, seed: u64) -> Self {
        let mut mags: Vec<f64> = h
            .terms()
            .filter(|(m, _)| m.0 != 0)
            .map(|(_, c)| c.abs())
            .collect();
        mags.sort_by(f64::total_cmp);
        let (t_start, t_end) = if mags.is_empty() {
            (1.0, 1e-3)
        } else {
            let max = *mags.last().unwrap();
            let median = mags[mags.len() / 2];
            (max, (1e-3 * median).min(max))
        };
        AnnealSchedule {
            sweeps: 5000,
            t_start,
            t_end,
            restarts: 8,
            seed,
        }
    }

    fn temperature(&self, sweep: usize) -> f64 {
        if self.sweeps == 1 {
            return self.t_start;
        }
        let frac = sweep as f64 / (self.sweeps - 1) as f64;
        self.t_start * (self.t_end / self.t_start).powf(frac)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealResult {
    pub index: u64,
    pub energy: f64,
    /// Accepted moves whose incremental energy was re-checked.
    pub checked_moves: usize,
    /// Re-checks where incremental and full energies disagreed.
    pub delta_mismatches: usize,
}

impl AnnealResult {
    pub fn spins(&self, n: usize) -> SpinVector {
        SpinVector::from_index(self.index, n)
    }
}

/// Terms plus, for each qubit, the terms acting on it.
struct Incidence {
    masks: Vec<u64>,
    coefficients: Vec<f64>,
    by_qubit: Vec<Vec<usize>>,
    constant: f64,
    scale: f64,
}

impl Incidence {
    fn new(h: &SparsePauliHamiltonian) -> Self {
        let mut masks = Vec::new();
        let mut coefficients = Vec::new();
        let mut by_qubit = vec![Vec::new(); h.n()];
        let mut constant = 0.0;
        let mut scale = 0.0;
        for (m, c) in h.terms() {
            scale += c.abs();
            if m.0 == 0 {
                constant += c;
                continue;
            }
            let t = masks.len();
            for (q, list) in by_qubit.iter_mut().enumerate() {
                if m.contains(q) {
                    list.push(t);
                }
            }
            masks.push(m.0);
            coefficients.push(c);
        }
        Incidence {
            masks,
            coefficients,
            by_qubit,
            constant,
            scale,
        }
    }
}

/// `E(flip_i(s)) − E(s) = −2 Σ_{x ∋ i} C(x) Π_{k ∈ x} s_k`.
pub fn local_energy_delta(h: &SparsePauliHamiltonian, spins: &SpinVector, qubit: usize) -> Result<f64> {
    if spins.len() != h.n() {
        return Err(MoqaError::DimensionMismatch {
            expected: h.n(),
            actual: spins.len(),
        });
    }
    if qubit >= h.n() {
        return Err(MoqaError::invalid(format!("qubit {qubit} out of range")));
    }
    let index = spins.index();
    Ok(-2.0
        * h.terms()
            .filter(|(m, _)| m.contains(qubit))
            .map(|(m, c)| c * m.sign_at(index))
            .sum::<f64>())
}

const CHECK_EVERY: usize = 100;

fn run_restart(h: &SparsePauliHamiltonian, inc: &Incidence, sched: &AnnealSchedule, restart: usize) -> AnnealResult {
    let n = h.n();
    let mut rng = prng(sched.seed.wrapping_add(restart as u64));
    let mut index: u64 = 0;
    for q in 0..n {
        if rng.random::<bool>() {
            index |= 1 << q;
        }
    }
    let mut signs: Vec<f64> = inc.masks.iter().map(|&m| PauliMask(m).sign_at(index)).collect();
    let mut energy = inc.constant + inc.coefficients.iter().zip(&signs).map(|(c, t)| c * t).sum::<f64>();
    let mut best = (energy, index);
    let mut accepted = 0usize;
    let mut checked = 0usize;
    let mut mismatches = 0usize;

    for sweep in 0..sched.sweeps {
        let beta = 1.0 / sched.temperature(sweep);
        for q in 0..n {
            let delta = -2.0
                * inc.by_qubit[q]
                    .iter()
                    .map(|&t| inc.coefficients[t] * signs[t])
                    .sum::<f64>();
            let accept = delta <= 0.0 || rng.random::<f64>() < (-delta * beta).exp();
            if !accept {
                continue;
            }
            for &t in &inc.by_qubit[q] {
                signs[t] = -signs[t];
            }
            index ^= 1 << q;
            energy += delta;
            accepted += 1;
            if accepted.is_multiple_of(CHECK_EVERY) {
                checked += 1;
                let full = h.evaluate_index(index);
                if (full - energy).abs() > 1e-10 * inc.scale.max(1.0) {
                    mismatches += 1;
                }
            }
            if energy < best.0 || (energy == best.0 && index < best.1) {
                best = (energy, index);
            }
        }
    }
    AnnealResult {
        index: best.1,
        energy: best.0,
        checked_moves: checked,
        delta_mismatches: mismatches,
    }
}

/// Metropolis sweeps with geometric cooling; restarts run in parallel with
/// seeds `seed + restart`. Returns the best configuration seen, ties going to
/// the smallest bitstring; the reported energy is a full re-evaluation.
pub fn anneal(h: &SparsePauliHamiltonian, sched: &AnnealSchedule) -> Result<AnnealResult> {
    if h.n() >= 64 {
        return Err(MoqaError::invalid("annealer supports at most 63 qubits"));
    }
    let sched = AnnealSchedule::new(sched.sweeps, sched.t_start, sched.t_end, sched.restarts, sched.seed)?;
    let inc = Incidence::new(h);
    let runs: Vec<AnnealResult> = (0..sched.restarts)
        .into_par_iter()
        .map(|r| run_restart(h, &inc, &sched, r))
        .collect();
    let checked_moves = runs.iter().map(|r| r.checked_moves).sum();
    let delta_mismatches = runs.iter().map(|r| r.delta_mismatches).sum();
    let best = runs
        .into_iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy).then(a.index.cmp(&b.index)))
        .expect("restarts >= 1");
    Ok(AnnealResult {
        index: best.index,
        energy: h.evaluate_index(best.index),
        checked_moves,
        delta_mismatches,
    })
}

/// Exhaustive minimum of a Hamiltonian, smallest bitstring on ties.
pub fn brute_force_minimum(h: &SparsePauliHamiltonian) -> Result<AnnealResult> {
    let l = h.landscape()?;
    let index = crate::oracle::argmin(&l);
    Ok(AnnealResult {
        index,
        energy: l[index as usize],
        checked_moves: 0,
        delta_mismatches: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{expand_product, ExpansionMethod, Provenance};
    use crate::generators::random_multiobjective;
    use crate::qubo::ShiftMode;

    fn ham(n: usize, terms: &[(u64, f64)]) -> SparsePauliHamiltonian {
        SparsePauliHamiltonian::new(
            n,
            1,
            1,
            0.0,
            Provenance {
                method: ExpansionMethod::Dense,
                threshold: None,
            },
            terms.iter().map(|&(m, c)| (PauliMask(m), c)),
        )
        .unwrap()
    }

    #[test]
    fn delta_examples() {
        let empty = ham(2, &[]);
        let s = SpinVector::new(vec![1, -1]).unwrap();
        assert_eq!(local_energy_delta(&empty, &s, 0).unwrap(), 0.0);

        let h = ham(1, &[(0, 5.0), (1, 4.0)]);
        let up = SpinVector::new(vec![1]).unwrap();
        assert_eq!(local_energy_delta(&h, &up, 0).unwrap(), -8.0);
        assert!(local_energy_delta(&h, &up, 1).is_err());
    }

    #[test]
    fn delta_matches_full_reevaluation() {
        let p = random_multiobjective(6, 2, 11).unwrap().shifted(ShiftMode::Spectral).unwrap();
        let h = expand_product(&p, 3).unwrap();
        for index in 0..64u64 {
            let s = SpinVector::from_index(index, 6);
            for q in 0..6 {
                let d = local_energy_delta(&h, &s, q).unwrap();
                let full = h.evaluate_index(index ^ (1 << q)) - h.evaluate_index(index);
                assert!((d - full).abs() < 1e-10 * full.abs().max(1.0));
            }
        }
    }

    #[test]
    fn constant_hamiltonian() {
        let h = ham(3, &[(0, 2.5)]);
        let r = anneal(&h, &AnnealSchedule::default_for(&h, 1)).unwrap();
        assert_eq!(r.energy, 2.5);
    }

    #[test]
    fn deterministic_per_seed_and_self_consistent() {
        let p = random_multiobjective(8, 2, 4).unwrap().shifted(ShiftMode::Spectral).unwrap();
        let h = expand_product(&p, 2).unwrap();
        let sched = AnnealSchedule::new(300, 10.0, 0.01, 3, 42).unwrap();
        let a = anneal(&h, &sched).unwrap();
        let b = anneal(&h, &sched).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.energy, h.evaluate_index(a.index));
        assert_eq!(a.delta_mismatches, 0);
    }

    #[test]
    fn single_objective_matches_brute_force() {
        let p = random_multiobjective(8, 1, 9).unwrap().shifted(ShiftMode::Spectral).unwrap();
        let h = expand_product(&p, 1).unwrap();
        let exact = brute_force_minimum(&h).unwrap();
        let mut hits = 0;
        for seed in 0..100 {
            let sched = AnnealSchedule {
                sweeps: 2000,
                restarts: 1,
                ..AnnealSchedule::default_for(&h, seed)
            };
            let r = anneal(&h, &sched).unwrap();
            if (r.energy - exact.energy).abs() <= 1e-9 * exact.energy.abs().max(1.0) {
                hits += 1;
            }
        }
        assert!(hits >= 95, "{hits}/100");
    }

    #[test]
    fn invalid_schedules_rejected() {
        assert!(AnnealSchedule::new(0, 1.0, 0.1, 1, 0).is_err());
        assert!(AnnealSchedule::new(10, 0.1, 1.0, 1, 0).is_err());
        assert!(AnnealSchedule::new(10, 1.0, 0.0, 1, 0).is_err());
    }
}
