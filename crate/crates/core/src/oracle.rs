//! Brute-force ground truth for small `n`: landscapes of `h_max` and `h_(p)`,
//! spectra and gap ratios, the sandwich bounds, and the threshold guarantee.

use std::io::Write;

use serde::Serialize;

use crate::error::{MoqaError, Result};
use crate::expansion::{expand_product, SparsePauliHamiltonian};
use crate::qubo::{MultiObjectiveProblem, BRUTE_FORCE_CAP, SHIFT_TOLERANCE};

/// Absolute tolerance when comparing energies.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Ground energies at or below this leave the gap ratio undefined.
pub const GAP_TOLERANCE: f64 = 1e-12;

/// `max_m h_m(b)` at every bitstring.
pub fn landscape_max(problem: &MultiObjectiveProblem) -> Result<Vec<f64>> {
    if problem.n() > BRUTE_FORCE_CAP {
        return Err(MoqaError::BruteForceCap {
            n: problem.n(),
            cap: BRUTE_FORCE_CAP,
        });
    }
    let mut objectives = problem.objectives().iter();
    let mut out = objectives.next().expect("at least one objective").landscape()?;
    for o in objectives {
        for (acc, v) in out.iter_mut().zip(o.landscape()?) {
            *acc = acc.max(v);
        }
    }
    Ok(out)
}

/// `Σ_x C(x) Π s_k` at every bitstring.
pub fn landscape_p(h: &SparsePauliHamiltonian) -> Result<Vec<f64>> {
    h.landscape()
}

/// `v^{1/p}`, clamping tiny negative round-off to zero.
pub fn pth_root(landscape: &[f64], level: u32) -> Vec<f64> {
    let inv = 1.0 / f64::from(level);
    landscape.iter().map(|v| v.max(0.0).powf(inv)).collect()
}

/// First index attaining the minimum (smallest bitstring on exact ties).
pub fn argmin(landscape: &[f64]) -> u64 {
    let mut best = 0;
    for (i, v) in landscape.iter().enumerate() {
        if *v < landscape[best] {
            best = i;
        }
    }
    best as u64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub ground: f64,
    /// Smallest energy more than [`TIE_TOLERANCE`] above the ground energy.
    pub excited: Option<f64>,
    /// `(λ_e − λ_g) / λ_g`, defined only for non-degenerate spectra with
    /// `λ_g >` [`GAP_TOLERANCE`].
    pub gap_ratio: Option<f64>,
    /// Bitstrings within [`TIE_TOLERANCE`] of the ground energy, ascending.
    pub argmin_set: Vec<u64>,
}

impl SpectrumReport {
    pub fn degenerate(&self) -> bool {
        self.excited.is_none()
    }

    pub fn representative(&self) -> u64 {
        self.argmin_set[0]
    }
}

pub fn spectrum(landscape: &[f64]) -> Result<SpectrumReport> {
    if landscape.is_empty() {
        return Err(MoqaError::invalid("empty landscape"));
    }
    let ground = landscape.iter().copied().fold(f64::INFINITY, f64::min);
    let excited = landscape
        .iter()
        .copied()
        .filter(|v| *v > ground + TIE_TOLERANCE)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    let argmin_set = landscape
        .iter()
        .enumerate()
        .filter(|(_, v)| **v <= ground + TIE_TOLERANCE)
        .map(|(i, _)| i as u64)
        .collect();
    let gap_ratio = match excited {
        Some(e) if ground > GAP_TOLERANCE => Some((e - ground) / ground),
        _ => None,
    };
    Ok(SpectrumReport {
        ground,
        excited,
        gap_ratio,
        argmin_set,
    })
}

/// Smallest level guaranteeing aligned minima: `ln M / ln(r + 1)`.
pub fn threshold_p(gap_ratio: f64, objectives: usize) -> Result<f64> {
    if !(gap_ratio > 0.0) || !gap_ratio.is_finite() {
        return Err(MoqaError::UndefinedThreshold { ratio: gap_ratio });
    }
    if objectives == 0 {
        return Err(MoqaError::invalid("need at least one objective"));
    }
    Ok((objectives as f64).ln() / gap_ratio.ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichReport {
    /// Largest violation of either bound in `p`-th power form, relative to
    /// `max(1, h_max(b)^p)`.
    pub max_violation: f64,
    pub worst_index: u64,
}

/// Check `M^{-1/p} h_(p)^{1/p} ≤ h_max ≤ h_(p)^{1/p}` at every bitstring,
/// in the equivalent form `h_max^p ≤ h_(p) ≤ M h_max^p`.
pub fn check_sandwich(
    problem: &MultiObjectiveProblem,
    h: &SparsePauliHamiltonian,
) -> Result<SandwichReport> {
    if h.n() != problem.n() {
        return Err(MoqaError::DimensionMismatch {
            expected: problem.n(),
            actual: h.n(),
        });
    }
    for o in problem.objectives() {
        let l = o.landscape()?;
        if let Some((i, v)) = l
            .iter()
            .enumerate()
            .find(|(_, v)| **v < -SHIFT_TOLERANCE)
        {
            return Err(MoqaError::NegativeLandscape {
                index: i as u64,
                value: *v,
            });
        }
    }
    let hmax = landscape_max(problem)?;
    let hp = landscape_p(h)?;
    let objectives = problem.num_objectives() as f64;
    let level = h.level() as i32;
    let mut report = SandwichReport {
        max_violation: 0.0,
        worst_index: 0,
    };
    for (i, (m, v)) in hmax.iter().zip(&hp).enumerate() {
        let power = m.max(0.0).powi(level);
        let violation = (power - v).max(v - objectives * power) / power.max(1.0);
        if violation > report.max_violation {
            report = SandwichReport {
                max_violation: violation,
                worst_index: i as u64,
            };
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Guarantee {
    /// Degenerate spectrum or undefined gap ratio.
    NotApplicable,
    /// Level below the threshold; the conclusion is only observed.
    BelowThreshold { aligned: bool },
    /// Level at or above the threshold.
    AboveThreshold { aligned: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuaranteeOutcome {
    pub gap_ratio: Option<f64>,
    pub threshold: Option<f64>,
    pub guarantee: Guarantee,
}

impl GuaranteeOutcome {
    pub fn premise_met(&self) -> bool {
        matches!(self.guarantee, Guarantee::AboveThreshold { .. })
    }

    /// False only when the premise held and the minima did not align.
    pub fn holds(&self) -> bool {
        !matches!(self.guarantee, Guarantee::AboveThreshold { aligned: false })
    }
}

/// Whether the `h_(p)` minimizer also minimizes `h_max`, given a precomputed
/// `h_max` landscape and `h_(p)` landscape.
pub fn guarantee_from_landscapes(
    hmax: &[f64],
    hp: &[f64],
    objectives: usize,
    level: u32,
) -> Result<GuaranteeOutcome> {
    let spec = spectrum(hmax)?;
    let Some(r) = spec.gap_ratio else {
        return Ok(GuaranteeOutcome {
            gap_ratio: None,
            threshold: None,
            guarantee: Guarantee::NotApplicable,
        });
    };
    let threshold = threshold_p(r, objectives)?;
    let b_p = argmin(hp) as usize;
    let aligned = (hmax[b_p] - spec.ground).abs() <= TIE_TOLERANCE;
    let guarantee = if f64::from(level) >= threshold {
        Guarantee::AboveThreshold { aligned }
    } else {
        Guarantee::BelowThreshold { aligned }
    };
    Ok(GuaranteeOutcome {
        gap_ratio: Some(r),
        threshold: Some(threshold),
        guarantee,
    })
}

pub fn guarantee_holds(problem: &MultiObjectiveProblem, level: u32) -> Result<GuaranteeOutcome> {
    let hmax = landscape_max(problem)?;
    let hp = landscape_p(&expand_product(problem, level)?)?;
    guarantee_from_landscapes(&hmax, &hp, problem.num_objectives(), level)
}

/// CSV rows `index,bits,value` with bits written qubit 0 first.
pub fn write_landscape_csv<W: Write>(mut out: W, n: usize, landscape: &[f64]) -> Result<()> {
    writeln!(out, "index,bits,value")?;
    for (i, v) in landscape.iter().enumerate() {
        let bits: String = (0..n)
            .map(|k| if (i >> k) & 1 == 1 { '1' } else { '0' })
            .collect();
        writeln!(out, "{i},{bits},{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{ExpansionMethod, PauliMask, Provenance};
    use crate::qubo::IsingObjective;

    #[test]
    fn spectrum_examples() {
        let s = spectrum(&[1.0, 3.0]).unwrap();
        assert_eq!(s.ground, 1.0);
        assert_eq!(s.excited, Some(3.0));
        assert_eq!(s.gap_ratio, Some(2.0));
        assert_eq!(s.argmin_set, vec![0]);

        let s = spectrum(&[2.0, 2.0, 2.0]).unwrap();
        assert!(s.degenerate());
        assert_eq!(s.gap_ratio, None);
        assert_eq!(s.argmin_set, vec![0, 1, 2]);

        let s = spectrum(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.gap_ratio, None);
        assert!(!s.degenerate());

        assert!(spectrum(&[]).is_err());
    }

    #[test]
    fn threshold_examples() {
        assert!((threshold_p(1.0, 2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(threshold_p(0.7, 1).unwrap(), 0.0);
        assert!((threshold_p(0.1, 2).unwrap() - 2f64.ln() / 1.1f64.ln()).abs() < 1e-12);
        assert!((threshold_p(0.1, 2).unwrap() - 7.2725).abs() < 1e-4);
        assert!(matches!(
            threshold_p(0.0, 2),
            Err(MoqaError::UndefinedThreshold { .. })
        ));
    }

    #[test]
    fn landscape_max_is_pointwise_max() {
        let a = IsingObjective::constant(2, 1.0).unwrap();
        let b = IsingObjective::constant(2, 4.0).unwrap();
        let p = MultiObjectiveProblem::new(vec![a, b]).unwrap();
        assert_eq!(landscape_max(&p).unwrap(), vec![4.0; 4]);

        let single = IsingObjective::from_upper(2, &[0.5], vec![1.0, -1.0], 0.0).unwrap();
        let p = MultiObjectiveProblem::new(vec![single.clone()]).unwrap();
        assert_eq!(landscape_max(&p).unwrap(), single.landscape().unwrap());
    }

    #[test]
    fn landscape_p_single_qubit() {
        let h = SparsePauliHamiltonian::new(
            1,
            2,
            1,
            0.0,
            Provenance {
                method: ExpansionMethod::Dense,
                threshold: None,
            },
            [(PauliMask(0), 5.0), (PauliMask(1), 4.0)],
        )
        .unwrap();
        assert_eq!(landscape_p(&h).unwrap(), vec![9.0, 1.0]);
        assert_eq!(pth_root(&[9.0, 1.0], 2), vec![3.0, 1.0]);
    }

    #[test]
    fn sandwich_requires_nonnegative_landscape() {
        let o = IsingObjective::new(1, vec![0.0], vec![1.0], 0.0).unwrap();
        let p = MultiObjectiveProblem::new(vec![o]).unwrap();
        let h = expand_product(&p, 2).unwrap();
        assert!(matches!(
            check_sandwich(&p, &h),
            Err(MoqaError::NegativeLandscape { .. })
        ));
    }

    #[test]
    fn sandwich_is_tight_for_single_objective() {
        let o = IsingObjective::from_upper(3, &[0.5, -0.25, 1.0], vec![1.0, 0.0, -2.0], 0.0).unwrap();
        let p = MultiObjectiveProblem::new(vec![o])
            .unwrap()
            .shifted(crate::qubo::ShiftMode::Spectral)
            .unwrap();
        for level in 1..5 {
            let h = expand_product(&p, level).unwrap();
            let hmax = landscape_max(&p).unwrap();
            let root = pth_root(&landscape_p(&h).unwrap(), level);
            for (a, b) in hmax.iter().zip(&root) {
                assert!((a - b).abs() <= 1e-9 * a.max(1.0));
            }
            assert!(check_sandwich(&p, &h).unwrap().max_violation < 1e-9);
        }
    }

    #[test]
    fn single_objective_guarantee_is_trivial() {
        let o = IsingObjective::from_upper(2, &[0.5], vec![1.0, -0.5], 0.0).unwrap();
        let p = MultiObjectiveProblem::new(vec![o])
            .unwrap()
            .shifted(crate::qubo::ShiftMode::Spectral)
            .unwrap();
        let g = guarantee_holds(&p, 1).unwrap();
        assert!(g.premise_met());
        assert!(g.holds());
        assert_eq!(g.threshold, Some(0.0));
    }

    #[test]
    fn landscape_csv_layout() {
        let mut buf = Vec::new();
        write_landscape_csv(&mut buf, 2, &[1.0, 2.0, 3.0, 4.5]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "index,bits,value");
        assert_eq!(lines[2], "1,10,2");
        assert_eq!(lines[4], "3,11,4.5");
    }
}
