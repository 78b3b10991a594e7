use serde::Serialize;

use crate::error::{MoqaError, Result};
use crate::expansion::{expand_power_series, resource_report, ResourceReport};
use crate::generators::random_multiobjective;
use crate::oracle::{argmin, landscape_max, pth_root};
use crate::qubo::{ShiftMode, BRUTE_FORCE_CAP};

/// Every curve of one seeded instance over all `2^n` bitstrings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeDump {
    pub n: usize,
    pub shift_c: f64,
    /// Shifted `h_m`, one vector per objective.
    pub objectives: Vec<Vec<f64>>,
    pub hmax: Vec<f64>,
    pub levels: Vec<u32>,
    /// `h_(p)^{1/p}` for each level.
    pub roots: Vec<Vec<f64>>,
    pub argmin_max: u64,
    pub argmin_levels: Vec<u64>,
}

pub fn dump_landscapes(
    n: usize,
    objectives: usize,
    levels: &[u32],
    seed: u64,
    shift: ShiftMode,
) -> Result<LandscapeDump> {
    if n > BRUTE_FORCE_CAP {
        return Err(MoqaError::BruteForceCap {
            n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    if levels.is_empty() || levels.contains(&0) {
        return Err(MoqaError::invalid("levels must be non-empty and >= 1"));
    }
    let problem = random_multiobjective(n, objectives, seed)?.shifted(shift)?;
    let hmax = landscape_max(&problem)?;
    let max_level = *levels.iter().max().expect("non-empty");
    let series = expand_power_series(&problem, max_level)?;
    let mut roots = Vec::with_capacity(levels.len());
    let mut argmin_levels = Vec::with_capacity(levels.len());
    for &p in levels {
        let hp = series[p as usize - 1].landscape()?;
        argmin_levels.push(argmin(&hp));
        roots.push(pth_root(&hp, p));
    }
    Ok(LandscapeDump {
        n,
        shift_c: problem.shift_c(),
        objectives: problem.landscapes()?,
        argmin_max: argmin(&hmax),
        hmax,
        levels: levels.to_vec(),
        roots,
        argmin_levels,
    })
}

/// Closed-form cost curves for each `n`.
pub fn dump_resources(n_list: &[usize], level: u32, objectives: usize) -> Vec<ResourceReport> {
    n_list
        .iter()
        .map(|&n| resource_report(n, level, objectives))
        .collect()
}
