use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{MoqaError, Result};
use crate::expansion::ExpansionMethod;
use crate::qubo::{ShiftMode, BRUTE_FORCE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    #[default]
    Generic,
    Partition,
    Constrained,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Generic => "generic",
            Study::Partition => "partition",
            Study::Constrained => "constrained",
        }
    }
}

impl std::str::FromStr for Study {
    type Err = MoqaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(Study::Generic),
            "partition" => Ok(Study::Partition),
            "constrained" => Ok(Study::Constrained),
            other => Err(MoqaError::invalid(format!("unknown study '{other}'"))),
        }
    }
}

/// Batch study settings. Field names double as the JSON config keys.
///
/// `m` is the number of objectives for the generic study and the number of
/// constraints for the constrained study; the partition study always uses two
/// objectives and ignores it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub study: Study,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub p: Vec<u32>,
    pub ns: usize,
    pub gamma: Vec<f64>,
    pub seed: u64,
    pub shift: ShiftMode,
    pub out: Option<PathBuf>,
    pub full_scale: bool,
    pub expansion: ExpansionMethod,
    /// Constraint redraws allowed per constrained sample.
    pub max_resamples: usize,
    /// Bins of the gap-ratio histogram.
    pub gap_bins: usize,
}

pub const DESK_SAMPLES: usize = 500;
pub const FULL_SCALE_SAMPLES: usize = 10_000;

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            study: Study::Generic,
            n: vec![4, 8, 12],
            m: vec![2],
            p: (1..=6).collect(),
            ns: DESK_SAMPLES,
            gamma: vec![10.0, 40.0],
            seed: 0,
            shift: ShiftMode::Spectral,
            out: None,
            full_scale: false,
            expansion: ExpansionMethod::Product,
            max_resamples: 1000,
            gap_bins: 20,
        }
    }
}

impl ExperimentConfig {
    pub fn for_study(study: Study) -> Self {
        let mut cfg = ExperimentConfig {
            study,
            ..Default::default()
        };
        if study == Study::Constrained {
            cfg.m = vec![2];
        }
        cfg
    }

    /// Switch to the published scale: 10000 samples, `n` up to 20, `p` up to `n`.
    pub fn at_full_scale(mut self) -> Self {
        self.full_scale = true;
        self.ns = FULL_SCALE_SAMPLES;
        self.n = vec![4, 8, 12, 16, 20];
        self.p = (1..=20).collect();
        self
    }

    /// Levels actually run for a given `n`: the requested ones with `p ≤ n`.
    pub fn levels_for(&self, n: usize) -> Vec<u32> {
        let mut levels: Vec<u32> = self.p.iter().copied().filter(|&p| p as usize <= n).collect();
        levels.sort_unstable();
        levels.dedup();
        levels
    }

    /// Checks the settings and returns runtime warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.ns == 0 {
            return Err(MoqaError::invalid("ns must be >= 1"));
        }
        if self.n.is_empty() || self.p.is_empty() {
            return Err(MoqaError::invalid("n and p lists must not be empty"));
        }
        if let Some(p) = self.p.iter().find(|&&p| p == 0) {
            return Err(MoqaError::invalid(format!("approximation level {p} must be >= 1")));
        }
        for &n in &self.n {
            if n == 0 {
                return Err(MoqaError::invalid("n must be >= 1"));
            }
            if n > BRUTE_FORCE_CAP {
                return Err(MoqaError::BruteForceCap {
                    n,
                    cap: BRUTE_FORCE_CAP,
                });
            }
        }
        match self.study {
            Study::Generic => {
                if self.m.is_empty() || self.m.contains(&0) {
                    return Err(MoqaError::invalid("m must list objective counts >= 1"));
                }
            }
            Study::Partition => {}
            Study::Constrained => {
                if self.m.is_empty() {
                    return Err(MoqaError::invalid("m must list constraint counts"));
                }
                if self.gamma.is_empty() || self.gamma.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
                    return Err(MoqaError::invalid("gamma values must be positive and finite"));
                }
            }
        }
        if self.expansion == ExpansionMethod::SymmetryReduced && self.study != Study::Partition {
            return Err(MoqaError::invalid(
                "symmetry-reduced expansion only applies to the partition study",
            ));
        }

        let mut warnings = Vec::new();
        for &n in &self.n {
            let dropped: Vec<u32> = self.p.iter().copied().filter(|&p| p as usize > n).collect();
            if !dropped.is_empty() {
                warnings.push(format!("n={n}: skipping levels {dropped:?} above n"));
            }
            if n > 16 {
                warnings.push(format!(
                    "n={n}: every sample enumerates 2^{n} bitstrings per level; expect a long run"
                ));
            }
        }
        if self.ns > 2000 {
            warnings.push(format!("ns={}: large batch, expect a long run", self.ns));
        }
        if self.full_scale {
            warnings.push("full-scale run: this can take hours to days".to_string());
        }
        Ok(warnings)
    }

    /// SHA-256 of the canonical JSON encoding, lowercase hex.
    pub fn hash(&self) -> Result<String> {
        let text = serde_json::to_string(self)?;
        let digest = Sha256::digest(text.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_desk_scale() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.ns, 500);
        assert_eq!(cfg.n, vec![4, 8, 12]);
        assert_eq!(cfg.levels_for(4), vec![1, 2, 3, 4]);
        assert_eq!(cfg.levels_for(12), vec![1, 2, 3, 4, 5, 6]);
        assert!(cfg.validate().unwrap().iter().any(|w| w.contains("n=4")));
        let full = cfg.at_full_scale();
        assert_eq!(full.ns, 10_000);
        assert_eq!(full.levels_for(20).len(), 20);
        assert!(full.validate().unwrap().iter().any(|w| w.contains("full-scale")));
    }

    #[test]
    fn config_file_uses_flag_names() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"study":"constrained","n":[6],"m":[3],"p":[1,2],"ns":10,"gamma":[5],"shift":"exact"}"#)
                .unwrap();
        assert_eq!(cfg.study, Study::Constrained);
        assert_eq!(cfg.shift, ShiftMode::Exact);
        assert_eq!(cfg.gamma, vec![5.0]);
        assert_eq!(cfg.seed, 0);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"samples":3}"#).is_err());
    }

    #[test]
    fn invalid_settings() {
        let base = ExperimentConfig::default();
        assert!(ExperimentConfig { ns: 0, ..base.clone() }.validate().is_err());
        assert!(ExperimentConfig { p: vec![0], ..base.clone() }.validate().is_err());
        assert!(matches!(
            ExperimentConfig { n: vec![30], ..base.clone() }.validate(),
            Err(MoqaError::BruteForceCap { .. })
        ));
        assert!(ExperimentConfig {
            study: Study::Constrained,
            gamma: vec![-1.0],
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentConfig {
            expansion: ExpansionMethod::SymmetryReduced,
            ..base
        }
        .validate()
        .is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { seed: 1, ..a.clone() };
        assert_eq!(a.hash().unwrap(), a.clone().hash().unwrap());
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }
}
