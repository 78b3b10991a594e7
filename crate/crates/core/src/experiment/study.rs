use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Study};
use crate::error::{MoqaError, Result};
use crate::expansion::{expand, expand_power_series, ExpansionMethod};
use crate::generators::{
    constrained_to_multiobjective, partition_problem, random_constrained, random_multiobjective,
    LinearConstraint, PartitionGraph, SampledConstrained,
};
use crate::oracle::{argmin, landscape_max, spectrum, threshold_p, GAP_TOLERANCE, TIE_TOLERANCE};
use crate::qubo::MultiObjectiveProblem;
use crate::rng::derive_seed;

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let count = values.len();
        if count == 0 {
            return Stat {
                mean: f64::NAN,
                stderr: f64::NAN,
                count,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let stderr = if count > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, stderr, count }
    }
}

/// Outcome of one sample at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    pub n: usize,
    pub m: usize,
    pub objectives: usize,
    pub gamma: Option<f64>,
    pub p: u32,
    pub sample: usize,
    pub ground: f64,
    pub gap_ratio: Option<f64>,
    pub threshold: Option<f64>,
    pub above_threshold: Option<bool>,
    /// Minimizer of `h_(p)`, smallest bitstring on ties.
    pub minimizer: u64,
    /// `h_max` at the `h_(p)` minimizer differs from the true minimum.
    pub mismatch: bool,
    /// `(h_max(b_p) − λ_g) / λ_g`; undefined when `λ_g` is numerically zero.
    pub relative_error: Option<f64>,
    /// The `h_(p)` minimizer breaks a constraint (constrained study only).
    pub violated: Option<bool>,
}

/// Batch metrics for one `(n, m, γ, p)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub n: usize,
    pub m: usize,
    pub objectives: usize,
    pub gamma: Option<f64>,
    pub p: u32,
    pub epsilon: Stat,
    pub delta: Stat,
    /// Samples left out of δ because `λ_g ≤ GAP_TOLERANCE`.
    pub delta_excluded: usize,
    pub nu: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub study: Study,
    pub rows: Vec<MetricRow>,
    pub samples: Vec<SampleRecord>,
    /// Constraint sets redrawn because they admitted no feasible point.
    pub resamples: usize,
    /// Samples at or above the threshold level whose minimizers disagree.
    /// Always zero unless something is broken.
    pub guarantee_violations: usize,
}

impl MetricsReport {
    fn new(study: Study) -> Self {
        MetricsReport {
            study,
            rows: Vec::new(),
            samples: Vec::new(),
            resamples: 0,
            guarantee_violations: 0,
        }
    }

    pub fn row(&self, n: usize, m: usize, gamma: Option<f64>, p: u32) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.m == m && r.gamma == gamma && r.p == p)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LevelOutcome {
    minimizer: u64,
    mismatch: bool,
    relative_error: Option<f64>,
    threshold: Option<f64>,
    violated: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
struct SampleOutcome {
    ground: f64,
    gap_ratio: Option<f64>,
    levels: Vec<LevelOutcome>,
}

/// `h_(p)` landscapes at each requested level.
fn level_landscapes(
    problem: &MultiObjectiveProblem,
    levels: &[u32],
    method: ExpansionMethod,
) -> Result<Vec<Vec<f64>>> {
    let Some(&max) = levels.iter().max() else {
        return Ok(Vec::new());
    };
    if method == ExpansionMethod::Product {
        let series = expand_power_series(problem, max)?;
        levels.iter().map(|&p| series[p as usize - 1].landscape()).collect()
    } else {
        levels.iter().map(|&p| expand(problem, p, method)?.landscape()).collect()
    }
}

fn evaluate_sample(
    problem: &MultiObjectiveProblem,
    constraints: Option<&[LinearConstraint]>,
    levels: &[u32],
    method: ExpansionMethod,
) -> Result<SampleOutcome> {
    let hmax = landscape_max(problem)?;
    let spec = spectrum(&hmax)?;
    let threshold = match spec.gap_ratio {
        Some(r) => Some(threshold_p(r, problem.num_objectives())?),
        None => None,
    };
    let outcomes = level_landscapes(problem, levels, method)?
        .iter()
        .map(|hp| {
            let b_p = argmin(hp);
            let value = hmax[b_p as usize];
            let mismatch = (value - spec.ground).abs() > TIE_TOLERANCE;
            let relative_error = (spec.ground > GAP_TOLERANCE).then(|| {
                if mismatch {
                    (value - spec.ground) / spec.ground
                } else {
                    0.0
                }
            });
            LevelOutcome {
                minimizer: b_p,
                mismatch,
                relative_error,
                threshold,
                violated: constraints.map(|cs| cs.iter().any(|c| !c.satisfied_at(b_p))),
            }
        })
        .collect();
    Ok(SampleOutcome {
        ground: spec.ground,
        gap_ratio: spec.gap_ratio,
        levels: outcomes,
    })
}

struct Group {
    n: usize,
    m: usize,
    objectives: usize,
    gamma: Option<f64>,
}

impl MetricsReport {
    /// Folds per-sample outcomes, in sample order, into rows and records.
    fn push_group(&mut self, g: &Group, levels: &[u32], outcomes: &[SampleOutcome]) {
        for (li, &p) in levels.iter().enumerate() {
            let mut eps = Vec::with_capacity(outcomes.len());
            let mut delta = Vec::with_capacity(outcomes.len());
            let mut nu = Vec::new();
            for (sample, o) in outcomes.iter().enumerate() {
                let lo = &o.levels[li];
                let above = lo.threshold.map(|t| f64::from(p) >= t);
                if above == Some(true) && lo.mismatch {
                    self.guarantee_violations += 1;
                }
                eps.push(if lo.mismatch { 1.0 } else { 0.0 });
                if let Some(d) = lo.relative_error {
                    delta.push(d);
                }
                if let Some(v) = lo.violated {
                    nu.push(if v { 1.0 } else { 0.0 });
                }
                self.samples.push(SampleRecord {
                    n: g.n,
                    m: g.m,
                    objectives: g.objectives,
                    gamma: g.gamma,
                    p,
                    sample,
                    ground: o.ground,
                    gap_ratio: o.gap_ratio,
                    threshold: lo.threshold,
                    above_threshold: above,
                    minimizer: lo.minimizer,
                    mismatch: lo.mismatch,
                    relative_error: lo.relative_error,
                    violated: lo.violated,
                });
            }
            self.rows.push(MetricRow {
                n: g.n,
                m: g.m,
                objectives: g.objectives,
                gamma: g.gamma,
                p,
                epsilon: Stat::of(&eps),
                delta: Stat::of(&delta),
                delta_excluded: outcomes.len() - delta.len(),
                nu: (!nu.is_empty() || g.gamma.is_some()).then(|| Stat::of(&nu)),
            });
        }
    }
}

fn sample_seed(cfg: &ExperimentConfig, sample: usize) -> u64 {
    derive_seed(cfg.seed, sample as u64)
}

/// ε and δ for batches of random multi-objective problems.
pub fn run_generic_study(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let mut report = MetricsReport::new(Study::Generic);
    for &n in &cfg.n {
        let levels = cfg.levels_for(n);
        for &m in &cfg.m {
            let outcomes = (0..cfg.ns)
                .into_par_iter()
                .map(|i| {
                    let problem = random_multiobjective(n, m, sample_seed(cfg, i))?.shifted(cfg.shift)?;
                    evaluate_sample(&problem, None, &levels, cfg.expansion)
                })
                .collect::<Result<Vec<_>>>()?;
            let group = Group {
                n,
                m,
                objectives: m,
                gamma: None,
            };
            report.push_group(&group, &levels, &outcomes);
        }
    }
    Ok(report)
}

/// ε and δ for random graph partitioning tasks (always two objectives).
pub fn run_partition_study(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let mut report = MetricsReport::new(Study::Partition);
    for &n in &cfg.n {
        let levels = cfg.levels_for(n);
        let outcomes = (0..cfg.ns)
            .into_par_iter()
            .map(|i| {
                let graph = PartitionGraph::random(n, sample_seed(cfg, i))?;
                let problem = partition_problem(&graph)?.shifted(cfg.shift)?;
                evaluate_sample(&problem, None, &levels, cfg.expansion)
            })
            .collect::<Result<Vec<_>>>()?;
        let group = Group {
            n,
            m: 2,
            objectives: 2,
            gamma: None,
        };
        report.push_group(&group, &levels, &outcomes);
    }
    Ok(report)
}

/// ε, δ and ν for random problems with `m` linear inequality constraints.
/// Every γ in the config is applied to the same batch of instances.
pub fn run_constrained_study(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let mut report = MetricsReport::new(Study::Constrained);
    for &n in &cfg.n {
        let levels = cfg.levels_for(n);
        for &count in &cfg.m {
            let batch: Vec<SampledConstrained> = (0..cfg.ns)
                .into_par_iter()
                .map(|i| random_constrained(n, count, cfg.gamma[0], sample_seed(cfg, i), cfg.max_resamples))
                .collect::<Result<Vec<_>>>()?;
            report.resamples += batch.iter().map(|s| s.resamples).sum::<usize>();
            for &gamma in &cfg.gamma {
                let outcomes = batch
                    .par_iter()
                    .map(|s| {
                        let cp = s.problem.with_gamma(gamma)?;
                        let problem = constrained_to_multiobjective(&cp)?.shifted(cfg.shift)?;
                        evaluate_sample(&problem, Some(&cp.constraints), &levels, cfg.expansion)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let group = Group {
                    n,
                    m: count,
                    objectives: count + 1,
                    gamma: Some(gamma),
                };
                report.push_group(&group, &levels, &outcomes);
            }
        }
    }
    Ok(report)
}

pub fn run_study(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    match cfg.study {
        Study::Generic => run_generic_study(cfg),
        Study::Partition => run_partition_study(cfg),
        Study::Constrained => run_constrained_study(cfg),
    }
}

/// One histogram bin of samples grouped by gap ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapBin {
    pub n: usize,
    pub m: usize,
    pub objectives: usize,
    pub gamma: Option<f64>,
    pub p: u32,
    /// `M^{1/p} − 1`: ratios at or above it guarantee aligned minima.
    pub r_star: f64,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub epsilon: f64,
    pub above_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapBinning {
    pub bins: Vec<GapBin>,
    /// Sample records without a defined gap ratio.
    pub excluded: usize,
}

pub fn r_star(objectives: usize, level: u32) -> f64 {
    (objectives as f64).powf(1.0 / f64::from(level)) - 1.0
}

/// Mean ε in equal-width gap-ratio bins, per `(n, m, γ, p)` cell. Empty bins
/// are omitted.
pub fn run_gap_binning(report: &MetricsReport, bins: usize) -> Result<GapBinning> {
    if bins == 0 {
        return Err(MoqaError::invalid("need at least one bin"));
    }
    let mut groups: BTreeMap<(usize, usize, Option<u64>, u32), Vec<&SampleRecord>> = BTreeMap::new();
    let mut excluded = 0;
    for rec in &report.samples {
        if rec.gap_ratio.is_none() {
            excluded += 1;
            continue;
        }
        groups
            .entry((rec.n, rec.m, rec.gamma.map(f64::to_bits), rec.p))
            .or_default()
            .push(rec);
    }
    let mut out = Vec::new();
    for records in groups.values() {
        let first = records[0];
        let r_max = records
            .iter()
            .filter_map(|r| r.gap_ratio)
            .fold(0.0f64, f64::max);
        let width = r_max / bins as f64;
        let mut counts = vec![(0usize, 0usize); bins];
        for rec in records {
            let r = rec.gap_ratio.expect("filtered");
            let k = if width > 0.0 {
                ((r / width) as usize).min(bins - 1)
            } else {
                0
            };
            counts[k].0 += 1;
            counts[k].1 += usize::from(rec.mismatch);
        }
        let rs = r_star(first.objectives, first.p);
        for (k, (count, wrong)) in counts.into_iter().enumerate() {
            if count == 0 {
                continue;
            }
            let lower = k as f64 * width;
            out.push(GapBin {
                n: first.n,
                m: first.m,
                objectives: first.objectives,
                gamma: first.gamma,
                p: first.p,
                r_star: rs,
                lower,
                upper: lower + width,
                count,
                epsilon: wrong as f64 / count as f64,
                above_threshold: lower >= rs,
            });
        }
    }
    Ok(GapBinning { bins: out, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::ShiftMode;

    fn small(study: Study) -> ExperimentConfig {
        ExperimentConfig {
            study,
            n: vec![4],
            p: vec![1, 2, 3],
            ns: 20,
            seed: 7,
            ..ExperimentConfig::for_study(study)
        }
    }

    #[test]
    fn stat_values() {
        let s = Stat::of(&[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(s.mean, 0.5);
        assert!((s.stderr - (1.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stat::of(&[2.0]).stderr, 0.0);
        assert!(Stat::of(&[]).mean.is_nan());
    }

    #[test]
    fn single_objective_has_no_error() {
        let cfg = ExperimentConfig {
            m: vec![1],
            ..small(Study::Generic)
        };
        let report = run_generic_study(&cfg).unwrap();
        for row in &report.rows {
            assert_eq!(row.epsilon.mean, 0.0);
            assert_eq!(row.delta.mean, 0.0);
        }
    }

    #[test]
    fn metrics_are_bounded_and_consistent() {
        let cfg = ExperimentConfig {
            m: vec![3],
            ..small(Study::Generic)
        };
        let report = run_generic_study(&cfg).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.samples.len(), 60);
        assert_eq!(report.guarantee_violations, 0);
        for row in &report.rows {
            assert!((0.0..=1.0).contains(&row.epsilon.mean));
            assert!(row.delta.mean >= 0.0);
            if row.epsilon.mean == 0.0 {
                assert_eq!(row.delta.mean, 0.0);
            }
        }
        for rec in &report.samples {
            if !rec.mismatch {
                assert!(rec.relative_error.is_none_or(|d| d == 0.0));
            }
            if rec.above_threshold == Some(true) {
                assert!(!rec.mismatch);
            }
        }
    }

    #[test]
    fn reproducible_bit_for_bit() {
        let cfg = small(Study::Partition);
        assert_eq!(run_study(&cfg).unwrap(), run_study(&cfg).unwrap());
    }

    #[test]
    fn partition_metrics_match_across_expansions() {
        let cfg = small(Study::Partition);
        let a = run_partition_study(&cfg).unwrap();
        for method in [ExpansionMethod::SymmetryReduced, ExpansionMethod::Dense] {
            let b = run_partition_study(&ExperimentConfig {
                expansion: method,
                ..cfg.clone()
            })
            .unwrap();
            assert_eq!(a.rows, b.rows);
        }
    }

    #[test]
    fn no_constraints_means_no_violations() {
        let cfg = ExperimentConfig {
            m: vec![0],
            ..small(Study::Constrained)
        };
        let report = run_constrained_study(&cfg).unwrap();
        for row in &report.rows {
            assert_eq!(row.objectives, 1);
            assert_eq!(row.nu.unwrap().mean, 0.0);
            assert_eq!(row.epsilon.mean, 0.0);
        }
    }

    #[test]
    fn vacuous_constraints_never_violated() {
        // g0 large enough that every bitstring is feasible
        let base = random_multiobjective(4, 1, 3).unwrap().objectives()[0].clone();
        let cs = vec![LinearConstraint::new(vec![1.0, -1.0, 0.5, 2.0], 10.0).unwrap()];
        let cp = crate::generators::ConstrainedProblem::new(base, cs, 10.0).unwrap();
        let problem = constrained_to_multiobjective(&cp).unwrap().shifted(ShiftMode::Spectral).unwrap();
        let out = evaluate_sample(&problem, Some(&cp.constraints), &[1, 2, 3, 4], ExpansionMethod::Product).unwrap();
        assert!(out.levels.iter().all(|l| l.violated == Some(false)));
    }

    #[test]
    fn violations_use_original_constraints() {
        let cfg = ExperimentConfig {
            m: vec![2],
            gamma: vec![10.0],
            ..small(Study::Constrained)
        };
        for shift in [ShiftMode::Spectral, ShiftMode::Exact] {
            let report = run_constrained_study(&ExperimentConfig { shift, ..cfg.clone() }).unwrap();
            for rec in &report.samples {
                let s = random_constrained(4, 2, 10.0, sample_seed(&cfg, rec.sample), cfg.max_resamples).unwrap();
                let expected = !s.problem.feasible_at(rec.minimizer);
                assert_eq!(rec.violated, Some(expected));
            }
        }
    }

    #[test]
    fn threshold_ratio() {
        assert_eq!(r_star(2, 1), 1.0);
        assert_eq!(r_star(1, 3), 0.0);
    }

    #[test]
    fn bins_above_threshold_have_no_error() {
        let cfg = ExperimentConfig {
            n: vec![6],
            p: vec![1, 2, 4],
            ns: 60,
            ..small(Study::Generic)
        };
        let report = run_generic_study(&cfg).unwrap();
        let binning = run_gap_binning(&report, 8).unwrap();
        assert!(!binning.bins.is_empty());
        for bin in &binning.bins {
            if bin.above_threshold {
                assert_eq!(bin.epsilon, 0.0);
            }
        }
        let total: usize = binning.bins.iter().map(|b| b.count).sum();
        assert_eq!(total + binning.excluded, report.samples.len());
        assert!(run_gap_binning(&report, 0).is_err());
    }
}
