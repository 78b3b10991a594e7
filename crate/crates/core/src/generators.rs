//! Problem families: random multi-objective tasks, weighted graph
//! partitioning (with the set partitioning special case), and
//! inequality-constrained problems recast as a maximum of objectives.

use crate::error::{MoqaError, Result};
use crate::qubo::{BitVector, IsingObjective, MultiObjectiveProblem, BRUTE_FORCE_CAP};
use crate::rng::{prng, standard_normal, Prng};

/// Random Ising objective: i.i.d. standard normal couplings (`i < j`) and
/// fields, zero offset.
pub fn random_objective(n: usize, rng: &mut Prng) -> Result<IsingObjective> {
    let upper: Vec<f64> = (0..n * n.saturating_sub(1) / 2)
        .map(|_| standard_normal(rng))
        .collect();
    let field: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
    IsingObjective::from_upper(n, &upper, field, 0.0)
}

/// `M` independent random objectives over `n` variables, unshifted.
pub fn random_multiobjective(n: usize, objectives: usize, seed: u64) -> Result<MultiObjectiveProblem> {
    if n == 0 || objectives == 0 {
        return Err(MoqaError::invalid("need n >= 1 and M >= 1"));
    }
    let mut rng = prng(seed);
    let objs = (0..objectives)
        .map(|_| random_objective(n, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiObjectiveProblem::new(objs)?
        .with_metadata("generator", "random_multiobjective")
        .with_metadata("seed", seed))
}

/// Weighted undirected graph with vertex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionGraph {
    n: usize,
    /// Row-major, symmetric, zero diagonal, non-negative.
    weights: Vec<f64>,
    vertex_weights: Vec<f64>,
}

impl PartitionGraph {
    pub fn new(n: usize, weights: Vec<f64>, vertex_weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(MoqaError::invalid("graph needs at least one vertex"));
        }
        if weights.len() != n * n {
            return Err(MoqaError::DimensionMismatch {
                expected: n * n,
                actual: weights.len(),
            });
        }
        if vertex_weights.len() != n {
            return Err(MoqaError::DimensionMismatch {
                expected: n,
                actual: vertex_weights.len(),
            });
        }
        for i in 0..n {
            if weights[i * n + i] != 0.0 {
                return Err(MoqaError::invalid(format!("non-zero diagonal weight at vertex {i}")));
            }
            for j in (i + 1)..n {
                let (upper, lower) = (weights[i * n + j], weights[j * n + i]);
                if upper != lower {
                    return Err(MoqaError::SymmetryViolation {
                        row: i,
                        col: j,
                        upper,
                        lower,
                    });
                }
                if upper < 0.0 || !upper.is_finite() {
                    return Err(MoqaError::invalid(format!("edge weight {upper} is not a finite non-negative value")));
                }
            }
        }
        Ok(PartitionGraph {
            n,
            weights,
            vertex_weights,
        })
    }

    /// From the strict upper triangle, row-major.
    pub fn from_upper(n: usize, upper: &[f64], vertex_weights: Vec<f64>) -> Result<Self> {
        let expected = n * n.saturating_sub(1) / 2;
        if upper.len() != expected {
            return Err(MoqaError::DimensionMismatch {
                expected,
                actual: upper.len(),
            });
        }
        let mut w = vec![0.0; n * n];
        let mut it = upper.iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = *it.next().unwrap();
                w[i * n + j] = v;
                w[j * n + i] = v;
            }
        }
        Self::new(n, w, vertex_weights)
    }

    /// Edge and vertex weights drawn as `|N(0,1)|`.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut rng = prng(seed);
        let upper: Vec<f64> = (0..n * n.saturating_sub(1) / 2)
            .map(|_| standard_normal(&mut rng).abs())
            .collect();
        let v = (0..n).map(|_| standard_normal(&mut rng).abs()).collect();
        Self::from_upper(n, &upper, v)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn vertex_weights(&self) -> &[f64] {
        &self.vertex_weights
    }

    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| self.weight(i, j))
            .collect()
    }
}

/// The `T_+ / T_-` pair: `A = W/4`, `a = (W1 + v)/2`,
/// `α = (1ᵀW1 + 2·1ᵀv)/4`, with `T_± = sᵀAs ± aᵀs + α`.
///
/// Spin `+1` places a vertex in `S`. Objective 0 is `T_+`, objective 1 is `T_-`.
pub fn partition_problem(graph: &PartitionGraph) -> Result<MultiObjectiveProblem> {
    let n = graph.n;
    let coupling: Vec<f64> = graph.weights.iter().map(|w| w / 4.0).collect();
    let row_sums: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| graph.weight(i, j)).sum())
        .collect();
    let field: Vec<f64> = row_sums
        .iter()
        .zip(&graph.vertex_weights)
        .map(|(w, v)| (w + v) / 2.0)
        .collect();
    let total_w: f64 = graph.weights.iter().sum();
    let total_v: f64 = graph.vertex_weights.iter().sum();
    let offset = (total_w + 2.0 * total_v) / 4.0;
    let plus = IsingObjective::new(n, coupling, field, offset)?;
    let minus = plus.with_field(plus.field().iter().map(|a| -a).collect());
    Ok(MultiObjectiveProblem::new(vec![plus, minus])?.with_metadata("generator", "partition"))
}

/// Set partitioning: `max{vᵀs, -vᵀs}` over positive numbers `v`.
pub fn spp_problem(values: &[f64]) -> Result<MultiObjectiveProblem> {
    if values.is_empty() {
        return Err(MoqaError::invalid("set partitioning needs at least one number"));
    }
    if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(MoqaError::invalid(format!("set partitioning needs positive numbers, got {bad}")));
    }
    let n = values.len();
    let plus = IsingObjective::new(n, vec![0.0; n * n], values.to_vec(), 0.0)?;
    let minus = plus.with_field(values.iter().map(|v| -v).collect());
    Ok(MultiObjectiveProblem::new(vec![plus, minus])?.with_metadata("generator", "spp"))
}

/// `g(b) = gᵀb + g0 ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub g: Vec<f64>,
    pub g0: f64,
}

impl LinearConstraint {
    pub fn new(g: Vec<f64>, g0: f64) -> Result<Self> {
        if !g0.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(MoqaError::invalid("constraint coefficients must be finite"));
        }
        Ok(LinearConstraint { g, g0 })
    }

    pub fn evaluate_index(&self, index: u64) -> f64 {
        self.g
            .iter()
            .enumerate()
            .filter(|(k, _)| (index >> k) & 1 == 1)
            .map(|(_, g)| g)
            .sum::<f64>()
            + self.g0
    }

    pub fn evaluate(&self, bits: &BitVector) -> f64 {
        self.evaluate_index(bits.index())
    }

    pub fn satisfied_at(&self, index: u64) -> bool {
        self.evaluate_index(index) >= 0.0
    }

    /// Spin form via `b = (1 - s)/2`: fields `-g/2`, offset `Σg/2 + g0`.
    fn spin_form(&self) -> (Vec<f64>, f64) {
        let field = self.g.iter().map(|g| -g / 2.0).collect();
        let offset = self.g.iter().sum::<f64>() / 2.0 + self.g0;
        (field, offset)
    }
}

/// Minimize `h` subject to linear inequality constraints, with penalty `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedProblem {
    pub base: IsingObjective,
    pub constraints: Vec<LinearConstraint>,
    pub gamma: f64,
}

impl ConstrainedProblem {
    pub fn new(base: IsingObjective, constraints: Vec<LinearConstraint>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(MoqaError::invalid(format!("penalty strength {gamma} must be positive")));
        }
        if let Some(c) = constraints.iter().find(|c| c.g.len() != base.n()) {
            return Err(MoqaError::DimensionMismatch {
                expected: base.n(),
                actual: c.g.len(),
            });
        }
        Ok(ConstrainedProblem {
            base,
            constraints,
            gamma,
        })
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.base.clone(), self.constraints.clone(), gamma)
    }

    pub fn feasible_at(&self, index: u64) -> bool {
        self.constraints.iter().all(|c| c.satisfied_at(index))
    }

    /// True if some bitstring satisfies every constraint (enumerates `2^n`).
    pub fn is_feasible(&self) -> Result<bool> {
        let n = self.base.n();
        if n > BRUTE_FORCE_CAP {
            return Err(MoqaError::BruteForceCap {
                n,
                cap: BRUTE_FORCE_CAP,
            });
        }
        Ok((0..1u64 << n).any(|b| self.feasible_at(b)))
    }
}

/// `max{h, h − γ g_1, …, h − γ g_M}` as `M + 1` Ising objectives (unshifted).
pub fn constrained_to_multiobjective(problem: &ConstrainedProblem) -> Result<MultiObjectiveProblem> {
    let h = &problem.base;
    let mut objectives = vec![h.clone()];
    for c in &problem.constraints {
        let (g_field, g_offset) = c.spin_form();
        let field = h
            .field()
            .iter()
            .zip(&g_field)
            .map(|(a, g)| a - problem.gamma * g)
            .collect();
        objectives.push(
            h.with_field(field)
                .with_offset(h.offset() - problem.gamma * g_offset),
        );
    }
    Ok(MultiObjectiveProblem::new(objectives)?
        .with_metadata("generator", "constrained")
        .with_metadata("gamma", problem.gamma))
}

/// A random constrained instance and how many constraint draws were rejected
/// as infeasible.
#[derive(Debug, Clone)]
pub struct SampledConstrained {
    pub problem: ConstrainedProblem,
    pub resamples: usize,
}

/// Random objective plus `count` constraints with `g, g0 ~ N(0,1)`; the
/// constraint set is redrawn until some bitstring is feasible.
pub fn random_constrained(
    n: usize,
    count: usize,
    gamma: f64,
    seed: u64,
    max_resamples: usize,
) -> Result<SampledConstrained> {
    let mut rng = prng(seed);
    let base = random_objective(n, &mut rng)?;
    for resamples in 0..=max_resamples {
        let constraints = (0..count)
            .map(|_| {
                let g = (0..n).map(|_| standard_normal(&mut rng)).collect();
                LinearConstraint::new(g, standard_normal(&mut rng))
            })
            .collect::<Result<Vec<_>>>()?;
        let problem = ConstrainedProblem::new(base.clone(), constraints, gamma)?;
        if problem.is_feasible()? {
            return Ok(SampledConstrained { problem, resamples });
        }
    }
    Err(MoqaError::Infeasible {
        attempts: max_resamples + 1,
    })
}
