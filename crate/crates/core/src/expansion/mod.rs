//! Expansion of `Σ_m h_m^p` into a weighted sum of Pauli-Z strings.
//!
//! Three routes produce the same coefficient map:
//!
//! * allocation enumeration over all compositions of `p` (dense storage of
//!   `2^n` slots, or sparse storage of only the touched masks),
//! * the same enumeration restricted to even total field power for `±` pairs,
//! * repeated multiplication of Z-polynomials (mask products are XORs).
//!
//! The enumeration is split into independent tasks by the power given to the
//! first supported slot; partial sums are merged in task order so results do
//! not depend on the thread count.

mod allocation;
mod hamiltonian;
mod resources;

use std::collections::HashMap;

use rayon::prelude::*;

pub use allocation::{
    allocation_count, allocations, allocations_with_budget, binomial_f64, binomial_u128,
    mask_of, multinomial, multinomial_exact, pair_index, pair_of_index, slot_count,
    Allocations, PowerAllocation, DEFAULT_ALLOCATION_BUDGET, EXACT_MULTINOMIAL_MAX,
};
pub use hamiltonian::{
    walsh_hadamard, ExpansionMethod, PauliMask, Provenance, SparsePauliHamiltonian,
    ThresholdReport,
};
pub use resources::{resource_report, ResourceReport};

use crate::error::{MoqaError, Result};
use crate::qubo::MultiObjectiveProblem;

/// Largest `n` for which dense (`2^n`) coefficient storage is allowed.
pub const DENSE_CAP: usize = 24;

/// Above this `n`, [`expand`] with no explicit method uses sparse storage.
pub const SPARSE_DEFAULT_ABOVE: usize = 16;

/// One objective rewritten for expansion: pairs summed over `i < j` only with
/// doubled couplings, the diagonal trace folded into the constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionObjective {
    /// `2 A_ij` for `i < j`, lexicographic pair order.
    pub pairs: Vec<f64>,
    pub fields: Vec<f64>,
    pub constant: f64,
}

/// A problem in expansion form.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionProblem {
    pub n: usize,
    pub objectives: Vec<ExpansionObjective>,
    pub shift_c: f64,
}

impl ExpansionObjective {
    pub fn evaluate_index(&self, n: usize, index: u64) -> f64 {
        let s = crate::qubo::spins_of(index, n);
        let mut total = self.constant;
        for (i, a) in self.fields.iter().enumerate() {
            total += a * s[i];
        }
        for (k, c) in self.pairs.iter().enumerate() {
            let (i, j) = pair_of_index(n, k);
            total += c * s[i] * s[j];
        }
        total
    }

    /// Coefficient of allocation slot `slot`.
    fn slot_value(&self, n: usize, slot: usize) -> f64 {
        if slot == 0 {
            self.constant
        } else if slot <= n {
            self.fields[slot - 1]
        } else {
            self.pairs[slot - n - 1]
        }
    }
}

/// `A ← 2A` over `i < j` and `α ← α + Tr(A)`.
pub fn normalize_for_expansion(problem: &MultiObjectiveProblem) -> ExpansionProblem {
    let n = problem.n();
    let objectives = problem
        .objectives()
        .iter()
        .map(|o| ExpansionObjective {
            pairs: o.upper_triangle().iter().map(|v| 2.0 * v).collect(),
            fields: o.field().to_vec(),
            constant: o.offset() + (0..n).map(|i| o.coupling(i, i)).sum::<f64>(),
        })
        .collect();
    ExpansionProblem {
        n,
        objectives,
        shift_c: problem.shift_c(),
    }
}

impl ExpansionProblem {
    /// Back to the full-matrix Ising form.
    pub fn to_problem(&self) -> Result<MultiObjectiveProblem> {
        let objectives = self
            .objectives
            .iter()
            .map(|o| {
                let upper: Vec<f64> = o.pairs.iter().map(|v| v / 2.0).collect();
                crate::qubo::IsingObjective::from_upper(self.n, &upper, o.fields.clone(), o.constant)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiObjectiveProblem::new(objectives)?.with_shift_recorded(self.shift_c))
    }
}

/// Knobs shared by the enumeration routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionOptions {
    /// Skip slots whose coefficient is zero in every objective.
    pub exploit_sparsity: bool,
    /// Refuse when more allocations than this would be enumerated.
    pub budget: f64,
    pub dense_cap: usize,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions {
            exploit_sparsity: true,
            budget: DEFAULT_ALLOCATION_BUDGET,
            dense_cap: DENSE_CAP,
        }
    }
}

/// Work counters from one expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExpansionStats {
    /// Allocations whose contribution was computed.
    pub allocations_visited: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Storage {
    Dense,
    Sparse,
}

/// Slot participating in the enumeration.
struct Slot {
    full_index: usize,
    mask: u64,
    is_field: bool,
    /// `powers[k * m_count + m] = value_m^k`.
    powers: Vec<f64>,
}

struct Plan {
    n: usize,
    level: u32,
    slots: Vec<Slot>,
    objectives: usize,
    /// Symmetry-reduced mode: enumerate only even total field power, weight 2.
    even_fields_only: bool,
    last_field_slot: Option<usize>,
    exact_binomials: Vec<Vec<u128>>,
    float_binomials: Vec<Vec<f64>>,
    exact: bool,
}

impl Plan {
    fn new(
        problem: &ExpansionProblem,
        objective_set: &[&ExpansionObjective],
        level: u32,
        exploit_sparsity: bool,
        even_fields_only: bool,
    ) -> Plan {
        let n = problem.n;
        let m_count = objective_set.len();
        let lvl = level as usize;
        let slots: Vec<Slot> = (0..slot_count(n))
            .filter_map(|s| {
                let values: Vec<f64> = objective_set.iter().map(|o| o.slot_value(n, s)).collect();
                if exploit_sparsity && values.iter().all(|v| *v == 0.0) {
                    return None;
                }
                let mut powers = vec![1.0; (lvl + 1) * m_count];
                for k in 1..=lvl {
                    for m in 0..m_count {
                        powers[k * m_count + m] = powers[(k - 1) * m_count + m] * values[m];
                    }
                }
                Some(Slot {
                    full_index: s,
                    mask: allocation::slot_mask(n, s),
                    is_field: s >= 1 && s <= n,
                    powers,
                })
            })
            .collect();
        let last_field_slot = slots.iter().rposition(|s| s.is_field);
        let exact_binomials = (0..=level as u64)
            .map(|r| (0..=r).map(|k| binomial_u128(r, k).unwrap_or(0)).collect())
            .collect();
        let float_binomials = (0..=level as u64)
            .map(|r| (0..=r).map(|k| binomial_f64(r, k)).collect())
            .collect();
        Plan {
            n,
            level,
            slots,
            objectives: m_count,
            even_fields_only,
            last_field_slot,
            exact_binomials,
            float_binomials,
            exact: level <= EXACT_MULTINOMIAL_MAX,
        }
    }

    fn allocation_count(&self) -> f64 {
        if self.slots.is_empty() {
            return 0.0;
        }
        binomial_f64(
            self.level as u64 + self.slots.len() as u64 - 1,
            self.level as u64,
        )
    }

    fn full_allocation(&self, chosen: &[u32]) -> Vec<u32> {
        let mut out = vec![0; slot_count(self.n)];
        for (slot, &v) in self.slots.iter().zip(chosen) {
            out[slot.full_index] = v;
        }
        out
    }
}

/// Per-task accumulator.
enum Accumulator {
    Dense(Vec<f64>),
    Sparse(HashMap<u64, f64>),
}

impl Accumulator {
    fn add(&mut self, mask: u64, value: f64) {
        match self {
            Accumulator::Dense(v) => v[mask as usize] += value,
            Accumulator::Sparse(map) => *map.entry(mask).or_insert(0.0) += value,
        }
    }
}

struct Walker<'a> {
    plan: &'a Plan,
    acc: Accumulator,
    chosen: Vec<u32>,
    /// Partial products, `prefix[depth * M + m]`.
    prefix: Vec<f64>,
    visited: u64,
    error: Option<MoqaError>,
}

impl<'a> Walker<'a> {
    fn new(plan: &'a Plan, storage: Storage) -> Self {
        let acc = match storage {
            Storage::Dense if plan.n <= SPARSE_DEFAULT_ABOVE => {
                Accumulator::Dense(vec![0.0; 1usize << plan.n])
            }
            _ => Accumulator::Sparse(HashMap::new()),
        };
        let depth = plan.slots.len() + 1;
        let mut prefix = vec![0.0; depth * plan.objectives];
        prefix[..plan.objectives].fill(1.0);
        Walker {
            plan,
            acc,
            chosen: vec![0; plan.slots.len()],
            prefix,
            visited: 0,
            error: None,
        }
    }

    /// Assign `v` to slot `depth` and descend.
    #[allow(clippy::too_many_arguments)]
    fn descend(
        &mut self,
        depth: usize,
        v: u32,
        remaining: u32,
        mask: u64,
        field_parity: u32,
        exact_coef: u128,
        float_coef: f64,
    ) {
        if self.error.is_some() {
            return;
        }
        let plan = self.plan;
        let m_count = plan.objectives;
        let slot = &plan.slots[depth];
        let r = remaining as usize;
        let exact_coef = if plan.exact {
            exact_coef * plan.exact_binomials[r][v as usize]
        } else {
            0
        };
        let float_coef = float_coef * plan.float_binomials[r][v as usize];
        let (head, tail) = self.prefix.split_at_mut((depth + 1) * m_count);
        let parent = &head[depth * m_count..];
        let row = &slot.powers[v as usize * m_count..(v as usize + 1) * m_count];
        for m in 0..m_count {
            tail[m] = parent[m] * row[m];
        }
        self.chosen[depth] = v;
        let mask = if v % 2 == 1 { mask ^ slot.mask } else { mask };
        let field_parity = if slot.is_field {
            (field_parity + v) % 2
        } else {
            field_parity
        };
        let remaining = remaining - v;
        let next = depth + 1;

        if next == plan.slots.len() {
            if remaining == 0 {
                self.leaf(next, mask, field_parity, exact_coef, float_coef);
            }
            return;
        }
        if next == plan.slots.len() - 1 {
            // the final slot takes whatever power is left
            self.descend(next, remaining, remaining, mask, field_parity, exact_coef, float_coef);
            return;
        }
        for w in (0..=remaining).rev() {
            if plan.even_fields_only
                && Some(next) == plan.last_field_slot
                && (field_parity + w) % 2 == 1
            {
                continue;
            }
            self.descend(next, w, remaining, mask, field_parity, exact_coef, float_coef);
        }
    }

    fn leaf(&mut self, depth: usize, mask: u64, field_parity: u32, exact: u128, float: f64) {
        let plan = self.plan;
        if plan.even_fields_only && field_parity == 1 {
            return;
        }
        self.visited += 1;
        let m_count = plan.objectives;
        let products: f64 = self.prefix[depth * m_count..(depth + 1) * m_count].iter().sum();
        let multinomial = if plan.exact { exact as f64 } else { float };
        let weight = if plan.even_fields_only { 2.0 } else { 1.0 };
        let value = weight * multinomial * products;
        if !value.is_finite() {
            self.error = Some(MoqaError::NumericRange {
                allocation: plan.full_allocation(&self.chosen),
            });
            return;
        }
        self.acc.add(mask, value);
    }
}

fn enumerate(plan: &Plan, storage: Storage) -> Result<(Vec<(PauliMask, f64)>, u64)> {
    let n = plan.n;
    if plan.slots.is_empty() {
        return Ok((Vec::new(), 0));
    }
    let level = plan.level;
    let tasks: Vec<u32> = (0..=level).rev().collect();
    let partials: Vec<Result<(Accumulator, u64)>> = tasks
        .par_iter()
        .map(|&v| {
            let mut walker = Walker::new(plan, storage);
            if plan.slots.len() == 1 {
                if v == level {
                    walker.descend(0, v, level, 0, 0, 1, 1.0);
                }
            } else if !(plan.even_fields_only
                && plan.last_field_slot == Some(0)
                && v % 2 == 1)
            {
                walker.descend(0, v, level, 0, 0, 1, 1.0);
            }
            match walker.error {
                Some(e) => Err(e),
                None => Ok((walker.acc, walker.visited)),
            }
        })
        .collect();

    let mut visited = 0;
    let terms = match storage {
        Storage::Dense => {
            let mut total = vec![0.0; 1usize << n];
            for partial in partials {
                let (acc, count) = partial?;
                visited += count;
                match acc {
                    Accumulator::Dense(v) => {
                        for (t, p) in total.iter_mut().zip(v) {
                            *t += p;
                        }
                    }
                    Accumulator::Sparse(map) => {
                        for (m, c) in map {
                            total[m as usize] += c;
                        }
                    }
                }
            }
            total
                .into_iter()
                .enumerate()
                .filter(|(_, c)| *c != 0.0)
                .map(|(m, c)| (PauliMask(m as u64), c))
                .collect()
        }
        Storage::Sparse => {
            let mut total: HashMap<u64, f64> = HashMap::new();
            for partial in partials {
                let (acc, count) = partial?;
                visited += count;
                if let Accumulator::Sparse(map) = acc {
                    for (m, c) in map {
                        debug_assert!(m.count_ones() <= 2 * level);
                        *total.entry(m).or_insert(0.0) += c;
                    }
                }
            }
            total
                .into_iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|(m, c)| (PauliMask(m), c))
                .collect()
        }
    };
    Ok((terms, visited))
}

fn check_level(level: u32) -> Result<()> {
    if level == 0 {
        return Err(MoqaError::invalid("approximation level must be >= 1"));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n > 64 {
        return Err(MoqaError::invalid(format!("n = {n} exceeds the 64-qubit mask width")));
    }
    Ok(())
}

/// Expansion driver carrying [`ExpansionOptions`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Expander {
    pub options: ExpansionOptions,
}

impl Expander {
    pub fn new(options: ExpansionOptions) -> Self {
        Expander { options }
    }

    fn run(
        &self,
        problem: &MultiObjectiveProblem,
        level: u32,
        storage: Storage,
        even_fields_only: bool,
    ) -> Result<(SparsePauliHamiltonian, ExpansionStats)> {
        check_level(level)?;
        check_n(problem.n())?;
        let normalized = normalize_for_expansion(problem);
        let objective_set: Vec<&ExpansionObjective> = if even_fields_only {
            vec![&normalized.objectives[0]]
        } else {
            normalized.objectives.iter().collect()
        };
        let plan = Plan::new(
            &normalized,
            &objective_set,
            level,
            self.options.exploit_sparsity,
            even_fields_only,
        );
        let required = plan.allocation_count();
        if required > self.options.budget {
            return Err(MoqaError::ResourceBudget {
                what: "allocation enumeration",
                required,
                budget: self.options.budget,
            });
        }
        let (terms, visited) = enumerate(&plan, storage)?;
        let method = match (storage, even_fields_only) {
            (_, true) => ExpansionMethod::SymmetryReduced,
            (Storage::Dense, false) => ExpansionMethod::Dense,
            (Storage::Sparse, false) => ExpansionMethod::Sparse,
        };
        let h = SparsePauliHamiltonian::new(
            problem.n(),
            level,
            problem.num_objectives(),
            problem.shift_c(),
            Provenance {
                method,
                threshold: None,
            },
            terms,
        )?;
        Ok((
            h,
            ExpansionStats {
                allocations_visited: visited,
            },
        ))
    }

    /// Allocation enumeration with `2^n` coefficient storage.
    pub fn dense(
        &self,
        problem: &MultiObjectiveProblem,
        level: u32,
    ) -> Result<(SparsePauliHamiltonian, ExpansionStats)> {
        if problem.n() > self.options.dense_cap {
            return Err(MoqaError::ResourceBudget {
                what: "dense coefficient storage",
                required: (problem.n() as f64).exp2(),
                budget: (self.options.dense_cap as f64).exp2(),
            });
        }
        self.run(problem, level, Storage::Dense, false)
    }

    /// Allocation enumeration storing only masks of weight `≤ 2p`.
    pub fn sparse(
        &self,
        problem: &MultiObjectiveProblem,
        level: u32,
    ) -> Result<(SparsePauliHamiltonian, ExpansionStats)> {
        self.run(problem, level, Storage::Sparse, false)
    }

    /// Enumeration for a `±` field pair: only allocations with even total
    /// field power survive, each counted twice.
    pub fn symmetry_reduced(
        &self,
        problem: &MultiObjectiveProblem,
        level: u32,
    ) -> Result<(SparsePauliHamiltonian, ExpansionStats)> {
        check_pm_pair(problem)?;
        self.run(problem, level, Storage::Sparse, true)
    }
}

/// Verify the problem is two objectives identical up to the sign of the field.
pub fn check_pm_pair(problem: &MultiObjectiveProblem) -> Result<()> {
    let objs = problem.objectives();
    if objs.len() != 2 {
        return Err(MoqaError::NotSymmetricPair(format!(
            "expected 2 objectives, found {}",
            objs.len()
        )));
    }
    let (p, q) = (&objs[0], &objs[1]);
    if p.upper_triangle() != q.upper_triangle() {
        return Err(MoqaError::NotSymmetricPair("couplings differ".into()));
    }
    if p.offset() != q.offset() {
        return Err(MoqaError::NotSymmetricPair("offsets differ".into()));
    }
    if p.field().iter().zip(q.field()).any(|(a, b)| *a != -*b) {
        return Err(MoqaError::NotSymmetricPair("fields are not negatives".into()));
    }
    Ok(())
}

pub fn expand_dense(problem: &MultiObjectiveProblem, level: u32) -> Result<SparsePauliHamiltonian> {
    Ok(Expander::default().dense(problem, level)?.0)
}

pub fn expand_sparse(problem: &MultiObjectiveProblem, level: u32) -> Result<SparsePauliHamiltonian> {
    Ok(Expander::default().sparse(problem, level)?.0)
}

pub fn symmetry_reduced_expand(
    problem: &MultiObjectiveProblem,
    level: u32,
) -> Result<SparsePauliHamiltonian> {
    Ok(Expander::default().symmetry_reduced(problem, level)?.0)
}

/// Z-polynomial keyed by mask.
#[derive(Debug, Clone)]
enum Poly {
    Dense(Vec<f64>),
    Sparse(HashMap<u64, f64>),
}

const PRODUCT_DENSE_MAX_N: usize = 20;

impl Poly {
    fn zero(n: usize) -> Poly {
        if n <= PRODUCT_DENSE_MAX_N {
            Poly::Dense(vec![0.0; 1usize << n])
        } else {
            Poly::Sparse(HashMap::new())
        }
    }

    fn add(&mut self, mask: u64, value: f64) {
        match self {
            Poly::Dense(v) => v[mask as usize] += value,
            Poly::Sparse(m) => *m.entry(mask).or_insert(0.0) += value,
        }
    }

    fn nonzero(&self) -> Vec<(u64, f64)> {
        match self {
            Poly::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(m, c)| (m as u64, *c))
                .collect(),
            Poly::Sparse(m) => {
                let mut out: Vec<_> = m.iter().filter(|(_, c)| **c != 0.0).map(|(m, c)| (*m, *c)).collect();
                out.sort_by_key(|(m, _)| *m);
                out
            }
        }
    }
}

/// `Σ_m h_m^p` for every `p` in `1..=max_level`, by repeated multiplication.
///
/// Cost per step is (current terms) × (terms of one objective), so the whole
/// series is far cheaper than allocation enumeration at moderate `n`.
pub fn expand_power_series(
    problem: &MultiObjectiveProblem,
    max_level: u32,
) -> Result<Vec<SparsePauliHamiltonian>> {
    check_level(max_level)?;
    check_n(problem.n())?;
    let n = problem.n();
    let normalized = normalize_for_expansion(problem);
    let mut sums: Vec<Poly> = (0..max_level).map(|_| Poly::zero(n)).collect();
    for obj in &normalized.objectives {
        let base: Vec<(u64, f64)> = (0..slot_count(n))
            .map(|s| (allocation::slot_mask(n, s), obj.slot_value(n, s)))
            .filter(|(_, c)| *c != 0.0)
            .collect();
        let mut current: Vec<(u64, f64)> = base.clone();
        for level in 1..=max_level {
            if level > 1 {
                let mut next = Poly::zero(n);
                for &(m1, c1) in &current {
                    for &(m2, c2) in &base {
                        next.add(m1 ^ m2, c1 * c2);
                    }
                }
                current = next.nonzero();
            }
            let sum = &mut sums[level as usize - 1];
            for &(m, c) in &current {
                if !c.is_finite() {
                    return Err(MoqaError::invalid(format!(
                        "non-finite coefficient at level {level}"
                    )));
                }
                sum.add(m, c);
            }
        }
    }
    sums.into_iter()
        .enumerate()
        .map(|(k, poly)| {
            SparsePauliHamiltonian::new(
                n,
                k as u32 + 1,
                problem.num_objectives(),
                problem.shift_c(),
                Provenance {
                    method: ExpansionMethod::Product,
                    threshold: None,
                },
                poly.nonzero().into_iter().map(|(m, c)| (PauliMask(m), c)),
            )
        })
        .collect()
}

pub fn expand_product(problem: &MultiObjectiveProblem, level: u32) -> Result<SparsePauliHamiltonian> {
    Ok(expand_power_series(problem, level)?.pop().expect("level >= 1"))
}

/// Expand with an explicit method.
pub fn expand(
    problem: &MultiObjectiveProblem,
    level: u32,
    method: ExpansionMethod,
) -> Result<SparsePauliHamiltonian> {
    match method {
        ExpansionMethod::Dense => expand_dense(problem, level),
        ExpansionMethod::Sparse => expand_sparse(problem, level),
        ExpansionMethod::SymmetryReduced => symmetry_reduced_expand(problem, level),
        ExpansionMethod::Product => expand_product(problem, level),
    }
}

/// Dense up to `n = 16`, sparse above.
pub fn default_method(n: usize) -> ExpansionMethod {
    if n > SPARSE_DEFAULT_ABOVE {
        ExpansionMethod::Sparse
    } else {
        ExpansionMethod::Dense
    }
}
