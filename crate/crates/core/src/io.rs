//! File formats.
//!
//! * Problem: JSON `{n, objectives: [{A, a, alpha}], shift_c, metadata}` where
//!   `A` is the strict upper triangle of the coupling matrix, row-major.
//! * Hamiltonian: JSON lines. A header `{n, p, M, shift_c, provenance}`
//!   followed by one `{mask_hex, mask_bits, weight, coefficient}` per term,
//!   sorted by (Hamming weight, mask value). `mask_bits` lists qubit 0 first.
//! * Partition graph: JSON `{n, W_upper_triangle, v}`.
//! * Constraint set: JSON list of `{g, g0}`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{MoqaError, Result};
use crate::expansion::{PauliMask, Provenance, SparsePauliHamiltonian};
use crate::generators::{LinearConstraint, PartitionGraph};
use crate::qubo::{IsingObjective, MultiObjectiveProblem};

#[derive(Debug, Serialize, Deserialize)]
struct ObjectiveDoc {
    #[serde(rename = "A")]
    coupling_upper: Vec<f64>,
    a: Vec<f64>,
    alpha: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProblemDoc {
    n: usize,
    objectives: Vec<ObjectiveDoc>,
    #[serde(default)]
    shift_c: f64,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

pub fn problem_to_json(problem: &MultiObjectiveProblem) -> Result<String> {
    let doc = ProblemDoc {
        n: problem.n(),
        objectives: problem
            .objectives()
            .iter()
            .map(|o| ObjectiveDoc {
                coupling_upper: o.upper_triangle(),
                a: o.field().to_vec(),
                alpha: o.offset(),
            })
            .collect(),
        shift_c: problem.shift_c(),
        metadata: problem.metadata.clone(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn problem_from_json(text: &str) -> Result<MultiObjectiveProblem> {
    let doc: ProblemDoc = serde_json::from_str(text)?;
    let objectives = doc
        .objectives
        .into_iter()
        .map(|o| IsingObjective::from_upper(doc.n, &o.coupling_upper, o.a, o.alpha))
        .collect::<Result<Vec<_>>>()?;
    let mut problem = MultiObjectiveProblem::new(objectives)?.with_shift_recorded(doc.shift_c);
    problem.metadata = doc.metadata;
    Ok(problem)
}

#[derive(Debug, Serialize, Deserialize)]
struct HeaderDoc {
    n: usize,
    p: u32,
    #[serde(rename = "M")]
    objectives: usize,
    shift_c: f64,
    provenance: Provenance,
}

#[derive(Debug, Serialize, Deserialize)]
struct TermDoc {
    mask_hex: String,
    mask_bits: String,
    weight: u32,
    coefficient: f64,
}

pub fn write_hamiltonian<W: Write>(mut out: W, h: &SparsePauliHamiltonian) -> Result<()> {
    let header = HeaderDoc {
        n: h.n(),
        p: h.level(),
        objectives: h.num_objectives(),
        shift_c: h.shift_c(),
        provenance: h.provenance(),
    };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for (mask, coefficient) in h.sorted_terms() {
        let term = TermDoc {
            mask_hex: format!("{mask}"),
            mask_bits: mask.bit_string(h.n()),
            weight: mask.weight(),
            coefficient,
        };
        writeln!(out, "{}", serde_json::to_string(&term)?)?;
    }
    Ok(())
}

pub fn read_hamiltonian<R: BufRead>(input: R) -> Result<SparsePauliHamiltonian> {
    let mut lines = input.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let header_line = lines
        .next()
        .ok_or_else(|| MoqaError::invalid("empty Hamiltonian file"))??;
    let header: HeaderDoc = serde_json::from_str(&header_line)?;
    let mut terms = Vec::new();
    for line in lines {
        let term: TermDoc = serde_json::from_str(&line?)?;
        let hex = term.mask_hex.trim_start_matches("0x");
        let mask = u64::from_str_radix(hex, 16)
            .map_err(|e| MoqaError::invalid(format!("bad mask '{}': {e}", term.mask_hex)))?;
        if PauliMask(mask).weight() != term.weight {
            return Err(MoqaError::invalid(format!(
                "mask {} has weight {}, record says {}",
                term.mask_hex,
                PauliMask(mask).weight(),
                term.weight
            )));
        }
        terms.push((PauliMask(mask), term.coefficient));
    }
    SparsePauliHamiltonian::new(
        header.n,
        header.p,
        header.objectives,
        header.shift_c,
        header.provenance,
        terms,
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphDoc {
    n: usize,
    #[serde(rename = "W_upper_triangle")]
    weights_upper: Vec<f64>,
    v: Vec<f64>,
}

pub fn graph_to_json(graph: &PartitionGraph) -> Result<String> {
    Ok(serde_json::to_string_pretty(&GraphDoc {
        n: graph.n(),
        weights_upper: graph.upper_triangle(),
        v: graph.vertex_weights().to_vec(),
    })?)
}

pub fn graph_from_json(text: &str) -> Result<PartitionGraph> {
    let doc: GraphDoc = serde_json::from_str(text)?;
    PartitionGraph::from_upper(doc.n, &doc.weights_upper, doc.v)
}

#[derive(Debug, Serialize, Deserialize)]
struct ConstraintDoc {
    g: Vec<f64>,
    g0: f64,
}

pub fn constraints_to_json(constraints: &[LinearConstraint]) -> Result<String> {
    let docs: Vec<ConstraintDoc> = constraints
        .iter()
        .map(|c| ConstraintDoc {
            g: c.g.clone(),
            g0: c.g0,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&docs)?)
}

pub fn constraints_from_json(text: &str) -> Result<Vec<LinearConstraint>> {
    let docs: Vec<ConstraintDoc> = serde_json::from_str(text)?;
    docs.into_iter()
        .map(|d| LinearConstraint::new(d.g, d.g0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::expand_sparse;
    use crate::generators::random_multiobjective;
    use crate::qubo::ShiftMode;
    use proptest::prelude::*;

    #[test]
    fn problem_document_layout() {
        let o = IsingObjective::from_upper(3, &[1.0, 2.0, 3.0], vec![0.5, 0.0, -1.0], 2.0).unwrap();
        let p = MultiObjectiveProblem::new(vec![o]).unwrap().with_metadata("generator", "test");
        let text = problem_to_json(&p).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["n"], 3);
        assert_eq!(v["objectives"][0]["A"], serde_json::json!([1.0, 2.0, 3.0]));
        assert_eq!(v["objectives"][0]["alpha"], 2.0);
        assert_eq!(v["metadata"]["generator"], "test");
        assert_eq!(problem_from_json(&text).unwrap(), p);
    }

    #[test]
    fn hamiltonian_lines_are_sorted_with_header_first() {
        let p = random_multiobjective(4, 2, 3).unwrap().shifted(ShiftMode::Spectral).unwrap();
        let h = expand_sparse(&p, 2).unwrap();
        let mut buf = Vec::new();
        write_hamiltonian(&mut buf, &h).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
        assert_eq!(header["n"], 4);
        assert_eq!(header["p"], 2);
        assert_eq!(header["M"], 2);
        assert_eq!(header["provenance"]["method"], "sparse");
        let keys: Vec<(u64, u64)> = lines
            .map(|l| {
                let t: serde_json::Value = serde_json::from_str(l).unwrap();
                let m = u64::from_str_radix(t["mask_hex"].as_str().unwrap().trim_start_matches("0x"), 16).unwrap();
                (t["weight"].as_u64().unwrap(), m)
            })
            .collect();
        assert_eq!(keys.len(), h.len());
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(read_hamiltonian(&buf[..]).unwrap(), h);
    }

    #[test]
    fn inconsistent_weight_is_rejected() {
        let text = "{\"n\":2,\"p\":1,\"M\":1,\"shift_c\":0.0,\"provenance\":{\"method\":\"dense\",\"threshold\":null}}\n\
                    {\"mask_hex\":\"0x3\",\"mask_bits\":\"11\",\"weight\":1,\"coefficient\":1.0}\n";
        assert!(read_hamiltonian(text.as_bytes()).is_err());
    }

    #[test]
    fn graph_and_constraints_documents() {
        let g = PartitionGraph::random(4, 2).unwrap();
        let text = graph_to_json(&g).unwrap();
        assert!(text.contains("W_upper_triangle"));
        assert_eq!(graph_from_json(&text).unwrap(), g);

        let cs = vec![LinearConstraint::new(vec![1.0, -2.0], 0.5).unwrap()];
        assert_eq!(constraints_from_json(&constraints_to_json(&cs).unwrap()).unwrap(), cs);
    }

    proptest! {
        #[test]
        fn problem_round_trip(n in 1usize..6, m in 1usize..4, seed in any::<u64>(), shift in -5.0f64..5.0) {
            let p = random_multiobjective(n, m, seed).unwrap().apply_shift(shift);
            let back = problem_from_json(&problem_to_json(&p).unwrap()).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
