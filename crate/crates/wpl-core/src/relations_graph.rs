//! Equivariant-relations graphs.
//!
//! Nodes are weight types (with a parameter orbit attached to `(2,2,2,2)`),
//! edges are quotient relations labelled by the kernel class, each carrying
//! a witness homomorphism. Construction closes a seed set under
//! `enumerate_admissible`; `(2,2,2,2)` and wild nodes are only expanded up
//! to a configurable depth because their closures are infinite in general
//! (every `Gamma(f(sqrt(.)))` step can reach fresh orbits through complex
//! members, and wild quotients grow without bound).

use crate::admissible::{enumerate_admissible, AdmissibleRecord};
use crate::error::{Result, WplError};
use crate::exact_field::Scalar;
use crate::string_group::{GroupTypeClass, WeightSeq};
use crate::subgroups::SubgroupKind;
use crate::tubular::{f_sqrt_orbit, gamma, omega_parameter, ParamOrbit};
use serde_json::{json, Value};
use std::collections::VecDeque;

/// Default expansion depth for `(2,2,2,2)` and wild nodes.
pub const DEFAULT_TUBULAR_DEPTH: u32 = 2;

#[derive(Debug, Clone)]
pub struct RelationNode {
    /// Canonical weights, sorted descending.
    pub weights: WeightSeq,
    /// Present exactly for weight type `(2,2,2,2)`.
    pub orbit: Option<ParamOrbit>,
}

impl RelationNode {
    pub fn id(&self) -> String {
        let mut id = String::from("w");
        let parts: Vec<String> = self
            .weights
            .weights()
            .iter()
            .map(|w| w.to_string())
            .collect();
        id.push_str(&parts.join("_"));
        if self.weights.is_empty() {
            id.push_str("empty");
        }
        if let Some(orbit) = &self.orbit {
            id.push_str("_lam_");
            id.push_str(&orbit.canonical_member().literal());
        }
        id
    }
}

#[derive(Debug, Clone)]
pub struct RelationEdge {
    pub source: usize,
    pub target: usize,
    /// `C_n` or `C2xC2`.
    pub label: String,
    pub witness: AdmissibleRecord,
}

#[derive(Debug, Clone, Default)]
pub struct RelationGraph {
    pub nodes: Vec<RelationNode>,
    pub edges: Vec<RelationEdge>,
}

impl RelationGraph {
    /// DOT serialization; byte-stable for a fixed input.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph equivariant_relations {\n");
        for node in &self.nodes {
            out.push_str(&format!("  \"{}\";\n", node.id()));
        }
        for edge in &self.edges {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [label=\"{}\"];\n",
                self.nodes[edge.source].id(),
                self.nodes[edge.target].id(),
                edge.label
            ));
        }
        out.push_str("}\n");
        out
    }

    /// JSON export with witness matrices embedded.
    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .map(|n| {
                json!({
                    "id": n.id(),
                    "weights": n.weights.weights(),
                    "lambda": n.orbit.as_ref().map(|o| o.canonical_member().literal()),
                    "orbit": n.orbit.as_ref().map(|o| o.literals()),
                })
            })
            .collect();
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|e| {
                json!({
                    "source": self.nodes[e.source].id(),
                    "target": self.nodes[e.target].id(),
                    "label": e.label,
                    "kernel": e.witness.kernel.generator_exprs(),
                    "witness": e.witness.hom.to_matrix_json(),
                })
            })
            .collect();
        json!({ "nodes": nodes, "edges": edges })
    }
}

fn is_2222(w: &WeightSeq) -> bool {
    w.canonical_multiset() == vec![2, 2, 2, 2]
}

fn sorted_weights(w: &WeightSeq) -> WeightSeq {
    WeightSeq::new(w.canonical_multiset()).expect("positive weights")
}

struct Builder {
    graph: RelationGraph,
    depth_limit: u32,
}

impl Builder {
    fn find_or_insert(&mut self, weights: WeightSeq, orbit: Option<ParamOrbit>) -> usize {
        for (i, node) in self.graph.nodes.iter().enumerate() {
            if node.weights != weights {
                continue;
            }
            match (&node.orbit, &orbit) {
                (None, None) => return i,
                (Some(a), Some(b)) if a.same_orbit(b) => return i,
                _ => {}
            }
        }
        self.graph.nodes.push(RelationNode { weights, orbit });
        self.graph.nodes.len() - 1
    }

    fn push_edge(&mut self, source: usize, target: usize, label: String, witness: AdmissibleRecord) {
        let dup = self
            .graph
            .edges
            .iter()
            .any(|e| e.source == source && e.target == target && e.label == label);
        if !dup {
            self.graph.edges.push(RelationEdge {
                source,
                target,
                label,
                witness,
            });
        }
    }

    /// Expand one node; returns the newly reached node indices.
    fn expand(&mut self, index: usize) -> Result<Vec<usize>> {
        let node = self.graph.nodes[index].clone();
        let p = node.weights.clone();
        let mut reached = Vec::new();
        for rec in enumerate_admissible(&p)? {
            if rec.kernel.is_trivial() {
                continue;
            }
            let label = rec.class_label();
            let target_weights = sorted_weights(&rec.codomain);
            let source_is_2222 = is_2222(&p);
            let targets: Vec<Option<ParamOrbit>> = if is_2222(&target_weights) {
                if source_is_2222 {
                    let orbit = node.orbit.as_ref().ok_or_else(|| {
                        WplError::InvalidParams(
                            "a (2,2,2,2) node needs a parameter orbit".into(),
                        )
                    })?;
                    match rec.kernel.kind() {
                        SubgroupKind::Klein { .. } => vec![Some(orbit.clone())],
                        _ => {
                            // one target orbit per distinct Gamma(f(sqrt(l')))
                            let mut orbits: Vec<ParamOrbit> = Vec::new();
                            for member in orbit.multiset() {
                                let img = f_sqrt_orbit(member)?;
                                if !orbits.iter().any(|o| o.same_orbit(&img)) {
                                    orbits.push(img);
                                }
                            }
                            orbits.into_iter().map(Some).collect()
                        }
                    }
                } else {
                    // fixed orbits of the tubular table
                    let pm = p.canonical_multiset();
                    let param = if pm == vec![4, 4, 2] {
                        Scalar::from_int(-1)
                    } else if pm == vec![6, 3, 2] {
                        omega_parameter()
                    } else {
                        return Err(WplError::Invalid(format!(
                            "unexpected (2,2,2,2) target from weight type {:?}",
                            pm
                        )));
                    };
                    vec![Some(gamma(&param)?)]
                }
            } else {
                vec![None]
            };
            for orbit in targets {
                let t = self.find_or_insert(target_weights.clone(), orbit);
                self.push_edge(index, t, label.clone(), rec.clone());
                reached.push(t);
            }
        }
        Ok(reached)
    }
}

/// Close a seed set under quotient relations. Seeds of weight type
/// `(2,2,2,2)` must carry a parameter. `depth_limit` bounds the expansion
/// of `(2,2,2,2)` and wild nodes (distance from a seed).
pub fn build_graph(
    seeds: &[(WeightSeq, Option<Scalar>)],
    depth_limit: u32,
) -> Result<RelationGraph> {
    let mut builder = Builder {
        graph: RelationGraph::default(),
        depth_limit,
    };
    let mut queue: VecDeque<(usize, u32)> = VecDeque::new();
    let mut visited: Vec<usize> = Vec::new();
    for (weights, lambda) in seeds {
        let sorted = sorted_weights(weights);
        let orbit = match (is_2222(&sorted), lambda) {
            (true, Some(l)) => Some(gamma(l)?),
            (true, None) => {
                return Err(WplError::InvalidParams(
                    "a (2,2,2,2) seed needs a lambda parameter".into(),
                ))
            }
            (false, None) => None,
            (false, Some(_)) => {
                return Err(WplError::InvalidParams(
                    "only (2,2,2,2) seeds carry a lambda parameter".into(),
                ))
            }
        };
        let idx = builder.find_or_insert(sorted, orbit);
        queue.push_back((idx, 0));
    }
    while let Some((idx, depth)) = queue.pop_front() {
        if visited.contains(&idx) {
            continue;
        }
        let node = &builder.graph.nodes[idx];
        let bounded = node.orbit.is_some()
            || node.weights.classify_type() == GroupTypeClass::Wild;
        if bounded && depth >= builder.depth_limit {
            continue;
        }
        visited.push(idx);
        for t in builder.expand(idx)? {
            if !visited.contains(&t) {
                queue.push_back((t, depth + 1));
            }
        }
    }
    Ok(builder.graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws(w: &[u32]) -> WeightSeq {
        WeightSeq::new(w.to_vec()).unwrap()
    }

    fn sc(s: &str) -> Scalar {
        Scalar::parse(s).unwrap()
    }

    fn edge_set(g: &RelationGraph) -> Vec<(String, String, String)> {
        g.edges
            .iter()
            .map(|e| {
                (
                    g.nodes[e.source].id(),
                    g.nodes[e.target].id(),
                    e.label.clone(),
                )
            })
            .collect()
    }

    #[test]
    fn empty_seed_gives_empty_graph() {
        let g = build_graph(&[], DEFAULT_TUBULAR_DEPTH).unwrap();
        assert!(g.nodes.is_empty());
        assert!(g.edges.is_empty());
    }

    #[test]
    fn single_node_no_edges() {
        let g = build_graph(&[(ws(&[2, 2]), None)], DEFAULT_TUBULAR_DEPTH).unwrap();
        // (2,2) still quotients to ()
        assert!(g.nodes.iter().any(|n| n.weights.is_empty()));
        let dot = g.to_dot();
        assert!(dot.starts_with("digraph equivariant_relations {"));
        assert!(dot.contains("\"w2_2\" -> \"wempty\" [label=\"C_2\"]"));
    }

    #[test]
    fn domestic_chain_from_234() {
        let g = build_graph(&[(ws(&[2, 3, 4]), None)], DEFAULT_TUBULAR_DEPTH).unwrap();
        let edges = edge_set(&g);
        let expect = [
            ("w4_3_2", "w3_3_2", "C_2"),
            ("w3_3_2", "w2_2_2", "C_3"),
            ("w2_2_2", "w2_2", "C_2"),
            ("w2_2_2", "wempty", "C2xC2"),
            ("w2_2", "wempty", "C_2"),
        ];
        assert_eq!(edges.len(), expect.len());
        for (a, b, l) in expect {
            assert!(
                edges.contains(&(a.into(), b.into(), l.into())),
                "missing edge {} -> {} [{}]",
                a,
                b,
                l
            );
        }
    }

    #[test]
    fn tubular_from_632() {
        let g = build_graph(&[(ws(&[6, 3, 2]), None)], DEFAULT_TUBULAR_DEPTH).unwrap();
        let edges = edge_set(&g);
        // (6,3,2) -> (3,3,3) [C_2] and (6,3,2) -> (2,2,2,2; omega) [C_3]
        assert!(edges
            .iter()
            .any(|(a, b, l)| a == "w6_3_2" && b == "w3_3_3" && l == "C_2"));
        assert!(edges
            .iter()
            .any(|(a, b, l)| a == "w6_3_2" && b.starts_with("w2_2_2_2_lam_") && l == "C_3"));
        // (3,3,3) self-loop
        assert!(edges
            .iter()
            .any(|(a, b, l)| a == "w3_3_3" && b == "w3_3_3" && l == "C_3"));
    }

    #[test]
    fn tubular_2222_klein_self_loop() {
        let g = build_graph(&[(ws(&[2, 2, 2, 2]), Some(sc("-1")))], 1).unwrap();
        let edges = edge_set(&g);
        let id = "w2_2_2_2_lam_-1";
        assert!(edges
            .iter()
            .any(|(a, b, l)| a == id && b == id && l == "C2xC2"));
        // C_2 self edge since f(sqrt(-1)) = -1
        assert!(edges.iter().any(|(a, b, l)| a == id && b == id && l == "C_2"));
    }

    #[test]
    fn depth_limit_stops_expansion() {
        let g0 = build_graph(&[(ws(&[2, 2, 2, 2]), Some(sc("3")))], 0).unwrap();
        assert!(g0.edges.is_empty());
        let g1 = build_graph(&[(ws(&[2, 2, 2, 2]), Some(sc("3")))], 1).unwrap();
        assert!(!g1.edges.is_empty());
        let g2 = build_graph(&[(ws(&[2, 2, 2, 2]), Some(sc("3")))], 2).unwrap();
        assert!(g2.edges.len() > g1.edges.len());
    }

    #[test]
    fn generic_chain_returns_to_source_orbit() {
        // lambda = 3: 3 -> 7+4*sqrt(3) -> back to Gamma(3)
        let g = build_graph(&[(ws(&[2, 2, 2, 2]), Some(sc("3")))], 2).unwrap();
        let src = g.nodes[0].id();
        let edges = edge_set(&g);
        // some second-level node has an edge back to the seed node
        assert!(
            edges
                .iter()
                .any(|(a, b, _)| a != &src && b == &src),
            "expected a return edge to the seed orbit"
        );
    }

    #[test]
    fn dot_output_is_stable() {
        let seeds = [(ws(&[4, 4, 2]), None)];
        let a = build_graph(&seeds, 1).unwrap().to_dot();
        let b = build_graph(&seeds, 1).unwrap().to_dot();
        assert_eq!(a, b);
    }

    #[test]
    fn witnesses_pass_checkers() {
        let g = build_graph(&[(ws(&[2, 3, 4]), None), (ws(&[4, 4, 2]), None)], 1).unwrap();
        for e in &g.edges {
            assert!(e.witness.hom.is_admissible_window());
            assert!(e.witness.hom.is_admissible_structural());
            let order = e.witness.kernel.order();
            let expected = match e.witness.kernel.kind() {
                SubgroupKind::Klein { .. } => "C2xC2".to_string(),
                _ => format!("C_{}", order),
            };
            assert_eq!(e.label, expected);
        }
    }

    #[test]
    fn seed_2222_without_lambda_rejected() {
        assert!(build_graph(&[(ws(&[2, 2, 2, 2]), None)], 1).is_err());
        assert!(build_graph(&[(ws(&[4, 4, 2]), Some(sc("2")))], 1).is_err());
    }
}
