//! Bipartite graph encoding of a concrete MILP and the Weisfeiler-Lehman
//! refinement test over it.
//!
//! A node per column carries (objective coefficient, lower, upper,
//! integrality); a node per row carries (relation, rhs); an edge exists for
//! every nonzero coefficient. Real attributes are quantized to 9 decimal
//! places and rendered as shortest decimal strings before hashing, and the
//! hash is a fixed FNV-1a 64, so label sequences are stable across runs and
//! platforms.

use crate::instance::ConcreteModel;
use std::collections::HashMap;

/// Quantized attribute string of a real: 9-decimal rounding, trailing zeros
/// trimmed, infinities spelled out.
pub fn quantize(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    let mut s = format!("{x:.9}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// FNV-1a 64-bit, the documented stable hash for labels.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarNode {
    pub objective: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub integral: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsNode {
    pub relation: crate::expr::Relation,
    pub rhs: f64,
}

/// Bipartite MILP graph. Edges hold the (nonzero) coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpGraph {
    pub variable_nodes: Vec<VarNode>,
    pub constraint_nodes: Vec<ConsNode>,
    /// (variable node, constraint node, coefficient)
    pub edges: Vec<(usize, usize, f64)>,
}

impl MilpGraph {
    pub fn node_count(&self) -> usize {
        self.variable_nodes.len() + self.constraint_nodes.len()
    }

    /// Line-based debug dump: node lines then edge lines, canonical order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.variable_nodes.iter().enumerate() {
            out.push_str(&format!(
                "v {} obj={} lo={} hi={} int={}\n",
                i,
                quantize(v.objective),
                v.lower.map(quantize).unwrap_or_else(|| "-inf".into()),
                v.upper.map(quantize).unwrap_or_else(|| "inf".into()),
                v.integral as u8
            ));
        }
        for (i, c) in self.constraint_nodes.iter().enumerate() {
            out.push_str(&format!(
                "c {} rel={} rhs={}\n",
                i,
                c.relation.as_str(),
                quantize(c.rhs)
            ));
        }
        let mut edges = self.edges.clone();
        edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for (v, c, w) in edges {
            out.push_str(&format!("e {} {} {}\n", v, c, quantize(w)));
        }
        out
    }
}

/// Encode a concrete model: node per column, node per row, edge per nonzero.
pub fn build_bipartite(m: &ConcreteModel<f64>) -> MilpGraph {
    let variable_nodes = (0..m.num_cols())
        .map(|j| VarNode {
            objective: m.objective[j],
            lower: m.lower[j],
            upper: m.upper[j],
            integral: m.integral[j],
        })
        .collect();
    let mut constraint_nodes = Vec::with_capacity(m.num_rows());
    let mut edges = Vec::new();
    for (i, row) in m.rows.iter().enumerate() {
        constraint_nodes.push(ConsNode {
            relation: row.relation,
            rhs: row.rhs,
        });
        for (j, c) in &row.coeffs {
            if *c != 0.0 {
                edges.push((*j, i, *c));
            }
        }
    }
    MilpGraph {
        variable_nodes,
        constraint_nodes,
        edges,
    }
}

/// Per-iteration label multisets of a refinement run.
#[derive(Debug, Clone)]
pub struct WlLabels {
    /// labels[t] holds one label per node (variables first, then constraints).
    pub per_iteration: Vec<Vec<u64>>,
    pub iterations: usize,
    pub converged: bool,
}

fn initial_labels(g: &MilpGraph) -> Vec<u64> {
    let mut labels = Vec::with_capacity(g.node_count());
    for v in &g.variable_nodes {
        let attrs = format!(
            "v|{}|{}|{}|{}",
            quantize(v.objective),
            v.lower.map(quantize).unwrap_or_else(|| "-inf".into()),
            v.upper.map(quantize).unwrap_or_else(|| "inf".into()),
            v.integral as u8
        );
        labels.push(fnv1a64(attrs.as_bytes()));
    }
    for c in &g.constraint_nodes {
        let attrs = format!("c|{}|{}", c.relation.as_str(), quantize(c.rhs));
        labels.push(fnv1a64(attrs.as_bytes()));
    }
    labels
}

fn adjacency(g: &MilpGraph) -> Vec<Vec<(String, usize)>> {
    let nv = g.variable_nodes.len();
    let mut adj: Vec<Vec<(String, usize)>> = vec![Vec::new(); g.node_count()];
    for (v, c, w) in &g.edges {
        let ws = quantize(*w);
        adj[*v].push((ws.clone(), nv + *c));
        adj[nv + *c].push((ws, *v));
    }
    adj
}

fn refine_step(labels: &[u64], adj: &[Vec<(String, usize)>]) -> Vec<u64> {
    labels
        .iter()
        .enumerate()
        .map(|(i, own)| {
            let mut neigh: Vec<(String, u64)> = adj[i]
                .iter()
                .map(|(w, n)| (w.clone(), labels[*n]))
                .collect();
            neigh.sort();
            let mut bytes = Vec::with_capacity(16 + neigh.len() * 24);
            bytes.extend_from_slice(&own.to_be_bytes());
            for (w, l) in neigh {
                bytes.push(b'|');
                bytes.extend_from_slice(w.as_bytes());
                bytes.push(b':');
                bytes.extend_from_slice(&l.to_be_bytes());
            }
            fnv1a64(&bytes)
        })
        .collect()
}

/// Partition signature: nodes grouped by label, classes numbered by first
/// occurrence. Two rounds with the same signature have hit the fixpoint.
fn partition_of(labels: &[u64]) -> Vec<usize> {
    let mut class: HashMap<u64, usize> = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = class.len();
            *class.entry(*l).or_insert(next)
        })
        .collect()
}

/// Iterative label refinement. `max_iters` must be at least 1; the classic
/// bound (node count) suffices for a fixpoint.
pub fn wl_refine(g: &MilpGraph, max_iters: usize) -> WlLabels {
    assert!(max_iters >= 1, "wl_refine requires max_iters >= 1");
    let adj = adjacency(g);
    let mut labels = initial_labels(g);
    let mut per_iteration = vec![labels.clone()];
    let mut converged = false;
    for _ in 0..max_iters {
        let next = refine_step(&labels, &adj);
        let stable = partition_of(&next) == partition_of(&labels);
        labels = next;
        per_iteration.push(labels.clone());
        if stable {
            converged = true;
            break;
        }
    }
    WlLabels {
        iterations: per_iteration.len() - 1,
        per_iteration,
        converged,
    }
}

/// WL equivalence: label multisets must agree at every iteration up to the
/// common fixpoint. Differing node counts fail immediately.
pub fn wl_equivalent(g1: &MilpGraph, g2: &MilpGraph, max_iters: usize) -> bool {
    assert!(max_iters >= 1, "wl_equivalent requires max_iters >= 1");
    if g1.variable_nodes.len() != g2.variable_nodes.len()
        || g1.constraint_nodes.len() != g2.constraint_nodes.len()
    {
        return false;
    }
    let adj1 = adjacency(g1);
    let adj2 = adjacency(g2);
    let mut l1 = initial_labels(g1);
    let mut l2 = initial_labels(g2);
    if !multiset_eq(&l1, &l2) {
        return false;
    }
    for _ in 0..max_iters {
        let n1 = refine_step(&l1, &adj1);
        let n2 = refine_step(&l2, &adj2);
        if !multiset_eq(&n1, &n2) {
            return false;
        }
        let stable1 = partition_of(&n1) == partition_of(&l1);
        let stable2 = partition_of(&n2) == partition_of(&l2);
        l1 = n1;
        l2 = n2;
        if stable1 && stable2 {
            return true;
        }
    }
    true
}

/// Default iteration budget: the node count.
pub fn default_iters(g: &MilpGraph) -> usize {
    g.node_count().max(1)
}

fn multiset_eq(a: &[u64], b: &[u64]) -> bool {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable();
    sb.sort_unstable();
    sa == sb
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Relation;
    use crate::instance::{ColumnId, Row, RowOrigin};
    use crate::model::Sense;

    fn stable_set_path3() -> ConcreteModel<f64> {
        // max x1+x2+x3 s.t. x1+x2 <= 1, x2+x3 <= 1, binary
        ConcreteModel {
            columns: (0..3)
                .map(|j| ColumnId {
                    var: format!("x{j}"),
                    labels: vec![],
                    positions: vec![],
                })
                .collect(),
            objective: vec![1.0; 3],
            sense: Sense::Max,
            rows: vec![
                Row {
                    coeffs: vec![(0, 1.0), (1, 1.0)],
                    relation: Relation::Le,
                    rhs: 1.0,
                    origin: RowOrigin {
                        constraint: 0,
                        description: String::new(),
                        binding: vec![],
                    },
                },
                Row {
                    coeffs: vec![(1, 1.0), (2, 1.0)],
                    relation: Relation::Le,
                    rhs: 1.0,
                    origin: RowOrigin {
                        constraint: 0,
                        description: String::new(),
                        binding: vec![],
                    },
                },
            ],
            lower: vec![Some(0.0); 3],
            upper: vec![Some(1.0); 3],
            integral: vec![true; 3],
        }
    }

    #[test]
    fn bipartite_counts_for_path3() {
        let g = build_bipartite(&stable_set_path3());
        assert_eq!(g.variable_nodes.len(), 3);
        assert_eq!(g.constraint_nodes.len(), 2);
        assert_eq!(g.edges.len(), 4);
    }

    #[test]
    fn zero_row_gives_isolated_constraint_node() {
        let mut m = stable_set_path3();
        m.rows.push(Row {
            coeffs: vec![],
            relation: Relation::Le,
            rhs: 5.0,
            origin: RowOrigin {
                constraint: 2,
                description: String::new(),
                binding: vec![],
            },
        });
        let g = build_bipartite(&m);
        assert_eq!(g.constraint_nodes.len(), 3);
        assert_eq!(g.edges.len(), 4);
    }

    #[test]
    fn bound_only_model_has_no_constraint_nodes() {
        let m = ConcreteModel {
            columns: vec![ColumnId {
                var: "x".into(),
                labels: vec![],
                positions: vec![],
            }],
            objective: vec![1.0],
            sense: Sense::Min,
            rows: vec![],
            lower: vec![Some(1.0)],
            upper: vec![None],
            integral: vec![false],
        };
        let g = build_bipartite(&m);
        assert_eq!(g.variable_nodes.len(), 1);
        assert_eq!(g.constraint_nodes.len(), 0);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn middle_variable_diverges_by_iteration_one() {
        let g = build_bipartite(&stable_set_path3());
        let wl = wl_refine(&g, default_iters(&g));
        let l0 = &wl.per_iteration[0];
        assert_eq!(l0[0], l0[1]);
        assert_eq!(l0[0], l0[2]);
        let l1 = &wl.per_iteration[1];
        assert_eq!(l1[0], l1[2], "end variables stay symmetric");
        assert_ne!(l1[0], l1[1], "degree-2 middle variable must split off");
    }

    #[test]
    fn identical_isolated_nodes_share_labels_forever() {
        let m = ConcreteModel {
            columns: (0..2)
                .map(|j| ColumnId {
                    var: format!("x{j}"),
                    labels: vec![],
                    positions: vec![],
                })
                .collect(),
            objective: vec![2.0, 2.0],
            sense: Sense::Min,
            rows: vec![],
            lower: vec![Some(0.0), Some(0.0)],
            upper: vec![Some(3.0), Some(3.0)],
            integral: vec![false, false],
        };
        let g = build_bipartite(&m);
        let wl = wl_refine(&g, 5);
        for labels in &wl.per_iteration {
            assert_eq!(labels[0], labels[1]);
        }
        assert!(wl.converged);
    }

    #[test]
    #[should_panic(expected = "max_iters")]
    fn zero_iterations_rejected() {
        let g = build_bipartite(&stable_set_path3());
        wl_refine(&g, 0);
    }

    #[test]
    fn permuted_model_is_equivalent() {
        let m = stable_set_path3();
        let mut p = m.clone();
        // permute columns (2,0,1) and rows (1,0)
        let perm = [2usize, 0, 1];
        let mut inv = [0usize; 3];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        p.columns = perm.iter().map(|&j| m.columns[j].clone()).collect();
        p.objective = perm.iter().map(|&j| m.objective[j]).collect();
        p.lower = perm.iter().map(|&j| m.lower[j]).collect();
        p.upper = perm.iter().map(|&j| m.upper[j]).collect();
        p.integral = perm.iter().map(|&j| m.integral[j]).collect();
        p.rows = vec![m.rows[1].clone(), m.rows[0].clone()];
        for row in &mut p.rows {
            for (j, _) in &mut row.coeffs {
                *j = inv[*j];
            }
            row.coeffs.sort_by_key(|(j, _)| *j);
        }
        let g1 = build_bipartite(&m);
        let g2 = build_bipartite(&p);
        assert!(wl_equivalent(&g1, &g2, default_iters(&g1)));
    }

    #[test]
    fn extra_column_or_coefficient_change_breaks_equivalence() {
        let m = stable_set_path3();
        let g1 = build_bipartite(&m);
        // slack-style extra column
        let mut slack = m.clone();
        slack.columns.push(ColumnId {
            var: "s".into(),
            labels: vec![],
            positions: vec![],
        });
        slack.objective.push(0.0);
        slack.lower.push(Some(0.0));
        slack.upper.push(None);
        slack.integral.push(false);
        assert!(!wl_equivalent(&g1, &build_bipartite(&slack), 10));
        // objective coefficient perturbed beyond the quantization step
        let mut pert = m.clone();
        pert.objective[1] += 1e-6;
        assert!(!wl_equivalent(&g1, &build_bipartite(&pert), 10));
        // edge coefficient perturbation
        let mut edge = m.clone();
        edge.rows[0].coeffs[0].1 += 2e-9;
        assert!(!wl_equivalent(&g1, &build_bipartite(&edge), 10));
    }

    #[test]
    fn quantization_is_shortest_decimal() {
        assert_eq!(quantize(0.1), "0.1");
        assert_eq!(quantize(2.0), "2");
        assert_eq!(quantize(-0.0), "0");
        assert_eq!(quantize(f64::INFINITY), "inf");
        assert_eq!(quantize(1.0000000001), "1");
        assert_eq!(quantize(1.000000001), "1.000000001");
    }
}
