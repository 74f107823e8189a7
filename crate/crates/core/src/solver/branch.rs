//! Branch-and-bound over the simplex relaxation.
//!
//! Node selection is best-first by relaxation bound with node-id tie-break;
//! branching picks the lowest-index fractional integer column and the floor
//! child is created (and therefore explored on bound ties) first.

use super::simplex::solve_lp_bounded;
use super::{to_native, SolveLimits, SolveOutcome, SolveStatus, SolverError, Tolerances};
use crate::instance::{Assignment, ConcreteModel};
use crate::model::Sense;
use crate::scalar::LpFloat;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

struct Node<F> {
    bound: F, // relaxation value in min form
    id: u64,
    lower: Vec<Option<F>>,
    upper: Vec<Option<F>>,
    relax: Assignment<f64>,
}

impl<F: LpFloat> PartialEq for Node<F> {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl<F: LpFloat> Eq for Node<F> {}
impl<F: LpFloat> PartialOrd for Node<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<F: LpFloat> Ord for Node<F> {
    // BinaryHeap is a max-heap; reverse so the smallest (bound, id) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then(other.id.cmp(&self.id))
    }
}

/// Solve a mixed-integer model to proven optimality (or report the cap).
pub fn solve_milp<F: LpFloat>(
    m: &ConcreteModel<F>,
    limits: SolveLimits,
    tol: Tolerances,
) -> Result<SolveOutcome, SolverError> {
    let start = std::time::Instant::now();
    if !m.integral.iter().any(|&b| b) {
        let mut out = solve_lp_bounded(m, &m.lower, &m.upper)?;
        out.wall_time_s = start.elapsed().as_secs_f64();
        return Ok(out);
    }

    let min_sign = match m.sense {
        Sense::Min => F::one(),
        Sense::Max => -F::one(),
    };
    let to_min = |z: f64| F::from_f64(z).unwrap() * min_sign;

    let root = solve_lp_bounded(m, &m.lower, &m.upper)?;
    let mut node_count = 1usize;
    match root.status {
        SolveStatus::Infeasible => {
            return Ok(SolveOutcome {
                status: SolveStatus::Infeasible,
                assignment: None,
                objective: None,
                node_count,
                wall_time_s: start.elapsed().as_secs_f64(),
            })
        }
        SolveStatus::Unbounded => {
            // The relaxation has an unbounded ray; the integer problem is
            // reported unbounded rather than guessed at.
            return Ok(SolveOutcome {
                status: SolveStatus::Unbounded,
                assignment: None,
                objective: None,
                node_count,
                wall_time_s: start.elapsed().as_secs_f64(),
            });
        }
        _ => {}
    }

    let mut heap: BinaryHeap<Node<F>> = BinaryHeap::new();
    let mut next_id = 0u64;
    heap.push(Node {
        bound: to_min(root.objective.unwrap()),
        id: {
            next_id += 1;
            next_id - 1
        },
        lower: m.lower.clone(),
        upper: m.upper.clone(),
        relax: root.assignment.unwrap(),
    });

    let mut incumbent: Option<(F, Assignment<f64>)> = None;
    let improve_eps = F::from_f64(1e-9).unwrap();
    let mut capped = false;

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound >= *best - improve_eps {
                continue; // cannot improve
            }
        }
        if node_count >= limits.max_nodes || start.elapsed().as_secs_f64() > limits.time_limit_s {
            capped = true;
            break;
        }

        // first fractional integer column
        let frac_col = (0..m.num_cols()).find(|&j| {
            m.integral[j] && {
                let v = node.relax.values[j];
                (v - v.round()).abs() > tol.integrality
            }
        });

        match frac_col {
            None => {
                // integral relaxation: candidate incumbent
                let mut values = node.relax.values.clone();
                for (j, v) in values.iter_mut().enumerate() {
                    if m.integral[j] {
                        *v = v.round();
                    }
                }
                let z: f64 = m
                    .objective
                    .iter()
                    .zip(&values)
                    .map(|(c, v)| c.to_f64().unwrap() * *v)
                    .sum();
                let zmin = to_min(z);
                let better = match &incumbent {
                    None => true,
                    Some((best, _)) => zmin < *best - improve_eps,
                };
                if better {
                    incumbent = Some((zmin, Assignment::new(values)));
                }
            }
            Some(j) => {
                let v = node.relax.values[j];
                let floor = v.floor();
                // floor child first so it receives the smaller node id
                for (is_floor, cut) in [(true, floor), (false, floor + 1.0)] {
                    let mut lower = node.lower.clone();
                    let mut upper = node.upper.clone();
                    let cut_f = F::from_f64(cut).unwrap();
                    if is_floor {
                        upper[j] = Some(match upper[j] {
                            Some(u) if u < cut_f => u,
                            _ => cut_f,
                        });
                    } else {
                        lower[j] = Some(match lower[j] {
                            Some(l) if l > cut_f => l,
                            _ => cut_f,
                        });
                    }
                    let child = solve_lp_bounded(m, &lower, &upper)?;
                    node_count += 1;
                    match child.status {
                        SolveStatus::Optimal => {
                            let child_bound = to_min(child.objective.unwrap());
                            // monotonicity: a restriction cannot improve the bound
                            debug_assert!(
                                child_bound >= node.bound - F::from_f64(1e-6).unwrap(),
                                "child bound below parent bound"
                            );
                            let child_bound = if child_bound < node.bound {
                                node.bound
                            } else {
                                child_bound
                            };
                            heap.push(Node {
                                bound: child_bound,
                                id: {
                                    next_id += 1;
                                    next_id - 1
                                },
                                lower,
                                upper,
                                relax: child.assignment.unwrap(),
                            });
                        }
                        SolveStatus::Infeasible => {}
                        SolveStatus::Unbounded => {
                            return Err(SolverError::Numerical(
                                "bounded parent produced unbounded child".into(),
                            ))
                        }
                        SolveStatus::NodeLimit => unreachable!(),
                    }
                }
            }
        }
    }

    let wall_time_s = start.elapsed().as_secs_f64();
    match incumbent {
        Some((zmin, x)) if !capped => Ok(SolveOutcome {
            status: SolveStatus::Optimal,
            assignment: Some(x),
            objective: Some(to_native(m.sense, zmin).to_f64().unwrap()),
            node_count,
            wall_time_s,
        }),
        Some((zmin, x)) => Ok(SolveOutcome {
            status: SolveStatus::NodeLimit,
            assignment: Some(x),
            objective: Some(to_native(m.sense, zmin).to_f64().unwrap()),
            node_count,
            wall_time_s,
        }),
        None if capped => Ok(SolveOutcome {
            status: SolveStatus::NodeLimit,
            assignment: None,
            objective: None,
            node_count,
            wall_time_s,
        }),
        None => Ok(SolveOutcome {
            status: SolveStatus::Infeasible,
            assignment: None,
            objective: None,
            node_count,
            wall_time_s,
        }),
    }
}
