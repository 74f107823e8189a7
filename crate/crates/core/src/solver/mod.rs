//! Deterministic desk-scale MILP solver: primal simplex with Bland's rule
//! under branch-and-bound, plus the feasibility/optimality checker used by
//! the verification step.

mod branch;
mod simplex;

use crate::instance::{Assignment, ConcreteModel, RowOrigin};
use crate::model::Sense;
use crate::scalar::LpFloat;

pub use branch::solve_milp;
pub use simplex::solve_lp_bounded;

/// Hard caps for a single solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveLimits {
    pub max_nodes: usize,
    pub time_limit_s: f64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_nodes: 100_000,
            time_limit_s: 30.0,
        }
    }
}

/// Numeric tolerances shared by the solver and the verifier.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub feasibility: f64,
    pub integrality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-6,
            integrality: 1e-6,
        }
    }
}

/// Band for comparing objective values: max(tol, 1e-9·|z|).
pub fn objective_band(z: f64, tol: f64) -> f64 {
    tol.max(1e-9 * z.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
}

/// Result of a solve, objective reported in the model's native sense.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub assignment: Option<Assignment<f64>>,
    pub objective: Option<f64>,
    pub node_count: usize,
    pub wall_time_s: f64,
}

impl SolveOutcome {
    pub fn optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("numerical breakdown: {0}")]
    Numerical(String),
}

/// Solve the LP relaxation (integrality dropped).
pub fn solve_lp<F: LpFloat>(m: &ConcreteModel<F>) -> Result<SolveOutcome, SolverError> {
    let start = std::time::Instant::now();
    let mut out = simplex::solve_lp_bounded(m, &m.lower, &m.upper)?;
    out.wall_time_s = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Solve respecting integrality when any column is integral, else plain LP.
pub fn solve_auto<F: LpFloat>(
    m: &ConcreteModel<F>,
    limits: SolveLimits,
    tol: Tolerances,
) -> Result<SolveOutcome, SolverError> {
    if m.integral.iter().any(|&b| b) {
        solve_milp(m, limits, tol)
    } else {
        solve_lp(m)
    }
}

/// Per-row feasibility and integrality report for a candidate assignment.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<(RowOrigin, f64)>,
    pub integrality_violations: Vec<(usize, f64)>,
    pub bound_violations: Vec<(usize, f64)>,
}

/// Check a candidate point against every row, bound and integrality flag.
/// Never fails: the result is a report, not an exception.
pub fn check_solution<F: LpFloat>(
    m: &ConcreteModel<F>,
    x: &Assignment<F>,
    tol: Tolerances,
) -> FeasibilityReport {
    assert_eq!(x.len(), m.num_cols(), "assignment length mismatch");
    let tf = F::from_f64(tol.feasibility).unwrap();
    let mut violations = Vec::new();
    for row in &m.rows {
        let lhs = crate::instance::row_value(row, &x.values);
        let gap = match row.relation {
            crate::expr::Relation::Le => lhs - row.rhs,
            crate::expr::Relation::Ge => row.rhs - lhs,
            crate::expr::Relation::Eq => (lhs - row.rhs).abs(),
        };
        if gap > tf {
            violations.push((row.origin.clone(), gap.to_f64().unwrap_or(f64::INFINITY)));
        }
    }
    let mut integrality_violations = Vec::new();
    for (j, &is_int) in m.integral.iter().enumerate() {
        if is_int {
            let v = x.values[j];
            let frac = (v - v.round()).abs();
            if frac.to_f64().unwrap_or(1.0) > tol.integrality {
                integrality_violations.push((j, frac.to_f64().unwrap_or(1.0)));
            }
        }
    }
    let mut bound_violations = Vec::new();
    for j in 0..m.num_cols() {
        let v = x.values[j];
        if let Some(l) = m.lower[j] {
            if l - v > tf {
                bound_violations.push((j, (l - v).to_f64().unwrap_or(f64::INFINITY)));
            }
        }
        if let Some(u) = m.upper[j] {
            if v - u > tf {
                bound_violations.push((j, (v - u).to_f64().unwrap_or(f64::INFINITY)));
            }
        }
    }
    FeasibilityReport {
        feasible: violations.is_empty()
            && integrality_violations.is_empty()
            && bound_violations.is_empty(),
        violations,
        integrality_violations,
        bound_violations,
    }
}

/// Native-sense objective for internal minimum-form values.
pub(crate) fn to_native<F: LpFloat>(sense: Sense, min_value: F) -> F {
    match sense {
        Sense::Min => min_value,
        Sense::Max => -min_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Relation;
    use crate::instance::{ColumnId, Row, RowOrigin};

    pub(crate) fn plain_model(
        objective: Vec<f64>,
        sense: Sense,
        rows: Vec<(Vec<f64>, Relation, f64)>,
        lower: Vec<Option<f64>>,
        upper: Vec<Option<f64>>,
        integral: Vec<bool>,
    ) -> ConcreteModel<f64> {
        let n = objective.len();
        ConcreteModel {
            columns: (0..n)
                .map(|j| ColumnId {
                    var: format!("x{j}"),
                    labels: vec![],
                    positions: vec![],
                })
                .collect(),
            objective,
            sense,
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (dense, relation, rhs))| Row {
                    coeffs: dense
                        .into_iter()
                        .enumerate()
                        .filter(|(_, c)| *c != 0.0)
                        .collect(),
                    relation,
                    rhs,
                    origin: RowOrigin {
                        constraint: i,
                        description: String::new(),
                        binding: vec![],
                    },
                })
                .collect(),
            lower,
            upper,
            integral: if integral.is_empty() {
                vec![false; n]
            } else {
                integral
            },
        }
    }

    #[test]
    fn lp_two_variable_optimum() {
        // min -x - y  s.t. x + 2y <= 3, x <= 1.5, x,y >= 0
        // optimum (1.5, 0.75), z = -2.25 (checked by vertex enumeration in
        // the integration suite).
        let m = plain_model(
            vec![-1.0, -1.0],
            Sense::Min,
            vec![
                (vec![1.0, 2.0], Relation::Le, 3.0),
                (vec![1.0, 0.0], Relation::Le, 1.5),
            ],
            vec![Some(0.0), Some(0.0)],
            vec![None, None],
            vec![],
        );
        let out = solve_lp(&m).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        let x = out.assignment.unwrap();
        assert!((x.values[0] - 1.5).abs() < 1e-9);
        assert!((x.values[1] - 0.75).abs() < 1e-9);
        assert!((out.objective.unwrap() + 2.25).abs() < 1e-9);
    }

    #[test]
    fn lp_detects_infeasible_bounds() {
        // x <= -1 with x >= 0
        let m = plain_model(
            vec![1.0],
            Sense::Min,
            vec![(vec![1.0], Relation::Le, -1.0)],
            vec![Some(0.0)],
            vec![None],
            vec![],
        );
        let out = solve_lp(&m).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
        assert!(out.assignment.is_none());
    }

    #[test]
    fn lp_detects_unbounded_ray() {
        // min -x with x >= 0 and no rows
        let m = plain_model(
            vec![-1.0],
            Sense::Min,
            vec![],
            vec![Some(0.0)],
            vec![None],
            vec![],
        );
        let out = solve_lp(&m).unwrap();
        assert_eq!(out.status, SolveStatus::Unbounded);
        assert!(out.assignment.is_none());
    }

    #[test]
    fn lp_handles_free_and_mirrored_variables() {
        // min x + y with x free, y <= 5 (no lower); x >= -3 via row.
        let m = plain_model(
            vec![1.0, 1.0],
            Sense::Min,
            vec![(vec![1.0, 0.0], Relation::Ge, -3.0)],
            vec![None, None],
            vec![None, Some(5.0)],
            vec![],
        );
        let out = solve_lp(&m).unwrap();
        assert_eq!(out.status, SolveStatus::Unbounded); // y unbounded below
        let m2 = plain_model(
            vec![1.0, 1.0],
            Sense::Min,
            vec![
                (vec![1.0, 0.0], Relation::Ge, -3.0),
                (vec![0.0, 1.0], Relation::Ge, -2.0),
            ],
            vec![None, None],
            vec![None, Some(5.0)],
            vec![],
        );
        let out2 = solve_lp(&m2).unwrap();
        assert_eq!(out2.status, SolveStatus::Optimal);
        assert!((out2.objective.unwrap() + 5.0).abs() < 1e-9);
    }

    #[test]
    fn milp_knapsack_matches_enumeration() {
        // values [4,5,6,7], weights [2,3,4,5], capacity 7: optimum 11.
        let m = plain_model(
            vec![4.0, 5.0, 6.0, 7.0],
            Sense::Max,
            vec![(vec![2.0, 3.0, 4.0, 5.0], Relation::Le, 7.0)],
            vec![Some(0.0); 4],
            vec![Some(1.0); 4],
            vec![true; 4],
        );
        let out = solve_milp(&m, SolveLimits::default(), Tolerances::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective.unwrap() - 11.0).abs() < 1e-9);
        let report = check_solution(&m, out.assignment.as_ref().unwrap(), Tolerances::default());
        assert!(report.feasible);
    }

    #[test]
    fn milp_fully_fixed_by_bounds() {
        let m = plain_model(
            vec![3.0, 2.0],
            Sense::Min,
            vec![(vec![1.0, 1.0], Relation::Le, 10.0)],
            vec![Some(2.0), Some(4.0)],
            vec![Some(2.0), Some(4.0)],
            vec![true, true],
        );
        let out = solve_milp(&m, SolveLimits::default(), Tolerances::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        let x = out.assignment.unwrap();
        assert_eq!(x.values, vec![2.0, 4.0]);
        assert!((out.objective.unwrap() - 14.0).abs() < 1e-9);
    }

    #[test]
    fn check_solution_reports_each_violation_class() {
        let m = plain_model(
            vec![1.0, 1.0, 1.0],
            Sense::Max,
            vec![(vec![1.0, 1.0, 0.0], Relation::Le, 1.0)],
            vec![Some(0.0); 3],
            vec![Some(1.0); 3],
            vec![true, true, true],
        );
        // feasible point
        let ok = check_solution(
            &m,
            &Assignment::new(vec![1.0, 0.0, 1.0]),
            Tolerances::default(),
        );
        assert!(ok.feasible);
        // row violation of magnitude 1
        let bad = check_solution(
            &m,
            &Assignment::new(vec![1.0, 1.0, 0.0]),
            Tolerances::default(),
        );
        assert!(!bad.feasible);
        assert_eq!(bad.violations.len(), 1);
        assert!((bad.violations[0].1 - 1.0).abs() < 1e-12);
        // fractional integer column
        let frac = check_solution(
            &m,
            &Assignment::new(vec![0.49999, 0.0, 0.0]),
            Tolerances::default(),
        );
        assert_eq!(frac.integrality_violations.len(), 1);
        assert!((frac.integrality_violations[0].1 - 0.49999).abs() < 1e-12);
        // bound violation
        let oob = check_solution(
            &m,
            &Assignment::new(vec![0.0, 0.0, 2.0]),
            Tolerances::default(),
        );
        assert_eq!(oob.bound_violations.len(), 1);
    }

    #[test]
    fn deterministic_across_runs() {
        let m = plain_model(
            vec![-3.0, -5.0, -4.0],
            Sense::Min,
            vec![
                (vec![2.0, 3.0, 0.0], Relation::Le, 8.0),
                (vec![0.0, 2.0, 5.0], Relation::Le, 10.0),
                (vec![3.0, 2.0, 4.0], Relation::Le, 15.0),
            ],
            vec![Some(0.0); 3],
            vec![None; 3],
            vec![true, true, true],
        );
        let a = solve_milp(&m, SolveLimits::default(), Tolerances::default()).unwrap();
        let b = solve_milp(&m, SolveLimits::default(), Tolerances::default()).unwrap();
        assert_eq!(a.node_count, b.node_count);
        assert_eq!(
            a.assignment.as_ref().unwrap().values,
            b.assignment.as_ref().unwrap().values
        );
    }
}
