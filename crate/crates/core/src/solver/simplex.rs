//! Two-phase primal simplex on a dense tableau.
//!
//! Bland's rule everywhere (smallest eligible index enters, ties on the ratio
//! test broken by smallest basic variable index), which guarantees
//! termination and makes every run bit-reproducible.

use super::{SolveOutcome, SolveStatus, SolverError};
use crate::expr::Relation;
use crate::instance::{Assignment, ConcreteModel};
use crate::model::Sense;
use crate::scalar::LpFloat;

const MAX_PIVOTS: usize = 200_000;

/// How an original column maps into tableau columns.
#[derive(Debug, Clone)]
enum ColMap<F> {
    /// x = shift + t
    Shifted { col: usize, shift: F },
    /// x = shift - t (upper bound only)
    Mirrored { col: usize, shift: F },
    /// x = t_plus - t_minus (free)
    Split { plus: usize, minus: usize },
}

/// Solve the LP relaxation of `m` under the given bound vectors (which may
/// tighten the model's own bounds during branch-and-bound).
pub fn solve_lp_bounded<F: LpFloat>(
    m: &ConcreteModel<F>,
    lower: &[Option<F>],
    upper: &[Option<F>],
) -> Result<SolveOutcome, SolverError> {
    let eps = F::from_f64(1e-9).unwrap();
    let n = m.num_cols();

    // Quick infeasibility: crossed bounds.
    for j in 0..n {
        if let (Some(l), Some(u)) = (lower[j], upper[j]) {
            if l > u + eps {
                return Ok(outcome(SolveStatus::Infeasible, None, None, 0));
            }
        }
    }

    // Column transform to nonnegative tableau variables.
    let mut col_map: Vec<ColMap<F>> = Vec::with_capacity(n);
    let mut num_structural = 0usize;
    let mut extra_upper_rows: Vec<(usize, F)> = Vec::new(); // (tableau col, cap)
    for j in 0..n {
        match (lower[j], upper[j]) {
            (Some(l), Some(u)) => {
                col_map.push(ColMap::Shifted {
                    col: num_structural,
                    shift: l,
                });
                extra_upper_rows.push((num_structural, u - l));
                num_structural += 1;
            }
            (Some(l), None) => {
                col_map.push(ColMap::Shifted {
                    col: num_structural,
                    shift: l,
                });
                num_structural += 1;
            }
            (None, Some(u)) => {
                col_map.push(ColMap::Mirrored {
                    col: num_structural,
                    shift: u,
                });
                num_structural += 1;
            }
            (None, None) => {
                col_map.push(ColMap::Split {
                    plus: num_structural,
                    minus: num_structural + 1,
                });
                num_structural += 2;
            }
        }
    }

    // Assemble rows in "dense coeffs over structural columns, relation, rhs"
    // form with the transform applied.
    struct StdRow<F> {
        coeffs: Vec<F>,
        relation: Relation,
        rhs: F,
    }
    let mut std_rows: Vec<StdRow<F>> = Vec::new();
    for row in &m.rows {
        let mut coeffs = vec![F::zero(); num_structural];
        let mut rhs = row.rhs;
        for (j, a) in &row.coeffs {
            match &col_map[*j] {
                ColMap::Shifted { col, shift } => {
                    coeffs[*col] = coeffs[*col] + *a;
                    rhs = rhs - *a * *shift;
                }
                ColMap::Mirrored { col, shift } => {
                    coeffs[*col] = coeffs[*col] - *a;
                    rhs = rhs - *a * *shift;
                }
                ColMap::Split { plus, minus } => {
                    coeffs[*plus] = coeffs[*plus] + *a;
                    coeffs[*minus] = coeffs[*minus] - *a;
                }
            }
        }
        std_rows.push(StdRow {
            coeffs,
            relation: row.relation,
            rhs,
        });
    }
    for (col, cap) in &extra_upper_rows {
        let mut coeffs = vec![F::zero(); num_structural];
        coeffs[*col] = F::one();
        std_rows.push(StdRow {
            coeffs,
            relation: Relation::Le,
            rhs: *cap,
        });
    }

    // Objective in min form over structural columns (constant from shifts is
    // irrelevant: the reported objective is recomputed from the original c).
    let mut cost = vec![F::zero(); num_structural];
    for j in 0..n {
        let c = match m.sense {
            Sense::Min => m.objective[j],
            Sense::Max => -m.objective[j],
        };
        match &col_map[j] {
            ColMap::Shifted { col, .. } => cost[*col] = cost[*col] + c,
            ColMap::Mirrored { col, .. } => cost[*col] = cost[*col] - c,
            ColMap::Split { plus, minus } => {
                cost[*plus] = cost[*plus] + c;
                cost[*minus] = cost[*minus] - c;
            }
        }
    }

    // Equality standard form: normalize rhs >= 0, add slack/surplus columns,
    // then artificials where no natural basis column exists.
    let m_rows = std_rows.len();
    let mut slack_cols = 0usize;
    for r in &std_rows {
        if r.relation != Relation::Eq {
            slack_cols += 1;
        }
    }
    let total_real = num_structural + slack_cols;
    // tableau rows: coefficients over [structural | slacks | artificials]
    let mut a: Vec<Vec<F>> = Vec::with_capacity(m_rows);
    let mut b: Vec<F> = Vec::with_capacity(m_rows);
    let mut basis: Vec<usize> = vec![usize::MAX; m_rows];
    let mut next_slack = num_structural;
    let mut artificial_rows: Vec<usize> = Vec::new();
    for (i, r) in std_rows.iter().enumerate() {
        let flip = r.rhs < F::zero();
        let sign = if flip { -F::one() } else { F::one() };
        let mut dense = vec![F::zero(); total_real];
        for j in 0..num_structural {
            dense[j] = sign * r.coeffs[j];
        }
        let rel = if flip { r.relation.flipped() } else { r.relation };
        match rel {
            Relation::Le => {
                dense[next_slack] = F::one();
                basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                dense[next_slack] = -F::one();
                next_slack += 1;
                artificial_rows.push(i);
            }
            Relation::Eq => {
                artificial_rows.push(i);
            }
        }
        a.push(dense);
        b.push(sign * r.rhs);
    }
    // append artificial columns
    let num_artificial = artificial_rows.len();
    let total = total_real + num_artificial;
    for (k, &i) in artificial_rows.iter().enumerate() {
        for (row_idx, row) in a.iter_mut().enumerate() {
            row.push(if row_idx == i { F::one() } else { F::zero() });
        }
        basis[i] = total_real + k;
    }
    debug_assert!(basis.iter().all(|&x| x != usize::MAX));
    debug_assert!(a.iter().all(|r| r.len() == total));

    let mut tab = Tableau {
        a,
        b,
        basis,
        eps,
        ncols: total,
    };

    // Phase 1: minimize the artificial sum.
    if num_artificial > 0 {
        let mut phase1_cost = vec![F::zero(); total];
        for k in 0..num_artificial {
            phase1_cost[total_real + k] = F::one();
        }
        match tab.optimize(&phase1_cost, total)? {
            Pivot::Optimal => {}
            Pivot::Unbounded => {
                return Err(SolverError::Numerical(
                    "phase-1 objective unbounded".into(),
                ))
            }
        }
        let infeas = tab.objective_value(&phase1_cost);
        if infeas > F::from_f64(1e-7).unwrap() {
            return Ok(outcome(SolveStatus::Infeasible, None, None, 0));
        }
        // Drive basic artificials out or drop their (redundant) rows.
        let mut drop_rows: Vec<usize> = Vec::new();
        for i in 0..tab.b.len() {
            if tab.basis[i] >= total_real {
                let mut pivoted = false;
                for j in 0..total_real {
                    if tab.a[i][j].abs() > eps {
                        tab.pivot(i, j);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    drop_rows.push(i);
                }
            }
        }
        for &i in drop_rows.iter().rev() {
            tab.a.remove(i);
            tab.b.remove(i);
            tab.basis.remove(i);
        }
    }

    // Phase 2 over real columns only.
    let mut phase2_cost = vec![F::zero(); total];
    phase2_cost[..num_structural].copy_from_slice(&cost[..num_structural]);
    match tab.optimize(&phase2_cost, total_real)? {
        Pivot::Optimal => {}
        Pivot::Unbounded => return Ok(outcome(SolveStatus::Unbounded, None, None, 0)),
    }

    // Extract structural values and undo the column transform.
    let mut t = vec![F::zero(); total];
    for (i, &bv) in tab.basis.iter().enumerate() {
        t[bv] = tab.b[i];
    }
    let mut x = vec![F::zero(); n];
    for j in 0..n {
        x[j] = match &col_map[j] {
            ColMap::Shifted { col, shift } => *shift + t[*col],
            ColMap::Mirrored { col, shift } => *shift - t[*col],
            ColMap::Split { plus, minus } => t[*plus] - t[*minus],
        };
    }
    let z: F = m
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| *c * *v)
        .fold(F::zero(), |s, v| s + v);
    if !z.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::Numerical("non-finite solution values".into()));
    }
    Ok(outcome(
        SolveStatus::Optimal,
        Some(Assignment::new(x.iter().map(|v| v.to_f64().unwrap()).collect())),
        Some(z.to_f64().unwrap()),
        0,
    ))
}

fn outcome(
    status: SolveStatus,
    assignment: Option<Assignment<f64>>,
    objective: Option<f64>,
    node_count: usize,
) -> SolveOutcome {
    SolveOutcome {
        status,
        assignment,
        objective,
        node_count,
        wall_time_s: 0.0,
    }
}

enum Pivot {
    Optimal,
    Unbounded,
}

struct Tableau<F> {
    a: Vec<Vec<F>>,
    b: Vec<F>,
    basis: Vec<usize>,
    eps: F,
    ncols: usize,
}

impl<F: LpFloat> Tableau<F> {
    fn objective_value(&self, cost: &[F]) -> F {
        self.basis
            .iter()
            .zip(&self.b)
            .map(|(&j, &bi)| cost[j] * bi)
            .fold(F::zero(), |s, v| s + v)
    }

    /// Reduced cost of column j for the given cost vector.
    fn reduced_cost(&self, cost: &[F], j: usize) -> F {
        let mut z = F::zero();
        for (i, &bv) in self.basis.iter().enumerate() {
            z = z + cost[bv] * self.a[i][j];
        }
        cost[j] - z
    }

    /// Bland-rule primal iterations until optimality/unboundedness over the
    /// first `active_cols` columns.
    fn optimize(&mut self, cost: &[F], active_cols: usize) -> Result<Pivot, SolverError> {
        for _ in 0..MAX_PIVOTS {
            // entering: smallest index with negative reduced cost
            let mut entering = None;
            for j in 0..active_cols {
                if self.basis.contains(&j) {
                    continue;
                }
                if self.reduced_cost(cost, j) < -self.eps {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else {
                return Ok(Pivot::Optimal);
            };
            // leaving: min ratio, ties by smallest basic variable index
            let mut leave: Option<(usize, F)> = None;
            for i in 0..self.b.len() {
                let aij = self.a[i][j];
                if aij > self.eps {
                    let ratio = self.b[i] / aij;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - self.eps
                                || (ratio < lr + self.eps && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((i, _)) = leave else {
                return Ok(Pivot::Unbounded);
            };
            self.pivot(i, j);
        }
        Err(SolverError::Numerical("pivot limit exceeded".into()))
    }

    fn pivot(&mut self, i: usize, j: usize) {
        let p = self.a[i][j];
        debug_assert!(p.abs() > F::from_f64(1e-12).unwrap());
        let inv = F::one() / p;
        for col in 0..self.ncols {
            self.a[i][col] = self.a[i][col] * inv;
        }
        self.b[i] = self.b[i] * inv;
        self.a[i][j] = F::one();
        for r in 0..self.b.len() {
            if r == i {
                continue;
            }
            let factor = self.a[r][j];
            if factor.abs() > F::zero() {
                for col in 0..self.ncols {
                    self.a[r][col] = self.a[r][col] - factor * self.a[i][col];
                }
                self.b[r] = self.b[r] - factor * self.b[i];
                self.a[r][j] = F::zero();
            }
        }
        self.basis[i] = j;
        // guard against drifted negative rhs
        if self.b[i] < F::zero() && self.b[i] > -self.eps {
            self.b[i] = F::zero();
        }
    }
}
