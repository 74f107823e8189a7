//! Exhaustive reference solvers, independent of the simplex/branch-and-bound
//! path. Only usable at desk scale; tests and dataset validation lean on
//! these as ground truth.

use crate::instance::{Assignment, ConcreteModel};
use crate::solver::{check_solution, solve_lp_bounded, SolveStatus, Tolerances};

/// Best objective over the full integer grid, with the continuous residual
/// (if any) solved as an LP at each grid point. Returns `None` when no grid
/// point is feasible. Panics if any integer column lacks finite bounds or the
/// grid exceeds `max_points`.
pub fn grid_optimum(m: &ConcreteModel<f64>, max_points: usize) -> Option<(f64, Assignment<f64>)> {
    let int_cols: Vec<usize> = (0..m.num_cols()).filter(|&j| m.integral[j]).collect();
    let mut ranges: Vec<(i64, i64)> = Vec::with_capacity(int_cols.len());
    let mut points = 1usize;
    for &j in &int_cols {
        let l = m.lower[j].expect("integer column needs a finite lower bound");
        let u = m.upper[j].expect("integer column needs a finite upper bound");
        let (lo, hi) = (l.ceil() as i64, u.floor() as i64);
        if lo > hi {
            return None;
        }
        points = points.saturating_mul((hi - lo + 1) as usize);
        assert!(points <= max_points, "integer grid too large for enumeration");
        ranges.push((lo, hi));
    }

    let has_continuous = (0..m.num_cols()).any(|j| !m.integral[j]);
    let minimize = matches!(m.sense, crate::model::Sense::Min);
    let mut best: Option<(f64, Assignment<f64>)> = None;
    let mut grid = ranges.iter().map(|(lo, _)| *lo).collect::<Vec<i64>>();
    let tol = Tolerances::default();

    loop {
        // candidate with integers fixed at the current grid point
        let candidate = if has_continuous {
            let mut lower = m.lower.clone();
            let mut upper = m.upper.clone();
            for (k, &j) in int_cols.iter().enumerate() {
                lower[j] = Some(grid[k] as f64);
                upper[j] = Some(grid[k] as f64);
            }
            match solve_lp_bounded(m, &lower, &upper) {
                Ok(out) if out.status == SolveStatus::Optimal => {
                    Some((out.objective.unwrap(), out.assignment.unwrap()))
                }
                _ => None,
            }
        } else {
            let mut values = vec![0.0; m.num_cols()];
            for (k, &j) in int_cols.iter().enumerate() {
                values[j] = grid[k] as f64;
            }
            let x = Assignment::new(values);
            if check_solution(m, &x, tol).feasible {
                let z = m
                    .objective
                    .iter()
                    .zip(&x.values)
                    .map(|(c, v)| c * v)
                    .sum::<f64>();
                Some((z, x))
            } else {
                None
            }
        };
        if let Some((z, x)) = candidate {
            let better = match &best {
                None => true,
                Some((bz, _)) => {
                    if minimize {
                        z < bz - 1e-12
                    } else {
                        z > bz + 1e-12
                    }
                }
            };
            if better {
                best = Some((z, x));
            }
        }
        // advance the grid row-major
        if int_cols.is_empty() {
            break;
        }
        let mut k = grid.len();
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            grid[k] += 1;
            if grid[k] <= ranges[k].1 {
                break;
            }
            grid[k] = ranges[k].0;
        }
    }
    best
}

/// All feasible integer grid points (pure-integer models only), for
/// feasible-set identity checks.
pub fn feasible_grid_points(m: &ConcreteModel<f64>, max_points: usize) -> Vec<Vec<i64>> {
    let int_cols: Vec<usize> = (0..m.num_cols()).filter(|&j| m.integral[j]).collect();
    assert_eq!(
        int_cols.len(),
        m.num_cols(),
        "feasible_grid_points needs a pure integer model"
    );
    let mut ranges: Vec<(i64, i64)> = Vec::new();
    let mut points = 1usize;
    for &j in &int_cols {
        let l = m.lower[j].expect("finite lower bound");
        let u = m.upper[j].expect("finite upper bound");
        let (lo, hi) = (l.ceil() as i64, u.floor() as i64);
        if lo > hi {
            return Vec::new();
        }
        points = points.saturating_mul((hi - lo + 1) as usize);
        assert!(points <= max_points, "integer grid too large");
        ranges.push((lo, hi));
    }
    let tol = Tolerances::default();
    let mut out = Vec::new();
    let mut grid: Vec<i64> = ranges.iter().map(|(lo, _)| *lo).collect();
    loop {
        let x = Assignment::new(grid.iter().map(|&v| v as f64).collect());
        if check_solution(m, &x, tol).feasible {
            out.push(grid.clone());
        }
        let mut k = grid.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            grid[k] += 1;
            if grid[k] <= ranges[k].1 {
                break;
            }
            grid[k] = ranges[k].0;
        }
    }
}

/// LP optimum by brute-force vertex enumeration: every n-subset of the
/// pooled constraint/bound hyperplanes is intersected and the best feasible
/// intersection wins. Exponential; for oracle use on tiny models only.
pub fn vertex_enumeration_optimum(m: &ConcreteModel<f64>) -> Option<(f64, Vec<f64>)> {
    let n = m.num_cols();
    assert!(n <= 6, "vertex enumeration oracle is for tiny models");
    // hyperplanes: each row as equality, plus finite bounds
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in &m.rows {
        let mut dense = vec![0.0; n];
        for (j, c) in &row.coeffs {
            dense[*j] = *c;
        }
        planes.push((dense, row.rhs));
    }
    for j in 0..n {
        if let Some(l) = m.lower[j] {
            let mut dense = vec![0.0; n];
            dense[j] = 1.0;
            planes.push((dense, l));
        }
        if let Some(u) = m.upper[j] {
            let mut dense = vec![0.0; n];
            dense[j] = 1.0;
            planes.push((dense, u));
        }
    }
    if planes.len() < n {
        return None;
    }
    let tol = Tolerances::default();
    let minimize = matches!(m.sense, crate::model::Sense::Min);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        // solve the n x n system for this subset
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(&a, &b) {
            let xa = Assignment::new(x.clone());
            if check_solution(m, &xa, tol).feasible {
                let z: f64 = m.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                let better = match &best {
                    None => true,
                    Some((bz, _)) => {
                        if minimize {
                            z < bz - 1e-12
                        } else {
                            z > bz + 1e-12
                        }
                    }
                };
                if better {
                    best = Some((z, x));
                }
            }
        }
        // next combination
        let k = planes.len();
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] + 1 <= k - (n - i) {
                subset[i] += 1;
                for t in i + 1..n {
                    subset[t] = subset[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Gaussian elimination with partial pivoting on a square system.
fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(*rhs);
            r
        })
        .collect();
    for col in 0..n {
        let (pivot_row, pivot_val) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())?;
        if pivot_val < 1e-10 {
            return None; // singular
        }
        m.swap(col, pivot_row);
        for r in 0..n {
            if r != col {
                let factor = m[r][col] / m[col][col];
                for c in col..=n {
                    m[r][c] -= factor * m[col][c];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Relation;
    use crate::instance::{ColumnId, Row, RowOrigin};
    use crate::model::Sense;

    fn toy(
        objective: Vec<f64>,
        sense: Sense,
        rows: Vec<(Vec<f64>, Relation, f64)>,
        bounds: Vec<(Option<f64>, Option<f64>)>,
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
            lower: bounds.iter().map(|(l, _)| *l).collect(),
            upper: bounds.iter().map(|(_, u)| *u).collect(),
            integral,
        }
    }

    #[test]
    fn vertex_enumeration_agrees_with_simplex_example() {
        let m = toy(
            vec![-1.0, -1.0],
            Sense::Min,
            vec![
                (vec![1.0, 2.0], Relation::Le, 3.0),
                (vec![1.0, 0.0], Relation::Le, 1.5),
            ],
            vec![(Some(0.0), None), (Some(0.0), None)],
            vec![false, false],
        );
        let (z, x) = vertex_enumeration_optimum(&m).unwrap();
        assert!((z + 2.25).abs() < 1e-9);
        assert!((x[0] - 1.5).abs() < 1e-9 && (x[1] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn grid_enumeration_knapsack() {
        let m = toy(
            vec![4.0, 5.0, 6.0, 7.0],
            Sense::Max,
            vec![(vec![2.0, 3.0, 4.0, 5.0], Relation::Le, 7.0)],
            vec![(Some(0.0), Some(1.0)); 4],
            vec![true; 4],
        );
        let (z, _) = grid_optimum(&m, 1 << 20).unwrap();
        assert!((z - 11.0).abs() < 1e-12);
    }
}
