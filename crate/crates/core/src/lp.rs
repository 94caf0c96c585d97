//! Deterministic dense-tableau simplex for linear programs in inequality
//! form: maximize `c . v` subject to `A v <= b`, `v >= 0`.
//!
//! Two-phase with Bland's pivot rule for anti-cycling. Rows are normalized
//! by their largest coefficient magnitude so the tolerances below are
//! meaningful across problems; instances here stay small enough that a
//! dense tableau is the simplest trustworthy choice.

use std::fmt;

use thiserror::Error;

/// Pivot elements smaller than this are treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-9;
/// Allowed constraint violation on normalized rows.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("constraint {row} has {got} coefficients, expected {expected}")]
    DimensionMismatch { row: usize, got: usize, expected: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// One `coeffs . v <= rhs` row.
#[derive(Debug, Clone, PartialEq)]
pub struct LpConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// Maximize `objective . v` subject to the constraint rows and `v >= 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<LpConstraint>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        LpProblem { objective, constraints: Vec::new() }
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.constraints.push(LpConstraint { coeffs, rhs });
    }

    pub fn variable_count(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        if !self.objective.iter().all(|c| c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        for (row, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != self.objective.len() {
                return Err(LpError::DimensionMismatch {
                    row,
                    got: c.coeffs.len(),
                    expected: self.objective.len(),
                });
            }
            if !c.coeffs.iter().all(|v| v.is_finite()) || !c.rhs.is_finite() {
                return Err(LpError::NonFinite("constraint"));
            }
        }
        Ok(())
    }
}

/// Fixed plain-text dump for cross-checking against external solvers.
impl fmt::Display for LpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "max")?;
        for c in &self.objective {
            write!(f, " {c}")?;
        }
        writeln!(f)?;
        writeln!(f, "st")?;
        for row in &self.constraints {
            for a in &row.coeffs {
                write!(f, "{a} ")?;
            }
            writeln!(f, "<= {}", row.rhs)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver output. `values` and `duals` are populated only when Optimal;
/// `duals` holds one multiplier per original constraint row.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective_value: f64,
    pub values: Vec<f64>,
    pub duals: Vec<f64>,
}

impl LpSolution {
    fn non_optimal(status: LpStatus) -> Self {
        LpSolution { status, objective_value: 0.0, values: Vec::new(), duals: Vec::new() }
    }
}

struct Tableau {
    /// One row per active constraint; width `cols + 1`, rhs last.
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row `z_j - c_j` for the phase-2 objective; value last.
    obj: Vec<f64>,
    /// Phase-1 reduced-cost row, present while artificials exist.
    phase1: Option<Vec<f64>>,
    /// Basic variable of each row.
    basis: Vec<usize>,
    n: usize,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= piv;
        }
        let pivot_row = self.rows[row].clone();
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = other[col];
            if factor != 0.0 {
                for (v, p) in other.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                other[col] = 0.0;
            }
        }
        for objrow in [Some(&mut self.obj), self.phase1.as_mut()].into_iter().flatten() {
            let factor = objrow[col];
            if factor != 0.0 {
                for (v, p) in objrow.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                objrow[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule: entering = lowest improving column, leaving = minimum
    /// ratio with ties broken by lowest basic variable index. Returns false
    /// once no improving column exists, Err(()) on an unbounded direction.
    fn simplex(&mut self, phase1: bool, allowed_cols: usize) -> Result<bool, ()> {
        loop {
            let objrow: &Vec<f64> =
                if phase1 { self.phase1.as_ref().expect("phase-1 row") } else { &self.obj };
            let Some(entering) = (0..allowed_cols).find(|&j| objrow[j] < -PIVOT_TOLERANCE) else {
                return Ok(true);
            };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][entering];
                if a > PIVOT_TOLERANCE {
                    let ratio = self.rows[i][self.cols] / a;
                    let better = match leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < best || (ratio == best && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, entering),
                None => return Err(()),
            }
        }
    }
}

/// Solve `maximize c . v  s.t.  A v <= b, v >= 0`.
///
/// Infeasibility and unboundedness are reported through the status, never as
/// errors; errors are reserved for malformed input.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, LpError> {
    problem.validate()?;
    let n = problem.variable_count();
    let m_all = problem.constraints.len();

    // Normalize rows; empty rows are resolved immediately.
    let mut scale = vec![1.0; m_all];
    let mut active: Vec<usize> = Vec::new();
    for (i, c) in problem.constraints.iter().enumerate() {
        let maxc = c.coeffs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if maxc == 0.0 {
            if c.rhs < -FEASIBILITY_TOLERANCE {
                return Ok(LpSolution::non_optimal(LpStatus::Infeasible));
            }
            continue;
        }
        scale[i] = maxc;
        active.push(i);
    }

    let m = active.len();
    let needs_artificial: Vec<bool> =
        active.iter().map(|&i| problem.constraints[i].rhs / scale[i] < 0.0).collect();
    let n_art = needs_artificial.iter().filter(|&&x| x).count();
    let art_start = n + m;
    let cols = n + m + n_art;

    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        obj: vec![0.0; cols + 1],
        phase1: None,
        basis: vec![0; m],
        n,
        cols,
    };
    for j in 0..n {
        tab.obj[j] = -problem.objective[j];
    }

    let mut next_art = art_start;
    for (r, &i) in active.iter().enumerate() {
        let c = &problem.constraints[i];
        let mut row = vec![0.0; cols + 1];
        let flip = if needs_artificial[r] { -1.0 } else { 1.0 };
        for (dst, &coeff) in row.iter_mut().zip(&c.coeffs) {
            *dst = flip * coeff / scale[i];
        }
        row[n + r] = flip;
        row[cols] = flip * c.rhs / scale[i];
        if needs_artificial[r] {
            row[next_art] = 1.0;
            tab.basis[r] = next_art;
            next_art += 1;
        } else {
            tab.basis[r] = n + r;
        }
        tab.rows.push(row);
    }

    if n_art > 0 {
        // Phase-1 reduced costs for maximize(-sum of artificials).
        let mut p1 = vec![0.0; cols + 1];
        for (r, row) in tab.rows.iter().enumerate() {
            if tab.basis[r] >= art_start {
                for j in 0..=cols {
                    p1[j] -= row[j];
                }
            }
        }
        for v in p1.iter_mut().take(cols).skip(art_start) {
            *v = 0.0;
        }
        tab.phase1 = Some(p1);

        // Artificials never re-enter once they leave the basis.
        tab.simplex(true, art_start).expect("phase 1 is bounded");
        let p1_value = -tab.phase1.as_ref().unwrap()[cols];
        if p1_value > FEASIBILITY_TOLERANCE {
            return Ok(LpSolution::non_optimal(LpStatus::Infeasible));
        }

        // Drive surviving artificials out of the basis; rows that cannot
        // pivot are redundant and dropped.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= art_start {
                match (0..art_start).find(|&j| tab.rows[r][j].abs() > PIVOT_TOLERANCE) {
                    Some(j) => tab.pivot(r, j),
                    None => {
                        // redundant combination of other rows; its slack
                        // column is untouched elsewhere, so dropping is safe
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for row in tab.rows.iter_mut() {
            row[art_start] = row[cols];
            row.truncate(art_start + 1);
        }
        tab.obj[art_start] = tab.obj[cols];
        tab.obj.truncate(art_start + 1);
        tab.phase1 = None;
        tab.cols = art_start;
    }

    if tab.simplex(false, tab.cols).is_err() {
        return Ok(LpSolution::non_optimal(LpStatus::Unbounded));
    }

    let mut values = vec![0.0; n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            values[b] = tab.rows[r][tab.cols];
        }
    }
    let objective_value: f64 = values.iter().zip(&problem.objective).map(|(v, c)| v * c).sum();
    let mut duals = vec![0.0; m_all];
    for (r, &i) in active.iter().enumerate() {
        duals[i] = tab.obj[tab.n + r] / scale[i];
    }

    #[cfg(debug_assertions)]
    for (i, c) in problem.constraints.iter().enumerate() {
        let lhs: f64 = c.coeffs.iter().zip(&values).map(|(a, v)| a * v).sum();
        debug_assert!(
            (lhs - c.rhs) / scale[i] <= FEASIBILITY_TOLERANCE,
            "row {i} violated on the normalized scale"
        );
        debug_assert!(values.iter().all(|&v| v >= -1e-9), "negative basic value");
    }
    Ok(LpSolution { status: LpStatus::Optimal, objective_value, values, duals })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(objective: Vec<f64>, rows: Vec<(Vec<f64>, f64)>) -> LpProblem {
        let mut p = LpProblem::new(objective);
        for (coeffs, rhs) in rows {
            p.add_constraint(coeffs, rhs);
        }
        p
    }

    #[test]
    fn box_maximum() {
        let p = lp(vec![1.0, 1.0], vec![(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 2.0)]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 3.0).abs() < 1e-9);
        assert!((s.values[0] - 1.0).abs() < 1e-9 && (s.values[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected_in_phase_one() {
        let p = lp(vec![1.0], vec![(vec![-1.0], -1.0), (vec![1.0], 0.0)]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn two_variable_vertex() {
        // frozen via independent vertex enumeration: optimum 7 at (1, 3)
        let p = lp(
            vec![1.0, 2.0],
            vec![(vec![1.0, 1.0], 4.0), (vec![1.0, 0.0], 2.0), (vec![0.0, 1.0], 3.0)],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 7.0).abs() < 1e-9);
        assert!((s.values[0] - 1.0).abs() < 1e-9 && (s.values[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_detected() {
        let p = lp(vec![1.0, 0.0], vec![(vec![-1.0, 1.0], 2.0)]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn beale_degenerate_instance_terminates() {
        // classic cycling example; optimum 0.05 at (0.04, 0, 1, 0), frozen
        // via independent vertex enumeration
        let p = lp(
            vec![0.75, -150.0, 0.02, -6.0],
            vec![
                (vec![0.25, -60.0, -0.04, 9.0], 0.0),
                (vec![0.5, -90.0, -0.02, 3.0], 0.0),
                (vec![0.0, 0.0, 1.0, 0.0], 1.0),
            ],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 0.05).abs() < 1e-9);
    }

    #[test]
    fn equality_via_opposing_rows() {
        // x + y <= 2 and -(x + y) <= -2 pin x + y = 2; maximize x with x <= 1.5
        let p = lp(
            vec![1.0, 0.0],
            vec![
                (vec![1.0, 1.0], 2.0),
                (vec![-1.0, -1.0], -2.0),
                (vec![1.0, 0.0], 1.5),
            ],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.5).abs() < 1e-9);
        assert!((s.values[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn redundant_row_dropped_after_phase_one() {
        // duplicated equality pair forces a redundant artificial row
        let p = lp(
            vec![1.0],
            vec![
                (vec![-1.0], -1.0),
                (vec![-1.0], -1.0),
                (vec![1.0], 3.0),
            ],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = lp(vec![1.0, 1.0], vec![(vec![1.0], 1.0)]);
        assert!(matches!(
            solve_lp(&p),
            Err(LpError::DimensionMismatch { row: 0, got: 1, expected: 2 })
        ));
    }

    #[test]
    fn empty_coefficient_rows_resolved_without_pivoting() {
        let mut p = lp(vec![1.0], vec![(vec![0.0], 5.0), (vec![1.0], 2.0)]);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective_value - 2.0).abs() < 1e-9);
        p.constraints[0].rhs = -1.0;
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn duals_certify_the_optimum() {
        let p = lp(
            vec![3.0, 5.0],
            vec![(vec![1.0, 0.0], 4.0), (vec![0.0, 2.0], 12.0), (vec![3.0, 2.0], 18.0)],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 36.0).abs() < 1e-9);
        assert!(s.duals.iter().all(|&y| y >= -1e-9));
        let dual_obj: f64 =
            s.duals.iter().zip(&p.constraints).map(|(y, c)| y * c.rhs).sum();
        assert!((dual_obj - s.objective_value).abs() < 1e-6);
        // dual feasibility: A^T y >= c
        for j in 0..2 {
            let col: f64 =
                s.duals.iter().zip(&p.constraints).map(|(y, c)| y * c.coeffs[j]).sum();
            assert!(col >= p.objective[j] - 1e-6);
        }
    }

    #[test]
    fn display_dump_shape() {
        let p = lp(vec![1.0, 2.0], vec![(vec![1.0, 1.0], 4.0)]);
        let text = p.to_string();
        assert_eq!(text, "max 1 2\nst\n1 1 <= 4\n");
    }

    #[test]
    fn deterministic_repeat_solves() {
        let p = lp(
            vec![1.0, 2.0, 0.5],
            vec![
                (vec![1.0, 1.0, 1.0], 4.0),
                (vec![1.0, 0.0, 2.0], 2.0),
                (vec![0.0, 1.0, -1.0], 3.0),
            ],
        );
        let a = solve_lp(&p).unwrap();
        let b = solve_lp(&p).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
    }
}
