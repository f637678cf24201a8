//! Equality-form linear programs `min c^T x, A x = b, x >= 0` whose
//! constraint matrix has entries in `{-1, 0, 1}`, solved to an optimal
//! basic (vertex) solution.
//!
//! The solver is a revised primal simplex with an explicit basis inverse and
//! a phase 1 on artificial variables. The leaving variable is chosen by the
//! minimum ratio with smallest-index tie-breaking; the entering variable by
//! the most negative reduced cost (default) or by Bland's smallest-index
//! rule. Dantzig pricing switches to Bland's rule during long degenerate
//! runs, so neither rule cycles. Artificial variables that cannot be pivoted
//! out after phase 1 mark redundant rows and stay basic at zero.

mod simplex;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use simplex::{solve_to_optimal_vertex, solve_warm_started};

/// A linear program in equality form with nonnegative variables.
#[derive(Clone, Debug)]
pub struct LinearProgram<S> {
    num_vars: usize,
    objective: Vec<S>,
    rows: Vec<Vec<(usize, i8)>>,
    rhs: Vec<S>,
    columns: Vec<Vec<(usize, i8)>>,
}

impl<S: Scalar> LinearProgram<S> {
    /// `rows[r]` lists `(variable, coefficient)` pairs of constraint `r`.
    /// Coefficients must be `-1` or `1` (zeros are dropped) and each variable
    /// may appear at most once per row.
    pub fn new(
        num_vars: usize,
        objective: Vec<S>,
        rows: Vec<Vec<(usize, i8)>>,
        rhs: Vec<S>,
    ) -> Result<Self> {
        if objective.len() != num_vars {
            return Err(Error::MalformedProgram(format!(
                "objective has {} entries for {num_vars} variables",
                objective.len()
            )));
        }
        if rhs.len() != rows.len() {
            return Err(Error::MalformedProgram(format!(
                "{} right-hand sides for {} rows",
                rhs.len(),
                rows.len()
            )));
        }
        let mut columns = vec![Vec::new(); num_vars];
        let mut cleaned = Vec::with_capacity(rows.len());
        for (r, row) in rows.into_iter().enumerate() {
            let mut kept = Vec::with_capacity(row.len());
            for (var, coef) in row {
                if var >= num_vars {
                    return Err(Error::MalformedProgram(format!(
                        "row {r} references variable {var} of {num_vars}"
                    )));
                }
                match coef {
                    0 => continue,
                    -1 | 1 => {}
                    _ => {
                        return Err(Error::MalformedProgram(format!(
                            "row {r} has coefficient {coef} outside {{-1, 0, 1}}"
                        )))
                    }
                }
                if columns[var].last().is_some_and(|&(last, _)| last == r) {
                    return Err(Error::MalformedProgram(format!(
                        "variable {var} appears twice in row {r}"
                    )));
                }
                columns[var].push((r, coef));
                kept.push((var, coef));
            }
            cleaned.push(kept);
        }
        Ok(LinearProgram {
            num_vars,
            objective,
            rows: cleaned,
            rhs,
            columns,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[S] {
        &self.objective
    }

    pub fn rows(&self) -> &[Vec<(usize, i8)>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[S] {
        &self.rhs
    }

    pub fn column(&self, var: usize) -> &[(usize, i8)] {
        &self.columns[var]
    }

    /// `c^T x`.
    pub fn evaluate(&self, values: &[S]) -> S {
        let mut acc = S::zero();
        for (c, x) in self.objective.iter().zip(values) {
            if !c.is_zero() && !x.is_zero() {
                acc += c.clone() * x;
            }
        }
        acc
    }

    /// `A x - b`, one entry per row.
    pub fn residuals(&self, values: &[S]) -> Vec<S> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| {
                let mut acc = -b.clone();
                for &(var, coef) in row {
                    if coef > 0 {
                        acc += &values[var];
                    } else {
                        acc -= &values[var];
                    }
                }
                acc
            })
            .collect()
    }

    /// Plain-text dump for inspection: a `rows`/`columns` header, the
    /// objective, then one line per row with its right-hand side and terms.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rows {}", self.rows.len());
        let _ = writeln!(out, "columns {}", self.num_vars);
        let _ = write!(out, "objective");
        for c in &self.objective {
            let _ = write!(out, " {c}");
        }
        out.push('\n');
        for (r, (row, b)) in self.rows.iter().zip(&self.rhs).enumerate() {
            let _ = write!(out, "row {r} rhs {b} :");
            for &(var, coef) in row {
                let sign = if coef > 0 { '+' } else { '-' };
                let _ = write!(out, " {sign}x{var}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Result of a simplex run.
#[derive(Clone, Debug)]
pub struct VertexSolution<S> {
    pub values: Vec<S>,
    /// Basic structural variables, ascending. Rows whose artificial
    /// variable stayed basic (redundant rows) contribute no entry.
    pub basis: Vec<usize>,
    pub objective_value: S,
    pub status: Status,
    /// Simplex iterations performed (phase 1 and phase 2).
    pub pivots: usize,
    /// Moves needed to turn a non-vertex warm-start point into a vertex.
    pub crash_moves: usize,
    /// Set when a warm-start hint was rejected and a cold solve was run.
    pub warm_start_fallback: bool,
}

impl<S: Scalar> VertexSolution<S> {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn into_optimal(self) -> Result<Self> {
        match self.status {
            Status::Optimal => Ok(self),
            other => Err(Error::Solver(other)),
        }
    }

    /// Number of strictly positive entries.
    pub fn support_size(&self, tol: f64) -> usize {
        self.values.iter().filter(|v| v.is_positive(tol)).count()
    }
}

/// A feasible starting point, optionally with the basis it came from.
#[derive(Clone, Debug)]
pub struct WarmStart<S> {
    pub values: Vec<S>,
    pub basis: Option<Vec<usize>>,
}

/// Entering-variable rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pricing {
    /// Smallest index with a negative reduced cost.
    Bland,
    /// Most negative reduced cost, smallest index on ties; falls back to
    /// Bland's rule during long runs of degenerate pivots.
    Dantzig,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Feasibility tolerance (floating-point mode only).
    pub tol: f64,
    /// Reduced costs below `-reduced_cost_tol` are improving (floating-point
    /// mode only; heuristic).
    pub reduced_cost_tol: f64,
    /// Smallest admissible pivot element magnitude (floating-point mode only).
    pub pivot_tol: f64,
    pub max_pivots: usize,
    /// Entering rule. Dantzig pricing needs far fewer pivots on the
    /// barycenter programs; Bland's rule is kept for reference runs.
    pub pricing: Pricing,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            reduced_cost_tol: 1e-10,
            pivot_tol: 1e-9,
            max_pivots: 5_000_000,
            pricing: Pricing::Dantzig,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerance(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    #[test]
    fn rejects_coefficients_outside_unit_set() {
        let lp = LinearProgram::<Rational>::new(2, vec![rat(1, 1); 2], vec![vec![(0, 2)]], vec![rat(1, 1)]);
        assert!(matches!(lp, Err(Error::MalformedProgram(_))));
        let lp = LinearProgram::<Rational>::new(2, vec![rat(1, 1); 2], vec![vec![(5, 1)]], vec![rat(1, 1)]);
        assert!(lp.is_err());
        let lp = LinearProgram::<Rational>::new(
            2,
            vec![rat(1, 1); 2],
            vec![vec![(0, 1), (0, -1)]],
            vec![rat(1, 1)],
        );
        assert!(lp.is_err());
    }

    #[test]
    fn dump_lists_rows_and_columns() {
        let lp = LinearProgram::<Rational>::new(
            3,
            vec![rat(1, 2), rat(0, 1), rat(3, 1)],
            vec![vec![(0, 1), (2, -1)], vec![(1, 1)]],
            vec![rat(1, 4), rat(1, 1)],
        )
        .unwrap();
        let text = lp.dump();
        assert_eq!(
            text,
            "rows 2\ncolumns 3\nobjective 1/2 0 3\nrow 0 rhs 1/4 : +x0 -x2\nrow 1 rhs 1 : +x1\n"
        );
    }
}
