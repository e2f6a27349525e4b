//! Linear-programming container and embedded solver.
//!
//! Problems are built row by row against named variables, solved with a
//! bounded-variable revised primal simplex ([`LinearProgram::solve`]), and can
//! be exported to free-format MPS for cross-checking against external
//! solvers. Row duals follow the `d(objective)/d(rhs)` convention: a binding
//! capacity (`<=`) row in a minimization has a non-positive dual.

mod mps;
mod simplex;
mod solution_io;

pub use mps::{import_mps, MpsError};
pub use solution_io::{export_solution, import_solution, SolutionIoError};

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Handle to a variable registered in a [`LinearProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarRef(pub(crate) usize);

/// Handle to a row registered in a [`LinearProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RowRef(pub(crate) usize);

impl VarRef {
    pub fn index(self) -> usize {
        self.0
    }
}

impl RowRef {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Row sense for `a'x {<=,=,>=} rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sense::Le => write!(f, "<="),
            Sense::Eq => write!(f, "="),
            Sense::Ge => write!(f, ">="),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub id: String,
    pub lower: f64,
    pub upper: f64,
    pub obj: f64,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub id: String,
    pub sense: Sense,
    pub rhs: f64,
    /// Column index / coefficient pairs, sorted by column, duplicates merged.
    pub coeffs: Vec<(usize, f64)>,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("duplicate variable id {0:?}")]
    DuplicateVariable(String),
    #[error("duplicate row id {0:?}")]
    DuplicateRow(String),
    #[error("variable {id:?} has lower bound {lower} above upper bound {upper}")]
    BadBounds { id: String, lower: f64, upper: f64 },
    #[error("non-finite {what} on {id:?}")]
    NotFinite { what: &'static str, id: String },
    #[error("unknown variable id {0:?}")]
    UnknownVariable(String),
    #[error("unknown row id {0:?}")]
    UnknownRow(String),
}

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterationLimit => "iteration_limit",
        };
        write!(f, "{s}")
    }
}

/// Result of [`LinearProgram::solve`].
///
/// `primal`, `duals`, and `reduced_costs` are indexed like the program's
/// variables and rows. For non-optimal statuses `objective` is NaN and the
/// vectors hold whatever iterate the solver stopped at.
#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

impl Solution {
    pub fn value(&self, var: VarRef) -> f64 {
        self.primal[var.0]
    }

    pub fn dual(&self, row: RowRef) -> f64 {
        self.duals[row.0]
    }

    pub fn reduced_cost(&self, var: VarRef) -> f64 {
        self.reduced_costs[var.0]
    }
}

/// Solver knobs. Defaults match the shipped tolerances; tests rely on them.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Feasibility tolerance applied while pivoting.
    pub feas_tol: f64,
    /// Reduced-cost threshold for declaring optimality.
    pub opt_tol: f64,
    /// Residual ceiling for the reported solution, checked after refinement.
    pub report_tol: f64,
    /// Hard pivot cap; exceeding it yields `Status::IterationLimit`.
    pub max_pivots: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_threshold: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            report_tol: 1e-6,
            max_pivots: 500_000,
            stall_threshold: 1000,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(
        "solution failed numeric verification after refinement: \
         max row residual {row_residual:.3e}, max bound violation {bound_violation:.3e}, \
         relative duality gap {duality_gap:.3e} (tolerance {tolerance:.1e})"
    )]
    Unstable {
        row_residual: f64,
        bound_violation: f64,
        duality_gap: f64,
        tolerance: f64,
    },
}

/// Normalized residuals of a (primal, dual) pair against a program.
///
/// All fields are comparable against a single tolerance: row residuals and
/// bound violations are absolute on the variable scale, the duality gap is
/// relative, and the complementary-slackness terms are scaled by the
/// magnitude of the factors involved.
#[derive(Debug, Clone, Copy, Default)]
pub struct ResidualReport {
    pub max_row_residual: f64,
    pub max_bound_violation: f64,
    pub duality_gap: f64,
    pub max_row_slackness: f64,
    pub max_var_slackness: f64,
}

impl ResidualReport {
    pub fn worst(&self) -> f64 {
        self.max_row_residual
            .max(self.max_bound_violation)
            .max(self.duality_gap)
            .max(self.max_row_slackness)
            .max(self.max_var_slackness)
    }
}

/// Sparse LP `min c'x + offset  s.t.  rows, l <= x <= u`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub name: String,
    vars: Vec<Variable>,
    rows: Vec<Row>,
    var_index: HashMap<String, usize>,
    row_index: HashMap<String, usize>,
    obj_offset: f64,
}

impl LinearProgram {
    pub fn new(name: impl Into<String>) -> Self {
        LinearProgram {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Registers a variable with bounds `[lower, upper]` and objective
    /// coefficient `obj`. Infinite bounds are expressed with `f64::INFINITY`.
    pub fn add_var(
        &mut self,
        id: impl Into<String>,
        lower: f64,
        upper: f64,
        obj: f64,
    ) -> Result<VarRef, LpError> {
        let id = id.into();
        if lower.is_nan() || upper.is_nan() {
            return Err(LpError::NotFinite { what: "bound", id });
        }
        if !obj.is_finite() {
            return Err(LpError::NotFinite { what: "objective coefficient", id });
        }
        if lower > upper {
            return Err(LpError::BadBounds { id, lower, upper });
        }
        if self.var_index.contains_key(&id) {
            return Err(LpError::DuplicateVariable(id));
        }
        let idx = self.vars.len();
        self.var_index.insert(id.clone(), idx);
        self.vars.push(Variable { id, lower, upper, obj });
        Ok(VarRef(idx))
    }

    /// Adds a row. Repeated variables have their coefficients summed; exact
    /// zeros are dropped.
    pub fn add_row(
        &mut self,
        id: impl Into<String>,
        sense: Sense,
        rhs: f64,
        coeffs: &[(VarRef, f64)],
    ) -> Result<RowRef, LpError> {
        let id = id.into();
        if !rhs.is_finite() {
            return Err(LpError::NotFinite { what: "rhs", id });
        }
        if self.row_index.contains_key(&id) {
            return Err(LpError::DuplicateRow(id));
        }
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for &(var, coef) in coeffs {
            if !coef.is_finite() {
                return Err(LpError::NotFinite { what: "coefficient", id });
            }
            merged.push((var.0, coef));
        }
        merged.sort_by_key(|&(col, _)| col);
        let mut packed: Vec<(usize, f64)> = Vec::with_capacity(merged.len());
        for (col, coef) in merged {
            match packed.last_mut() {
                Some((last, acc)) if *last == col => *acc += coef,
                _ => packed.push((col, coef)),
            }
        }
        packed.retain(|&(_, coef)| coef != 0.0);
        let idx = self.rows.len();
        self.row_index.insert(id.clone(), idx);
        self.rows.push(Row { id, sense, rhs, coeffs: packed });
        Ok(RowRef(idx))
    }

    /// Adds `delta` to a variable's objective coefficient.
    pub fn add_obj(&mut self, var: VarRef, delta: f64) {
        self.vars[var.0].obj += delta;
    }

    /// Adds a constant to the objective.
    pub fn add_obj_offset(&mut self, delta: f64) {
        self.obj_offset += delta;
    }

    pub fn obj_offset(&self) -> f64 {
        self.obj_offset
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var(&self, var: VarRef) -> &Variable {
        &self.vars[var.0]
    }

    pub fn row(&self, row: RowRef) -> &Row {
        &self.rows[row.0]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn var_by_id(&self, id: &str) -> Result<VarRef, LpError> {
        self.var_index
            .get(id)
            .map(|&i| VarRef(i))
            .ok_or_else(|| LpError::UnknownVariable(id.to_string()))
    }

    pub fn row_by_id(&self, id: &str) -> Result<RowRef, LpError> {
        self.row_index
            .get(id)
            .map(|&i| RowRef(i))
            .ok_or_else(|| LpError::UnknownRow(id.to_string()))
    }

    /// Lets a caller replace a row's rhs, e.g. for parametric sweeps.
    pub fn set_rhs(&mut self, row: RowRef, rhs: f64) {
        self.rows[row.0].rhs = rhs;
    }

    /// Objective value of an assignment, accumulated in variable order.
    pub fn objective_of(&self, primal: &[f64]) -> f64 {
        let mut obj = self.obj_offset;
        for (var, &x) in self.vars.iter().zip(primal) {
            obj += var.obj * x;
        }
        obj
    }

    /// Solves with default options.
    pub fn solve(&self) -> Result<Solution, SolveError> {
        self.solve_with(&SolveOptions::default())
    }

    pub fn solve_with(&self, options: &SolveOptions) -> Result<Solution, SolveError> {
        simplex::solve(self, options)
    }

    /// Writes the program as free-format MPS.
    pub fn export_mps(&self, path: &std::path::Path) -> std::io::Result<()> {
        mps::export_mps(self, path)
    }

    /// Row activity `a'x` for each row under the given assignment.
    pub fn row_activity(&self, primal: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.coeffs.iter().map(|&(col, a)| a * primal[col]).sum())
            .collect()
    }

    /// Residuals of a primal/dual pair. Duals may be empty, in which case
    /// only primal-side measures are populated.
    pub fn verify(&self, primal: &[f64], duals: &[f64]) -> ResidualReport {
        let mut report = ResidualReport::default();
        let activity = self.row_activity(primal);
        for (row, &act) in self.rows.iter().zip(&activity) {
            let violation = match row.sense {
                Sense::Le => (act - row.rhs).max(0.0),
                Sense::Ge => (row.rhs - act).max(0.0),
                Sense::Eq => (act - row.rhs).abs(),
            };
            report.max_row_residual = report.max_row_residual.max(violation);
        }
        for (var, &x) in self.vars.iter().zip(primal) {
            let below = (var.lower - x).max(0.0);
            let above = (x - var.upper).max(0.0);
            report.max_bound_violation = report.max_bound_violation.max(below).max(above);
        }
        if duals.is_empty() {
            return report;
        }

        // Structural reduced costs r = c - A'y, accumulated with the column
        // magnitude so slackness can be scale-normalized.
        let mut reduced = vec![0.0f64; self.vars.len()];
        let mut col_scale = vec![0.0f64; self.vars.len()];
        for (var, r) in self.vars.iter().zip(reduced.iter_mut()) {
            *r = var.obj;
        }
        for (i, row) in self.rows.iter().enumerate() {
            for &(col, a) in &row.coeffs {
                reduced[col] -= duals[i] * a;
                col_scale[col] += (duals[i] * a).abs();
            }
        }

        // Dual objective: y'b plus each variable's reduced cost taken at the
        // bound its sign selects. A nonzero reduced cost against an infinite
        // bound is a dual infeasibility; surface it as a slackness violation.
        let mut dual_obj = self.obj_offset;
        for (i, row) in self.rows.iter().enumerate() {
            dual_obj += duals[i] * row.rhs;
        }
        for (j, var) in self.vars.iter().enumerate() {
            let scale = 1.0 + var.obj.abs() + col_scale[j];
            let r = reduced[j];
            if r > 0.0 {
                if var.lower.is_finite() {
                    dual_obj += r * var.lower;
                } else if r / scale > report.max_var_slackness {
                    report.max_var_slackness = r / scale;
                }
            } else if r < 0.0 {
                if var.upper.is_finite() {
                    dual_obj += r * var.upper;
                } else if -r / scale > report.max_var_slackness {
                    report.max_var_slackness = -r / scale;
                }
            }
        }
        let primal_obj = self.objective_of(primal);
        report.duality_gap =
            (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs().max(dual_obj.abs()));

        // Complementary slackness. Rows: an off-bound (slack) row must carry a
        // ~zero dual. Variables: a variable strictly between its bounds must
        // have ~zero reduced cost.
        for (i, row) in self.rows.iter().enumerate() {
            if row.sense == Sense::Eq {
                continue;
            }
            let slack = (row.rhs - activity[i]).abs();
            let y = duals[i].abs();
            let term = slack.min(y) / (1.0 + slack.max(y));
            report.max_row_slackness = report.max_row_slackness.max(term);
        }
        for (j, var) in self.vars.iter().enumerate() {
            let to_lower = if var.lower.is_finite() {
                (primal[j] - var.lower).abs()
            } else {
                f64::INFINITY
            };
            let to_upper = if var.upper.is_finite() {
                (var.upper - primal[j]).abs()
            } else {
                f64::INFINITY
            };
            let dist = to_lower.min(to_upper);
            if !dist.is_finite() {
                // Free variable: reduced cost must vanish outright.
                let scale = 1.0 + var.obj.abs() + col_scale[j];
                report.max_var_slackness =
                    report.max_var_slackness.max(reduced[j].abs() / scale);
                continue;
            }
            let r = reduced[j].abs();
            let scale = 1.0 + var.obj.abs() + col_scale[j];
            let term = dist.min(r / scale) / (1.0 + dist.max(r / scale));
            report.max_var_slackness = report.max_var_slackness.max(term);
        }
        report
    }
}
