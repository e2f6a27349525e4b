//! Solution round-trip as CSV with columns `kind,id,value`.
//!
//! `kind` is `var` (primal value) or `row` (dual value). Values use Rust's
//! shortest round-trip float formatting, so export followed by import
//! reproduces the numbers bit for bit. Import re-verifies the assignment
//! against the program and refuses solutions whose residuals exceed the
//! reported tolerance; row duals are optional, but when present they must be
//! complete and pass the dual-side checks too.

use std::io;
use std::path::Path;

use thiserror::Error;

use super::{LinearProgram, ResidualReport, Solution, SolveOptions, Status};

#[derive(Debug, Error)]
pub enum SolutionIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: missing value for {what} {id:?}")]
    Missing {
        path: String,
        what: &'static str,
        id: String,
    },
    #[error(
        "solution failed verification: max row residual {row_residual:.3e}, \
         max bound violation {bound_violation:.3e}, duality gap {duality_gap:.3e}, \
         max slackness {slackness:.3e} (tolerance {tolerance:.1e})"
    )]
    VerificationFailed {
        row_residual: f64,
        bound_violation: f64,
        duality_gap: f64,
        slackness: f64,
        tolerance: f64,
    },
}

pub fn export_solution(
    lp: &LinearProgram,
    solution: &Solution,
    path: &Path,
) -> Result<(), SolutionIoError> {
    let io_err = |source: io::Error| SolutionIoError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = String::from("kind,id,value\n");
    for (var, &v) in lp.vars().iter().zip(&solution.primal) {
        out.push_str(&format!("var,{},{}\n", var.id, v));
    }
    for (row, &y) in lp.rows().iter().zip(&solution.duals) {
        out.push_str(&format!("row,{},{}\n", row.id, y));
    }
    std::fs::write(path, out).map_err(io_err)
}

/// Reads a solution file, checks it against `lp`, and returns the verified
/// [`Solution`]. The objective and reduced costs are recomputed from the file
/// contents, matching the solver's own accumulation order.
pub fn import_solution(lp: &LinearProgram, path: &Path) -> Result<Solution, SolutionIoError> {
    let text = std::fs::read_to_string(path).map_err(|source| SolutionIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let malformed = |line: usize, message: String| SolutionIoError::Malformed {
        path: path.display().to_string(),
        line,
        message,
    };

    let mut primal = vec![f64::NAN; lp.num_vars()];
    let mut duals = vec![f64::NAN; lp.num_rows()];
    let mut saw_dual = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        if lineno == 0 {
            if raw.trim() != "kind,id,value" {
                return Err(malformed(line, format!("unexpected header {raw:?}")));
            }
            continue;
        }
        if raw.trim().is_empty() {
            continue;
        }
        // `id` may itself contain commas, so split from both ends.
        let (kind, rest) = raw
            .split_once(',')
            .ok_or_else(|| malformed(line, "expected kind,id,value".into()))?;
        let (id, value) = rest
            .rsplit_once(',')
            .ok_or_else(|| malformed(line, "expected kind,id,value".into()))?;
        let value: f64 = value
            .parse()
            .map_err(|_| malformed(line, format!("bad number {value:?}")))?;
        match kind {
            "var" => {
                let var = lp
                    .var_by_id(id)
                    .map_err(|e| malformed(line, e.to_string()))?;
                if !primal[var.index()].is_nan() {
                    return Err(malformed(line, format!("duplicate value for {id:?}")));
                }
                primal[var.index()] = value;
            }
            "row" => {
                let row = lp
                    .row_by_id(id)
                    .map_err(|e| malformed(line, e.to_string()))?;
                if !duals[row.index()].is_nan() {
                    return Err(malformed(line, format!("duplicate value for {id:?}")));
                }
                duals[row.index()] = value;
                saw_dual = true;
            }
            other => return Err(malformed(line, format!("unknown kind {other:?}"))),
        }
    }

    for (var, &v) in lp.vars().iter().zip(&primal) {
        if v.is_nan() {
            return Err(SolutionIoError::Missing {
                path: path.display().to_string(),
                what: "variable",
                id: var.id.clone(),
            });
        }
    }
    if saw_dual {
        for (row, &y) in lp.rows().iter().zip(&duals) {
            if y.is_nan() {
                return Err(SolutionIoError::Missing {
                    path: path.display().to_string(),
                    what: "row",
                    id: row.id.clone(),
                });
            }
        }
    } else {
        duals = vec![0.0; lp.num_rows()];
    }

    let tolerance = SolveOptions::default().report_tol;
    let dual_slice: &[f64] = if saw_dual { &duals } else { &[] };
    let report: ResidualReport = lp.verify(&primal, dual_slice);
    let failed = report.max_row_residual > tolerance
        || report.max_bound_violation > tolerance
        || (saw_dual
            && (report.duality_gap > tolerance
                || report.max_row_slackness > tolerance
                || report.max_var_slackness > tolerance));
    if failed {
        return Err(SolutionIoError::VerificationFailed {
            row_residual: report.max_row_residual,
            bound_violation: report.max_bound_violation,
            duality_gap: report.duality_gap,
            slackness: report.max_row_slackness.max(report.max_var_slackness),
            tolerance,
        });
    }

    let objective = lp.objective_of(&primal);
    let reduced_costs = reduced_costs_of(lp, &duals);
    Ok(Solution {
        status: Status::Optimal,
        objective,
        primal,
        duals,
        reduced_costs,
    })
}

/// `c - A'y` accumulated per column in row order, mirroring the solver.
fn reduced_costs_of(lp: &LinearProgram, duals: &[f64]) -> Vec<f64> {
    let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (i, row) in lp.rows().iter().enumerate() {
        for &(col, a) in &row.coeffs {
            entries[col].push((i, a));
        }
    }
    lp.vars()
        .iter()
        .enumerate()
        .map(|(j, var)| {
            let mut r = var.obj;
            for &(i, a) in &entries[j] {
                r -= duals[i] * a;
            }
            r
        })
        .collect()
}
