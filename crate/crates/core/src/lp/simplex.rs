//! Bounded-variable revised primal simplex.
//!
//! Layout: structural columns first, then one slack column per row with
//! coefficient +1, so the all-slack starting basis is the identity. Slack
//! bounds encode the row sense (`<=` -> [0, inf), `>=` -> (-inf, 0],
//! `=` -> [0, 0]). Phase 1 minimizes the sum of basic bound violations,
//! phase 2 the true objective. The basis inverse is kept explicitly and
//! updated with the product form; it is rebuilt from scratch periodically
//! and whenever a chosen pivot element looks untrustworthy.
//!
//! Pivot rules are fixed so repeated solves are bit-identical: Dantzig
//! pricing with ties broken by the lowest column index, a Bland's-rule
//! fallback after a run of degenerate pivots, and ratio-test ties broken by
//! the lowest blocking column index.

use super::{LinearProgram, Sense, Solution, SolveError, SolveOptions, Status};

/// Pivot elements smaller than this are never accepted for a basis change.
const PIVOT_EPS: f64 = 1e-9;
/// Steps at or below this length count as degenerate for stall detection.
const DEGEN_EPS: f64 = 1e-10;
/// Unconditional basis-inverse rebuild cadence, in pivots.
const REFACTOR_EVERY: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable, held at zero.
    Free,
    /// Equal bounds; never eligible to enter.
    Fixed,
}

enum Block {
    /// Entering variable runs to its opposite bound; no basis change.
    Flip,
    /// Basic at position `pos` reaches a bound (`hit_upper` says which).
    Basis { pos: usize, hit_upper: bool },
}

pub(crate) fn solve(lp: &LinearProgram, options: &SolveOptions) -> Result<Solution, SolveError> {
    Simplex::new(lp, options).run()
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    opt: &'a SolveOptions,
    n: usize,
    m: usize,
    ncols: usize,
    col_starts: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VState>,
    basis: Vec<usize>,
    /// Row-major m*m explicit basis inverse.
    binv: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    g: Vec<f64>,
    pivots: usize,
    stall: usize,
    bland: bool,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram, opt: &'a SolveOptions) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let ncols = n + m;

        let mut counts = vec![0usize; ncols];
        for row in lp.rows() {
            for &(col, _) in &row.coeffs {
                counts[col] += 1;
            }
        }
        for j in n..ncols {
            counts[j] = 1;
        }
        let mut col_starts = vec![0usize; ncols + 1];
        for j in 0..ncols {
            col_starts[j + 1] = col_starts[j] + counts[j];
        }
        let nnz = col_starts[ncols];
        let mut col_rows = vec![0usize; nnz];
        let mut col_vals = vec![0.0f64; nnz];
        let mut fill = col_starts.clone();
        for (i, row) in lp.rows().iter().enumerate() {
            for &(col, a) in &row.coeffs {
                col_rows[fill[col]] = i;
                col_vals[fill[col]] = a;
                fill[col] += 1;
            }
        }
        for i in 0..m {
            let j = n + i;
            col_rows[fill[j]] = i;
            col_vals[fill[j]] = 1.0;
            fill[j] += 1;
        }

        let mut cost = vec![0.0f64; ncols];
        let mut lower = vec![0.0f64; ncols];
        let mut upper = vec![0.0f64; ncols];
        for (j, var) in lp.vars().iter().enumerate() {
            cost[j] = var.obj;
            lower[j] = var.lower;
            upper[j] = var.upper;
        }
        let mut rhs = vec![0.0f64; m];
        for (i, row) in lp.rows().iter().enumerate() {
            rhs[i] = row.rhs;
            let j = n + i;
            match row.sense {
                Sense::Le => {
                    lower[j] = 0.0;
                    upper[j] = f64::INFINITY;
                }
                Sense::Ge => {
                    lower[j] = f64::NEG_INFINITY;
                    upper[j] = 0.0;
                }
                Sense::Eq => {
                    lower[j] = 0.0;
                    upper[j] = 0.0;
                }
            }
        }

        Simplex {
            lp,
            opt,
            n,
            m,
            ncols,
            col_starts,
            col_rows,
            col_vals,
            cost,
            lower,
            upper,
            rhs,
            x: vec![0.0; ncols],
            state: vec![VState::Free; ncols],
            basis: (n..ncols).collect(),
            binv: identity(m),
            y: vec![0.0; m],
            d: vec![0.0; m],
            g: vec![0.0; m],
            pivots: 0,
            stall: 0,
            bland: false,
        }
    }

    fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let lo = self.col_starts[j];
        let hi = self.col_starts[j + 1];
        (&self.col_rows[lo..hi], &self.col_vals[lo..hi])
    }

    fn run(&mut self) -> Result<Solution, SolveError> {
        for j in 0..self.n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l == u {
                self.state[j] = VState::Fixed;
                self.x[j] = l;
            } else if l.is_finite() {
                self.state[j] = VState::AtLower;
                self.x[j] = l;
            } else if u.is_finite() {
                self.state[j] = VState::AtUpper;
                self.x[j] = u;
            } else {
                self.state[j] = VState::Free;
                self.x[j] = 0.0;
            }
        }
        for i in 0..self.m {
            self.state[self.n + i] = VState::Basic;
        }
        self.recompute_basics(false);

        let mut phase_one = true;
        let mut just_refactored = false;
        loop {
            if self.pivots >= self.opt.max_pivots {
                return Ok(self.partial_solution(Status::IterationLimit));
            }

            if phase_one {
                if !self.fill_infeasibility_gradient() {
                    phase_one = false;
                    self.stall = 0;
                    self.bland = false;
                    continue;
                }
                let g = std::mem::take(&mut self.g);
                self.btran(&g);
                self.g = g;
            } else {
                self.btran_basic_costs();
            }

            let entering = self.price(phase_one);
            let (q, sigma) = match entering {
                Some(pair) => pair,
                None => {
                    if phase_one {
                        return Ok(self.partial_solution(Status::Infeasible));
                    }
                    return self.finalize_optimal();
                }
            };

            self.ftran(q);
            let (t, block) = self.ratio_test(q, sigma, phase_one);

            let block = match block {
                Some(b) => b,
                None => {
                    if phase_one {
                        // A descent direction with no blocking event can only
                        // come from a stale inverse; rebuild once, then give up.
                        if !just_refactored {
                            self.refactor()?;
                            just_refactored = true;
                            continue;
                        }
                        return Err(SolveError::Unstable {
                            row_residual: f64::NAN,
                            bound_violation: f64::NAN,
                            duality_gap: f64::NAN,
                            tolerance: self.opt.report_tol,
                        });
                    }
                    return Ok(self.partial_solution(Status::Unbounded));
                }
            };

            if let Block::Basis { pos, .. } = block {
                if self.d[pos].abs() < 1e-7 && !just_refactored {
                    self.refactor()?;
                    just_refactored = true;
                    continue;
                }
            }
            just_refactored = false;

            match block {
                Block::Flip => self.apply_flip(q, sigma, t),
                Block::Basis { pos, hit_upper } => self.apply_pivot(q, sigma, t, pos, hit_upper),
            }

            self.pivots += 1;
            if t <= DEGEN_EPS {
                self.stall += 1;
                if self.stall >= self.opt.stall_threshold {
                    self.bland = true;
                }
            } else {
                self.stall = 0;
                self.bland = false;
            }
            if self.pivots % REFACTOR_EVERY == 0 {
                self.refactor()?;
            }
        }
    }

    /// Sets `g` to the phase-1 gradient over basis positions. Returns false
    /// when every basic value is within `feas_tol` of its bounds.
    fn fill_infeasibility_gradient(&mut self) -> bool {
        let tol = self.opt.feas_tol;
        let mut any = false;
        for i in 0..self.m {
            let col = self.basis[i];
            let v = self.x[col];
            self.g[i] = if v > self.upper[col] + tol {
                any = true;
                1.0
            } else if v < self.lower[col] - tol {
                any = true;
                -1.0
            } else {
                0.0
            };
        }
        any
    }

    /// y = w' B^-1 for a weight vector over basis positions.
    fn btran(&mut self, w: &[f64]) {
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.m {
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            let row = &self.binv[i * self.m..(i + 1) * self.m];
            for (yk, &bk) in self.y.iter_mut().zip(row) {
                *yk += wi * bk;
            }
        }
    }

    fn btran_basic_costs(&mut self) {
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.m {
            let wi = self.cost[self.basis[i]];
            if wi == 0.0 {
                continue;
            }
            let row = &self.binv[i * self.m..(i + 1) * self.m];
            for (yk, &bk) in self.y.iter_mut().zip(row) {
                *yk += wi * bk;
            }
        }
    }

    /// d = B^-1 a_q.
    fn ftran(&mut self, q: usize) {
        let (rows, vals) = {
            let lo = self.col_starts[q];
            let hi = self.col_starts[q + 1];
            (&self.col_rows[lo..hi], &self.col_vals[lo..hi])
        };
        for i in 0..self.m {
            let row = &self.binv[i * self.m..(i + 1) * self.m];
            let mut acc = 0.0;
            for (&r, &v) in rows.iter().zip(vals) {
                acc += row[r] * v;
            }
            self.d[i] = acc;
        }
    }

    /// Picks the entering column, or None at (phase) optimality. The returned
    /// sign is the direction the entering variable moves.
    fn price(&self, phase_one: bool) -> Option<(usize, f64)> {
        let tol = self.opt.opt_tol;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ncols {
            let dir = match self.state[j] {
                VState::Basic | VState::Fixed => continue,
                VState::AtLower => 1.0,
                VState::AtUpper => -1.0,
                VState::Free => 0.0,
            };
            let c = if phase_one { 0.0 } else { self.cost[j] };
            let (rows, vals) = self.col(j);
            let mut r = c;
            for (&i, &v) in rows.iter().zip(vals) {
                r -= self.y[i] * v;
            }
            let sigma = if dir == 0.0 {
                if r < -tol {
                    1.0
                } else if r > tol {
                    -1.0
                } else {
                    continue;
                }
            } else if dir > 0.0 {
                if r < -tol {
                    1.0
                } else {
                    continue;
                }
            } else if r > tol {
                -1.0
            } else {
                continue;
            };
            if self.bland {
                return Some((j, sigma));
            }
            let score = r.abs();
            match best {
                Some((_, _, s)) if s >= score => {}
                _ => best = Some((j, sigma, score)),
            }
        }
        best.map(|(j, sigma, _)| (j, sigma))
    }

    /// First blocking event as the entering variable moves `sigma * t`.
    /// Returns (t, None) when nothing blocks.
    fn ratio_test(&self, q: usize, sigma: f64, phase_one: bool) -> (f64, Option<Block>) {
        let tol = self.opt.feas_tol;
        let mut t_best = f64::INFINITY;
        let mut block: Option<Block> = None;
        // Lowest-column-index tie-breaking; the flip event carries the
        // entering column's own index.
        let mut block_col = usize::MAX;

        let range = self.upper[q] - self.lower[q];
        if range.is_finite() {
            t_best = range;
            block = Some(Block::Flip);
            block_col = q;
        }

        for i in 0..self.m {
            let di = self.d[i];
            if di.abs() <= PIVOT_EPS {
                continue;
            }
            let delta = -sigma * di;
            let col = self.basis[i];
            let xb = self.x[col];
            let (l, u) = (self.lower[col], self.upper[col]);
            let above = phase_one && xb > u + tol;
            let below = phase_one && xb < l - tol;
            let (t_i, hit_upper) = if above {
                // Infeasible basics block where they regain feasibility.
                if delta < 0.0 {
                    ((xb - u) / -delta, true)
                } else {
                    continue;
                }
            } else if below {
                if delta > 0.0 {
                    ((l - xb) / delta, false)
                } else {
                    continue;
                }
            } else if delta > 0.0 {
                if u.is_finite() {
                    (((u - xb) / delta).max(0.0), true)
                } else {
                    continue;
                }
            } else if l.is_finite() {
                (((xb - l) / -delta).max(0.0), false)
            } else {
                continue;
            };
            if t_i < t_best || (t_i == t_best && col < block_col) {
                t_best = t_i;
                block = Some(Block::Basis { pos: i, hit_upper });
                block_col = col;
            }
        }
        (t_best, block)
    }

    fn apply_flip(&mut self, q: usize, sigma: f64, t: f64) {
        for i in 0..self.m {
            let di = self.d[i];
            if di != 0.0 {
                self.x[self.basis[i]] -= sigma * t * di;
            }
        }
        if sigma > 0.0 {
            self.x[q] = self.upper[q];
            self.state[q] = VState::AtUpper;
        } else {
            self.x[q] = self.lower[q];
            self.state[q] = VState::AtLower;
        }
    }

    fn apply_pivot(&mut self, q: usize, sigma: f64, t: f64, pos: usize, hit_upper: bool) {
        for i in 0..self.m {
            let di = self.d[i];
            if di != 0.0 {
                self.x[self.basis[i]] -= sigma * t * di;
            }
        }
        self.x[q] += sigma * t;
        let p = self.basis[pos];
        if self.lower[p] == self.upper[p] {
            self.x[p] = self.lower[p];
            self.state[p] = VState::Fixed;
        } else if hit_upper {
            self.x[p] = self.upper[p];
            self.state[p] = VState::AtUpper;
        } else {
            self.x[p] = self.lower[p];
            self.state[p] = VState::AtLower;
        }
        self.state[q] = VState::Basic;
        self.basis[pos] = q;

        // Product-form update: row `pos` scales by 1/pivot, others eliminate.
        let pivot = self.d[pos];
        let m = self.m;
        let row_start = pos * m;
        let inv = 1.0 / pivot;
        for k in 0..m {
            self.binv[row_start + k] *= inv;
        }
        let pivot_row: Vec<f64> = self.binv[row_start..row_start + m].to_vec();
        for i in 0..m {
            if i == pos {
                continue;
            }
            let f = self.d[i];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.binv[i * m..(i + 1) * m];
            for (rk, &pk) in row.iter_mut().zip(&pivot_row) {
                *rk -= f * pk;
            }
        }
    }

    /// Recomputes basic values from bounds-pinned nonbasics, optionally with
    /// one step of iterative refinement against the original columns.
    fn recompute_basics(&mut self, refine: bool) {
        let m = self.m;
        let mut rhs = self.rhs.clone();
        for j in 0..self.ncols {
            if self.state[j] == VState::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                rhs[i] -= v * xj;
            }
        }
        let mut xb = vec![0.0f64; m];
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            xb[i] = row.iter().zip(&rhs).map(|(&b, &r)| b * r).sum();
        }
        if refine {
            let mut resid = rhs.clone();
            for (pos, &col) in self.basis.iter().enumerate() {
                let (rows, vals) = {
                    let lo = self.col_starts[col];
                    let hi = self.col_starts[col + 1];
                    (&self.col_rows[lo..hi], &self.col_vals[lo..hi])
                };
                for (&r, &v) in rows.iter().zip(vals) {
                    resid[r] -= v * xb[pos];
                }
            }
            for i in 0..m {
                let row = &self.binv[i * m..(i + 1) * m];
                let corr: f64 = row.iter().zip(&resid).map(|(&b, &r)| b * r).sum();
                xb[i] += corr;
            }
        }
        for (pos, &col) in self.basis.iter().enumerate() {
            self.x[col] = xb[pos];
        }
    }

    /// Rebuilds the explicit inverse from the current basis columns by
    /// Gauss-Jordan with partial pivoting, then refreshes basic values.
    fn refactor(&mut self) -> Result<(), SolveError> {
        let m = self.m;
        let mut a = vec![0.0f64; m * m];
        for (pos, &col) in self.basis.iter().enumerate() {
            let (rows, vals) = {
                let lo = self.col_starts[col];
                let hi = self.col_starts[col + 1];
                (&self.col_rows[lo..hi], &self.col_vals[lo..hi])
            };
            for (&r, &v) in rows.iter().zip(vals) {
                a[r * m + pos] = v;
            }
        }
        let mut inv = identity(m);
        for k in 0..m {
            let mut piv_row = k;
            let mut piv_val = a[k * m + k].abs();
            for i in (k + 1)..m {
                let v = a[i * m + k].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = i;
                }
            }
            if piv_val < 1e-12 {
                return Err(SolveError::Unstable {
                    row_residual: f64::NAN,
                    bound_violation: f64::NAN,
                    duality_gap: f64::NAN,
                    tolerance: self.opt.report_tol,
                });
            }
            if piv_row != k {
                for c in 0..m {
                    a.swap(k * m + c, piv_row * m + c);
                    inv.swap(k * m + c, piv_row * m + c);
                }
            }
            let p = a[k * m + k];
            let pinv = 1.0 / p;
            for c in 0..m {
                a[k * m + c] *= pinv;
                inv[k * m + c] *= pinv;
            }
            for i in 0..m {
                if i == k {
                    continue;
                }
                let f = a[i * m + k];
                if f == 0.0 {
                    continue;
                }
                for c in 0..m {
                    a[i * m + c] -= f * a[k * m + c];
                    inv[i * m + c] -= f * inv[k * m + c];
                }
            }
        }
        // Gauss-Jordan produced (PB)^-1-ish row ordering already accounted
        // for by eliminating in place; `inv` is now B^-1 with rows matching
        // basis positions.
        self.binv = inv;
        self.recompute_basics(false);
        Ok(())
    }

    fn finalize_optimal(&mut self) -> Result<Solution, SolveError> {
        self.recompute_basics(true);

        // Duals with one refinement step: solve B'y = c_B, correct with the
        // residual, then price structurals against the refined y.
        self.btran_basic_costs();
        let mut resid = vec![0.0f64; self.m];
        for (pos, &col) in self.basis.iter().enumerate() {
            let (rows, vals) = {
                let lo = self.col_starts[col];
                let hi = self.col_starts[col + 1];
                (&self.col_rows[lo..hi], &self.col_vals[lo..hi])
            };
            let mut acc = self.cost[col];
            for (&r, &v) in rows.iter().zip(vals) {
                acc -= self.y[r] * v;
            }
            resid[pos] = acc;
        }
        let mut y = std::mem::take(&mut self.y);
        self.btran(&resid);
        for (yk, &corr) in y.iter_mut().zip(&self.y) {
            *yk += corr;
        }
        self.y = y;

        let primal: Vec<f64> = self.x[..self.n].to_vec();
        let duals: Vec<f64> = self.y.clone();
        let mut reduced = vec![0.0f64; self.n];
        for j in 0..self.n {
            let (rows, vals) = self.col(j);
            let mut r = self.cost[j];
            for (&i, &v) in rows.iter().zip(vals) {
                r -= self.y[i] * v;
            }
            reduced[j] = r;
        }
        let objective = self.lp.objective_of(&primal);

        let report = self.lp.verify(&primal, &duals);
        if report.worst() > self.opt.report_tol {
            return Err(SolveError::Unstable {
                row_residual: report.max_row_residual,
                bound_violation: report.max_bound_violation,
                duality_gap: report.duality_gap,
                tolerance: self.opt.report_tol,
            });
        }

        Ok(Solution {
            status: Status::Optimal,
            objective,
            primal,
            duals,
            reduced_costs: reduced,
        })
    }

    fn partial_solution(&mut self, status: Status) -> Solution {
        let primal: Vec<f64> = self.x[..self.n].to_vec();
        let (objective, duals, reduced) = match status {
            Status::IterationLimit => {
                self.btran_basic_costs();
                let duals = self.y.clone();
                let mut reduced = vec![0.0f64; self.n];
                for j in 0..self.n {
                    let (rows, vals) = self.col(j);
                    let mut r = self.cost[j];
                    for (&i, &v) in rows.iter().zip(vals) {
                        r -= self.y[i] * v;
                    }
                    reduced[j] = r;
                }
                (self.lp.objective_of(&primal), duals, reduced)
            }
            _ => (f64::NAN, vec![0.0; self.m], vec![0.0; self.n]),
        };
        Solution {
            status,
            objective,
            primal,
            duals,
            reduced_costs: reduced,
        }
    }
}

fn identity(m: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; m * m];
    for i in 0..m {
        out[i * m + i] = 1.0;
    }
    out
}
