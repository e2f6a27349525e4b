//! Brute-force LP oracle, independent of the solver under test.
//!
//! A bounded LP with every variable boxed has a bounded feasible polytope, so
//! its minimum (when feasible) is attained at a vertex, and every vertex is
//! the solution of n linearly independent active constraints drawn from the
//! rows and the variable bounds. Enumerating all n-subsets is exponential but
//! fine at oracle sizes (n <= ~6).

use gridwork_core::lp::{LinearProgram, Sense, VarRef};
use num::rational::BigRational;
use num::{BigInt, One, ToPrimitive};
use rand::Rng;

const FEAS_TOL: f64 = 1e-7;

/// Capital recovery factor w / (1 - (1+w)^-n) evaluated exactly in
/// rational arithmetic, then collapsed to the nearest f64. Independent
/// of the float path under test.
pub fn crf_exact(wacc_num: i64, wacc_den: i64, lifespan: u32) -> f64 {
    let w = BigRational::new(BigInt::from(wacc_num), BigInt::from(wacc_den));
    let growth = BigRational::one() + w.clone();
    let mut p = BigRational::one();
    for _ in 0..lifespan {
        p *= growth.clone();
    }
    // 1 - 1/p = (p - 1)/p, so the factor is w p / (p - 1).
    let crf = w * p.clone() / (p - BigRational::one());
    crf.to_f64().expect("factor fits in f64")
}

/// Dense boxed LP: min obj'x subject to rows and l <= x <= u (all finite).
#[derive(Debug, Clone)]
pub struct BoxedLp {
    pub obj: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Sense, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleOutcome {
    Optimal(f64),
    Infeasible,
}

impl BoxedLp {
    pub fn num_vars(&self) -> usize {
        self.obj.len()
    }

    /// Builds the equivalent [`LinearProgram`] for the solver under test.
    pub fn to_lp(&self, name: &str) -> LinearProgram {
        let mut lp = LinearProgram::new(name);
        let vars: Vec<VarRef> = (0..self.num_vars())
            .map(|j| {
                lp.add_var(format!("x{j}"), self.lower[j], self.upper[j], self.obj[j])
                    .unwrap()
            })
            .collect();
        for (i, (coefs, sense, rhs)) in self.rows.iter().enumerate() {
            let terms: Vec<_> = coefs
                .iter()
                .enumerate()
                .filter(|(_, &a)| a != 0.0)
                .map(|(j, &a)| (vars[j], a))
                .collect();
            lp.add_row(format!("r{i}"), *sense, *rhs, &terms).unwrap();
        }
        lp
    }

    fn feasible(&self, x: &[f64]) -> bool {
        for j in 0..self.num_vars() {
            if x[j] < self.lower[j] - FEAS_TOL || x[j] > self.upper[j] + FEAS_TOL {
                return false;
            }
        }
        for (coefs, sense, rhs) in &self.rows {
            let act: f64 = coefs.iter().zip(x).map(|(a, v)| a * v).sum();
            let ok = match sense {
                Sense::Le => act <= rhs + FEAS_TOL,
                Sense::Ge => act >= rhs - FEAS_TOL,
                Sense::Eq => (act - rhs).abs() <= FEAS_TOL,
            };
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Minimum objective over all feasible vertices, by exhaustive enumeration
/// of active-constraint subsets.
pub fn enumerate_minimum(lp: &BoxedLp) -> OracleOutcome {
    let n = lp.num_vars();
    // Candidate active constraints as (normal, rhs): each row taken at
    // equality, plus both bounds of every variable.
    let mut cands: Vec<(Vec<f64>, f64)> = Vec::new();
    for (coefs, _, rhs) in &lp.rows {
        cands.push((coefs.clone(), *rhs));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cands.push((e.clone(), lp.lower[j]));
        cands.push((e, lp.upper[j]));
    }

    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        // Solve the n x n system for this active set.
        let mut a = vec![0.0f64; n * n];
        let mut b = vec![0.0f64; n];
        for (r, &ci) in subset.iter().enumerate() {
            a[r * n..(r + 1) * n].copy_from_slice(&cands[ci].0);
            b[r] = cands[ci].1;
        }
        if let Some(x) = dense_solve(&mut a, &mut b, n) {
            if lp.feasible(&x) {
                let obj: f64 = lp.obj.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(match best {
                    Some(cur) if cur <= obj => cur,
                    _ => obj,
                });
            }
        }
        if !next_combination(&mut subset, cands.len()) {
            break;
        }
    }
    match best {
        Some(v) => OracleOutcome::Optimal(v),
        None => OracleOutcome::Infeasible,
    }
}

/// Gaussian elimination with partial pivoting; None when near-singular.
fn dense_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for k in 0..n {
        let mut piv = k;
        let mut mag = a[k * n + k].abs();
        for i in (k + 1)..n {
            let v = a[i * n + k].abs();
            if v > mag {
                mag = v;
                piv = i;
            }
        }
        if mag < 1e-9 {
            return None;
        }
        if piv != k {
            for c in 0..n {
                a.swap(k * n + c, piv * n + c);
            }
            b.swap(k, piv);
        }
        let d = a[k * n + k];
        for i in (k + 1)..n {
            let f = a[i * n + k] / d;
            if f == 0.0 {
                continue;
            }
            for c in k..n {
                a[i * n + c] -= f * a[k * n + c];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0f64; n];
    for k in (0..n).rev() {
        let mut acc = b[k];
        for c in (k + 1)..n {
            acc -= a[k * n + c] * x[c];
        }
        x[k] = acc / a[k * n + k];
    }
    Some(x)
}

/// Advances `subset` to the next lexicographic n-combination of 0..total.
fn next_combination(subset: &mut [usize], total: usize) -> bool {
    let n = subset.len();
    if n == 0 || n > total {
        return false;
    }
    let mut i = n;
    while i > 0 {
        i -= 1;
        if subset[i] < total - (n - i) {
            subset[i] += 1;
            for k in (i + 1)..n {
                subset[k] = subset[k - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Random boxed LP that is feasible by construction: rhs values are offset
/// from a witness point drawn inside the box.
pub fn random_feasible_lp(rng: &mut impl Rng) -> BoxedLp {
    let n = rng.gen_range(2..=6);
    let m = rng.gen_range(0..=5);
    random_feasible_lp_sized(rng, n, m)
}

/// Same construction at a caller-chosen size.
pub fn random_feasible_lp_sized(rng: &mut impl Rng, n: usize, m: usize) -> BoxedLp {
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut witness = Vec::with_capacity(n);
    for _ in 0..n {
        let l: f64 = rng.gen_range(-5.0..=0.0);
        let u = l + rng.gen_range(0.5..=8.0);
        lower.push(l);
        upper.push(u);
        witness.push(rng.gen_range(l..=u));
    }
    let obj: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..=10.0)).collect();
    let mut rows = Vec::with_capacity(m);
    for _ in 0..m {
        let coefs: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.8) {
                    rng.gen_range(-3.0..=3.0)
                } else {
                    0.0
                }
            })
            .collect();
        let at_witness: f64 = coefs.iter().zip(&witness).map(|(a, v)| a * v).sum();
        let margin = rng.gen_range(0.1..=2.0);
        let (sense, rhs) = match rng.gen_range(0..3) {
            0 => (Sense::Le, at_witness + margin),
            1 => (Sense::Ge, at_witness - margin),
            _ => (Sense::Eq, at_witness),
        };
        rows.push((coefs, sense, rhs));
    }
    BoxedLp { obj, rows, lower, upper }
}

/// Random LP made infeasible by a contradictory pair of parallel rows.
pub fn random_infeasible_lp(rng: &mut impl Rng) -> BoxedLp {
    let mut lp = random_feasible_lp(rng);
    let n = lp.num_vars();
    let coefs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..=2.0)).collect();
    let mid: f64 = coefs
        .iter()
        .zip(lp.lower.iter().zip(&lp.upper))
        .map(|(a, (l, u))| a * 0.5 * (l + u))
        .sum();
    lp.rows.push((coefs.clone(), Sense::Le, mid));
    lp.rows.push((coefs, Sense::Ge, mid + 5.0));
    lp
}
