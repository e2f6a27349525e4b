//! Solver battle tests against the brute-force vertex oracle, plus the
//! MPS and solution-file round trips.

mod common;

use common::oracle::{self, OracleOutcome};
use gridwork_core::lp::{
    export_solution, import_mps, import_solution, LinearProgram, Sense, SolutionIoError, Status,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    for case in 0..250 {
        let boxed = oracle::random_feasible_lp(&mut rng);
        let lp = boxed.to_lp(&format!("rand{case}"));
        let sol = lp.solve().unwrap_or_else(|e| panic!("case {case}: {e}"));
        assert_eq!(sol.status, Status::Optimal, "case {case} not optimal");
        let expected = match oracle::enumerate_minimum(&boxed) {
            OracleOutcome::Optimal(v) => v,
            OracleOutcome::Infeasible => panic!("case {case}: oracle claims infeasible"),
        };
        let scale = 1.0 + expected.abs().max(sol.objective.abs());
        assert!(
            (sol.objective - expected).abs() / scale <= 1e-6,
            "case {case}: engine {} vs oracle {}",
            sol.objective,
            expected
        );
        // Optimality certificates: feasibility, strong duality, slackness.
        let report = lp.verify(&sol.primal, &sol.duals);
        assert!(
            report.worst() <= 1e-6,
            "case {case}: residual report {report:?}"
        );
    }
}

#[test]
fn random_contradictions_are_reported_infeasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xdead_0011);
    for case in 0..40 {
        let boxed = oracle::random_infeasible_lp(&mut rng);
        assert_eq!(
            oracle::enumerate_minimum(&boxed),
            OracleOutcome::Infeasible,
            "case {case}: oracle found a vertex"
        );
        let sol = boxed.to_lp(&format!("inf{case}")).solve().unwrap();
        assert_eq!(sol.status, Status::Infeasible, "case {case}");
    }
}

#[test]
fn random_lp_solves_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..25 {
        let lp = oracle::random_feasible_lp(&mut rng).to_lp(&format!("det{case}"));
        let a = lp.solve().unwrap();
        let b = lp.solve().unwrap();
        common::assert_bit_identical(&a, &b);
    }
}

#[test]
fn scaling_rhs_and_costs_scales_the_optimum() {
    // min c'x with Ax >= b: scaling b by k scales the optimum by k; scaling
    // c by k does the same. Spot-check on a fixed instance.
    let build = |rhs_scale: f64, cost_scale: f64| {
        let mut lp = LinearProgram::new("scale");
        let x = lp
            .add_var("x", 0.0, f64::INFINITY, 3.0 * cost_scale)
            .unwrap();
        let y = lp
            .add_var("y", 0.0, f64::INFINITY, 5.0 * cost_scale)
            .unwrap();
        lp.add_row("need", Sense::Ge, 10.0 * rhs_scale, &[(x, 1.0), (y, 2.0)])
            .unwrap();
        lp.add_row("mix", Sense::Ge, 4.0 * rhs_scale, &[(x, 1.0), (y, -1.0)])
            .unwrap();
        lp.solve().unwrap().objective
    };
    let base = build(1.0, 1.0);
    assert!((build(7.0, 1.0) - 7.0 * base).abs() <= 1e-9 * base.abs() * 7.0);
    assert!((build(1.0, 7.0) - 7.0 * base).abs() <= 1e-9 * base.abs() * 7.0);
}

fn awkward_lp() -> LinearProgram {
    let mut lp = LinearProgram::new("awkward name/with % tokens");
    let x = lp.add_var("site a/omega/pv", 0.0, 180.0, 41.25).unwrap();
    let y = lp.add_var("site a/theta_pv/0", -3.5, f64::INFINITY, -1.0).unwrap();
    let z = lp.add_var("free z", f64::NEG_INFINITY, f64::INFINITY, 0.25).unwrap();
    let w = lp.add_var("fixed w", 2.0, 2.0, 1.0).unwrap();
    lp.add_row("site a/cap/pv/0", Sense::Le, 99.5, &[(x, 1.0), (y, 0.5)])
        .unwrap();
    lp.add_row("site a/balance/0", Sense::Eq, 4.0, &[(y, 1.0), (z, -2.0), (w, 1.0)])
        .unwrap();
    lp.add_row("floor", Sense::Ge, -10.0, &[(z, 1.0), (x, 0.01)])
        .unwrap();
    lp.add_obj_offset(12.5);
    lp
}

#[test]
fn mps_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("awkward.mps");
    let lp = awkward_lp();
    lp.export_mps(&path).unwrap();
    let back = import_mps(&path).unwrap();

    assert_eq!(back.name, lp.name);
    assert_eq!(back.obj_offset().to_bits(), lp.obj_offset().to_bits());
    assert_eq!(back.num_vars(), lp.num_vars());
    assert_eq!(back.num_rows(), lp.num_rows());
    for (a, b) in lp.vars().iter().zip(back.vars()) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.lower.to_bits(), b.lower.to_bits());
        assert_eq!(a.upper.to_bits(), b.upper.to_bits());
        assert_eq!(a.obj.to_bits(), b.obj.to_bits());
    }
    for (a, b) in lp.rows().iter().zip(back.rows()) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.sense, b.sense);
        assert_eq!(a.rhs.to_bits(), b.rhs.to_bits());
        assert_eq!(a.coeffs, b.coeffs);
    }
    // And the re-imported program solves to the same answer, bit for bit.
    common::assert_bit_identical(&lp.solve().unwrap(), &back.solve().unwrap());
}

#[test]
fn mps_export_has_expected_sections() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sections.mps");
    awkward_lp().export_mps(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    for section in ["NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA"] {
        assert!(
            text.lines().any(|l| l.starts_with(section)),
            "missing section {section}"
        );
    }
    assert!(text.contains(" L site%20a%2Fcap%2Fpv%2F0"));
    assert!(text.contains(" FX BND fixed%20w 2"));
    assert!(text.contains(" FR BND free%20z"));
}

#[test]
fn solution_round_trip_is_exact_and_verified() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sol.csv");
    let lp = awkward_lp();
    let sol = lp.solve().unwrap();
    assert_eq!(sol.status, Status::Optimal);
    export_solution(&lp, &sol, &path).unwrap();
    let back = import_solution(&lp, &path).unwrap();
    common::assert_bit_identical(&sol, &back);
}

#[test]
fn perturbed_solution_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sol.csv");
    let lp = awkward_lp();
    let sol = lp.solve().unwrap();
    export_solution(&lp, &sol, &path).unwrap();

    // Bump one primal value by 1: either a row or a bound must break.
    let text = std::fs::read_to_string(&path).unwrap();
    let perturbed: String = text
        .lines()
        .map(|line| {
            if let Some(rest) = line.strip_prefix("var,fixed w,") {
                let v: f64 = rest.parse().unwrap();
                format!("var,fixed w,{}\n", v + 1.0)
            } else {
                format!("{line}\n")
            }
        })
        .collect();
    std::fs::write(&path, perturbed).unwrap();
    match import_solution(&lp, &path) {
        Err(SolutionIoError::VerificationFailed { .. }) => {}
        other => panic!("expected verification failure, got {other:?}"),
    }
}

#[test]
fn unknown_ids_in_solution_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sol.csv");
    let lp = awkward_lp();
    std::fs::write(&path, "kind,id,value\nvar,nonsense,1.0\n").unwrap();
    match import_solution(&lp, &path) {
        Err(SolutionIoError::Malformed { message, .. }) => {
            assert!(message.contains("nonsense"), "message was {message:?}");
        }
        other => panic!("expected malformed error, got {other:?}"),
    }
}

#[test]
fn iteration_limit_is_reported() {
    let mut lp = LinearProgram::new("limit");
    let mut vars = Vec::new();
    for j in 0..12 {
        vars.push(lp.add_var(format!("x{j}"), 0.0, 10.0, -(j as f64) - 1.0).unwrap());
    }
    for i in 0..8 {
        let terms: Vec<_> = vars.iter().map(|&v| (v, 1.0 + (i as f64) * 0.1)).collect();
        lp.add_row(format!("r{i}"), Sense::Le, 30.0 + i as f64, &terms).unwrap();
    }
    let opts = gridwork_core::lp::SolveOptions {
        max_pivots: 1,
        ..Default::default()
    };
    let sol = lp.solve_with(&opts).unwrap();
    assert_eq!(sol.status, Status::IterationLimit);
}
