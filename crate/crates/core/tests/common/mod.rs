//! Shared helpers for integration tests. Each test binary pulls this in with
//! `mod common;`, so not every binary uses every item.
#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use gridwork_core::domain::{self, SystemDescription};
use gridwork_core::lp::Solution;

/// Path of a checked-in fixture directory.
pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Loads a checked-in fixture and asserts it is rule-clean.
pub fn load_fixture(name: &str) -> SystemDescription {
    let system = domain::load_system(&fixture_dir(name)).expect("fixture loads");
    let violations = domain::validate(&system);
    assert!(violations.is_empty(), "fixture {name} has violations: {violations:?}");
    system
}

/// Asserts two solutions are bit-for-bit identical.
pub fn assert_bit_identical(a: &Solution, b: &Solution) {
    assert_eq!(a.status, b.status);
    assert_eq!(a.objective.to_bits(), b.objective.to_bits(), "objective differs");
    let bits = |v: &[f64]| v.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.primal), bits(&b.primal), "primal differs");
    assert_eq!(bits(&a.duals), bits(&b.duals), "duals differ");
    assert_eq!(
        bits(&a.reduced_costs),
        bits(&b.reduced_costs),
        "reduced costs differ"
    );
}
