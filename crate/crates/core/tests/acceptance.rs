//! Acceptance criteria, one test per criterion. Each prints a PASS/FAIL line
//! (run with `--nocapture` to see them).

use bcs_entanglement::verify::{run_check, VerifyConfig};

fn gate(id: usize) {
    let outcome = run_check(id, &VerifyConfig::default());
    println!("{outcome}");
    assert!(outcome.passed, "{outcome}");
}

#[test]
fn criterion_1_closed_form_alc() {
    gate(1);
}

#[test]
fn criterion_2_bulk_relations() {
    gate(2);
}

#[test]
fn criterion_3_two_level_analytic() {
    gate(3);
}

#[test]
fn criterion_4_oracle_equivalence() {
    gate(4);
}

#[test]
fn criterion_5_alc_curves() {
    gate(5);
}

#[test]
fn criterion_6_ratio_curves_and_threshold() {
    gate(6);
}

#[test]
fn criterion_7_strong_coupling_asymptotics() {
    gate(7);
}

#[test]
fn criterion_8_ququadrit_identity() {
    gate(8);
}
