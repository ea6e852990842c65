//! Acceptance suite: one test per criterion, each printing its pass/fail
//! line. Run with `cargo test --test acceptance -- --nocapture` to see the
//! table, or `hjfront verify` for the CLI rendering of the same checks.

use hjfront_core::verify;

fn assert_criterion(outcome: verify::CriterionOutcome) {
    println!("{}", outcome.line());
    assert!(outcome.pass, "{}", outcome.line());
}

#[test]
fn criterion_01_exact_solution_regression() {
    assert_criterion(verify::criterion_1());
}

#[test]
fn criterion_02_counterexample_speed() {
    assert_criterion(verify::criterion_2());
}

#[test]
fn criterion_03_metric_oracle() {
    assert_criterion(verify::criterion_3());
}

#[test]
fn criterion_04_printed_bounds() {
    assert_criterion(verify::criterion_4());
}

#[test]
fn criterion_05_corrector_convergence() {
    assert_criterion(verify::criterion_5());
}

#[test]
fn criterion_06_brownian_fluctuations() {
    assert_criterion(verify::criterion_6());
}

#[test]
fn criterion_07_model_equivalence() {
    assert_criterion(verify::criterion_7());
}

#[test]
fn criterion_08_level_set_invariance() {
    assert_criterion(verify::criterion_8());
}

#[test]
fn criterion_09_sublevel_sandwich() {
    assert_criterion(verify::criterion_9());
}

#[test]
fn criterion_10_time_dependent_bound() {
    assert_criterion(verify::criterion_10());
}

#[test]
fn criterion_11_limit_solver_oracle() {
    assert_criterion(verify::criterion_11());
}

#[test]
fn criterion_12_harness_soundness() {
    assert_criterion(verify::criterion_12());
}
