//! The quick examples run as part of the test suite.

#[path = "../examples/lamb_shift.rs"]
mod lamb_shift;
#[path = "../examples/problem_file.rs"]
mod problem_file;
#[path = "../examples/chi_probe.rs"]
mod chi_probe;
#[path = "../examples/config_run.rs"]
mod config_run;
#[path = "../examples/subspace_vs_exact.rs"]
mod subspace_vs_exact;

#[test]
fn lamb_shift_example() {
    lamb_shift::run_example().unwrap();
}

#[test]
fn problem_file_example() {
    problem_file::run_example().unwrap();
}

#[test]
fn chi_probe_example() {
    chi_probe::run_example().unwrap();
}

#[test]
fn config_run_example() {
    config_run::run_example().unwrap();
}

#[test]
fn subspace_vs_exact_example() {
    subspace_vs_exact::run_example().unwrap();
}
