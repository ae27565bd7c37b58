//! Spin-vector Monte Carlo on the 16-qubit weak-strong pair: success
//! probability with a Wilson interval at two temperatures.

use qa_lab::schedule::{build_schedule, FluxQubitParams};
use qa_lab::svmc::{generate_problem, svmc_success, ProblemKind, SvmcConfig};

pub fn run_example() -> qa_lab::Result<()> {
    let schedule = build_schedule(&FluxQubitParams::default(), 61)?;
    let problem = generate_problem(&ProblemKind::WeakStrongPair { h1: 0.44 }, 0)?;
    for temp_mk in [15.5, 40.0] {
        let cfg = SvmcConfig {
            sweeps: 20_000,
            temp_mk,
            seed: 1,
            ..SvmcConfig::default()
        };
        let est = svmc_success(&problem, &schedule, &cfg, 40)?;
        println!(
            "T = {temp_mk} mK: {}/{} succeeded, p = {:.2} [{:.2}, {:.2}]",
            est.successes, est.trials, est.p, est.lo, est.hi
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qa_lab::Result<()> {
    run_example()
}
