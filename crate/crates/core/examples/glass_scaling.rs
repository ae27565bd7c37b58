//! A miniature glass-scaling run: SVMC success on tiled weak-strong
//! instances of growing size and the fitted decay exponent.

use qa_lab::schedule::{build_schedule, FluxQubitParams};
use qa_lab::svmc::{generate_problem, run_seed, scaling_fit, svmc_success, ProblemKind, SizeResults, SvmcConfig};

pub fn run_example() -> qa_lab::Result<()> {
    let schedule = build_schedule(&FluxQubitParams::default(), 61)?;
    let mut sizes = Vec::new();
    for rows in 1..=3 {
        let mut success = Vec::new();
        for instance in 0..4 {
            let problem = generate_problem(&ProblemKind::Glass { rows, h1: 0.4 }, run_seed(7, instance))?;
            let cfg = SvmcConfig {
                sweeps: 8_000,
                seed: run_seed(8, instance),
                ..SvmcConfig::default()
            };
            success.push(svmc_success(&problem, &schedule, &cfg, 10)?.p);
        }
        println!("{} qubits: {:?}", 40 * rows, success);
        sizes.push(SizeResults {
            qubits: 40 * rows,
            success,
        });
    }
    match scaling_fit(&sizes, 200, 0) {
        Ok(fit) => println!("alpha = {:.4} +/- {:.4}", fit.alpha, fit.alpha_err),
        Err(e) => println!("no fit: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qa_lab::Result<()> {
    run_example()
}
