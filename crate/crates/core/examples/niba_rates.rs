//! NIBA and golden-rule transition rates through the avoided crossing.

use qa_lab::niba::{rate_points, RateMethod};
use qa_lab::noise::NoiseModel;
use qa_lab::schedule::{build_schedule, FluxQubitParams};
use qa_lab::spin_model::WeakStrongSpec;

pub fn run_example() -> qa_lab::Result<()> {
    let schedule = build_schedule(&FluxQubitParams::default(), 61)?;
    let spec = WeakStrongSpec::with_h1(0.44);
    let model = NoiseModel::main_chip(15.5);
    let grid: Vec<f64> = (0..=10).map(|k| 0.18 + 0.02 * k as f64).collect();
    let niba = rate_points(&schedule, &spec, &model, RateMethod::Niba, &grid)?;
    let fgr = rate_points(&schedule, &spec, &model, RateMethod::Fgr, &grid)?;
    println!("   s    gap_ghz   niba_per_ns    fgr_per_ns        g1");
    for (n, f) in niba.iter().zip(&fgr) {
        println!(
            "{:.2}  {:8.4}  {:12.4e}  {:12.4e}  {:8.2e}",
            n.s, n.omega10, n.gamma_10, f.gamma_10, n.g1
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qa_lab::Result<()> {
    run_example()
}
