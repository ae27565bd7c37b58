//! Integrate the two-state rate equation along the anneal and report the
//! final ground-state probability at several temperatures.

use qa_lab::niba::{evolve_populations, EvolutionSummary, RateMethod};
use qa_lab::noise::NoiseModel;
use qa_lab::schedule::{build_schedule, FluxQubitParams};
use qa_lab::spin_model::WeakStrongSpec;

pub fn run_example() -> qa_lab::Result<()> {
    let schedule = build_schedule(&FluxQubitParams::default(), 61)?;
    let spec = WeakStrongSpec::with_h1(0.44);
    println!("T_mk   p_niba   p_fgr   s_therm  s_frozen  leaves_eq");
    for temp in [15.5, 25.0, 40.0] {
        let model = NoiseModel::main_chip(temp);
        let (rates, trace) = evolve_populations(&schedule, &spec, &model, RateMethod::Niba, 0.12, 100)?;
        let (_, fgr) = evolve_populations(&schedule, &spec, &model, RateMethod::Fgr, 0.12, 100)?;
        let summary = EvolutionSummary::new(RateMethod::Niba, spec.clone(), model, 0.12, &rates, &trace);
        println!(
            "{temp:4.1}  {:.4}  {:.4}  {:.3}    {:.3}     {}",
            trace.p_success,
            fgr.p_success,
            trace.boundaries.s_therm,
            trace.boundaries.s_frozen,
            summary.s_eq.map_or("-".into(), |s| format!("{s:.3}"))
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qa_lab::Result<()> {
    run_example()
}
