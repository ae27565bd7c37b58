//! Locate the avoided crossing of the weak-strong problem on the
//! flux-qubit schedule for a few weak-cell fields.

use qa_lab::schedule::{build_schedule, FluxQubitParams};
use qa_lab::spectral::min_gap;
use qa_lab::spin_model::WeakStrongSpec;

pub fn run_example() -> qa_lab::Result<()> {
    let schedule = build_schedule(&FluxQubitParams::default(), 201)?;
    println!("h1     s_min    gap_mhz   e2-e0_ghz");
    for h1 in [0.44, 0.46, 0.47, 0.48] {
        let g = min_gap(&schedule, &WeakStrongSpec::with_h1(h1), 0.2, 0.4, 41)?;
        println!("{h1:.2}  {:.4}  {:9.3}  {:.3}", g.s, g.gap * 1e3, g.second_gap);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qa_lab::Result<()> {
    run_example()
}
