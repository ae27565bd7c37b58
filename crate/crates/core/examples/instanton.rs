//! Product-state potential: minima along the anneal, the degeneracy point
//! and the instanton estimate of the tunneling gap there.

use qa_lab::schedule::{build_schedule, FluxQubitParams};
use qa_lab::semiclassical::{instanton_gap, track_minima, AttemptRate};
use qa_lab::spectral::slice_at;
use qa_lab::spin_model::WeakStrongSpec;

pub fn run_example() -> qa_lab::Result<()> {
    let schedule = build_schedule(&FluxQubitParams::default(), 61)?;
    let grid: Vec<f64> = (0..=100).map(|k| 0.1 + 0.005 * k as f64).collect();
    println!("h1    s_c     action   instanton_mhz  exact_mhz");
    for h1 in [0.46, 0.47, 0.48] {
        let spec = WeakStrongSpec::with_h1(h1);
        let path = track_minima(&schedule, &spec, &grid)?;
        let Some(s_c) = path.s_c else {
            println!("{h1:.2}  no degenerate point");
            continue;
        };
        let inst = instanton_gap(&spec, &schedule, s_c, AttemptRate::default())?;
        let exact = slice_at(&schedule, &spec, s_c, 2)?.0.omega10;
        println!(
            "{h1:.2}  {s_c:.4}  {:.4}   {:10.2}     {:8.2}",
            inst.action,
            inst.gap_ghz * 1e3,
            exact * 1e3
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qa_lab::Result<()> {
    run_example()
}
