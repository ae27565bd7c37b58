//! Thermal escape from the false minimum under fixed-s Monte Carlo: the
//! Arrhenius slope of the mean escape time against the potential barrier.

use qa_lab::schedule::{build_schedule, FluxQubitParams};
use qa_lab::spin_model::WeakStrongSpec;
use qa_lab::svmc::{kramer_fit, KramerConfig};

pub fn run_example() -> qa_lab::Result<()> {
    let schedule = build_schedule(&FluxQubitParams::default(), 61)?;
    let spec = WeakStrongSpec::with_h1(0.44);
    let cfg = KramerConfig {
        s: 0.233,
        restarts: 30,
        seed: 5,
        ..KramerConfig::default()
    };
    let fit = kramer_fit(&spec, &schedule, &cfg)?;
    for p in &fit.points {
        println!("T = {:5.1} mK  mean sweeps {:10.0}  ({} runs)", p.temp_mk, p.mean_sweeps, p.runs);
    }
    println!(
        "fitted barrier {:.3} GHz vs potential barrier {:.3} GHz (R^2 {:.4})",
        fit.delta_u_ghz, fit.barrier_ghz, fit.r_squared
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> qa_lab::Result<()> {
    run_example()
}
