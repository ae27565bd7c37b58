//! Compare the two lowest levels of the 625-state column-spin model with
//! Lanczos on the full 2^16-state Hamiltonian.

use qa_lab::linalg::{lanczos_lowest, LanczosOptions};
use qa_lab::schedule::AnnealSchedule;
use qa_lab::spectral::slice_at;
use qa_lab::spin_model::{build_exact_hamiltonian, WeakStrongSpec};

pub fn run_example() -> qa_lab::Result<()> {
    // A linear stand-in schedule keeps the example quick.
    let schedule = AnnealSchedule::linear(3.0, 2.0, 51)?;
    let spec = WeakStrongSpec::with_h1(0.44);
    println!("   s    E0_sub     E0_exact   E1_sub     E1_exact");
    for s in [0.2, 0.35, 0.5] {
        let (a, b) = schedule.ab_at(s);
        let exact = lanczos_lowest(&build_exact_hamiltonian(&spec, a, b)?, 2, &LanczosOptions::default())?;
        let (slice, _) = slice_at(&schedule, &spec, s, 2)?;
        println!(
            "{s:.2}  {:9.4}  {:9.4}  {:9.4}  {:9.4}",
            slice.energies[0], exact.values[0], slice.energies[1], exact.values[1]
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qa_lab::Result<()> {
    run_example()
}
