//! Background-susceptibility correction: how the fields and couplings of a
//! small instance shift, and what that does to its ground state.

use qa_lab::svmc::{chi_correct, generate_problem, ProblemKind};

pub fn run_example() -> qa_lab::Result<()> {
    let problem = generate_problem(&ProblemKind::ChiProbe { h1: 0.44 }, 0)?;
    for chi in [0.0, 0.02, 0.05] {
        let corrected = chi_correct(&problem, chi)?;
        let h_range = corrected.h.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &h| (lo.min(h), hi.max(h)));
        let ground = problem
            .known_ground
            .as_ref()
            .map(|g| corrected.energy(&g.spins))
            .unwrap_or(f64::NAN);
        println!(
            "chi {chi:.2}: {} couplings, h in [{:.3}, {:.3}], intended ground energy {ground:.3}",
            corrected.couplings.len(),
            h_range.0,
            h_range.1
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qa_lab::Result<()> {
    run_example()
}
