//! Round-trip an instance through the plain-text problem format and dump a
//! small subspace Hamiltonian as `row col value` lines.

use qa_lab::spin_model::{build_subspace_hamiltonian, write_operator_dump, WeakStrongSpec};
use qa_lab::svmc::{generate_problem, IsingProblem, ProblemKind};

pub fn run_example() -> qa_lab::Result<()> {
    let problem = generate_problem(&ProblemKind::WeakStrongPair { h1: 0.44 }, 0)?;
    let mut text = Vec::new();
    problem.write_text(&mut text)?;
    let parsed = IsingProblem::read_text(text.as_slice())?;
    println!(
        "{} spins, {} couplings, round trip exact: {}",
        parsed.num_spins(),
        parsed.couplings.len(),
        parsed.h == problem.h && parsed.couplings == problem.couplings
    );
    print!("{}", String::from_utf8_lossy(&text).lines().take(4).collect::<Vec<_>>().join("\n"));
    println!("\n...");

    let spec = WeakStrongSpec {
        n: 4,
        ..WeakStrongSpec::with_h1(0.44)
    };
    let h = build_subspace_hamiltonian(&spec, 1.0, 1.0)?;
    let mut dump = Vec::new();
    write_operator_dump(h.triplets(), &mut dump)?;
    println!("{}-state operator, first lines:", h.dim());
    for line in String::from_utf8_lossy(&dump).lines().take(5) {
        println!("  {line}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qa_lab::Result<()> {
    run_example()
}
