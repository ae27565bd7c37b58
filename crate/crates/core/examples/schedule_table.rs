//! Build the annealing schedule from the compound-junction qubit model and
//! print A(s), B(s) at a handful of points.

use qa_lab::schedule::{build_schedule, FluxQubitParams};

pub fn run_example() -> qa_lab::Result<()> {
    let schedule = build_schedule(&FluxQubitParams::default(), 11)?;
    println!("   s     A_ghz     B_ghz");
    for s in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 1.0] {
        let (a, b) = schedule.ab_at(s);
        println!("{s:.2}  {a:8.4}  {b:8.4}");
    }
    schedule.write_csv(std::io::stdout().lock())?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> qa_lab::Result<()> {
    run_example()
}
