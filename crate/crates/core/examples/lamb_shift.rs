//! Ohmic Lamb shift by principal-value quadrature against its closed form,
//! and the frequency window where the two-level master equation holds.

use qa_lab::noise::{lamb_shift, spectral_density, validity_window, NoiseModel};

pub fn run_example() -> qa_lab::Result<()> {
    let model = NoiseModel {
        omega_c: 1000.0,
        ..NoiseModel::earlier_chip(15.0)
    };
    println!("nu_ghz   numeric_ghz   closed_ghz   rel_diff");
    for nu in [0.01, 0.1, 1.0, 5.0] {
        let ls = lamb_shift(&model, nu, 10.0)?;
        println!("{nu:6.2}  {:12.5}  {:11.5}  {:+.4}", ls.numeric, ls.approx, ls.numeric / ls.approx - 1.0);
    }
    let window = validity_window(&model, 1.0 / 3.0)?;
    println!("valid from {:.2} MHz to {:.1} GHz", window.nu_min * 1e3, window.nu_max);
    let at = model.at_ratio(1.0, 1.0);
    for nu in [-1.0, 0.0, 1.0] {
        println!("S({nu:+.1} GHz) = {:.4} rad/ns", spectral_density(&at, &model, nu));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qa_lab::Result<()> {
    run_example()
}
