//! Drive an experiment from a JSON config, as the CLI does, and inspect
//! the manifest it writes.

use qa_lab::experiments::{run_experiment, ExperimentConfig};

const CONFIG: &str = r#"{
  "version": 1,
  "seed": 3,
  "schedule": { "source": "linear", "a0": 3.0, "b1": 2.0, "points": 41 },
  "experiment": { "name": "spectrum", "params": { "points": 9, "s_min": 0.2, "s_max": 0.4 } }
}"#;

pub fn run_example() -> qa_lab::Result<()> {
    let config = ExperimentConfig::from_json(CONFIG)?;
    let out = std::env::temp_dir().join("qa-lab-config-example");
    let report = run_experiment(&config, &out, Some(1))?;
    println!("config hash {}", report.manifest.config_hash);
    println!("outputs {:?} in {}", report.manifest.outputs, report.out_dir.display());
    println!("{}", serde_json::to_string_pretty(&report.summary["result"]).unwrap_or_default());
    Ok(())
}

#[allow(dead_code)]
fn main() -> qa_lab::Result<()> {
    run_example()
}
