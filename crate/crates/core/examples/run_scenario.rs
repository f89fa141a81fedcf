//! Resolve a shipped scenario, override a value and run it.

use optoread::error::Result;
use optoread::experiments::{run_scenario, Scenario};

pub fn run_example() -> Result<()> {
    let base = Scenario::find("fig3a", None)?;
    let scenario = base.with_overrides(&[
        ("chain.pump.power_w".into(), "15.5e-6".into()),
        ("experiments.0.n_shots".into(), "2000".into()),
    ])?;
    let out = std::env::temp_dir().join("optoread_runs");
    let (dir, report) = run_scenario(&scenario, &out)?;
    println!("wrote {}", dir.display());
    for r in &report.results {
        println!("{} ({}): files {:?}", r.name, r.kind, r.files);
        println!("  fidelity {}", r.summary["fidelity_report"]["fidelity"]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
