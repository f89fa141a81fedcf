//! Rabi chevron and Ramsey fringes estimated through optical readout.

use optoread::chain::ChainConfig;
use optoread::device::default_paper_device;
use optoread::error::Result;
use optoread::experiments::{run_chevron, run_ramsey, ChevronParams, Context, Grid, RamseyParams};
use optoread::qubit::DemolitionConfig;
use optoread::rng::SeedSpec;

pub fn run_example() -> Result<()> {
    let device = default_paper_device();
    let ctx = Context {
        chain: ChainConfig::optical_default(&device),
        device,
        demolition: DemolitionConfig::default(),
        seed: SeedSpec::new(3, 0),
    };

    let chevron = run_chevron(
        &ctx,
        &ChevronParams {
            detuning_hz: Grid::linear(-4e6, 4e6, 5),
            duration_s: Grid::linear(0.0, 0.5e-6, 6),
            ..Default::default()
        },
    )?;
    println!("detuning_MHz duration_ns p_true p_measured");
    for r in &chevron.rows {
        println!(
            "{:8.1} {:8.0} {:6.3} {:6.3}",
            r.detuning_hz / 1e6,
            r.duration_s * 1e9,
            r.p_excited,
            r.p_estimated
        );
    }

    let ramsey = run_ramsey(&ctx, &RamseyParams::default())?;
    if let Some(f) = &ramsey.summary.fit {
        println!(
            "Ramsey: detuning {:.1} ± {:.1} kHz (set {:.1} kHz), T2* {:.2} us",
            f.detuning_hz / 1e3,
            f.detuning_sigma_hz / 1e3,
            ramsey.summary.configured_detuning_hz / 1e3,
            f.t2_star_s * 1e6
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
