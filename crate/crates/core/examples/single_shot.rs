//! Single-shot readout through the microwave and optical paths.

use optoread::chain::{generate_shots, ChainConfig};
use optoread::device::default_paper_device;
use optoread::error::Result;
use optoread::estimate::{fidelity_report, fidelity_vs_snr, lda_boundary};
use optoread::qubit::{DemolitionConfig, QubitState};
use optoread::rng::SeedSpec;

pub fn run_example() -> Result<()> {
    let dev = default_paper_device();
    let demo = DemolitionConfig::default();
    let seed = SeedSpec::new(42, 0);
    for cfg in [ChainConfig::microwave_default(&dev), ChainConfig::optical_default(&dev)] {
        let s0 = generate_shots(&dev, &cfg, &demo, 10_000, QubitState::Ground, seed)?;
        let s1 = generate_shots(&dev, &cfg, &demo, 10_000, QubitState::Excited, seed)?;
        let boundary = lda_boundary(&s0, &s1)?;
        let r = fidelity_report(&s0, &s1, &boundary)?;
        println!(
            "{:?}: F = {:.3}  SNR = {:.2}  (Gaussian limit at that SNR: {:.3})",
            cfg.path,
            r.fidelity,
            r.snr,
            fidelity_vs_snr(r.snr)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
