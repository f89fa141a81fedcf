//! Added-noise budgets of both readout paths and the thermal reference.

use optoread::calib::thermal_calibration;
use optoread::chain::{added_shot_noise, ChainConfig};
use optoread::cli::budget_report;
use optoread::device::default_paper_device;
use optoread::error::Result;

pub fn run_example() -> Result<()> {
    let dev = default_paper_device();
    for cfg in [ChainConfig::microwave_default(&dev), ChainConfig::optical_default(&dev)] {
        let r = budget_report(&dev, &cfg)?;
        let b = r.budget;
        println!(
            "{:?}: shot {:.0}, thermal {:.3}, amplifier {:.0}, excess {:.0} -> {:.0} photons ({:.1} dBm/Hz), SNR {:.2}",
            cfg.path,
            b.shot_photons,
            b.thermal_photons,
            b.amplifier_photons,
            b.excess_photons,
            b.total_photons,
            b.total_dbm_per_hz,
            r.snr
        );
    }
    println!("shot noise at 2% efficiency: {:.0} photons", added_shot_noise(0.17, 0.43, 0.02)?);
    let t = thermal_calibration(-22.7, 74.5, 56.7);
    println!("thermal noise equivalent power: {:.1} dBm", t.nep_dbm);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
