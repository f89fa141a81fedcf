//! Line attenuation from the qubit's AC Stark shift.
//!
//! With a path argument the synthetic dataset is written there; otherwise
//! it goes to the temporary directory.

use optoread::calib::{stark_attenuation, synthesize_stark_dataset, StarkDataset};
use optoread::device::default_paper_device;
use optoread::error::{Error, Result};
use optoread::qubit::intracavity_photons;
use optoread::rng::SeedSpec;
use optoread::units::{dbm_to_watts, PowerDbm};
use std::path::Path;

pub fn run_example() -> Result<()> {
    calibrate_at(&std::env::temp_dir().join("optoread_stark.csv"))
}

fn calibrate_at(path: &Path) -> Result<()> {
    let dev = default_paper_device();

    let ds = synthesize_stark_dataset(&dev, 74.5, 30, 20.0, 0.01, SeedSpec::new(745, 0))?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    ds.write_csv(file)?;

    let loaded = StarkDataset::load(path)?;
    let cal = stark_attenuation(&dev, &loaded, 0.0)?;
    println!(
        "{}: attenuation {:.2} ± {:.2} dB from {} of {} points",
        path.display(),
        cal.attenuation_db,
        cal.uncertainty_db,
        cal.points_used,
        cal.points_total
    );

    let n = intracavity_photons(&dev, dbm_to_watts(PowerDbm(-105.8))?);
    println!("intracavity photons at -105.8 dBm: {n:.0} (sqrt {:.1})", n.sqrt());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    match std::env::args().nth(1) {
        Some(p) => calibrate_at(Path::new(&p)),
        None => run_example(),
    }
}
