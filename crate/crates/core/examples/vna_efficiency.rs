//! Efficiency from a four-port scattering record with unknown line gains.

use optoread::calib::{synthesize_vna_record, vna_efficiency, LineGains};
use optoread::device::default_paper_device;
use optoread::error::Result;
use optoread::transducer::{conversion_efficiency, PumpConfig};
use optoread::units::hz_to_angular;

pub fn run_example() -> Result<()> {
    let dev = default_paper_device();
    let pump = PumpConfig::red_sideband(&dev, 3.1e-6);
    let freqs: Vec<f64> = (0..9).map(|k| 5.194e9 + 1e6 * k as f64).collect();
    let rec = synthesize_vna_record(&dev, &pump, &freqs, 0.0, &LineGains::default(), dev.setup.vna_two_alpha)?;
    let eta = vna_efficiency(&rec)?;
    println!("f_GHz     extracted_dB  model_dB");
    for (f, e) in freqs.iter().zip(eta) {
        let model = conversion_efficiency(&dev, &pump, hz_to_angular(*f), 0.0)?;
        let e = e.unwrap_or(0.0);
        println!("{:.4}  {:10.3}  {:8.3}", f / 1e9, 10.0 * e.log10(), 10.0 * model.log10());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
