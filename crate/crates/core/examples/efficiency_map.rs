//! Conversion efficiency spectrum, bandwidth and pump-power scaling.

use optoread::device::default_paper_device;
use optoread::error::Result;
use optoread::transducer::{efficiency_spectrum, resolve_peak, PumpConfig};
use optoread::units::{angular_to_hz, hz_to_angular};

pub fn run_example() -> Result<()> {
    let dev = default_paper_device();
    let pump = PumpConfig::red_sideband(&dev, 3.1e-6);

    let grid: Vec<f64> = (0..201).map(|k| hz_to_angular(5.188e9 + 1e5 * k as f64)).collect();
    let spectrum = efficiency_spectrum(&dev, &pump, &grid, 0.0)?;
    let (w, eta) = spectrum.peak();
    println!("grid peak: {:.4} GHz, {:.2} dB", angular_to_hz(w) / 1e9, 10.0 * eta.log10());
    if let Some(bw) = spectrum.bandwidth_3db() {
        println!("-3 dB width: {:.2} MHz", angular_to_hz(bw) / 1e6);
    }

    println!("power_uW  peak_dB  detuning 0 vs 15 MHz");
    for p in [0.1e-6, 1e-6, 3.1e-6, 10e-6] {
        let pc = PumpConfig { power: p, ..pump };
        let (_, on, _) = resolve_peak(&dev, &pc, 0.0)?;
        let (_, off, _) = resolve_peak(&dev, &pc, hz_to_angular(15e6))?;
        println!("{:8.2} {:8.2} {:8.2}", p * 1e6, 10.0 * on.log10(), 10.0 * off.log10());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
