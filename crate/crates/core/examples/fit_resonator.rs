//! Notch-resonator fit of a noisy transmission trace with cable delay.

use num_complex::Complex64;
use optoread::error::Result;
use optoread::estimate::fit_notch_resonator;
use optoread::rng::SeedSpec;
use std::f64::consts::TAU;

pub fn run_example() -> Result<()> {
    let (f0, kee, kei) = (5.1944e9, 0.45e6, 0.05e6);
    let (amp, theta, delay) = (0.8, 0.4, 45e-9);
    let noise = SeedSpec::new(9, 0);
    let f: Vec<f64> = (0..401).map(|k| f0 - 3e6 + 15e3 * k as f64).collect();
    let s: Vec<Complex64> = f
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let kappa = kee + kei;
            let notch = Complex64::new(1.0, 0.0) - kee / (Complex64::new(kappa, 2.0 * (x - f0)));
            let env = Complex64::from_polar(amp, theta - TAU * (x - f0) * delay);
            let n = Complex64::new(noise.substream(0).normal(k as u64), noise.substream(1).normal(k as u64));
            env * notch + 1e-3 * n
        })
        .collect();

    let r = fit_notch_resonator(&f, &s)?;
    let names = ["f0_Hz", "kappa_ee_Hz", "kappa_ei_Hz", "amplitude", "phase", "delay_s"];
    for (n, (v, e)) in names.iter().zip(r.params.iter().zip(&r.sigma)) {
        println!("{n:12} {v:14.6e} ± {e:.1e}");
    }
    println!("converged: {}", r.converged);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
