//! Steady-state model of the microwave ↔ mechanics ↔ optics conversion chain.
//!
//! The three modes are coupled by beam-splitter interactions: the microwave
//! resonator to the mechanical mode through the piezoelectric coupling
//! `g_em`, and the mechanical mode to the optical cavity through the
//! pump-enhanced optomechanical coupling `g_om`. In the frame of a red-detuned
//! pump, with signal angular frequency `ω`, each mode has inverse
//! susceptibility `κ/2 − i(ω − ω_mode)` and the coupled amplitudes solve
//!
//! ```text
//! | χe⁻¹   i·g_em    0     | |a|   |drive_e|
//! | i·g_em  χm⁻¹   i·g_om  | |b| = |   0   |
//! |   0    i·g_om   χo⁻¹   | |c|   |drive_o|
//! ```
//!
//! The coupling matrix is symmetric, so up- and down-conversion amplitudes
//! coincide. Cooperativities are `C_em = 4 g_em² / (κ_e κ_m)` and
//! `C_om = 4 g_om² / (κ_o κ_m)`; on resonance the photon-number efficiency is
//! `η_e η_o · 4 C_em C_om / (1 + C_em + C_om)²`.

use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{DeviceParams, TransducerParams};
use crate::error::{Error, Result};
use crate::units::{angular_to_hz, hz_to_angular};

/// Optical pump. `detuning` is pump minus optical resonance (rad/s);
/// red-detuned operation has `detuning ≈ −ω_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpConfig {
    pub power: f64,
    pub detuning: f64,
}

impl PumpConfig {
    /// Pump red-detuned by exactly one mechanical frequency.
    pub fn red_sideband(dev: &DeviceParams, power: f64) -> Self {
        Self {
            power,
            detuning: -dev.transducer.omega_m,
        }
    }

    pub fn validate(&self, t: &TransducerParams) -> Result<()> {
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "pump power must be non-negative, got {}",
                self.power
            )));
        }
        if !((self.detuning + t.omega_m).abs() <= 3.0 * t.kappa_o) {
            return Err(Error::InvalidArgument(format!(
                "pump detuning {:.4e} Hz is outside the red-detuned regime",
                angular_to_hz(self.detuning)
            )));
        }
        Ok(())
    }
}

/// Serializable pump description (Hz). A missing detuning means the red
/// mechanical sideband.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSpec {
    pub power_w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_hz: Option<f64>,
}

impl PumpSpec {
    pub fn resolve(&self, dev: &DeviceParams) -> PumpConfig {
        PumpConfig {
            power: self.power_w,
            detuning: self
                .detuning_hz
                .map(hz_to_angular)
                .unwrap_or(-dev.transducer.omega_m),
        }
    }
}

/// Mode frequencies, linewidths and couplings of the chain at one operating
/// point (all angular).
#[derive(Debug, Clone, Copy)]
struct ChainModes {
    omega_e: f64,
    kappa_e: f64,
    kappa_ee: f64,
    omega_mech: f64,
    kappa_m: f64,
    omega_opt: f64,
    kappa_o: f64,
    kappa_oe: f64,
    g_em: f64,
    g_om: f64,
}

impl ChainModes {
    fn new(t: &TransducerParams, pump: &PumpConfig, delta_e: f64) -> Result<Self> {
        pump.validate(t)?;
        let (shift, extra_loss) = if t.backaction.enabled {
            optical_backaction(t, pump)?
        } else {
            (0.0, 0.0)
        };
        let kappa_m = t.kappa_m_eff();
        let g_em = (t.c_em * t.kappa_e() * kappa_m / 4.0).sqrt();
        let g_om = (t.c_om(pump.power) * t.kappa_o * kappa_m / 4.0).sqrt();
        Ok(Self {
            omega_e: t.omega_p + delta_e + shift,
            kappa_e: t.kappa_e() + extra_loss,
            kappa_ee: t.kappa_ee,
            omega_mech: t.omega_p,
            kappa_m,
            // Optical sideband offset from the pump that sits on the cavity.
            omega_opt: -pump.detuning,
            kappa_o: t.kappa_o,
            kappa_oe: t.eta_o * t.kappa_o,
            g_em,
            g_om,
        })
    }

    fn solve(&self, omega: f64, drive: Vector3<Complex64>) -> Vector3<Complex64> {
        let inv = |kappa: f64, center: f64| Complex64::new(kappa / 2.0, -(omega - center));
        let ig_em = Complex64::new(0.0, self.g_em);
        let ig_om = Complex64::new(0.0, self.g_om);
        let zero = Complex64::new(0.0, 0.0);
        #[rustfmt::skip]
        let m = Matrix3::new(
            inv(self.kappa_e, self.omega_e), ig_em, zero,
            ig_em, inv(self.kappa_m, self.omega_mech), ig_om,
            zero, ig_om, inv(self.kappa_o, self.omega_opt),
        );
        m.lu()
            .solve(&drive)
            .expect("passive mode matrix is non-singular")
    }

    fn upconversion(&self, omega: f64) -> Complex64 {
        let drive = Vector3::new(
            Complex64::new(self.kappa_ee.sqrt(), 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        );
        self.kappa_oe.sqrt() * self.solve(omega, drive)[2]
    }

    fn downconversion(&self, omega: f64) -> Complex64 {
        let drive = Vector3::new(
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(self.kappa_oe.sqrt(), 0.0),
        );
        self.kappa_ee.sqrt() * self.solve(omega, drive)[0]
    }
}

/// Microwave → optical scattering amplitude at signal frequency `omega_sig`,
/// with the microwave resonator detuned by `delta_e` from the peak frequency.
pub fn upconversion_amplitude(
    dev: &DeviceParams,
    pump: &PumpConfig,
    omega_sig: f64,
    delta_e: f64,
) -> Result<Complex64> {
    Ok(ChainModes::new(&dev.transducer, pump, delta_e)?.upconversion(omega_sig))
}

/// Optical → microwave scattering amplitude.
pub fn downconversion_amplitude(
    dev: &DeviceParams,
    pump: &PumpConfig,
    omega_sig: f64,
    delta_e: f64,
) -> Result<Complex64> {
    Ok(ChainModes::new(&dev.transducer, pump, delta_e)?.downconversion(omega_sig))
}

/// Photon-number conversion efficiency.
pub fn conversion_efficiency(
    dev: &DeviceParams,
    pump: &PumpConfig,
    omega_sig: f64,
    delta_e: f64,
) -> Result<f64> {
    Ok(upconversion_amplitude(dev, pump, omega_sig, delta_e)?.norm_sqr())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencySpectrum {
    pub frequencies: Vec<f64>,
    pub eta: Vec<f64>,
    pub pump: PumpConfig,
}

impl EfficiencySpectrum {
    /// `(frequency, efficiency)` of the largest sample.
    pub fn peak(&self) -> (f64, f64) {
        let (i, &eta) = self
            .eta
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("spectrum is non-empty");
        (self.frequencies[i], eta)
    }

    /// Full width of the contiguous region around the peak that stays above
    /// half the peak efficiency, with linear interpolation at the crossings.
    /// `None` when the region touches the edge of the grid.
    pub fn bandwidth_3db(&self) -> Option<f64> {
        let (_, peak) = self.peak();
        let i_peak = self.eta.iter().position(|&e| e == peak)?;
        let half = peak / 2.0;
        let f = &self.frequencies;
        let e = &self.eta;
        let mut lo = i_peak;
        while lo > 0 && e[lo - 1] >= half {
            lo -= 1;
        }
        let mut hi = i_peak;
        while hi + 1 < e.len() && e[hi + 1] >= half {
            hi += 1;
        }
        if lo == 0 || hi + 1 == e.len() {
            return None;
        }
        let cross = |a: usize, b: usize| f[a] + (half - e[a]) * (f[b] - f[a]) / (e[b] - e[a]);
        Some(cross(hi, hi + 1) - cross(lo - 1, lo))
    }

    /// CSV with columns `frequency_hz, eta, eta_db`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["frequency_hz", "eta", "eta_db"])?;
        for (&f, &eta) in self.frequencies.iter().zip(&self.eta) {
            w.write_record([
                format!("{}", angular_to_hz(f)),
                format!("{eta:e}"),
                format!("{}", 10.0 * eta.log10()),
            ])?;
        }
        w.flush()
            .map_err(|e| Error::io("writing spectrum csv", e))?;
        Ok(())
    }
}

/// Efficiency at every point of an ascending grid of signal frequencies.
pub fn efficiency_spectrum(
    dev: &DeviceParams,
    pump: &PumpConfig,
    freq_grid: &[f64],
    delta_e: f64,
) -> Result<EfficiencySpectrum> {
    if freq_grid.is_empty() {
        return Err(Error::InvalidArgument("frequency grid is empty".into()));
    }
    if freq_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "frequency grid must be strictly ascending".into(),
        ));
    }
    let modes = ChainModes::new(&dev.transducer, pump, delta_e)?;
    let eta = freq_grid
        .par_iter()
        .map(|&w| modes.upconversion(w).norm_sqr())
        .collect();
    Ok(EfficiencySpectrum {
        frequencies: freq_grid.to_vec(),
        eta,
        pump: *pump,
    })
}

/// Microwave resonance under coil tuning: `ω0 − k·I²`.
pub fn coil_tuned_frequency(omega_0: f64, tuning_coeff: f64, current: f64) -> f64 {
    omega_0 - tuning_coeff * current * current
}

/// `(frequency shift, extra internal loss)` of the transducer microwave
/// resonator at the pump power, by linear interpolation in the table.
pub fn optical_backaction(t: &TransducerParams, pump: &PumpConfig) -> Result<(f64, f64)> {
    let pts = &t.backaction.points;
    let p = pump.power;
    if p == 0.0 {
        return Ok((0.0, 0.0));
    }
    let first = pts.first().expect("validated non-empty");
    let last = pts.last().expect("validated non-empty");
    let in_range = p >= first.power_w && p <= last.power_w;
    if !in_range && (!t.backaction.extrapolate || pts.len() < 2) {
        return Err(Error::Range(format!(
            "pump power {p:e} W outside back-action table [{:e}, {:e}] W",
            first.power_w, last.power_w
        )));
    }
    let seg = pts
        .windows(2)
        .position(|w| p <= w[1].power_w)
        .unwrap_or(pts.len().saturating_sub(2));
    let (a, b) = if pts.len() == 1 {
        (pts[0], pts[0])
    } else {
        (pts[seg], pts[seg + 1])
    };
    let s = if b.power_w > a.power_w {
        (p - a.power_w) / (b.power_w - a.power_w)
    } else {
        0.0
    };
    // Below the first point we interpolate towards the origin.
    let lerp = |x: f64, y: f64| x + s * (y - x);
    let shift = lerp(a.frequency_shift_hz, b.frequency_shift_hz).min(0.0);
    let loss = lerp(a.extra_internal_loss_hz, b.extra_internal_loss_hz).max(0.0);
    Ok((hz_to_angular(shift), hz_to_angular(loss)))
}

/// Continuous search for the peak of the spectrum near `omega_p` and its
/// half-maximum crossings. Returns `(peak frequency, peak eta, fwhm)`.
pub fn resolve_peak(dev: &DeviceParams, pump: &PumpConfig, delta_e: f64) -> Result<(f64, f64, f64)> {
    let modes = ChainModes::new(&dev.transducer, pump, delta_e)?;
    let eta = |w: f64| modes.upconversion(w).norm_sqr();
    let t = &dev.transducer;
    let span = 4.0 * (t.kappa_e() + t.kappa_m_eff() * (1.0 + t.c_em));
    let n = 4001;
    let grid: Vec<f64> = (0..n)
        .map(|i| t.omega_p - span + 2.0 * span * i as f64 / (n - 1) as f64)
        .collect();
    let step = grid[1] - grid[0];
    let (i_best, _) = grid
        .iter()
        .map(|&w| eta(w))
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid non-empty");
    // Golden-section refinement within one grid step either side.
    let (mut a, mut b) = (grid[i_best] - step, grid[i_best] + step);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if eta(c) > eta(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let w_peak = 0.5 * (a + b);
    let peak = eta(w_peak);
    if !(peak > 0.0) {
        return Err(Error::Range("no conversion to resolve (zero efficiency)".into()));
    }
    let half = peak / 2.0;
    let crossing = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if eta(mid) >= half {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    let mut out_lo = w_peak - step;
    while eta(out_lo) >= half {
        out_lo -= step;
    }
    let mut out_hi = w_peak + step;
    while eta(out_hi) >= half {
        out_hi += step;
    }
    let fwhm = crossing(w_peak, out_hi) - crossing(w_peak, out_lo);
    Ok((w_peak, peak, fwhm))
}

/// Finds the mechanical linewidth scale that gives the requested −3 dB
/// conversion bandwidth (angular) at zero microwave detuning.
pub fn calibrate_linewidth_scale(dev: &DeviceParams, pump: &PumpConfig, target_fwhm: f64) -> Result<f64> {
    let width_at = |scale: f64| -> Result<f64> {
        let mut d = dev.clone();
        d.transducer.linewidth_scale = scale;
        Ok(resolve_peak(&d, pump, 0.0)?.2)
    };
    let (mut lo, mut hi) = (1e-3, 1e2);
    if !(width_at(lo)? < target_fwhm && width_at(hi)? > target_fwhm) {
        return Err(Error::Range("target bandwidth not bracketed".into()));
    }
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if width_at(mid)? < target_fwhm {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Finds the optomechanical cooperativity per watt that gives `target_eta`
/// at the peak for the given pump power.
pub fn calibrate_pump_coupling(dev: &DeviceParams, pump: &PumpConfig, target_eta: f64) -> Result<f64> {
    if !(pump.power > 0.0) {
        return Err(Error::InvalidArgument("calibration needs a non-zero pump".into()));
    }
    let eta_at = |c_om: f64| -> Result<f64> {
        let mut d = dev.clone();
        d.transducer.c_om_per_watt = c_om / pump.power;
        Ok(resolve_peak(&d, pump, 0.0)?.1)
    };
    // Efficiency rises with C_om up to impedance matching at 1 + C_em.
    let (mut lo, mut hi) = (1e-12, 1.0 + dev.transducer.c_em);
    if !(eta_at(lo)? < target_eta && eta_at(hi)? > target_eta) {
        return Err(Error::Range("target efficiency not reachable".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eta_at(mid)? < target_eta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / pump.power)
}
