//! Calibration pipelines: four-port efficiency extraction, line attenuation
//! from the qubit AC Stark shift, and the thermal-noise reference.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::estimate::linear_fit;
use crate::qubit::{intracavity_photons, stark_shift};
use crate::rng::SeedSpec;
use crate::transducer::{upconversion_amplitude, PumpConfig};
use crate::units::{angular_to_hz, dbm_to_watts, hz_to_angular, watts_to_dbm, PowerDbm};

/// Four-port scattering measurement. `s_eo` is optical in, microwave out;
/// `s_oe` is microwave in, optical out; `s_ee` and `s_oo` are the
/// off-resonant reflections that calibrate the lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnaRecord {
    pub frequencies_hz: Vec<f64>,
    pub s_eo: Vec<Complex64>,
    pub s_oe: Vec<Complex64>,
    pub s_ee: Vec<Complex64>,
    pub s_oo: Vec<Complex64>,
    pub two_alpha: f64,
}

impl VnaRecord {
    pub fn validate(&self) -> Result<()> {
        let n = self.frequencies_hz.len();
        if [self.s_eo.len(), self.s_oe.len(), self.s_ee.len(), self.s_oo.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::validation("vna", "all traces must have one value per frequency"));
        }
        if !(self.two_alpha > 0.0 && self.two_alpha.is_finite()) {
            return Err(Error::validation("vna.two_alpha", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct VnaCsvRow {
    frequency_hz: f64,
    s_eo_re: f64,
    s_eo_im: f64,
    s_oe_re: f64,
    s_oe_im: f64,
    s_ee_re: f64,
    s_ee_im: f64,
    s_oo_re: f64,
    s_oo_im: f64,
}

impl VnaRecord {
    /// Reads a CSV with columns `frequency_hz` and `<trace>_re`,
    /// `<trace>_im` for each of `s_eo`, `s_oe`, `s_ee`, `s_oo`.
    pub fn from_csv_reader<R: std::io::Read>(reader: R, two_alpha: f64) -> Result<Self> {
        let mut rec = VnaRecord {
            frequencies_hz: Vec::new(),
            s_eo: Vec::new(),
            s_oe: Vec::new(),
            s_ee: Vec::new(),
            s_oo: Vec::new(),
            two_alpha,
        };
        for row in csv::Reader::from_reader(reader).deserialize() {
            let r: VnaCsvRow = row?;
            rec.frequencies_hz.push(r.frequency_hz);
            rec.s_eo.push(Complex64::new(r.s_eo_re, r.s_eo_im));
            rec.s_oe.push(Complex64::new(r.s_oe_re, r.s_oe_im));
            rec.s_ee.push(Complex64::new(r.s_ee_re, r.s_ee_im));
            rec.s_oo.push(Complex64::new(r.s_oo_re, r.s_oo_im));
        }
        if rec.frequencies_hz.is_empty() {
            return Err(Error::validation("vna", "file has no rows"));
        }
        rec.validate()?;
        Ok(rec)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        self.validate()?;
        let mut w = csv::Writer::from_writer(writer);
        for k in 0..self.frequencies_hz.len() {
            w.serialize(VnaCsvRow {
                frequency_hz: self.frequencies_hz[k],
                s_eo_re: self.s_eo[k].re,
                s_eo_im: self.s_eo[k].im,
                s_oe_re: self.s_oe[k].re,
                s_oe_im: self.s_oe[k].im,
                s_ee_re: self.s_ee[k].re,
                s_ee_im: self.s_ee[k].im,
                s_oo_re: self.s_oo[k].re,
                s_oo_im: self.s_oo[k].im,
            })?;
        }
        w.flush().map_err(|e| Error::io("writing VNA record", e))?;
        Ok(())
    }
}

/// `η = 2α·|S_eo||S_oe| / (|S_ee||S_oo|)` per frequency; `None` where a
/// reflection is zero.
pub fn vna_efficiency(rec: &VnaRecord) -> Result<Vec<Option<f64>>> {
    rec.validate()?;
    Ok((0..rec.frequencies_hz.len())
        .map(|k| {
            let den = rec.s_ee[k].norm() * rec.s_oo[k].norm();
            if den > 0.0 && den.is_finite() {
                Some(rec.two_alpha * rec.s_eo[k].norm() * rec.s_oe[k].norm() / den)
            } else {
                None
            }
        })
        .collect())
}

/// Complex line transmissions between the instrument and the device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineGains {
    pub microwave_in: Complex64,
    pub microwave_out: Complex64,
    pub optical_in: Complex64,
    pub optical_out: Complex64,
}

impl Default for LineGains {
    fn default() -> Self {
        Self {
            microwave_in: Complex64::from_polar(1.9e-4, 0.3),
            microwave_out: Complex64::from_polar(3.1e2, -1.1),
            optical_in: Complex64::from_polar(0.63, 2.0),
            optical_out: Complex64::from_polar(0.52, -0.4),
        }
    }
}

/// Forward model of a four-port measurement of the transducer. The
/// imperfect rejection of the unwanted optical sideband scales the optical
/// detection by `1/2α`.
pub fn synthesize_vna_record(
    dev: &DeviceParams,
    pump: &PumpConfig,
    frequencies_hz: &[f64],
    delta_e: f64,
    gains: &LineGains,
    two_alpha: f64,
) -> Result<VnaRecord> {
    let mut rec = VnaRecord {
        frequencies_hz: frequencies_hz.to_vec(),
        s_eo: Vec::with_capacity(frequencies_hz.len()),
        s_oe: Vec::with_capacity(frequencies_hz.len()),
        s_ee: Vec::with_capacity(frequencies_hz.len()),
        s_oo: Vec::with_capacity(frequencies_hz.len()),
        two_alpha,
    };
    for &f in frequencies_hz {
        let t = upconversion_amplitude(dev, pump, hz_to_angular(f), delta_e)?;
        rec.s_oe.push(gains.microwave_in * t * gains.optical_out / two_alpha);
        rec.s_eo.push(gains.optical_in * t * gains.microwave_out);
        rec.s_ee.push(gains.microwave_in * gains.microwave_out);
        rec.s_oo.push(gains.optical_in * gains.optical_out);
    }
    rec.validate()?;
    Ok(rec)
}

/// Room-temperature readout power and fitted qubit frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkRow {
    pub power_w: f64,
    /// rad/s
    pub qubit_freq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarkDataset {
    pub rows: Vec<StarkRow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StarkCsvRow {
    power_dbm: f64,
    qubit_freq_hz: f64,
}

impl StarkDataset {
    pub fn new(rows: Vec<StarkRow>) -> Result<Self> {
        let ds = Self { rows };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() < 3 {
            return Err(Error::validation("stark.rows", "need at least 3 rows"));
        }
        if self
            .rows
            .iter()
            .any(|r| !(r.power_w > 0.0 && r.power_w.is_finite() && r.qubit_freq.is_finite()))
        {
            return Err(Error::validation("stark.rows", "powers must be positive and values finite"));
        }
        if self.rows.windows(2).any(|w| w[1].power_w <= w[0].power_w) {
            return Err(Error::validation("stark.power_dbm", "must be strictly increasing"));
        }
        Ok(())
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rows = Vec::new();
        for rec in csv::Reader::from_reader(reader).deserialize() {
            let r: StarkCsvRow = rec?;
            rows.push(StarkRow {
                power_w: dbm_to_watts(PowerDbm(r.power_dbm))?,
                qubit_freq: hz_to_angular(r.qubit_freq_hz),
            });
        }
        Self::new(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_csv_reader(f)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(StarkCsvRow {
                power_dbm: watts_to_dbm(r.power_w)?.0,
                qubit_freq_hz: angular_to_hz(r.qubit_freq),
            })?;
        }
        w.flush().map_err(|e| Error::io("writing Stark dataset", e))?;
        Ok(())
    }
}

/// Synthetic Stark data for line attenuation `attenuation_db`. Powers are
/// spaced linearly up to the point where the resonator holds `n_max`
/// photons; Gaussian frequency noise has standard deviation
/// `noise_fraction` times the largest shift.
pub fn synthesize_stark_dataset(
    dev: &DeviceParams,
    attenuation_db: f64,
    n_points: usize,
    n_max: f64,
    noise_fraction: f64,
    seed: SeedSpec,
) -> Result<StarkDataset> {
    if n_points < 3 {
        return Err(Error::InvalidArgument("need at least 3 points".into()));
    }
    let loss = 10f64.powf(-attenuation_db / 10.0);
    let n_per_w = intracavity_photons(dev, 1.0);
    let p_max = n_max / (n_per_w * loss);
    let max_shift = stark_shift(n_max, dev.qubit.chi).abs();
    let rows = (0..n_points)
        .map(|k| {
            let p = p_max * (k + 1) as f64 / n_points as f64;
            let shift = stark_shift(intracavity_photons(dev, p * loss), dev.qubit.chi);
            StarkRow {
                power_w: p,
                qubit_freq: dev.qubit.omega_q + shift + noise_fraction * max_shift * seed.normal(k as u64),
            }
        })
        .collect();
    StarkDataset::new(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StarkWarning {
    /// The qubit frequency does not decrease with power.
    NonNegativeSlope,
    /// The slope is resolved at less than three standard errors.
    LargeUncertainty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarkCalibration {
    pub attenuation_db: f64,
    pub uncertainty_db: f64,
    /// Attenuation from the fit alone, before `offset_db`.
    pub fitted_attenuation_db: f64,
    pub offset_db: f64,
    /// Qubit frequency shift per watt at room temperature (Hz/W).
    pub slope_hz_per_w: f64,
    pub slope_sigma_hz_per_w: f64,
    pub intercept_hz: f64,
    pub points_used: usize,
    pub points_total: usize,
    pub warnings: Vec<StarkWarning>,
}

/// Line attenuation from the linear Stark shift of the lowest-power half of
/// the dataset. `offset_db` is added to the fitted value (for example for
/// connector losses not seen by the qubit).
pub fn stark_attenuation(dev: &DeviceParams, ds: &StarkDataset, offset_db: f64) -> Result<StarkCalibration> {
    ds.validate()?;
    let used = (ds.rows.len() / 2).max(3).min(ds.rows.len());
    let rows = &ds.rows[..used];
    let x: Vec<f64> = rows.iter().map(|r| r.power_w).collect();
    let y: Vec<f64> = rows.iter().map(|r| angular_to_hz(r.qubit_freq)).collect();
    let lf = linear_fit(&x, &y)?;
    // Hz of shift per watt at the resonator.
    let ideal = angular_to_hz(stark_shift(intracavity_photons(dev, 1.0), dev.qubit.chi));
    let mut warnings = Vec::new();
    if lf.slope * ideal.signum() <= 0.0 {
        warnings.push(StarkWarning::NonNegativeSlope);
    }
    if !(lf.slope.abs() > 3.0 * lf.slope_sigma) {
        warnings.push(StarkWarning::LargeUncertainty);
    }
    let fitted = -10.0 * (lf.slope.abs() / ideal.abs()).log10();
    let uncertainty_db = 10.0 / std::f64::consts::LN_10 * lf.slope_sigma / lf.slope.abs();
    Ok(StarkCalibration {
        attenuation_db: fitted + offset_db,
        uncertainty_db,
        fitted_attenuation_db: fitted,
        offset_db,
        slope_hz_per_w: lf.slope,
        slope_sigma_hz_per_w: lf.slope_sigma,
        intercept_hz: lf.intercept,
        points_used: used,
        points_total: ds.rows.len(),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalCalibration {
    pub tone_power_rt_dbm: f64,
    pub attenuation_db: f64,
    pub snr_db: f64,
    pub input_power_dbm: f64,
    pub nep_dbm: f64,
}

/// Thermal noise equivalent power (dBm): tone power at the device minus the
/// measured SNR.
pub fn thermal_calibration(tone_power_rt_dbm: f64, attenuation_db: f64, snr_measured_db: f64) -> ThermalCalibration {
    let input = tone_power_rt_dbm - attenuation_db;
    ThermalCalibration {
        tone_power_rt_dbm,
        attenuation_db,
        snr_db: snr_measured_db,
        input_power_dbm: input,
        nep_dbm: input - snr_measured_db,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalScaling {
    /// Input-referred noise equivalent power (W). The output noise scales
    /// with efficiency and referral divides it back out, so this equals
    /// the reference value.
    pub input_referred_w: f64,
    /// Output-domain thermal noise relative to the reference point.
    pub output_scale: f64,
}

pub fn scale_thermal_noise(reference_nep: f64, eta_ref: f64, eta_new: f64) -> Result<ThermalScaling> {
    if !(eta_ref > 0.0 && eta_new > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "efficiencies must be positive, got {eta_ref} and {eta_new}"
        )));
    }
    let output_scale = eta_new / eta_ref;
    Ok(ThermalScaling {
        input_referred_w: reference_nep * output_scale / output_scale,
        output_scale,
    })
}
