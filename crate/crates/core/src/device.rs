//! Device and setup parameter registry.
//!
//! Parameters are stored on disk as a single JSON document with every
//! frequency and rate in Hz (linear). [`DeviceParams`] holds the validated,
//! angular-frequency form used by the rest of the crate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{angular_to_hz, hz_to_angular as to_ang};

/// Transducer mode parameters. All rates are angular (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct TransducerParams {
    pub omega_m: f64,
    pub omega_o: f64,
    /// Frequency of peak conversion; the chain model places its
    /// optomechanically active mechanical mode here.
    pub omega_p: f64,
    pub kappa_m: f64,
    pub kappa_ee: f64,
    pub kappa_ei: f64,
    pub kappa_o: f64,
    pub eta_o: f64,
    pub c_em: f64,
    pub c_om_per_watt: f64,
    /// Multiplier on `kappa_m` applied inside the chain model, calibrated so
    /// the -3 dB conversion bandwidth matches the measured one.
    pub linewidth_scale: f64,
    pub backaction: BackactionTable,
    /// Thermal microwave emission at the transducer port (dBm), reported only.
    pub thermal_emission_dbm: f64,
}

impl TransducerParams {
    pub fn kappa_e(&self) -> f64 {
        self.kappa_ee + self.kappa_ei
    }

    pub fn eta_e(&self) -> f64 {
        self.kappa_ee / self.kappa_e()
    }

    /// Mechanical linewidth used by the chain model.
    pub fn kappa_m_eff(&self) -> f64 {
        self.kappa_m * self.linewidth_scale
    }

    pub fn c_om(&self, pump_power: f64) -> f64 {
        self.c_om_per_watt * pump_power
    }
}

/// Optical back-action on the transducer microwave resonator, tabulated
/// against pump power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackactionTable {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default)]
    pub extrapolate: bool,
    pub points: Vec<BackactionPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackactionPoint {
    pub power_w: f64,
    /// Resonator frequency shift (Hz), non-positive.
    pub frequency_shift_hz: f64,
    /// Additional internal loss rate (Hz), non-negative.
    pub extra_internal_loss_hz: f64,
}

impl Default for BackactionTable {
    fn default() -> Self {
        Self {
            enabled: false,
            extrapolate: false,
            points: vec![
                BackactionPoint {
                    power_w: 0.0,
                    frequency_shift_hz: 0.0,
                    extra_internal_loss_hz: 0.0,
                },
                BackactionPoint {
                    power_w: 0.62e-6,
                    frequency_shift_hz: -0.3e6,
                    extra_internal_loss_hz: 0.8e6,
                },
                BackactionPoint {
                    power_w: 6.2e-6,
                    frequency_shift_hz: -2.0e6,
                    extra_internal_loss_hz: 5.0e6,
                },
            ],
        }
    }
}

/// Readout resonator and qubit. Rates angular, times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitParams {
    pub omega_r: f64,
    pub omega_r_dressed: f64,
    pub omega_q: f64,
    pub kappa_ree: f64,
    pub kappa_rei: f64,
    pub chi: f64,
    pub g: f64,
    pub t1: f64,
    pub t2_star: f64,
}

impl QubitParams {
    pub fn kappa_re(&self) -> f64 {
        self.kappa_ree + self.kappa_rei
    }
}

/// Detection setup.
///
/// `sideband_alpha` is the fraction of local-oscillator power in the useful
/// heterodyne sideband. For a phase modulator at optimal depth it equals
/// `max |J1(beta)|^2 / 2 ≈ 0.17`; it is configured, not derived.
/// `vna_two_alpha` is the separately calibrated sideband correction applied
/// to four-port efficiency measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupParams {
    pub eta_fiber: f64,
    pub eta_od: f64,
    pub eta_tod: f64,
    pub line_attenuation_db: f64,
    pub sideband_alpha: f64,
    pub vna_two_alpha: f64,
    pub hemt_added_photons: f64,
}

/// Reference point of the mechanical thermal-noise calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalFixture {
    pub tone_power_rt_dbm: f64,
    pub line_attenuation_db: f64,
    pub snr_db: f64,
    pub pump_power_w: f64,
    /// Bandwidth the thermal-noise power was integrated over (Hz).
    pub noise_bandwidth_hz: f64,
    /// Conversion efficiency at the calibration point.
    pub reference_efficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    pub transducer: TransducerParams,
    pub qubit: QubitParams,
    pub setup: SetupParams,
    pub thermal: ThermalFixture,
}

// ---- on-disk schema (Hz) ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceFile {
    pub transducer: TransducerFile,
    pub qubit: QubitFile,
    pub setup: SetupParams,
    pub thermal_calibration: ThermalFixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransducerFile {
    pub mechanical_frequency_hz: f64,
    pub optical_frequency_hz: f64,
    pub peak_conversion_frequency_hz: f64,
    pub mechanical_linewidth_hz: f64,
    pub microwave_external_rate_hz: f64,
    pub microwave_internal_rate_hz: f64,
    pub optical_loss_rate_hz: f64,
    pub optical_coupling: f64,
    pub electromechanical_cooperativity: f64,
    pub optomechanical_cooperativity_per_watt: f64,
    pub mechanical_linewidth_scale: f64,
    pub backaction: BackactionTable,
    pub thermal_emission_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitFile {
    pub bare_resonator_frequency_hz: f64,
    pub dressed_resonator_frequency_hz: f64,
    pub qubit_frequency_hz: f64,
    pub resonator_external_rate_hz: f64,
    pub resonator_internal_rate_hz: f64,
    pub dispersive_shift_hz: f64,
    pub coupling_hz: f64,
    pub t1_s: f64,
    pub t2_star_s: f64,
}

impl DeviceFile {
    pub fn into_params(self) -> Result<DeviceParams> {
        let t = self.transducer;
        let q = self.qubit;
        let params = DeviceParams {
            transducer: TransducerParams {
                omega_m: to_ang(t.mechanical_frequency_hz),
                omega_o: to_ang(t.optical_frequency_hz),
                omega_p: to_ang(t.peak_conversion_frequency_hz),
                kappa_m: to_ang(t.mechanical_linewidth_hz),
                kappa_ee: to_ang(t.microwave_external_rate_hz),
                kappa_ei: to_ang(t.microwave_internal_rate_hz),
                kappa_o: to_ang(t.optical_loss_rate_hz),
                eta_o: t.optical_coupling,
                c_em: t.electromechanical_cooperativity,
                c_om_per_watt: t.optomechanical_cooperativity_per_watt,
                linewidth_scale: t.mechanical_linewidth_scale,
                backaction: t.backaction,
                thermal_emission_dbm: t.thermal_emission_dbm,
            },
            qubit: QubitParams {
                omega_r: to_ang(q.bare_resonator_frequency_hz),
                omega_r_dressed: to_ang(q.dressed_resonator_frequency_hz),
                omega_q: to_ang(q.qubit_frequency_hz),
                kappa_ree: to_ang(q.resonator_external_rate_hz),
                kappa_rei: to_ang(q.resonator_internal_rate_hz),
                chi: to_ang(q.dispersive_shift_hz),
                g: to_ang(q.coupling_hz),
                t1: q.t1_s,
                t2_star: q.t2_star_s,
            },
            setup: self.setup,
            thermal: self.thermal_calibration,
        };
        params.validate()?;
        Ok(params)
    }
}

impl DeviceParams {
    pub fn to_file(&self) -> DeviceFile {
        let t = &self.transducer;
        let q = &self.qubit;
        DeviceFile {
            transducer: TransducerFile {
                mechanical_frequency_hz: to_hz(t.omega_m),
                optical_frequency_hz: to_hz(t.omega_o),
                peak_conversion_frequency_hz: to_hz(t.omega_p),
                mechanical_linewidth_hz: to_hz(t.kappa_m),
                microwave_external_rate_hz: to_hz(t.kappa_ee),
                microwave_internal_rate_hz: to_hz(t.kappa_ei),
                optical_loss_rate_hz: to_hz(t.kappa_o),
                optical_coupling: t.eta_o,
                electromechanical_cooperativity: t.c_em,
                optomechanical_cooperativity_per_watt: t.c_om_per_watt,
                mechanical_linewidth_scale: t.linewidth_scale,
                backaction: t.backaction.clone(),
                thermal_emission_dbm: t.thermal_emission_dbm,
            },
            qubit: QubitFile {
                bare_resonator_frequency_hz: to_hz(q.omega_r),
                dressed_resonator_frequency_hz: to_hz(q.omega_r_dressed),
                qubit_frequency_hz: to_hz(q.omega_q),
                resonator_external_rate_hz: to_hz(q.kappa_ree),
                resonator_internal_rate_hz: to_hz(q.kappa_rei),
                dispersive_shift_hz: to_hz(q.chi),
                coupling_hz: to_hz(q.g),
                t1_s: q.t1,
                t2_star_s: q.t2_star,
            },
            setup: self.setup.clone(),
            thermal_calibration: self.thermal.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("device file serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: DeviceFile =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        file.into_params()
    }

    /// Checks every documented invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        let t = &self.transducer;
        for (name, v) in [
            ("transducer.mechanical_frequency_hz", t.omega_m),
            ("transducer.optical_frequency_hz", t.omega_o),
            ("transducer.peak_conversion_frequency_hz", t.omega_p),
            ("transducer.mechanical_linewidth_hz", t.kappa_m),
            ("transducer.microwave_external_rate_hz", t.kappa_ee),
            ("transducer.microwave_internal_rate_hz", t.kappa_ei),
            ("transducer.optical_loss_rate_hz", t.kappa_o),
            ("transducer.electromechanical_cooperativity", t.c_em),
            ("transducer.optomechanical_cooperativity_per_watt", t.c_om_per_watt),
            ("transducer.mechanical_linewidth_scale", t.linewidth_scale),
        ] {
            positive(name, v)?;
        }
        unit_interval("transducer.optical_coupling", t.eta_o)?;
        finite("transducer.thermal_emission_dbm", t.thermal_emission_dbm)?;
        validate_backaction(&t.backaction)?;

        let q = &self.qubit;
        for (name, v) in [
            ("qubit.bare_resonator_frequency_hz", q.omega_r),
            ("qubit.dressed_resonator_frequency_hz", q.omega_r_dressed),
            ("qubit.qubit_frequency_hz", q.omega_q),
            ("qubit.resonator_external_rate_hz", q.kappa_ree),
            ("qubit.dispersive_shift_hz", q.chi),
            ("qubit.coupling_hz", q.g),
            ("qubit.t1_s", q.t1),
            ("qubit.t2_star_s", q.t2_star),
        ] {
            positive(name, v)?;
        }
        if !(q.kappa_rei >= 0.0 && q.kappa_rei.is_finite()) {
            return Err(Error::validation(
                "qubit.resonator_internal_rate_hz",
                "must be non-negative",
            ));
        }
        if q.t2_star > 2.0 * q.t1 {
            return Err(Error::validation("qubit.t2_star_s", "exceeds 2*t1"));
        }

        let s = &self.setup;
        unit_interval("setup.eta_fiber", s.eta_fiber)?;
        unit_interval("setup.eta_od", s.eta_od)?;
        unit_interval("setup.eta_tod", s.eta_tod)?;
        if s.eta_tod > s.eta_od {
            return Err(Error::validation("setup.eta_tod", "exceeds eta_od"));
        }
        if !(s.sideband_alpha > 0.0 && s.sideband_alpha <= 0.5) {
            return Err(Error::validation("setup.sideband_alpha", "out of (0,0.5]"));
        }
        positive("setup.vna_two_alpha", s.vna_two_alpha)?;
        finite("setup.line_attenuation_db", s.line_attenuation_db)?;
        if !(s.hemt_added_photons >= 0.0 && s.hemt_added_photons.is_finite()) {
            return Err(Error::validation("setup.hemt_added_photons", "must be non-negative"));
        }

        let th = &self.thermal;
        finite("thermal_calibration.tone_power_rt_dbm", th.tone_power_rt_dbm)?;
        finite("thermal_calibration.line_attenuation_db", th.line_attenuation_db)?;
        finite("thermal_calibration.snr_db", th.snr_db)?;
        positive("thermal_calibration.pump_power_w", th.pump_power_w)?;
        positive("thermal_calibration.noise_bandwidth_hz", th.noise_bandwidth_hz)?;
        unit_interval("thermal_calibration.reference_efficiency", th.reference_efficiency)?;
        Ok(())
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(name, "must be finite"))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(name, "must be positive"))
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::validation(name, "out of (0,1]"))
    }
}

fn validate_backaction(table: &BackactionTable) -> Result<()> {
    let field = "transducer.backaction.points";
    if table.points.is_empty() {
        return Err(Error::validation(field, "must not be empty"));
    }
    for (i, p) in table.points.iter().enumerate() {
        if !(p.power_w >= 0.0 && p.power_w.is_finite()) {
            return Err(Error::validation(field, format!("[{i}].power_w must be non-negative")));
        }
        if !(p.frequency_shift_hz <= 0.0) {
            return Err(Error::validation(
                field,
                format!("[{i}].frequency_shift_hz must be non-positive"),
            ));
        }
        if !(p.extra_internal_loss_hz >= 0.0 && p.extra_internal_loss_hz.is_finite()) {
            return Err(Error::validation(
                field,
                format!("[{i}].extra_internal_loss_hz must be non-negative"),
            ));
        }
    }
    for (i, w) in table.points.windows(2).enumerate() {
        if !(w[1].power_w > w[0].power_w) {
            return Err(Error::validation(
                field,
                format!("powers must be strictly increasing at [{}]", i + 1),
            ));
        }
        if w[1].frequency_shift_hz > w[0].frequency_shift_hz
            || w[1].extra_internal_loss_hz < w[0].extra_internal_loss_hz
        {
            return Err(Error::validation(
                field,
                format!("entries must be monotone in power at [{}]", i + 1),
            ));
        }
    }
    Ok(())
}

/// Hz value rounded to 15 significant digits, so that Hz → rad/s → Hz
/// reproduces the file value.
fn to_hz(omega: f64) -> f64 {
    format!("{:.14e}", angular_to_hz(omega))
        .parse()
        .expect("formatted float parses")
}

pub fn load_device_params(path: impl AsRef<Path>) -> Result<DeviceParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading device file {}", path.display()), e))?;
    DeviceParams::from_json_str(&text)
}

/// The shipped parameter file, reproducing the published device table plus
/// the calibrated model scalars.
pub const DEVICE_PAPER_JSON: &str = include_str!("../data/device_paper.json");

/// Published device parameters with the calibrated transducer-model scalars.
pub fn default_paper_device() -> DeviceParams {
    DeviceParams::from_json_str(DEVICE_PAPER_JSON).expect("shipped device file is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn shipped_values() {
        let d = default_paper_device();
        assert!(rel(d.transducer.omega_m / TAU, 5.19442e9) < 1e-12);
        assert!(rel(d.qubit.chi / TAU, 512e3) < 1e-12);
        assert!(rel(d.transducer.kappa_e() / TAU, 23.6e6) < 1e-12);
        assert!((d.transducer.eta_e() - 0.517).abs() < 5e-4);
        assert!(rel(d.qubit.kappa_re() / TAU, 500e3) < 1e-12);
        assert_eq!(d.setup.eta_tod, 0.17);
        assert_eq!(d.setup.eta_fiber, 0.40);
        d.validate().unwrap();
    }

    #[test]
    fn round_trip_is_canonical() {
        let d = default_paper_device();
        let text = d.to_json();
        let again = DeviceParams::from_json_str(&text).unwrap();
        assert_eq!(again.to_json(), text);
        let file: DeviceFile = serde_json::from_str(DEVICE_PAPER_JSON).unwrap();
        let reread: DeviceFile = serde_json::from_str(&text).unwrap();
        assert_eq!(file, reread);
    }

    #[test]
    fn out_of_range_efficiency_is_named() {
        let mut file: DeviceFile = serde_json::from_str(DEVICE_PAPER_JSON).unwrap();
        file.setup.eta_fiber = 1.4;
        let err = file.into_params().unwrap_err();
        assert!(err.to_string().contains("eta_fiber out of (0,1]"), "{err}");
    }

    #[test]
    fn missing_field_is_named() {
        let mut v: serde_json::Value = serde_json::from_str(DEVICE_PAPER_JSON).unwrap();
        v["qubit"].as_object_mut().unwrap().remove("dispersive_shift_hz");
        let err = DeviceParams::from_json_str(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
        assert!(err.to_string().contains("dispersive_shift_hz"), "{err}");
    }

    #[test]
    fn unknown_field_is_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(DEVICE_PAPER_JSON).unwrap();
        v["setup"]["eta_fibre"] = 0.4.into();
        let err = DeviceParams::from_json_str(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("eta_fibre"), "{err}");
    }

    #[test]
    fn single_field_violations_name_the_field() {
        let base: serde_json::Value = serde_json::from_str(DEVICE_PAPER_JSON).unwrap();
        let cases: &[(&str, &str, f64)] = &[
            ("transducer", "mechanical_linewidth_hz", -1.0),
            ("transducer", "optical_coupling", 0.0),
            ("transducer", "electromechanical_cooperativity", 0.0),
            ("qubit", "dispersive_shift_hz", 0.0),
            ("qubit", "t2_star_s", 1.0),
            ("setup", "eta_od", 2.0),
            ("setup", "eta_tod", 0.5),
            ("setup", "sideband_alpha", 0.7),
            ("setup", "hemt_added_photons", -3.0),
            ("thermal_calibration", "noise_bandwidth_hz", 0.0),
        ];
        for (section, field, value) in cases {
            let mut v = base.clone();
            v[section][field] = (*value).into();
            let err = DeviceParams::from_json_str(&v.to_string()).unwrap_err();
            assert!(matches!(err, Error::Validation { .. }), "{section}.{field}: {err}");
            assert!(err.to_string().contains(field), "{section}.{field}: {err}");
        }
    }

    #[test]
    fn backaction_table_must_be_monotone() {
        let mut d = default_paper_device();
        d.transducer.backaction.points[2].extra_internal_loss_hz = 0.1e6;
        assert!(d.validate().is_err());
        let mut d = default_paper_device();
        d.transducer.backaction.points.swap(1, 2);
        assert!(d.validate().is_err());
    }
}
