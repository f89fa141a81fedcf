//! Detection chain: photon bookkeeping, input-referred noise, SNR and
//! Monte-Carlo single-shot IQ data.
//!
//! IQ values are in units of √photons referred to the resonator output, so a
//! shot's noise has per-quadrature variance equal to the total added noise.

use std::io::Write;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calib::scale_thermal_noise;
use crate::device::{DeviceParams, SetupParams, ThermalFixture};
use crate::error::{Error, Result};
use crate::qubit::{demolition_response, switching_outcome, DemolitionConfig, QubitState};
use crate::rng::SeedSpec;
use crate::transducer::PumpSpec;
use crate::units::{db_ratio, dbm_to_watts, hz_to_angular, photon_energy, watts_to_dbm, PowerDbm};

const SWITCH_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutPath {
    MicrowaveOnly,
    Optical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub path: ReadoutPath,
    /// Readout drive power at the resonator input (W).
    pub readout_power_w: f64,
    pub readout_frequency_hz: f64,
    pub pulse_duration_s: f64,
    pub integration_window_s: f64,
    pub rest_time_s: f64,
    pub pump: PumpSpec,
    /// Transducer photon-number efficiency at the readout frequency. Only
    /// used on the optical path.
    pub transduction_efficiency: f64,
    pub setup: SetupParams,
    pub excess_noise_photons: f64,
}

/// Readout power at the operating point of maximal state contrast.
pub const OPERATING_READOUT_DBM: f64 = -105.8;
/// Optical pump power of the optical-readout fixture (W).
pub const OPTICAL_FIXTURE_PUMP_W: f64 = 31e-6;
pub const OPTICAL_FIXTURE_EFFICIENCY: f64 = 0.02;
/// Total added noise of the optical fixture (photons).
pub const OPTICAL_FIXTURE_TOTAL_PHOTONS: f64 = 1e4;

impl ChainConfig {
    pub fn microwave_default(dev: &DeviceParams) -> Self {
        Self {
            path: ReadoutPath::MicrowaveOnly,
            readout_power_w: dbm_to_watts(PowerDbm(OPERATING_READOUT_DBM)).expect("finite"),
            readout_frequency_hz: crate::units::angular_to_hz(dev.qubit.omega_r),
            pulse_duration_s: 14e-6,
            integration_window_s: 13.2e-6,
            rest_time_s: 250e-6,
            pump: PumpSpec {
                power_w: 0.0,
                detuning_hz: None,
            },
            transduction_efficiency: 1.0,
            setup: dev.setup.clone(),
            excess_noise_photons: 0.0,
        }
    }

    /// Optical readout at 31 µW with the excess noise chosen so the budget
    /// totals 1e4 photons.
    pub fn optical_default(dev: &DeviceParams) -> Self {
        let mut cfg = Self::microwave_default(dev);
        cfg.path = ReadoutPath::Optical;
        cfg.pump.power_w = OPTICAL_FIXTURE_PUMP_W;
        cfg.transduction_efficiency = OPTICAL_FIXTURE_EFFICIENCY;
        let b = noise_budget(dev, &cfg, OPTICAL_FIXTURE_EFFICIENCY).expect("default budget");
        cfg.excess_noise_photons = OPTICAL_FIXTURE_TOTAL_PHOTONS - b.total_photons;
        cfg
    }

    pub fn readout_omega(&self) -> f64 {
        hz_to_angular(self.readout_frequency_hz)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(name, "must be non-negative"))
            }
        };
        nonneg("chain.readout_power_w", self.readout_power_w)?;
        nonneg("chain.rest_time_s", self.rest_time_s)?;
        nonneg("chain.pump.power_w", self.pump.power_w)?;
        nonneg("chain.excess_noise_photons", self.excess_noise_photons)?;
        nonneg("chain.setup.hemt_added_photons", self.setup.hemt_added_photons)?;
        if !(self.readout_frequency_hz > 0.0 && self.readout_frequency_hz.is_finite()) {
            return Err(Error::validation("chain.readout_frequency_hz", "must be positive"));
        }
        if !(self.pulse_duration_s > 0.0 && self.pulse_duration_s.is_finite()) {
            return Err(Error::validation("chain.pulse_duration_s", "must be positive"));
        }
        if !(self.integration_window_s > 0.0 && self.integration_window_s <= self.pulse_duration_s) {
            return Err(Error::validation(
                "chain.integration_window_s",
                "must be positive and no longer than the pulse",
            ));
        }
        if self.path == ReadoutPath::Optical {
            let unit = |name: &str, v: f64| {
                if v > 0.0 && v <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::validation(name, "out of (0,1]"))
                }
            };
            unit("chain.transduction_efficiency", self.transduction_efficiency)?;
            unit("chain.setup.sideband_alpha", self.setup.sideband_alpha)?;
            unit("chain.setup.eta_od", self.setup.eta_od)?;
        }
        Ok(())
    }
}

/// Input-referred added noise, in photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub shot_photons: f64,
    pub thermal_photons: f64,
    pub amplifier_photons: f64,
    pub excess_photons: f64,
    pub total_photons: f64,
    pub total_dbm_per_hz: f64,
}

impl NoiseBudget {
    fn from_components(shot: f64, thermal: f64, amplifier: f64, excess: f64, omega: f64) -> Self {
        let total = shot + thermal + amplifier + excess;
        let density_w = total * photon_energy(omega);
        let total_dbm_per_hz = if density_w > 0.0 {
            watts_to_dbm(density_w).map(|p| p.0).unwrap_or(f64::NEG_INFINITY)
        } else {
            f64::NEG_INFINITY
        };
        Self {
            shot_photons: shot,
            thermal_photons: thermal,
            amplifier_photons: amplifier,
            excess_photons: excess,
            total_photons: total,
            total_dbm_per_hz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IQShot {
    pub index: u64,
    pub prepared: QubitState,
    pub i: f64,
    pub q: f64,
}

/// Heterodyne shot noise referred to the transducer input: `2/(α η_c η_t)`.
pub fn added_shot_noise(alpha: f64, eta_c: f64, eta_t: f64) -> Result<f64> {
    for (name, v) in [("alpha", alpha), ("eta_c", eta_c), ("eta_t", eta_t)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(2.0 / (alpha * eta_c * eta_t))
}

/// `P_in / SNR`, the power of a tone that would match the thermal noise.
pub fn thermal_noise_equivalent_power(p_in: f64, snr_measured: f64) -> Result<f64> {
    if !(p_in > 0.0 && snr_measured > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "input power and SNR must be positive, got {p_in} W and {snr_measured}"
        )));
    }
    Ok(p_in / snr_measured)
}

/// Thermal noise equivalent power of the calibration fixture (W).
pub fn fixture_noise_equivalent_power(fixture: &ThermalFixture) -> Result<f64> {
    let p_in = dbm_to_watts(PowerDbm(fixture.tone_power_rt_dbm - fixture.line_attenuation_db))?;
    thermal_noise_equivalent_power(p_in, db_ratio(fixture.snr_db)?)
}

pub fn noise_budget(dev: &DeviceParams, cfg: &ChainConfig, eta_t_at_signal: f64) -> Result<NoiseBudget> {
    let omega = cfg.readout_omega();
    match cfg.path {
        ReadoutPath::MicrowaveOnly => Ok(NoiseBudget::from_components(
            0.0,
            0.0,
            cfg.setup.hemt_added_photons,
            cfg.excess_noise_photons,
            omega,
        )),
        ReadoutPath::Optical => {
            let shot = added_shot_noise(cfg.setup.sideband_alpha, cfg.setup.eta_od, eta_t_at_signal)?;
            let fx = &dev.thermal;
            let nep = fixture_noise_equivalent_power(fx)?;
            let referred = scale_thermal_noise(nep, fx.reference_efficiency, eta_t_at_signal)?;
            let thermal = referred.input_referred_w / (photon_energy(omega) * fx.noise_bandwidth_hz);
            Ok(NoiseBudget::from_components(
                shot,
                thermal,
                0.0,
                cfg.excess_noise_photons,
                omega,
            ))
        }
    }
}

/// Readout photons inside the integration window.
pub fn signal_photons(cfg: &ChainConfig) -> f64 {
    cfg.readout_power_w * cfg.integration_window_s / photon_energy(cfg.readout_omega())
}

pub fn snr(n_signal: f64, n_added: f64) -> f64 {
    (n_signal / n_added).sqrt()
}

/// Returns `(duty, p_avg)`.
pub fn duty_cycle_average_power(p_peak: f64, t_on: f64, t_period: f64) -> Result<(f64, f64)> {
    if !(t_on > 0.0 && t_on <= t_period) {
        return Err(Error::InvalidArgument(format!(
            "on time {t_on} s must be positive and at most the period {t_period} s"
        )));
    }
    let duty = t_on / t_period;
    Ok((duty, duty * p_peak))
}

/// Photon counts at each stage of the optical path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonBookkeeping {
    pub microwave_input: f64,
    pub optical_output: f64,
    pub detected: f64,
}

pub fn photon_bookkeeping(n_microwave: f64, eta_t: f64, eta_c: f64) -> PhotonBookkeeping {
    let optical_output = n_microwave * eta_t;
    PhotonBookkeeping {
        microwave_input: n_microwave,
        optical_output,
        detected: optical_output * eta_c,
    }
}

/// Draws shots for one prepared state. Each shot is a pure function of its
/// index, so any partition of the index range gives identical shots.
#[derive(Debug, Clone)]
pub struct ShotGenerator {
    prepared: QubitState,
    means: [Complex64; 2],
    sigma: f64,
    switching: crate::qubit::SwitchingProbs,
    switch_seed: SeedSpec,
    noise_seed: SeedSpec,
}

impl ShotGenerator {
    pub fn new(
        dev: &DeviceParams,
        cfg: &ChainConfig,
        demo: &DemolitionConfig,
        prepared: QubitState,
        seed: SeedSpec,
    ) -> Result<Self> {
        cfg.validate()?;
        demo.validate()?;
        let budget = noise_budget(dev, cfg, cfg.transduction_efficiency)?;
        let omega = cfg.readout_omega();
        let s0 = demolition_response(dev, demo, omega, cfg.readout_power_w, QubitState::Ground);
        let s1 = demolition_response(dev, demo, omega, cfg.readout_power_w, QubitState::Excited);
        let contrast = (s1 - s0).norm();
        // With no contrast both states map to the origin.
        let k = if contrast > 1e-15 {
            signal_photons(cfg).sqrt() / contrast
        } else {
            0.0
        };
        let state_seed = seed.substream(prepared.bit() as u64);
        Ok(Self {
            prepared,
            means: [s0 * k, s1 * k],
            sigma: budget.total_photons.sqrt(),
            switching: demo.switching,
            switch_seed: state_seed.substream(SWITCH_STREAM),
            noise_seed: state_seed.substream(NOISE_STREAM),
        })
    }

    pub fn mean(&self, state: QubitState) -> Complex64 {
        self.means[state.bit() as usize]
    }

    /// Per-quadrature noise standard deviation.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn shot(&self, index: u64) -> IQShot {
        let actual = switching_outcome(self.prepared, &self.switching, &self.switch_seed, index);
        let mut rng = self.noise_seed.rng_at(index);
        let ni: f64 = StandardNormal.sample(&mut rng);
        let nq: f64 = StandardNormal.sample(&mut rng);
        let m = self.mean(actual);
        IQShot {
            index,
            prepared: self.prepared,
            i: m.re + self.sigma * ni,
            q: m.im + self.sigma * nq,
        }
    }

    pub fn shots(&self, range: std::ops::Range<u64>) -> Vec<IQShot> {
        range.into_par_iter().map(|i| self.shot(i)).collect()
    }
}

pub fn generate_shots(
    dev: &DeviceParams,
    cfg: &ChainConfig,
    demo: &DemolitionConfig,
    n_shots: usize,
    prepared: QubitState,
    seed: SeedSpec,
) -> Result<Vec<IQShot>> {
    if n_shots == 0 {
        return Err(Error::InvalidArgument("n_shots must be positive".into()));
    }
    Ok(ShotGenerator::new(dev, cfg, demo, prepared, seed)?.shots(0..n_shots as u64))
}

#[derive(Serialize)]
struct ShotRow {
    index: u64,
    prepared_state: QubitState,
    i: f64,
    q: f64,
}

pub fn write_shots_csv<W: Write>(shots: &[IQShot], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in shots {
        w.serialize(ShotRow {
            index: s.index,
            prepared_state: s.prepared,
            i: s.i,
            q: s.q,
        })?;
    }
    w.flush().map_err(|e| Error::io("writing shots", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::default_paper_device;
    use crate::qubit::SwitchingProbs;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn shot_noise_examples() {
        assert_eq!(added_shot_noise(1.0, 1.0, 1.0).unwrap(), 2.0);
        let n = added_shot_noise(0.17, 0.43, 0.02).unwrap();
        assert!(rel(n, 2.0 / (0.17 * 0.43 * 0.02)) < 1e-12);
        assert!((n - 1.368e3).abs() < 1.0, "{n}");
        assert_eq!(added_shot_noise(0.17, 0.43, 0.01).unwrap(), 2.0 * n);
        assert!(added_shot_noise(0.0, 0.43, 0.02).is_err());
        assert!(added_shot_noise(0.17, -1.0, 0.02).is_err());
    }

    #[test]
    fn thermal_nep_examples() {
        let d = default_paper_device();
        let nep = fixture_noise_equivalent_power(&d.thermal).unwrap();
        assert!((watts_to_dbm(nep).unwrap().0 + 153.9).abs() < 0.05);
        assert_eq!(thermal_noise_equivalent_power(3e-13, 1.0).unwrap(), 3e-13);
        let p = thermal_noise_equivalent_power(3e-13, 10.0).unwrap();
        assert!(rel(p, 3e-14) < 1e-15);
        assert!(thermal_noise_equivalent_power(0.0, 1.0).is_err());
    }

    #[test]
    fn microwave_budget_is_hemt_limited() {
        let d = default_paper_device();
        let cfg = ChainConfig::microwave_default(&d);
        let b = noise_budget(&d, &cfg, 1.0).unwrap();
        assert_eq!(b.total_photons, 17.0);
        assert_eq!(b.shot_photons, 0.0);
    }

    #[test]
    fn optical_budget_fixture() {
        let d = default_paper_device();
        let cfg = ChainConfig::optical_default(&d);
        let b = noise_budget(&d, &cfg, 0.02).unwrap();
        assert!(rel(b.total_photons, 1e4) < 1e-12);
        assert!(b.thermal_photons < 1.0 && b.thermal_photons > 0.0);
        assert!(b.excess_photons > 8e3);
        let mut bare = cfg.clone();
        bare.excess_noise_photons = 0.0;
        let b0 = noise_budget(&d, &bare, 0.02).unwrap();
        assert!(rel(b0.total_photons, 1.368e3) < 0.01);
        // ħω·n at 5.19 GHz for 1e4 photons
        let expected = watts_to_dbm(1e4 * photon_energy(cfg.readout_omega())).unwrap().0;
        assert!((b.total_dbm_per_hz - expected).abs() < 1e-9);
    }

    #[test]
    fn unit_budget_limit() {
        let d = default_paper_device();
        let mut cfg = ChainConfig::optical_default(&d);
        cfg.setup.sideband_alpha = 1.0;
        cfg.setup.eta_od = 1.0;
        cfg.excess_noise_photons = 0.0;
        let b = noise_budget(&d, &cfg, 1.0).unwrap();
        assert_eq!(b.shot_photons, 2.0);
    }

    #[test]
    fn signal_photon_examples() {
        let d = default_paper_device();
        let mut cfg = ChainConfig::microwave_default(&d);
        let n = signal_photons(&cfg);
        assert!((n - 1.0e5).abs() < 0.05e5, "{n}");
        cfg.integration_window_s *= 0.5;
        assert!(rel(signal_photons(&cfg), n / 2.0) < 1e-15);
        cfg.readout_power_w = 0.0;
        assert_eq!(signal_photons(&cfg), 0.0);
    }

    #[test]
    fn snr_examples() {
        assert!((snr(1.1e5, 17.0) - 80.4).abs() < 0.1);
        assert!((snr(1.1e5, 1e4) - 3.32).abs() < 0.01);
        assert_eq!(snr(5.0, 5.0), 1.0);
        let d = default_paper_device();
        let mw = ChainConfig::microwave_default(&d);
        let op = ChainConfig::optical_default(&d);
        let ratio = snr(signal_photons(&mw), 17.0) / snr(signal_photons(&op), 1e4);
        assert!((20.0..30.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn duty_cycle_examples() {
        let (duty, avg) = duty_cycle_average_power(31e-6, 14e-6, 264e-6).unwrap();
        assert!((duty - 0.0530).abs() < 5e-5);
        assert!((avg - 1.64e-6).abs() < 0.005e-6);
        assert_eq!(duty_cycle_average_power(31e-6, 5e-6, 5e-6).unwrap(), (1.0, 31e-6));
        assert_eq!(duty_cycle_average_power(0.0, 1e-6, 5e-6).unwrap().1, 0.0);
        assert!(duty_cycle_average_power(1.0, 6e-6, 5e-6).is_err());
    }

    #[test]
    fn bookkeeping_matches_product() {
        let b = photon_bookkeeping(1.0e5, 0.02, 0.43);
        assert!(rel(b.detected, 1.0e5 * 0.02 * 0.43) < 1e-12);
        assert!(rel(b.optical_output, 2.0e3) < 1e-12);
    }

    #[test]
    fn shots_are_deterministic_and_partition_invariant() {
        let d = default_paper_device();
        let cfg = ChainConfig::optical_default(&d);
        let demo = DemolitionConfig::default();
        let seed = SeedSpec::new(11, 3);
        let a = generate_shots(&d, &cfg, &demo, 2000, QubitState::Excited, seed).unwrap();
        let b = generate_shots(&d, &cfg, &demo, 2000, QubitState::Excited, seed).unwrap();
        assert_eq!(a, b);
        let g = ShotGenerator::new(&d, &cfg, &demo, QubitState::Excited, seed).unwrap();
        let mut chunked = g.shots(0..700);
        chunked.extend(g.shots(700..1313));
        chunked.extend((1313..2000).map(|i| g.shot(i)));
        assert_eq!(a, chunked);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| g.shots(0..2000));
        assert_eq!(a, serial);
        let other = generate_shots(&d, &cfg, &demo, 2000, QubitState::Ground, seed).unwrap();
        assert_ne!(a[0].i, other[0].i);
    }

    #[test]
    fn noiseless_clusters_have_zero_radius() {
        let d = default_paper_device();
        let mut cfg = ChainConfig::microwave_default(&d);
        cfg.setup.hemt_added_photons = 0.0;
        let demo = DemolitionConfig {
            switching: SwitchingProbs::NONE,
            ..DemolitionConfig::default()
        };
        let seed = SeedSpec::new(5, 0);
        let g0 = generate_shots(&d, &cfg, &demo, 100, QubitState::Ground, seed).unwrap();
        let g1 = generate_shots(&d, &cfg, &demo, 100, QubitState::Excited, seed).unwrap();
        assert!(g0.iter().all(|s| s.i == g0[0].i && s.q == g0[0].q));
        assert!(g1.iter().all(|s| s.i == g1[0].i && s.q == g1[0].q));
        let sep = ((g0[0].i - g1[0].i).powi(2) + (g0[0].q - g1[0].q).powi(2)).sqrt();
        assert!(rel(sep, signal_photons(&cfg).sqrt()) < 1e-9);
    }

    #[test]
    fn empirical_separation_matches_snr() {
        let d = default_paper_device();
        let cfg = ChainConfig::optical_default(&d);
        let demo = DemolitionConfig {
            switching: SwitchingProbs::NONE,
            ..DemolitionConfig::default()
        };
        let seed = SeedSpec::new(99, 0);
        let n = 20_000;
        let mean = |v: &[IQShot]| {
            let (si, sq) = v.iter().fold((0.0, 0.0), |a, s| (a.0 + s.i, a.1 + s.q));
            (si / v.len() as f64, sq / v.len() as f64)
        };
        let g0 = generate_shots(&d, &cfg, &demo, n, QubitState::Ground, seed).unwrap();
        let g1 = generate_shots(&d, &cfg, &demo, n, QubitState::Excited, seed).unwrap();
        let (m0, m1) = (mean(&g0), mean(&g1));
        let var = g0.iter().map(|s| (s.i - m0.0).powi(2)).sum::<f64>() / n as f64;
        let sep = ((m0.0 - m1.0).powi(2) + (m0.1 - m1.1).powi(2)).sqrt();
        let expected = snr(signal_photons(&cfg), 1e4);
        assert!(rel(sep / var.sqrt(), expected) < 0.03, "{}", sep / var.sqrt());
    }

    #[test]
    fn csv_columns() {
        let shots = vec![IQShot {
            index: 0,
            prepared: QubitState::Excited,
            i: 1.5,
            q: -2.0,
        }];
        let mut buf = Vec::new();
        write_shots_csv(&shots, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,prepared_state,i,q\n0,excited,1.5,-2.0\n");
    }

    #[test]
    fn config_validation_names_field() {
        let d = default_paper_device();
        let mut cfg = ChainConfig::microwave_default(&d);
        cfg.integration_window_s = 20e-6;
        let e = cfg.validate().unwrap_err().to_string();
        assert!(e.contains("chain.integration_window_s"), "{e}");
        let mut cfg = ChainConfig::optical_default(&d);
        cfg.transduction_efficiency = 0.0;
        assert!(cfg.validate().is_err());
    }

    proptest! {
        #[test]
        fn budget_is_additive(alpha in 0.01f64..1.0, eta_c in 0.01f64..1.0, eta_t in 1e-4f64..1.0,
                              excess in 0.0f64..1e5, optical: bool) {
            let d = default_paper_device();
            let mut cfg = if optical { ChainConfig::optical_default(&d) } else { ChainConfig::microwave_default(&d) };
            cfg.setup.sideband_alpha = alpha;
            cfg.setup.eta_od = eta_c;
            cfg.excess_noise_photons = excess;
            let b = noise_budget(&d, &cfg, eta_t).unwrap();
            for c in [b.shot_photons, b.thermal_photons, b.amplifier_photons, b.excess_photons] {
                prop_assert!(c >= 0.0);
            }
            prop_assert_eq!(b.total_photons, b.shot_photons + b.thermal_photons + b.amplifier_photons + b.excess_photons);
        }
    }
}
