//! Dispersive qubit–resonator physics and coherent-dynamics probabilities.
//!
//! Sign conventions: the AC Stark shift lowers the qubit frequency as the
//! readout power grows. In the dispersive regime the resonator sits at
//! `ω_r' + χ` with the qubit in |0⟩ and at `ω_r' − χ` in |1⟩.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::rng::SeedSpec;
use crate::units::PHYS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitState {
    Ground,
    Excited,
}

impl QubitState {
    pub fn flipped(self) -> Self {
        match self {
            QubitState::Ground => QubitState::Excited,
            QubitState::Excited => QubitState::Ground,
        }
    }

    /// 0 for |0⟩, 1 for |1⟩.
    pub fn bit(self) -> u8 {
        match self {
            QubitState::Ground => 0,
            QubitState::Excited => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            QubitState::Ground
        } else {
            QubitState::Excited
        }
    }
}

/// Probability that the qubit is found in the other state at readout,
/// per prepared state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchingProbs {
    pub ground: f64,
    pub excited: f64,
}

impl SwitchingProbs {
    pub const NONE: SwitchingProbs = SwitchingProbs {
        ground: 0.0,
        excited: 0.0,
    };

    pub fn for_state(&self, state: QubitState) -> f64 {
        match state {
            QubitState::Ground => self.ground,
            QubitState::Excited => self.excited,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("switching.ground", self.ground), ("switching.excited", self.excited)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(name, "out of [0,1]"));
            }
        }
        Ok(())
    }
}

impl Default for SwitchingProbs {
    fn default() -> Self {
        // Microwave-only readout at SNR ~78 is limited entirely by these
        // events; 13% per state gives F = 0.87.
        Self {
            ground: 0.13,
            excited: 0.13,
        }
    }
}

/// Phenomenological high-power ("bright state") readout response.
///
/// As the intracavity photon number crosses `n_crit` for the prepared state,
/// the resonator centre moves from its dressed value to the bare frequency,
/// following a logistic curve in `ln n̄` of width `crossover_width`. While it
/// is still dressed, the response is broadened by `n̄ / n_disp` with
/// `n_disp = (Δ/2g)²`, which washes out the dressed notch at high power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemolitionConfig {
    pub n_crit_ground: f64,
    pub n_crit_excited: f64,
    pub crossover_width: f64,
    #[serde(default)]
    pub switching: SwitchingProbs,
}

impl Default for DemolitionConfig {
    fn default() -> Self {
        Self {
            n_crit_ground: DEFAULT_N_CRIT_GROUND,
            n_crit_excited: DEFAULT_N_CRIT_EXCITED,
            crossover_width: DEFAULT_CROSSOVER_WIDTH,
            switching: SwitchingProbs::default(),
        }
    }
}

// Chosen so the largest |0⟩/|1⟩ contrast at the bare frequency falls at
// n̄ ≈ 8.75e3, the −105.8 dBm operating point.
const DEFAULT_N_CRIT_GROUND: f64 = 8.46e3;
const DEFAULT_N_CRIT_EXCITED: f64 = 9.4e2;
const DEFAULT_CROSSOVER_WIDTH: f64 = 0.25;

impl DemolitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_crit_ground > 0.0 && self.n_crit_ground.is_finite()) {
            return Err(Error::validation("demolition.n_crit_ground", "must be positive"));
        }
        if !(self.n_crit_excited > 0.0 && self.n_crit_excited.is_finite()) {
            return Err(Error::validation("demolition.n_crit_excited", "must be positive"));
        }
        if self.n_crit_ground == self.n_crit_excited {
            return Err(Error::validation(
                "demolition.n_crit_excited",
                "must differ from n_crit_ground",
            ));
        }
        if !(self.crossover_width > 0.0 && self.crossover_width.is_finite()) {
            return Err(Error::validation("demolition.crossover_width", "must be positive"));
        }
        self.switching.validate()
    }

    pub fn n_crit(&self, state: QubitState) -> f64 {
        match state {
            QubitState::Ground => self.n_crit_ground,
            QubitState::Excited => self.n_crit_excited,
        }
    }

    /// Fraction of the way to the bare regime, in `[0, 1]`.
    pub fn bare_fraction(&self, n_bar: f64, state: QubitState) -> f64 {
        if n_bar <= 0.0 {
            return 0.0;
        }
        let x = (n_bar.ln() - self.n_crit(state).ln()) / self.crossover_width;
        1.0 / (1.0 + (-x).exp())
    }
}

/// Intracavity photon number for an on-resonance drive of power `p_in` (W)
/// at the resonator input: `n̄ = 4/(ħω₀) · κ_ext/κ_tot² · P`.
/// `p_in` must be non-negative.
pub fn intracavity_photons(dev: &DeviceParams, p_in: f64) -> f64 {
    let q = &dev.qubit;
    let k = q.kappa_re();
    4.0 / (PHYS.hbar * q.omega_r_dressed) * q.kappa_ree / (k * k) * p_in
}

/// AC Stark shift of the qubit (rad/s): `−2 n̄ χ`.
pub fn stark_shift(n_bar: f64, chi: f64) -> f64 {
    -2.0 * n_bar * chi
}

/// Photon number above which the dispersive approximation fails, `(Δ/2g)²`.
pub fn critical_photon_number(dev: &DeviceParams) -> f64 {
    let q = &dev.qubit;
    let delta = q.omega_r - q.omega_q;
    (delta / (2.0 * q.g)).powi(2)
}

/// Excited-state probability after a drive of Rabi rate `rabi_rate`,
/// detuning `detuning` and length `duration`, starting in |0⟩.
pub fn rabi_excited_prob(detuning: f64, duration: f64, rabi_rate: f64) -> f64 {
    let gen2 = rabi_rate * rabi_rate + detuning * detuning;
    if gen2 == 0.0 {
        return 0.0;
    }
    let s = (gen2.sqrt() * duration / 2.0).sin();
    rabi_rate * rabi_rate / gen2 * s * s
}

/// Ramsey fringe: `½[1 + e^(−t/T2*) cos(δt + φ)]`.
pub fn ramsey_excited_prob(delay: f64, detuning: f64, t2_star: f64, phase: f64) -> f64 {
    0.5 * (1.0 + (-delay / t2_star).exp() * (detuning * delay + phase).cos())
}

pub fn t1_excited_prob(delay: f64, t1: f64) -> f64 {
    (-delay / t1).exp()
}

/// Resonator centre frequency and effective linewidth for the prepared
/// state at drive power `p_in` (W).
pub fn demolition_resonator(
    dev: &DeviceParams,
    demo: &DemolitionConfig,
    p_in: f64,
    state: QubitState,
) -> (f64, f64) {
    let q = &dev.qubit;
    let n_bar = intracavity_photons(dev, p_in);
    let bare = demo.bare_fraction(n_bar, state);
    let dressed = match state {
        QubitState::Ground => q.omega_r_dressed + q.chi,
        QubitState::Excited => q.omega_r_dressed - q.chi,
    };
    let center = q.omega_r + (dressed - q.omega_r) * (1.0 - bare);
    let broadening = 1.0 + (1.0 - bare) * n_bar / critical_photon_number(dev);
    (center, q.kappa_re() * broadening)
}

/// Side-coupled notch transmission `1 − (κ_ext/κ)/(1 + 2i(ω − ω_c)/κ)`.
pub fn notch_transmission(omega: f64, center: f64, kappa_ext: f64, kappa_total: f64) -> Complex64 {
    let denom = Complex64::new(1.0, 2.0 * (omega - center) / kappa_total);
    Complex64::new(1.0, 0.0) - (kappa_ext / kappa_total) / denom
}

/// Transmission of the readout line at `omega_probe` for drive power `p_in`
/// (W at the resonator) and prepared `state`.
pub fn demolition_response(
    dev: &DeviceParams,
    demo: &DemolitionConfig,
    omega_probe: f64,
    p_in: f64,
    state: QubitState,
) -> Complex64 {
    let (center, kappa) = demolition_resonator(dev, demo, p_in, state);
    notch_transmission(omega_probe, center, dev.qubit.kappa_ree, kappa)
}

/// Applies an uncontrolled switching event with the configured probability.
/// The decision is the uniform draw at `index` of `seed`.
pub fn switching_outcome(
    state: QubitState,
    probs: &SwitchingProbs,
    seed: &SeedSpec,
    index: u64,
) -> QubitState {
    let u: f64 = seed.rng_at(index).random();
    if u < probs.for_state(state) {
        state.flipped()
    } else {
        state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::default_paper_device;
    use crate::units::{dbm_to_watts, PowerDbm};
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    /// Fourth-order Runge–Kutta integration of the driven two-level
    /// Schrödinger equation in the rotating frame,
    /// `i dc/dt = H c` with `H = ½[[−Δ, Ω], [Ω, Δ]]`.
    fn rabi_ode(detuning: f64, duration: f64, rabi: f64) -> f64 {
        let i = Complex64::new(0.0, 1.0);
        let deriv = |c: [Complex64; 2]| -> [Complex64; 2] {
            [
                -i * 0.5 * (-detuning * c[0] + rabi * c[1]),
                -i * 0.5 * (rabi * c[0] + detuning * c[1]),
            ]
        };
        let steps = 2000;
        let h = duration / steps as f64;
        let mut c = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let add = |a: [Complex64; 2], b: [Complex64; 2], s: f64| [a[0] + b[0] * s, a[1] + b[1] * s];
        for _ in 0..steps {
            let k1 = deriv(c);
            let k2 = deriv(add(c, k1, h / 2.0));
            let k3 = deriv(add(c, k2, h / 2.0));
            let k4 = deriv(add(c, k3, h));
            for j in 0..2 {
                c[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
            }
        }
        c[1].norm_sqr()
    }

    #[test]
    fn photon_number_at_operating_point() {
        let d = default_paper_device();
        assert_eq!(intracavity_photons(&d, 0.0), 0.0);
        let p = dbm_to_watts(PowerDbm(-105.8)).unwrap();
        let n = intracavity_photons(&d, p);
        assert!((n - 8.8e3).abs() < 0.1e3, "{n}");
        assert!((n.sqrt() - 94.0).abs() < 1.0);
        assert_eq!(intracavity_photons(&d, 2.0 * p), 2.0 * n);
    }

    #[test]
    fn stark_shift_examples() {
        let chi = TAU * 512e3;
        assert_eq!(stark_shift(0.0, chi), 0.0);
        assert!((stark_shift(1.0, chi).abs() / TAU - 1.024e6).abs() < 1e-6);
        assert!((stark_shift(100.0, chi).abs() / TAU - 102.4e6).abs() < 1e-4);
        assert!(stark_shift(5.0, chi) < 0.0);
    }

    #[test]
    fn stark_shift_is_linear_in_power() {
        let d = default_paper_device();
        let s1 = stark_shift(intracavity_photons(&d, 1e-16), d.qubit.chi);
        let s3 = stark_shift(intracavity_photons(&d, 3e-16), d.qubit.chi);
        assert!((s3 / s1 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rabi_examples() {
        let omega = TAU * 5e6;
        assert!((rabi_excited_prob(0.0, PI / omega, omega) - 1.0).abs() < 1e-15);
        assert_eq!(rabi_excited_prob(0.0, 0.0, omega), 0.0);
        // Δ = Ω: P = ½ sin²(π/√2)
        let expected = 0.5 * (PI / 2f64.sqrt()).sin().powi(2);
        assert!((rabi_excited_prob(omega, PI / omega, omega) - expected).abs() < 1e-12);
        assert!((rabi_ode(omega, PI / omega, omega) - expected).abs() < 1e-6);
    }

    #[test]
    fn rabi_matches_ode_on_grid() {
        let omega = TAU * 2e6;
        for a in 0..20 {
            let detuning = -2.0 * omega + 4.0 * omega * a as f64 / 19.0;
            for b in 0..20 {
                let t = 2.0e-6 * b as f64 / 19.0;
                let exact = rabi_excited_prob(detuning, t, omega);
                let ode = if t == 0.0 { 0.0 } else { rabi_ode(detuning, t, omega) };
                assert!((exact - ode).abs() < 1e-6, "Δ={detuning} t={t}: {exact} vs {ode}");
            }
        }
    }

    #[test]
    fn ramsey_and_t1_examples() {
        assert_eq!(ramsey_excited_prob(0.0, TAU * 1e6, 9e-6, 0.0), 1.0);
        assert!((ramsey_excited_prob(1.0, TAU * 1e6, 9e-6, 0.3) - 0.5).abs() < 1e-12);
        assert_eq!(t1_excited_prob(0.0, 60e-6), 1.0);
        assert!((t1_excited_prob(60e-6, 60e-6) - (-1f64).exp()).abs() < 1e-15);
        assert!((t1_excited_prob(60e-6, 60.2e-6) - 0.369).abs() < 5e-4);
    }

    #[test]
    fn low_power_notches_split_by_two_chi() {
        let d = default_paper_device();
        let demo = DemolitionConfig::default();
        let p = 1e-26;
        let (c0, k0) = demolition_resonator(&d, &demo, p, QubitState::Ground);
        let (c1, _) = demolition_resonator(&d, &demo, p, QubitState::Excited);
        assert!(((c0 - c1) / (2.0 * d.qubit.chi) - 1.0).abs() < 1e-6);
        assert!((k0 / d.qubit.kappa_re() - 1.0).abs() < 1e-6);
        let depth = demolition_response(&d, &demo, c0, p, QubitState::Ground).norm();
        assert!((depth - d.qubit.kappa_rei / d.qubit.kappa_re()).abs() < 1e-6);
    }

    #[test]
    fn high_power_states_are_identical() {
        let d = default_paper_device();
        let demo = DemolitionConfig::default();
        let p = 1e-9;
        for f in [5.1935e9, 5.1944e9, 5.198e9] {
            let t0 = demolition_response(&d, &demo, TAU * f, p, QubitState::Ground);
            let t1 = demolition_response(&d, &demo, TAU * f, p, QubitState::Excited);
            assert!((t0 - t1).norm() < 1e-6);
        }
    }

    #[test]
    fn switching_limits() {
        let seed = SeedSpec::new(1, 2);
        for i in 0..1000 {
            assert_eq!(
                switching_outcome(QubitState::Ground, &SwitchingProbs::NONE, &seed, i),
                QubitState::Ground
            );
            let all = SwitchingProbs {
                ground: 1.0,
                excited: 1.0,
            };
            assert_eq!(
                switching_outcome(QubitState::Excited, &all, &seed, i),
                QubitState::Ground
            );
        }
    }

    #[test]
    fn switching_rate_converges() {
        let seed = SeedSpec::new(2024, 0);
        let probs = SwitchingProbs {
            ground: 0.13,
            excited: 0.13,
        };
        let n = 1_000_000u64;
        let flips = (0..n)
            .filter(|&i| switching_outcome(QubitState::Excited, &probs, &seed, i) == QubitState::Ground)
            .count();
        let rate = flips as f64 / n as f64;
        assert!((rate - 0.13).abs() < 0.001, "{rate}");
    }

    #[test]
    fn demolition_config_validation() {
        let mut c = DemolitionConfig::default();
        c.validate().unwrap();
        c.n_crit_excited = c.n_crit_ground;
        assert!(c.validate().is_err());
        let c = DemolitionConfig {
            crossover_width: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let mut c = DemolitionConfig::default();
        c.switching.ground = 1.5;
        assert!(c.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn probabilities_are_bounded(
            det in -1e8f64..1e8, t in 0.0f64..1e-4, rabi in 1e3f64..1e8,
            t2 in 1e-7f64..1e-3, phase in -10.0f64..10.0, t1 in 1e-7f64..1e-3,
        ) {
            for p in [
                rabi_excited_prob(det, t, rabi),
                ramsey_excited_prob(t, det, t2, phase),
                t1_excited_prob(t, t1),
            ] {
                prop_assert!((0.0..=1.0).contains(&p), "{}", p);
            }
        }

        #[test]
        fn response_magnitude_is_bounded(f in 5.18e9f64..5.21e9, dbm in -160.0f64..-60.0, excited: bool) {
            let d = default_paper_device();
            let demo = DemolitionConfig::default();
            let state = if excited { QubitState::Excited } else { QubitState::Ground };
            let p = dbm_to_watts(PowerDbm(dbm)).unwrap();
            let m = demolition_response(&d, &demo, TAU * f, p, state).norm();
            let floor = d.qubit.kappa_rei / d.qubit.kappa_re();
            prop_assert!(m >= floor - 1e-12 && m <= 1.0 + 1e-12, "{}", m);
        }

        #[test]
        fn response_is_continuous(f in 5.19e9f64..5.20e9, dbm in -150.0f64..-80.0) {
            let d = default_paper_device();
            let demo = DemolitionConfig::default();
            let p = dbm_to_watts(PowerDbm(dbm)).unwrap();
            let base = demolition_response(&d, &demo, TAU * f, p, QubitState::Excited);
            let dp = demolition_response(&d, &demo, TAU * f, p * (1.0 + 1e-9), QubitState::Excited);
            let df = demolition_response(&d, &demo, TAU * (f + 1e-3), p, QubitState::Excited);
            prop_assert!((base - dp).norm() < 1e-6);
            prop_assert!((base - df).norm() < 1e-6);
        }
    }
}
