//! Physical constants and unit conversions.
//!
//! Frequencies are carried internally as angular frequency (rad/s). Helpers
//! for converting to and from Hz live here so that file I/O stays in Hz.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants (CODATA 2018 exact / recommended values).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysConstants {
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Elementary charge (C).
    pub elementary_charge: f64,
}

pub const PHYS: PhysConstants = PhysConstants {
    hbar: 1.054_571_817e-34,
    elementary_charge: 1.602_176_634e-19,
};

impl Default for PhysConstants {
    fn default() -> Self {
        PHYS
    }
}

/// Power in decibel-milliwatts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerDbm(pub f64);

impl PowerDbm {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "power in dBm must be finite, got {value}"
            )));
        }
        Ok(PowerDbm(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_watts(self) -> Result<f64> {
        dbm_to_watts(self)
    }

    pub fn from_watts(watts: f64) -> Result<Self> {
        watts_to_dbm(watts)
    }
}

/// `1e-3 · 10^(p/10)` watts.
pub fn dbm_to_watts(p: PowerDbm) -> Result<f64> {
    if !p.0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "power in dBm must be finite, got {}",
            p.0
        )));
    }
    Ok(1e-3 * 10f64.powf(p.0 / 10.0))
}

pub fn watts_to_dbm(watts: f64) -> Result<PowerDbm> {
    if !(watts.is_finite() && watts > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "power must be positive and finite to express in dBm, got {watts} W"
        )));
    }
    Ok(PowerDbm(10.0 * (watts / 1e-3).log10()))
}

/// Photon flux (photons/s) carried by power `p` (W) at angular frequency `omega`.
pub fn photon_flux(p: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "angular frequency must be positive, got {omega}"
        )));
    }
    if !(p >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "power must be non-negative, got {p}"
        )));
    }
    Ok(p / (PHYS.hbar * omega))
}

/// Energy of a single photon at angular frequency `omega` (J).
pub fn photon_energy(omega: f64) -> f64 {
    PHYS.hbar * omega
}

/// `10^(db/10)`.
pub fn db_ratio(db: f64) -> Result<f64> {
    if !db.is_finite() {
        return Err(Error::InvalidArgument(format!("dB value must be finite, got {db}")));
    }
    Ok(10f64.powf(db / 10.0))
}

/// Inverse of [`db_ratio`].
pub fn ratio_db(ratio: f64) -> Result<f64> {
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ratio must be positive and finite, got {ratio}"
        )));
    }
    Ok(10.0 * ratio.log10())
}

#[inline]
pub fn hz_to_angular(hz: f64) -> f64 {
    TAU * hz
}

#[inline]
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / TAU
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn dbm_examples() {
        assert_eq!(dbm_to_watts(PowerDbm(0.0)).unwrap(), 1.0e-3);
        // 1e-3 * 10^-10.58 = 2.6302679918953817e-14
        assert_relative_eq!(
            dbm_to_watts(PowerDbm(-105.8)).unwrap(),
            2.630_267_991_895_38e-14,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            dbm_to_watts(PowerDbm(-97.2)).unwrap(),
            1.905_460_717_963_24e-13,
            max_relative = 1e-12
        );
        assert!(dbm_to_watts(PowerDbm(f64::NAN)).is_err());
        assert!(PowerDbm::new(f64::INFINITY).is_err());
    }

    #[test]
    fn photon_flux_examples() {
        assert_eq!(photon_flux(0.0, 1.0).unwrap(), 0.0);
        let omega = hz_to_angular(5.1944e9);
        let flux = photon_flux(2.63e-14, omega).unwrap();
        assert!((flux - 7.65e9).abs() / 7.65e9 < 2e-3, "{flux}");
        let omega = 1.234e10;
        assert_relative_eq!(
            photon_flux(PHYS.hbar * omega, omega).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert!(photon_flux(1.0, 0.0).is_err());
        assert!(photon_flux(1.0, -1.0).is_err());
    }

    #[test]
    fn db_ratio_examples() {
        assert_eq!(db_ratio(0.0).unwrap(), 1.0);
        assert_relative_eq!(db_ratio(-3.0).unwrap(), 0.501_187_233_627_272_3, max_relative = 1e-12);
        assert_relative_eq!(db_ratio(56.7).unwrap(), 467_735.141_287_198_2, max_relative = 1e-12);
        assert!(db_ratio(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn dbm_round_trip(p in -200.0f64..30.0) {
            let w = dbm_to_watts(PowerDbm(p)).unwrap();
            let back = watts_to_dbm(w).unwrap().0;
            let w2 = dbm_to_watts(PowerDbm(back)).unwrap();
            prop_assert!(((w2 - w) / w).abs() < 1e-12);
            prop_assert!((back - p).abs() <= 1e-12 * p.abs().max(1.0));
        }

        #[test]
        fn db_round_trip(db in -150.0f64..150.0) {
            let r = db_ratio(db).unwrap();
            let back = ratio_db(r).unwrap();
            prop_assert!((db_ratio(back).unwrap() - r).abs() / r < 1e-12);
        }

        #[test]
        fn photon_flux_is_linear(p in 0.0f64..1e-3, a in 0.0f64..1e3, f in 1e6f64..1e15) {
            let omega = hz_to_angular(f);
            let lhs = photon_flux(a * p, omega).unwrap();
            let rhs = a * photon_flux(p, omega).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-15 * rhs.abs().max(f64::MIN_POSITIVE));
        }
    }
}
