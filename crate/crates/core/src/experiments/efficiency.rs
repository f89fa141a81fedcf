//! Conversion efficiency over signal frequency, microwave detuning and pump
//! power.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{csv_bytes, Context, ExperimentOutput, Grid};
use crate::error::{Error, Result};
use crate::estimate::linear_fit;
use crate::transducer::{efficiency_spectrum, resolve_peak, PumpConfig, PumpSpec};
use crate::units::{angular_to_hz, hz_to_angular};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EfficiencyMapParams {
    pub pump: PumpSpec,
    pub signal_frequency_hz: Grid,
    pub microwave_detuning_hz: Grid,
    pub power_sweep_w: Grid,
}

impl Default for EfficiencyMapParams {
    fn default() -> Self {
        Self {
            pump: PumpSpec {
                power_w: 3.1e-6,
                detuning_hz: None,
            },
            signal_frequency_hz: Grid::linear(5.188e9, 5.208e9, 401),
            microwave_detuning_hz: Grid::linear(-15e6, 15e6, 31),
            power_sweep_w: Grid::log(0.1e-6, 10e-6, 21),
        }
    }
}

impl EfficiencyMapParams {
    pub(super) fn validate(&self, prefix: &str) -> Result<()> {
        self.signal_frequency_hz
            .validate(&format!("{prefix}.signal_frequency_hz"))?;
        self.microwave_detuning_hz
            .validate(&format!("{prefix}.microwave_detuning_hz"))?;
        self.power_sweep_w.validate(&format!("{prefix}.power_sweep_w"))?;
        if self.signal_frequency_hz.points < 2 || !(self.signal_frequency_hz.stop > self.signal_frequency_hz.start) {
            return Err(Error::validation(
                format!("{prefix}.signal_frequency_hz"),
                "must be ascending with at least two points",
            ));
        }
        if !(self.pump.power_w >= 0.0 && self.pump.power_w.is_finite()) {
            return Err(Error::validation(format!("{prefix}.pump.power_w"), "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapRow {
    pub frequency_hz: f64,
    pub detuning_hz: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerRow {
    pub pump_power_w: f64,
    pub peak_frequency_hz: f64,
    pub peak_eta: f64,
    pub peak_eta_db: f64,
    pub fwhm_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyMapSummary {
    pub pump_power_w: f64,
    /// `None` when the pump is off.
    pub peak_frequency_hz: Option<f64>,
    pub peak_eta: f64,
    pub peak_eta_db: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    /// Spread of the per-detuning peak efficiency (max − min, dB).
    pub detuning_variation_db: Option<f64>,
    pub power_law_slope: Option<f64>,
    pub power_law_slope_sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyMapOutput {
    pub map: Vec<MapRow>,
    pub power_sweep: Vec<PowerRow>,
    pub summary: EfficiencyMapSummary,
}

fn db(x: f64) -> Option<f64> {
    (x > 0.0).then(|| 10.0 * x.log10())
}

pub fn run_efficiency_map(ctx: &Context, p: &EfficiencyMapParams) -> Result<EfficiencyMapOutput> {
    let dev = &ctx.device;
    let pump = p.pump.resolve(dev);
    pump.validate(&dev.transducer)?;
    let freqs: Vec<f64> = p.signal_frequency_hz.values().into_iter().map(hz_to_angular).collect();
    let detunings = p.microwave_detuning_hz.values();

    let spectra = detunings
        .par_iter()
        .map(|&d| efficiency_spectrum(dev, &pump, &freqs, hz_to_angular(d)))
        .collect::<Result<Vec<_>>>()?;
    let mut map = Vec::with_capacity(freqs.len() * detunings.len());
    for (s, &d) in spectra.iter().zip(&detunings) {
        for (&w, &eta) in s.frequencies.iter().zip(&s.eta) {
            map.push(MapRow {
                frequency_hz: angular_to_hz(w),
                detuning_hz: d,
                eta,
            });
        }
    }

    let sweep_powers = p.power_sweep_w.values();
    let power_sweep = sweep_powers
        .par_iter()
        .map(|&power| {
            let pc = PumpConfig { power, ..pump };
            let (w, eta, fwhm) = resolve_peak(dev, &pc, 0.0)?;
            Ok(PowerRow {
                pump_power_w: power,
                peak_frequency_hz: angular_to_hz(w),
                peak_eta: eta,
                peak_eta_db: 10.0 * eta.log10(),
                fwhm_hz: angular_to_hz(fwhm),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = if pump.power > 0.0 {
        let (w, eta, fwhm) = resolve_peak(dev, &pump, 0.0)?;
        let peaks: Vec<f64> = spectra.iter().map(|s| s.peak().1).collect();
        let max = peaks.iter().cloned().fold(f64::MIN, f64::max);
        let min = peaks.iter().cloned().fold(f64::MAX, f64::min);
        let (slope, slope_sigma) = if power_sweep.len() >= 3 {
            let x: Vec<f64> = power_sweep.iter().map(|r| r.pump_power_w.ln()).collect();
            let y: Vec<f64> = power_sweep.iter().map(|r| r.peak_eta.ln()).collect();
            let f = linear_fit(&x, &y)?;
            (Some(f.slope), Some(f.slope_sigma))
        } else {
            (None, None)
        };
        EfficiencyMapSummary {
            pump_power_w: pump.power,
            peak_frequency_hz: Some(angular_to_hz(w)),
            peak_eta: eta,
            peak_eta_db: db(eta),
            bandwidth_hz: Some(angular_to_hz(fwhm)),
            detuning_variation_db: if min > 0.0 { Some(10.0 * (max / min).log10()) } else { None },
            power_law_slope: slope,
            power_law_slope_sigma: slope_sigma,
        }
    } else {
        EfficiencyMapSummary {
            pump_power_w: 0.0,
            peak_frequency_hz: None,
            peak_eta: 0.0,
            peak_eta_db: None,
            bandwidth_hz: None,
            detuning_variation_db: None,
            power_law_slope: None,
            power_law_slope_sigma: None,
        }
    };
    Ok(EfficiencyMapOutput {
        map,
        power_sweep,
        summary,
    })
}

impl ExperimentOutput for EfficiencyMapOutput {
    fn summary(&self) -> Value {
        serde_json::to_value(&self.summary).expect("serializable")
    }

    fn tables(&self) -> Result<Vec<(String, Vec<u8>)>> {
        Ok(vec![
            ("map.csv".into(), csv_bytes(&self.map)?),
            ("power_sweep.csv".into(), csv_bytes(&self.power_sweep)?),
        ])
    }
}
