//! Readout response of both qubit states over drive frequency and power.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{csv_bytes, Context, ExperimentOutput, Grid};
use crate::error::Result;
use crate::qubit::{demolition_response, QubitState};
use crate::units::{dbm_to_watts, hz_to_angular, PowerDbm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutMapParams {
    pub frequency_hz: Grid,
    /// Drive power at the resonator input (dBm).
    pub power_dbm: Grid,
}

impl Default for ReadoutMapParams {
    fn default() -> Self {
        Self {
            frequency_hz: Grid::linear(5.190e9, 5.202e9, 241),
            power_dbm: Grid::linear(-125.0, -90.0, 351),
        }
    }
}

impl ReadoutMapParams {
    pub(super) fn validate(&self, prefix: &str) -> Result<()> {
        self.frequency_hz.validate(&format!("{prefix}.frequency_hz"))?;
        self.power_dbm.validate(&format!("{prefix}.power_dbm"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadoutRow {
    pub frequency_hz: f64,
    pub power_dbm: f64,
    pub magnitude_ground: f64,
    pub magnitude_excited: f64,
    /// `|S1 − S0|`.
    pub difference: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadoutMapSummary {
    pub argmax_frequency_hz: f64,
    pub argmax_power_dbm: f64,
    pub max_difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutMapOutput {
    /// Power-major: all frequencies of the first power, then the next.
    pub rows: Vec<ReadoutRow>,
    pub summary: ReadoutMapSummary,
}

impl ReadoutMapOutput {
    pub fn power_row(&self, k: usize, n_freq: usize) -> &[ReadoutRow] {
        &self.rows[k * n_freq..(k + 1) * n_freq]
    }
}

pub fn run_readout_map(ctx: &Context, p: &ReadoutMapParams) -> Result<ReadoutMapOutput> {
    let freqs = p.frequency_hz.values();
    let powers = p.power_dbm.values();
    let rows: Vec<ReadoutRow> = powers
        .par_iter()
        .map(|&dbm| -> Result<Vec<ReadoutRow>> {
            let watts = dbm_to_watts(PowerDbm(dbm))?;
            Ok(freqs
                .iter()
                .map(|&f| {
                    let w = hz_to_angular(f);
                    let s0 = demolition_response(&ctx.device, &ctx.demolition, w, watts, QubitState::Ground);
                    let s1 = demolition_response(&ctx.device, &ctx.demolition, w, watts, QubitState::Excited);
                    ReadoutRow {
                        frequency_hz: f,
                        power_dbm: dbm,
                        magnitude_ground: s0.norm(),
                        magnitude_excited: s1.norm(),
                        difference: (s1 - s0).norm(),
                    }
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let best = rows
        .iter()
        .max_by(|a, b| a.difference.total_cmp(&b.difference))
        .expect("grids are non-empty");
    let summary = ReadoutMapSummary {
        argmax_frequency_hz: best.frequency_hz,
        argmax_power_dbm: best.power_dbm,
        max_difference: best.difference,
    };
    Ok(ReadoutMapOutput { rows, summary })
}

impl ExperimentOutput for ReadoutMapOutput {
    fn summary(&self) -> Value {
        serde_json::to_value(self.summary).expect("serializable")
    }

    fn tables(&self) -> Result<Vec<(String, Vec<u8>)>> {
        Ok(vec![("map.csv".into(), csv_bytes(&self.rows)?)])
    }
}
