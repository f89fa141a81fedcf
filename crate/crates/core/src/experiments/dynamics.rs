//! Rabi chevron and Ramsey fringes, with every point estimated from
//! classified readout shots.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{csv_bytes, Context, ExperimentOutput, Grid};
use crate::chain::ShotGenerator;
use crate::error::{Error, Result};
use crate::estimate::{fidelity_report, fit_damped_cosine, lda_boundary, DecisionBoundary, FitResult};
use crate::qubit::{rabi_excited_prob, ramsey_excited_prob, QubitState};
use crate::rng::SeedSpec;
use crate::units::{angular_to_hz, hz_to_angular};

/// Classifier trained on calibration shots, then used to estimate the
/// excited fraction of freshly generated shots.
pub struct Estimator {
    gens: [ShotGenerator; 2],
    boundary: DecisionBoundary,
    state_seed: SeedSpec,
    pub calibration_fidelity: f64,
}

impl Estimator {
    pub fn new(ctx: &Context, calibration_shots: usize) -> Result<Self> {
        let gen = |state, tag| ShotGenerator::new(&ctx.device, &ctx.chain, &ctx.demolition, state, ctx.seed.substream(tag));
        let c0 = gen(QubitState::Ground, 0)?.shots(0..calibration_shots as u64);
        let c1 = gen(QubitState::Excited, 0)?.shots(0..calibration_shots as u64);
        let boundary = lda_boundary(&c0, &c1)?;
        let calibration_fidelity = fidelity_report(&c0, &c1, &boundary)?.fidelity;
        Ok(Self {
            gens: [gen(QubitState::Ground, 1)?, gen(QubitState::Excited, 1)?],
            boundary,
            state_seed: ctx.seed.substream(2),
            calibration_fidelity,
        })
    }

    /// Fraction of `n` shots classified excited when the qubit is excited
    /// with probability `p`. Shots of grid point `point` use indices
    /// `point·n .. (point+1)·n`.
    pub fn estimate(&self, p: f64, n: usize, point: usize) -> f64 {
        let base = (point * n) as u64;
        let hits = (base..base + n as u64)
            .filter(|&idx| {
                let state = if self.state_seed.uniform(idx) < p {
                    QubitState::Excited
                } else {
                    QubitState::Ground
                };
                let shot = self.gens[state.bit() as usize].shot(idx);
                self.boundary.classify(&shot) == QubitState::Excited
            })
            .count();
        hits as f64 / n as f64
    }
}

fn check_shots(prefix: &str, shots: usize, calibration: usize, exact: bool) -> Result<()> {
    if !exact && shots == 0 {
        return Err(Error::validation(format!("{prefix}.shots_per_point"), "must be positive"));
    }
    if !exact && calibration < 100 {
        return Err(Error::validation(format!("{prefix}.calibration_shots"), "must be at least 100"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChevronParams {
    pub detuning_hz: Grid,
    pub duration_s: Grid,
    pub rabi_rate_hz: f64,
    pub shots_per_point: usize,
    pub calibration_shots: usize,
    /// Report the exact probability instead of a shot estimate.
    pub exact: bool,
}

impl Default for ChevronParams {
    fn default() -> Self {
        Self {
            detuning_hz: Grid::linear(-6e6, 6e6, 41),
            duration_s: Grid::linear(0.0, 1e-6, 41),
            rabi_rate_hz: 2e6,
            shots_per_point: 100,
            calibration_shots: 5000,
            exact: false,
        }
    }
}

impl ChevronParams {
    pub(super) fn validate(&self, prefix: &str) -> Result<()> {
        self.detuning_hz.validate(&format!("{prefix}.detuning_hz"))?;
        self.duration_s.validate(&format!("{prefix}.duration_s"))?;
        if !(self.rabi_rate_hz > 0.0 && self.rabi_rate_hz.is_finite()) {
            return Err(Error::validation(format!("{prefix}.rabi_rate_hz"), "must be positive"));
        }
        check_shots(prefix, self.shots_per_point, self.calibration_shots, self.exact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChevronRow {
    pub detuning_hz: f64,
    pub duration_s: f64,
    pub p_excited: f64,
    pub p_estimated: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicsSummary {
    pub calibration_fidelity: Option<f64>,
    pub estimated_min: f64,
    pub estimated_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChevronOutput {
    /// Detuning-major.
    pub rows: Vec<ChevronRow>,
    pub summary: DynamicsSummary,
}

fn extent(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    (
        v.clone().fold(f64::INFINITY, f64::min),
        v.fold(f64::NEG_INFINITY, f64::max),
    )
}

pub fn run_chevron(ctx: &Context, p: &ChevronParams) -> Result<ChevronOutput> {
    let est = if p.exact { None } else { Some(Estimator::new(ctx, p.calibration_shots)?) };
    let detunings = p.detuning_hz.values();
    let durations = p.duration_s.values();
    let omega = hz_to_angular(p.rabi_rate_hz);
    let points: Vec<(f64, f64)> = detunings
        .iter()
        .flat_map(|&d| durations.iter().map(move |&t| (d, t)))
        .collect();
    let rows: Vec<ChevronRow> = points
        .par_iter()
        .enumerate()
        .map(|(k, &(d, t))| {
            let prob = rabi_excited_prob(hz_to_angular(d), t, omega);
            ChevronRow {
                detuning_hz: d,
                duration_s: t,
                p_excited: prob,
                p_estimated: match &est {
                    Some(e) => e.estimate(prob, p.shots_per_point, k),
                    None => prob,
                },
            }
        })
        .collect();
    let (lo, hi) = extent(rows.iter().map(|r| r.p_estimated));
    Ok(ChevronOutput {
        rows,
        summary: DynamicsSummary {
            calibration_fidelity: est.map(|e| e.calibration_fidelity),
            estimated_min: lo,
            estimated_max: hi,
        },
    })
}

impl ExperimentOutput for ChevronOutput {
    fn summary(&self) -> Value {
        serde_json::to_value(self.summary).expect("serializable")
    }

    fn tables(&self) -> Result<Vec<(String, Vec<u8>)>> {
        Ok(vec![("chevron.csv".into(), csv_bytes(&self.rows)?)])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RamseyParams {
    pub delay_s: Grid,
    pub detuning_hz: f64,
    pub phase: f64,
    /// Defaults to the device value.
    pub t2_star_s: Option<f64>,
    pub shots_per_point: usize,
    pub calibration_shots: usize,
    pub exact: bool,
}

impl Default for RamseyParams {
    fn default() -> Self {
        Self {
            delay_s: Grid::linear(0.0, 20e-6, 81),
            detuning_hz: 0.5e6,
            phase: 0.0,
            t2_star_s: None,
            shots_per_point: 200,
            calibration_shots: 5000,
            exact: false,
        }
    }
}

impl RamseyParams {
    pub(super) fn validate(&self, prefix: &str) -> Result<()> {
        self.delay_s.validate(&format!("{prefix}.delay_s"))?;
        if !self.detuning_hz.is_finite() || !self.phase.is_finite() {
            return Err(Error::validation(format!("{prefix}.detuning_hz"), "must be finite"));
        }
        if let Some(t) = self.t2_star_s {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::validation(format!("{prefix}.t2_star_s"), "must be positive"));
            }
        }
        check_shots(prefix, self.shots_per_point, self.calibration_shots, self.exact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RamseyRow {
    pub delay_s: f64,
    pub p_excited: f64,
    pub p_estimated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeFit {
    pub t2_star_s: f64,
    pub t2_star_sigma_s: f64,
    pub detuning_hz: f64,
    pub detuning_sigma_hz: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RamseySummary {
    #[serde(flatten)]
    pub extent: DynamicsSummary,
    pub configured_detuning_hz: f64,
    pub fit: Option<FringeFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamseyOutput {
    pub rows: Vec<RamseyRow>,
    pub summary: RamseySummary,
}

pub fn run_ramsey(ctx: &Context, p: &RamseyParams) -> Result<RamseyOutput> {
    let est = if p.exact { None } else { Some(Estimator::new(ctx, p.calibration_shots)?) };
    let t2 = p.t2_star_s.unwrap_or(ctx.device.qubit.t2_star);
    let delta = hz_to_angular(p.detuning_hz);
    let rows: Vec<RamseyRow> = p
        .delay_s
        .values()
        .par_iter()
        .enumerate()
        .map(|(k, &t)| {
            let prob = ramsey_excited_prob(t, delta, t2, p.phase);
            RamseyRow {
                delay_s: t,
                p_excited: prob,
                p_estimated: match &est {
                    Some(e) => e.estimate(prob, p.shots_per_point, k),
                    None => prob,
                },
            }
        })
        .collect();
    let t: Vec<f64> = rows.iter().map(|r| r.delay_s).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.p_estimated).collect();
    let fit = fit_damped_cosine(&t, &y).ok().map(|f: FitResult| FringeFit {
        t2_star_s: f.params[0],
        t2_star_sigma_s: f.sigma[0],
        detuning_hz: angular_to_hz(f.params[1]),
        detuning_sigma_hz: angular_to_hz(f.sigma[1]),
        converged: f.converged,
    });
    let (lo, hi) = extent(y.iter().copied());
    Ok(RamseyOutput {
        rows,
        summary: RamseySummary {
            extent: DynamicsSummary {
                calibration_fidelity: est.map(|e| e.calibration_fidelity),
                estimated_min: lo,
                estimated_max: hi,
            },
            configured_detuning_hz: p.detuning_hz,
            fit,
        },
    })
}

impl ExperimentOutput for RamseyOutput {
    fn summary(&self) -> Value {
        serde_json::to_value(&self.summary).expect("serializable")
    }

    fn tables(&self) -> Result<Vec<(String, Vec<u8>)>> {
        Ok(vec![("ramsey.csv".into(), csv_bytes(&self.rows)?)])
    }
}
