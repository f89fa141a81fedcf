//! Single-shot readout: prepared-state shots, classification and, on the
//! optical path, a sweep over pump power.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Context, ExperimentOutput, Grid};
use crate::chain::{
    noise_budget, signal_photons, snr, write_shots_csv, ChainConfig, IQShot, NoiseBudget, ReadoutPath,
    ShotGenerator,
};
use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::estimate::{fidelity_report, fidelity_vs_snr, lda_boundary, FidelityReport};
use crate::qubit::{DemolitionConfig, QubitState, SwitchingProbs};
use crate::rng::SeedSpec;
use crate::transducer::conversion_efficiency;

/// Transduction efficiency measured at one pump power; the sweep scales it
/// with the modelled efficiency at the readout frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyAnchor {
    pub pump_power_w: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingleShotParams {
    pub n_shots: usize,
    /// Also run with switching disabled and compare with the Gaussian
    /// fidelity at the model SNR.
    pub control: bool,
    pub write_shots: bool,
    pub pump_sweep_w: Option<Grid>,
    pub efficiency_anchor: EfficiencyAnchor,
}

impl Default for SingleShotParams {
    fn default() -> Self {
        Self {
            n_shots: 10_000,
            control: true,
            write_shots: true,
            pump_sweep_w: None,
            efficiency_anchor: EfficiencyAnchor {
                pump_power_w: crate::chain::OPTICAL_FIXTURE_PUMP_W,
                efficiency: crate::chain::OPTICAL_FIXTURE_EFFICIENCY,
            },
        }
    }
}

impl SingleShotParams {
    pub(super) fn validate(&self, prefix: &str) -> Result<()> {
        if self.n_shots < 100 {
            return Err(Error::validation(format!("{prefix}.n_shots"), "must be at least 100"));
        }
        if let Some(g) = &self.pump_sweep_w {
            g.validate(&format!("{prefix}.pump_sweep_w"))?;
            if !(g.start > 0.0 && g.stop > 0.0) {
                return Err(Error::validation(format!("{prefix}.pump_sweep_w"), "powers must be positive"));
            }
        }
        let a = &self.efficiency_anchor;
        if !(a.pump_power_w > 0.0 && a.efficiency > 0.0 && a.efficiency <= 1.0) {
            return Err(Error::validation(
                format!("{prefix}.efficiency_anchor"),
                "needs a positive power and an efficiency in (0,1]",
            ));
        }
        Ok(())
    }
}

/// One prepared-state experiment at a fixed chain configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRun {
    pub shots0: Vec<IQShot>,
    pub shots1: Vec<IQShot>,
    pub budget: NoiseBudget,
    pub signal_photons: f64,
    pub snr_model: f64,
    pub report: FidelityReport,
}

pub fn shot_run(
    dev: &DeviceParams,
    cfg: &ChainConfig,
    demo: &DemolitionConfig,
    n_shots: usize,
    seed: SeedSpec,
) -> Result<ShotRun> {
    let budget = noise_budget(dev, cfg, cfg.transduction_efficiency)?;
    let n_sig = signal_photons(cfg);
    let g0 = ShotGenerator::new(dev, cfg, demo, QubitState::Ground, seed)?;
    let g1 = ShotGenerator::new(dev, cfg, demo, QubitState::Excited, seed)?;
    let shots0 = g0.shots(0..n_shots as u64);
    let shots1 = g1.shots(0..n_shots as u64);
    let boundary = lda_boundary(&shots0, &shots1)?;
    let report = fidelity_report(&shots0, &shots1, &boundary)?;
    Ok(ShotRun {
        shots0,
        shots1,
        budget,
        signal_photons: n_sig,
        snr_model: snr(n_sig, budget.total_photons),
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlSummary {
    pub fidelity: f64,
    pub fidelity_analytic: f64,
    pub snr_model: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub pump_power_w: f64,
    pub transduction_efficiency: f64,
    pub shot_photons: f64,
    pub thermal_photons: f64,
    pub excess_photons: f64,
    pub total_photons: f64,
    pub snr_model: f64,
    pub snr: f64,
    pub snr_labeled: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleShotSummary {
    pub path: ReadoutPath,
    pub n_shots: usize,
    pub signal_photons: f64,
    pub noise_budget: NoiseBudget,
    pub snr_model: f64,
    pub fidelity_report: FidelityReport,
    pub control: Option<ControlSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleShotOutput {
    pub run: ShotRun,
    pub summary: SingleShotSummary,
    pub sweep: Vec<SweepRow>,
    write_shots: bool,
}

/// Transduction efficiency at `power`, scaled from the anchor by the model.
pub fn anchored_efficiency(dev: &DeviceParams, cfg: &ChainConfig, anchor: &EfficiencyAnchor, power: f64) -> Result<f64> {
    let omega = cfg.readout_omega();
    let model = |p: f64| {
        let pump = crate::transducer::PumpSpec {
            power_w: p,
            ..cfg.pump
        }
        .resolve(dev);
        conversion_efficiency(dev, &pump, omega, 0.0)
    };
    let eta = anchor.efficiency * model(power)? / model(anchor.pump_power_w)?;
    Ok(eta.min(1.0))
}

pub fn run_single_shot(ctx: &Context, p: &SingleShotParams) -> Result<SingleShotOutput> {
    let dev = &ctx.device;
    let cfg = &ctx.chain;
    let run = shot_run(dev, cfg, &ctx.demolition, p.n_shots, ctx.seed.substream(0))?;

    let control = if p.control {
        let demo = DemolitionConfig {
            switching: SwitchingProbs::NONE,
            ..ctx.demolition
        };
        let c = shot_run(dev, cfg, &demo, p.n_shots, ctx.seed.substream(1))?;
        Some(ControlSummary {
            fidelity: c.report.fidelity,
            fidelity_analytic: fidelity_vs_snr(c.snr_model),
            snr_model: c.snr_model,
        })
    } else {
        None
    };

    let sweep = match &p.pump_sweep_w {
        None => Vec::new(),
        Some(grid) => {
            if cfg.path != ReadoutPath::Optical {
                return Err(Error::validation("chain.path", "a pump sweep needs the optical path"));
            }
            grid.values()
                .par_iter()
                .enumerate()
                .map(|(k, &power)| {
                    let mut c = cfg.clone();
                    c.pump.power_w = power;
                    c.transduction_efficiency = anchored_efficiency(dev, cfg, &p.efficiency_anchor, power)?;
                    let r = shot_run(dev, &c, &ctx.demolition, p.n_shots, ctx.seed.substream(100 + k as u64))?;
                    Ok(SweepRow {
                        pump_power_w: power,
                        transduction_efficiency: c.transduction_efficiency,
                        shot_photons: r.budget.shot_photons,
                        thermal_photons: r.budget.thermal_photons,
                        excess_photons: r.budget.excess_photons,
                        total_photons: r.budget.total_photons,
                        snr_model: r.snr_model,
                        snr: r.report.snr,
                        snr_labeled: r.report.snr_labeled,
                        fidelity: r.report.fidelity,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };

    let summary = SingleShotSummary {
        path: cfg.path,
        n_shots: p.n_shots,
        signal_photons: run.signal_photons,
        noise_budget: run.budget,
        snr_model: run.snr_model,
        fidelity_report: run.report.clone(),
        control,
    };
    Ok(SingleShotOutput {
        run,
        summary,
        sweep,
        write_shots: p.write_shots,
    })
}

impl ExperimentOutput for SingleShotOutput {
    fn summary(&self) -> Value {
        serde_json::to_value(&self.summary).expect("serializable")
    }

    fn tables(&self) -> Result<Vec<(String, Vec<u8>)>> {
        let mut out = Vec::new();
        if self.write_shots {
            let mut buf = Vec::new();
            let all: Vec<IQShot> = self.run.shots0.iter().chain(&self.run.shots1).cloned().collect();
            write_shots_csv(&all, &mut buf)?;
            out.push(("shots.csv".into(), buf));
        }
        if !self.sweep.is_empty() {
            out.push(("pump_sweep.csv".into(), super::csv_bytes(&self.sweep)?));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::default_paper_device;

    fn ctx(path: ReadoutPath) -> Context {
        let device = default_paper_device();
        let chain = match path {
            ReadoutPath::MicrowaveOnly => ChainConfig::microwave_default(&device),
            ReadoutPath::Optical => ChainConfig::optical_default(&device),
        };
        Context {
            chain,
            device,
            demolition: DemolitionConfig::default(),
            seed: SeedSpec::new(11, 0),
        }
    }

    #[test]
    fn microwave_fixture() {
        let out = run_single_shot(&ctx(ReadoutPath::MicrowaveOnly), &SingleShotParams::default()).unwrap();
        let s = &out.summary;
        assert!((s.fidelity_report.fidelity - 0.87).abs() < 0.02, "{s:?}");
        let c = s.control.unwrap();
        assert!((c.fidelity - c.fidelity_analytic).abs() < 0.01, "{c:?}");
    }

    #[test]
    fn optical_control_matches_gaussian_fidelity() {
        let out = run_single_shot(&ctx(ReadoutPath::Optical), &SingleShotParams::default()).unwrap();
        let c = out.summary.control.unwrap();
        assert!((c.fidelity - c.fidelity_analytic).abs() < 0.01, "{c:?}");
    }

    #[test]
    fn optical_sweep_noise_falls_with_power() {
        let p = SingleShotParams {
            n_shots: 2000,
            control: false,
            write_shots: false,
            pump_sweep_w: Some(Grid::log(0.6e-6, 87e-6, 5)),
            ..Default::default()
        };
        let out = run_single_shot(&ctx(ReadoutPath::Optical), &p).unwrap();
        let n: Vec<f64> = out.sweep.iter().map(|r| r.total_photons).collect();
        assert!(n.windows(2).all(|w| w[1] < w[0]), "{n:?}");
        assert!(n[n.len() - 1] < 1.2e4, "{n:?}");
        assert!(n[0] > 5e4, "{n:?}");
        // The anchor point reproduces the fixture efficiency.
        let c = ctx(ReadoutPath::Optical);
        let eta = anchored_efficiency(&c.device, &c.chain, &p.efficiency_anchor, 31e-6).unwrap();
        assert!((eta - 0.02).abs() < 1e-12);
    }

    #[test]
    fn sweep_requires_optical_path() {
        let p = SingleShotParams {
            pump_sweep_w: Some(Grid::log(1e-6, 1e-5, 2)),
            ..Default::default()
        };
        assert!(run_single_shot(&ctx(ReadoutPath::MicrowaveOnly), &p).is_err());
    }
}
