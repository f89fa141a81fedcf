//! Repeated T1 and Ramsey measurements with the pump off and on, each trace
//! fitted independently.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{csv_bytes, Context, ExperimentOutput, Grid};
use crate::error::{Error, Result};
use crate::estimate::{fit_damped_cosine, fit_exponential};
use crate::qubit::{ramsey_excited_prob, t1_excited_prob};
use crate::rng::SeedSpec;
use crate::units::hz_to_angular;

/// Generating-parameter overrides for one pump condition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub t1_s: Option<f64>,
    pub t2_star_s: Option<f64>,
}

/// Probability of reading the wrong state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentError {
    pub p_1_given_0: f64,
    pub p_0_given_1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherenceParams {
    pub n_repeats: usize,
    pub shots_per_point: u64,
    pub t1_delay_s: Grid,
    pub ramsey_delay_s: Grid,
    pub ramsey_detuning_hz: f64,
    pub assignment_error: AssignmentError,
    /// Repeat-to-repeat standard deviation of the generating T1.
    pub t1_spread_s: f64,
    pub t2_star_spread_s: f64,
    pub pump_off: Overrides,
    pub pump_on: Overrides,
    pub histogram_bins: usize,
}

impl Default for CoherenceParams {
    fn default() -> Self {
        Self {
            n_repeats: 401,
            shots_per_point: 200,
            t1_delay_s: Grid::linear(0.0, 300e-6, 31),
            ramsey_delay_s: Grid::linear(0.0, 30e-6, 61),
            ramsey_detuning_hz: 0.3e6,
            assignment_error: AssignmentError {
                p_1_given_0: 0.13,
                p_0_given_1: 0.13,
            },
            t1_spread_s: 3.6e-6,
            t2_star_spread_s: 0.2e-6,
            pump_off: Overrides::default(),
            pump_on: Overrides::default(),
            histogram_bins: 25,
        }
    }
}

impl CoherenceParams {
    pub(super) fn validate(&self, prefix: &str) -> Result<()> {
        let f = |name: &str| format!("{prefix}.{name}");
        if self.n_repeats < 2 {
            return Err(Error::validation(f("n_repeats"), "must be at least 2"));
        }
        if self.shots_per_point == 0 {
            return Err(Error::validation(f("shots_per_point"), "must be positive"));
        }
        self.t1_delay_s.validate(&f("t1_delay_s"))?;
        self.ramsey_delay_s.validate(&f("ramsey_delay_s"))?;
        if self.t1_delay_s.points < 4 || self.ramsey_delay_s.points < 8 {
            return Err(Error::validation(f("t1_delay_s"), "too few delays to fit"));
        }
        let e = &self.assignment_error;
        if !((0.0..0.5).contains(&e.p_1_given_0) && (0.0..0.5).contains(&e.p_0_given_1)) {
            return Err(Error::validation(f("assignment_error"), "each error must lie in [0, 0.5)"));
        }
        if !(self.t1_spread_s >= 0.0 && self.t2_star_spread_s >= 0.0) {
            return Err(Error::validation(f("t1_spread_s"), "spreads must be non-negative"));
        }
        for (name, o) in [("pump_off", &self.pump_off), ("pump_on", &self.pump_on)] {
            for v in [o.t1_s, o.t2_star_s].into_iter().flatten() {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::validation(f(name), "overrides must be positive"));
                }
            }
        }
        if self.histogram_bins == 0 {
            return Err(Error::validation(f("histogram_bins"), "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitRow {
    pub condition: &'static str,
    pub repeat: usize,
    pub t1_s: f64,
    pub t1_sigma_s: f64,
    pub t1_ok: bool,
    pub t2_star_s: f64,
    pub t2_star_sigma_s: f64,
    pub t2_star_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub generating_s: f64,
    pub mean_s: f64,
    pub std_s: f64,
    pub n_ok: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchTest {
    pub t: f64,
    pub dof: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub quantity: &'static str,
    pub edges_s: Vec<f64>,
    pub pump_off: Vec<u64>,
    pub pump_on: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceSummary {
    pub t1_pump_off: Stats,
    pub t1_pump_on: Stats,
    pub t2_star_pump_off: Stats,
    pub t2_star_pump_on: Stats,
    pub t1_test: WelchTest,
    pub t2_star_test: WelchTest,
    pub histograms: Vec<Histogram>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceOutput {
    pub fits: Vec<FitRow>,
    pub summary: CoherenceSummary,
}

/// Two-sided Welch t-test for equal means.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument("Welch test needs two samples per group".into()));
    }
    let mv = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0), n)
    };
    let (ma, va, na) = mv(a);
    let (mb, vb, nb) = mv(b);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if !(se2 > 0.0) {
        return Ok(WelchTest {
            t: 0.0,
            dof: na + nb - 2.0,
            p_value: if ma == mb { 1.0 } else { 0.0 },
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(WelchTest {
        t,
        dof,
        p_value: 2.0 * dist.sf(t.abs()),
    })
}

struct Condition {
    label: &'static str,
    t1: f64,
    t2_star: f64,
    seed: SeedSpec,
}

/// Fraction read as excited out of `n` shots of a state that is excited
/// with probability `p`.
fn measured_fraction(p: f64, err: &AssignmentError, n: u64, seed: &SeedSpec, index: u64) -> f64 {
    let q = p * (1.0 - err.p_0_given_1) + (1.0 - p) * err.p_1_given_0;
    let mut rng = seed.rng_at(index);
    let k = Binomial::new(n, q.clamp(0.0, 1.0)).expect("probability in range").sample(&mut rng);
    k as f64 / n as f64
}

fn run_repeat(cond: &Condition, p: &CoherenceParams, r: usize) -> FitRow {
    let jitter = |tag: u64| -> f64 { cond.seed.substream(tag).rng_at(r as u64).sample(StandardNormal) };
    let t1 = (cond.t1 + p.t1_spread_s * jitter(0)).max(1e-9);
    let t2 = (cond.t2_star + p.t2_star_spread_s * jitter(1)).max(1e-9);
    let delta = hz_to_angular(p.ramsey_detuning_hz);

    let t1_delays = p.t1_delay_s.values();
    let n1 = t1_delays.len() as u64;
    let s1 = cond.seed.substream(2);
    let y1: Vec<f64> = t1_delays
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            measured_fraction(t1_excited_prob(t, t1), &p.assignment_error, p.shots_per_point, &s1, r as u64 * n1 + k as u64)
        })
        .collect();
    let r_delays = p.ramsey_delay_s.values();
    let n2 = r_delays.len() as u64;
    let s2 = cond.seed.substream(3);
    let y2: Vec<f64> = r_delays
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            measured_fraction(
                ramsey_excited_prob(t, delta, t2, 0.0),
                &p.assignment_error,
                p.shots_per_point,
                &s2,
                r as u64 * n2 + k as u64,
            )
        })
        .collect();

    let ok = |v: f64, s: f64| v.is_finite() && v > 0.0 && s.is_finite();
    let (t1_s, t1_sigma_s, t1_ok) = match fit_exponential(&t1_delays, &y1) {
        Ok(f) => (f.params[0], f.sigma[0], f.converged && ok(f.params[0], f.sigma[0])),
        Err(_) => (f64::NAN, f64::NAN, false),
    };
    let (t2_star_s, t2_star_sigma_s, t2_star_ok) = match fit_damped_cosine(&r_delays, &y2) {
        Ok(f) => (f.params[0], f.sigma[0], f.converged && ok(f.params[0], f.sigma[0])),
        Err(_) => (f64::NAN, f64::NAN, false),
    };
    FitRow {
        condition: cond.label,
        repeat: r,
        t1_s,
        t1_sigma_s,
        t1_ok,
        t2_star_s,
        t2_star_sigma_s,
        t2_star_ok,
    }
}

fn stats(generating: f64, values: &[f64], n_total: usize) -> Stats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Stats {
        generating_s: generating,
        mean_s: mean,
        std_s: var.sqrt(),
        n_ok: values.len(),
        n_failed: n_total - values.len(),
    }
}

fn histogram(quantity: &'static str, off: &[f64], on: &[f64], bins: usize) -> Histogram {
    let all = off.iter().chain(on);
    let lo = all.clone().cloned().fold(f64::INFINITY, f64::min);
    let hi = all.cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let count = |v: &[f64]| {
        let mut c = vec![0u64; bins];
        for &x in v {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            c[k] += 1;
        }
        c
    };
    Histogram {
        quantity,
        edges_s: edges,
        pump_off: count(off),
        pump_on: count(on),
    }
}

pub fn run_coherence_stats(ctx: &Context, p: &CoherenceParams) -> Result<CoherenceOutput> {
    let q = &ctx.device.qubit;
    let conds = [("pump_off", &p.pump_off, 0), ("pump_on", &p.pump_on, 1)].map(|(label, o, tag)| Condition {
        label,
        t1: o.t1_s.unwrap_or(q.t1),
        t2_star: o.t2_star_s.unwrap_or(q.t2_star),
        seed: ctx.seed.substream(tag),
    });
    let fits: Vec<FitRow> = conds
        .iter()
        .flat_map(|c| (0..p.n_repeats).map(move |r| (c, r)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, r)| run_repeat(c, p, r))
        .collect();

    let pick = |label: &str, t1: bool| -> Vec<f64> {
        fits.iter()
            .filter(|f| f.condition == label)
            .filter(|f| if t1 { f.t1_ok } else { f.t2_star_ok })
            .map(|f| if t1 { f.t1_s } else { f.t2_star_s })
            .collect()
    };
    let (t1_off, t1_on) = (pick("pump_off", true), pick("pump_on", true));
    let (t2_off, t2_on) = (pick("pump_off", false), pick("pump_on", false));
    for (name, v) in [("T1 pump off", &t1_off), ("T1 pump on", &t1_on), ("T2* pump off", &t2_off), ("T2* pump on", &t2_on)] {
        if v.len() < 2 {
            return Err(Error::Range(format!("{name}: fewer than two successful fits")));
        }
    }
    let n = p.n_repeats;
    let summary = CoherenceSummary {
        t1_pump_off: stats(conds[0].t1, &t1_off, n),
        t1_pump_on: stats(conds[1].t1, &t1_on, n),
        t2_star_pump_off: stats(conds[0].t2_star, &t2_off, n),
        t2_star_pump_on: stats(conds[1].t2_star, &t2_on, n),
        t1_test: welch_t_test(&t1_off, &t1_on)?,
        t2_star_test: welch_t_test(&t2_off, &t2_on)?,
        histograms: vec![
            histogram("t1", &t1_off, &t1_on, p.histogram_bins),
            histogram("t2_star", &t2_off, &t2_on, p.histogram_bins),
        ],
    };
    Ok(CoherenceOutput { fits, summary })
}

#[derive(Serialize)]
struct HistRow {
    quantity: &'static str,
    bin_low_s: f64,
    bin_high_s: f64,
    pump_off: u64,
    pump_on: u64,
}

impl ExperimentOutput for CoherenceOutput {
    fn summary(&self) -> Value {
        serde_json::to_value(&self.summary).expect("serializable")
    }

    fn tables(&self) -> Result<Vec<(String, Vec<u8>)>> {
        let mut rows = Vec::new();
        for h in &self.summary.histograms {
            for k in 0..h.pump_off.len() {
                rows.push(HistRow {
                    quantity: h.quantity,
                    bin_low_s: h.edges_s[k],
                    bin_high_s: h.edges_s[k + 1],
                    pump_off: h.pump_off[k],
                    pump_on: h.pump_on[k],
                });
            }
        }
        Ok(vec![
            ("fits.csv".into(), csv_bytes(&self.fits)?),
            ("histograms.csv".into(), csv_bytes(&rows)?),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainConfig;
    use crate::device::default_paper_device;
    use crate::qubit::DemolitionConfig;

    fn ctx(seed: u64) -> Context {
        let device = default_paper_device();
        Context {
            chain: ChainConfig::microwave_default(&device),
            device,
            demolition: DemolitionConfig::default(),
            seed: SeedSpec::new(seed, 0),
        }
    }

    #[test]
    fn welch_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let w = welch_t_test(&a, &a).unwrap();
        assert_eq!(w.t, 0.0);
        assert!((w.p_value - 1.0).abs() < 1e-12);
        let b = [3.0, 4.0, 5.0, 6.0];
        let w = welch_t_test(&a, &b).unwrap();
        assert!((w.t + 2.190_890_230_020_664_7).abs() < 1e-12, "{w:?}");
        assert!((w.dof - 6.0).abs() < 1e-12, "{w:?}");
        assert!((w.p_value - 0.070_987_654_320_987_55).abs() < 1e-9, "{w:?}");
        // Unequal sizes and variances.
        let w = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 9.0], &b).unwrap();
        assert!((w.t + 0.455_983_324_343_344_8).abs() < 1e-12, "{w:?}");
        assert!((w.dof - 5.560_715_398_193_334).abs() < 1e-9, "{w:?}");
        assert!((w.p_value - 0.665_663_297_054_726_7).abs() < 1e-9, "{w:?}");
    }

    #[test]
    fn recovers_configured_means() {
        let p = CoherenceParams {
            n_repeats: 60,
            ..Default::default()
        };
        let c = ctx(3);
        let out = run_coherence_stats(&c, &p).unwrap();
        let s = &out.summary;
        let q = &c.device.qubit;
        assert!((s.t1_pump_off.mean_s / q.t1 - 1.0).abs() < 0.1, "{s:?}");
        assert!((s.t2_star_pump_off.mean_s / q.t2_star - 1.0).abs() < 0.1, "{s:?}");
        assert!(s.t1_test.p_value > 0.01, "{:?}", s.t1_test);
    }

    #[test]
    fn on_off_streams_are_independent() {
        let p = CoherenceParams {
            n_repeats: 3,
            ..Default::default()
        };
        let out = run_coherence_stats(&ctx(1), &p).unwrap();
        assert_ne!(out.fits[0].t1_s, out.fits[3].t1_s);
    }
}
