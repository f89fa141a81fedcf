//! Linear state discrimination and readout fidelity.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::f64::consts::SQRT_2;

use super::fits::fit_bimodal_gaussian;
use crate::chain::IQShot;
use crate::error::{Error, Result};
use crate::qubit::QubitState;

/// Shots with `normal·(i, q) − offset > 0` are assigned |1⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionBoundary {
    pub normal: [f64; 2],
    pub offset: f64,
    /// The pooled covariance was singular and the plain mean difference was
    /// used as the direction.
    pub fallback: bool,
}

impl DecisionBoundary {
    pub fn project(&self, i: f64, q: f64) -> f64 {
        self.normal[0] * i + self.normal[1] * q - self.offset
    }

    pub fn classify(&self, shot: &IQShot) -> QubitState {
        if self.project(shot.i, shot.q) > 0.0 {
            QubitState::Excited
        } else {
            QubitState::Ground
        }
    }
}

fn mean(shots: &[IQShot]) -> [f64; 2] {
    let n = shots.len() as f64;
    [
        shots.iter().map(|s| s.i).sum::<f64>() / n,
        shots.iter().map(|s| s.q).sum::<f64>() / n,
    ]
}

/// Fisher linear discriminant with the threshold midway between the
/// projected class means (equal priors, shared covariance).
///
/// Each shot's scatter is taken about whichever class mean is nearer, so
/// shots whose state switched before readout do not inflate the shared
/// covariance along the separation axis.
pub fn lda_boundary(shots0: &[IQShot], shots1: &[IQShot]) -> Result<DecisionBoundary> {
    if shots0.is_empty() || shots1.is_empty() {
        return Err(Error::InvalidArgument(
            "discriminant needs shots for both prepared states".into(),
        ));
    }
    let m0 = mean(shots0);
    let m1 = mean(shots1);
    let mut s = [[0.0; 2]; 2];
    for sh in shots0.iter().chain(shots1) {
        let d0 = (sh.i - m0[0]).powi(2) + (sh.q - m0[1]).powi(2);
        let d1 = (sh.i - m1[0]).powi(2) + (sh.q - m1[1]).powi(2);
        let m = if d0 <= d1 { m0 } else { m1 };
        let (di, dq) = (sh.i - m[0], sh.q - m[1]);
        s[0][0] += di * di;
        s[0][1] += di * dq;
        s[1][1] += dq * dq;
    }
    let dof = (shots0.len() + shots1.len()).saturating_sub(2).max(1) as f64;
    s[0][0] /= dof;
    s[0][1] /= dof;
    s[1][1] /= dof;
    s[1][0] = s[0][1];
    let d = [m1[0] - m0[0], m1[1] - m0[1]];
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let trace = s[0][0] + s[1][1];
    let (mut w, fallback) = if trace > 0.0 && det > 1e-12 * trace * trace {
        (
            [
                (s[1][1] * d[0] - s[0][1] * d[1]) / det,
                (-s[1][0] * d[0] + s[0][0] * d[1]) / det,
            ],
            false,
        )
    } else {
        (d, true)
    };
    let norm = w[0].hypot(w[1]);
    if norm > 0.0 {
        w = [w[0] / norm, w[1] / norm];
    } else {
        w = [1.0, 0.0];
    }
    let mid = [(m0[0] + m1[0]) / 2.0, (m0[1] + m1[1]) / 2.0];
    Ok(DecisionBoundary {
        normal: w,
        offset: w[0] * mid[0] + w[1] * mid[1],
        fallback,
    })
}

/// `n_ab`: prepared `a`, assigned `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
    pub n11: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub fidelity: f64,
    pub p_0_given_1: f64,
    pub p_1_given_0: f64,
    /// From the bimodal fit to all projected shots; zero if the histogram is
    /// not resolvably bimodal.
    pub snr: f64,
    pub snr_degenerate: bool,
    /// Separation over pooled standard deviation using the preparation
    /// labels.
    pub snr_labeled: f64,
    pub counts: ConfusionCounts,
    pub boundary: DecisionBoundary,
}

pub fn fidelity_report(
    shots0: &[IQShot],
    shots1: &[IQShot],
    boundary: &DecisionBoundary,
) -> Result<FidelityReport> {
    if shots0.is_empty() || shots1.is_empty() {
        return Err(Error::InvalidArgument(
            "fidelity needs shots for both prepared states".into(),
        ));
    }
    let proj0: Vec<f64> = shots0.iter().map(|s| boundary.project(s.i, s.q)).collect();
    let proj1: Vec<f64> = shots1.iter().map(|s| boundary.project(s.i, s.q)).collect();
    let n01 = proj0.iter().filter(|&&p| p > 0.0).count() as u64;
    let n11 = proj1.iter().filter(|&&p| p > 0.0).count() as u64;
    let counts = ConfusionCounts {
        n00: proj0.len() as u64 - n01,
        n01,
        n10: proj1.len() as u64 - n11,
        n11,
    };
    let p_1_given_0 = n01 as f64 / proj0.len() as f64;
    let p_0_given_1 = counts.n10 as f64 / proj1.len() as f64;

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (a, b) = (mean(&proj0), mean(&proj1));
    let ss: f64 = proj0.iter().map(|p| (p - a).powi(2)).sum::<f64>()
        + proj1.iter().map(|p| (p - b).powi(2)).sum::<f64>();
    let pooled = (ss / (proj0.len() + proj1.len()).saturating_sub(2).max(1) as f64).sqrt();
    let snr_labeled = if pooled > 0.0 {
        (b - a).abs() / pooled
    } else {
        f64::INFINITY
    };

    let pooled_proj: Vec<f64> = proj0.iter().chain(&proj1).copied().collect();
    let (snr, snr_degenerate) = match fit_bimodal_gaussian(&pooled_proj) {
        Ok(b) => (b.snr, b.degenerate),
        Err(_) => (0.0, true),
    };

    Ok(FidelityReport {
        fidelity: 1.0 - (p_1_given_0 + p_0_given_1) / 2.0,
        p_0_given_1,
        p_1_given_0,
        snr,
        snr_degenerate,
        snr_labeled,
        counts,
        boundary: *boundary,
    })
}

/// Optimal-threshold fidelity of two equal-width Gaussians separated by
/// `snr` standard deviations: `1 − ½·erfc(snr/(2√2))`.
pub fn fidelity_vs_snr(snr: f64) -> f64 {
    1.0 - 0.5 * erfc(snr / (2.0 * SQRT_2))
}
