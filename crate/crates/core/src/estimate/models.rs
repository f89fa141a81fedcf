//! Model functions with analytic Jacobians, in the internal (normalized,
//! log-scaled) parameterizations that the fit wrappers optimize.

use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::lm::Problem;

/// Real-valued model `y = f(x; p)`.
pub trait CurveModel {
    fn n_params(&self) -> usize;
    fn value(&self, x: f64, p: &[f64]) -> f64;
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]);
}

/// `y = a + b·x`; parameters `[a, b]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Line;

impl CurveModel for Line {
    fn n_params(&self) -> usize {
        2
    }
    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[0] + p[1] * x
    }
    fn gradient(&self, x: f64, _p: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
        out[1] = x;
    }
}

/// `y = A / (1 + (2(x − c)/w)²) + y₀`; parameters `[c, ln w, A, y₀]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lorentzian;

impl CurveModel for Lorentzian {
    fn n_params(&self) -> usize {
        4
    }
    fn value(&self, x: f64, p: &[f64]) -> f64 {
        let z = 2.0 * (x - p[0]) / p[1].exp();
        p[2] / (1.0 + z * z) + p[3]
    }
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let w = p[1].exp();
        let z = 2.0 * (x - p[0]) / w;
        let l = 1.0 / (1.0 + z * z);
        let dy_dz = -2.0 * p[2] * z * l * l;
        out[0] = dy_dz * (-2.0 / w);
        out[1] = dy_dz * (-z);
        out[2] = l;
        out[3] = 1.0;
    }
}

/// `y = A·e^(−x/T) + c`; parameters `[ln T, A, c]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Exponential;

impl CurveModel for Exponential {
    fn n_params(&self) -> usize {
        3
    }
    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[1] * (-x / p[0].exp()).exp() + p[2]
    }
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let t = p[0].exp();
        let e = (-x / t).exp();
        out[0] = p[1] * e * x / t;
        out[1] = e;
        out[2] = 1.0;
    }
}

/// `y = A·e^(−x/T)·cos(δx + φ) + c`; parameters `[ln T, δ, φ, A, c]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DampedCosine;

impl CurveModel for DampedCosine {
    fn n_params(&self) -> usize {
        5
    }
    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[3] * (-x / p[0].exp()).exp() * (p[1] * x + p[2]).cos() + p[4]
    }
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let t = p[0].exp();
        let e = (-x / t).exp();
        let (s, c) = (p[1] * x + p[2]).sin_cos();
        out[0] = p[3] * e * c * x / t;
        out[1] = -p[3] * e * s * x;
        out[2] = -p[3] * e * s;
        out[3] = e * c;
        out[4] = 1.0;
    }
}

/// Weighted residuals `(f(x_i) − y_i) / s_i` of a curve model.
pub struct CurveProblem<'a, M> {
    pub model: &'a M,
    pub x: &'a [f64],
    pub y: &'a [f64],
    /// Per-point standard deviations; `None` means unit weights.
    pub sigma: Option<&'a [f64]>,
}

impl<M: CurveModel> Problem for CurveProblem<'_, M> {
    fn n_residuals(&self) -> usize {
        self.x.len()
    }
    fn n_params(&self) -> usize {
        self.model.n_params()
    }
    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for i in 0..self.x.len() {
            let w = self.sigma.map_or(1.0, |s| s[i]);
            out[i] = (self.model.value(self.x[i], p) - self.y[i]) / w;
        }
    }
    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) {
        let mut g = vec![0.0; self.model.n_params()];
        for i in 0..self.x.len() {
            let w = self.sigma.map_or(1.0, |s| s[i]);
            self.model.gradient(self.x[i], p, &mut g);
            for (j, gj) in g.iter().enumerate() {
                out[(i, j)] = gj / w;
            }
        }
    }
}

/// Side-coupled notch with environment nuisance:
/// `S(x) = a·e^{i(θ − xτ)}·[1 − κ_e/(κ + 2i(x − x₀))]`, `κ = κ_e + κ_i`.
/// Parameters `[x₀, ln κ_e, ln κ_i, a, θ, τ]`. Residuals stack real then
/// imaginary parts.
pub struct NotchProblem<'a> {
    pub x: &'a [f64],
    pub s: &'a [Complex64],
}

pub fn notch_value(x: f64, p: &[f64]) -> Complex64 {
    let (ke, ki) = (p[1].exp(), p[2].exp());
    let w = Complex64::new(ke + ki, 2.0 * (x - p[0]));
    let env = Complex64::from_polar(p[3], p[4] - x * p[5]);
    env * (1.0 - ke / w)
}

fn notch_gradient(x: f64, p: &[f64], out: &mut [Complex64; 6]) {
    let (ke, ki) = (p[1].exp(), p[2].exp());
    let w = Complex64::new(ke + ki, 2.0 * (x - p[0]));
    let w2 = w * w;
    let phase = Complex64::from_polar(1.0, p[4] - x * p[5]);
    let n = 1.0 - ke / w;
    let s = phase * p[3] * n;
    let i = Complex64::new(0.0, 1.0);
    let env = phase * p[3];
    out[0] = env * (-2.0 * i * ke / w2);
    out[1] = env * (-(Complex64::new(ki, 2.0 * (x - p[0]))) / w2) * ke;
    out[2] = env * (ke / w2) * ki;
    out[3] = phase * n;
    out[4] = i * s;
    out[5] = -i * x * s;
}

impl Problem for NotchProblem<'_> {
    fn n_residuals(&self) -> usize {
        2 * self.x.len()
    }
    fn n_params(&self) -> usize {
        6
    }
    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let m = self.x.len();
        for k in 0..m {
            let d = notch_value(self.x[k], p) - self.s[k];
            out[k] = d.re;
            out[m + k] = d.im;
        }
    }
    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) {
        let m = self.x.len();
        let mut g = [Complex64::new(0.0, 0.0); 6];
        for k in 0..m {
            notch_gradient(self.x[k], p, &mut g);
            for j in 0..6 {
                out[(k, j)] = g[j].re;
                out[(m + k, j)] = g[j].im;
            }
        }
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Binned counts of one or two equal-width Gaussian components.
///
/// Two components: parameters `[μ₀, μ₁, ln σ, logit w]` with `w` the weight
/// of component 1. One component: `[μ, ln σ]`. Residuals are
/// `(expected − observed)/s_k` with per-bin scales `s_k`.
pub struct HistogramProblem<'a> {
    pub edges: &'a [f64],
    pub counts: &'a [f64],
    pub scales: &'a [f64],
    pub total: f64,
    pub components: usize,
}

impl HistogramProblem<'_> {
    fn unpack(&self, p: &[f64]) -> (f64, f64, f64, f64) {
        if self.components == 2 {
            (p[0], p[1], p[2].exp(), 1.0 / (1.0 + (-p[3]).exp()))
        } else {
            (p[0], p[0], p[1].exp(), 0.0)
        }
    }

    pub fn expected(&self, p: &[f64]) -> Vec<f64> {
        let (m0, m1, s, w) = self.unpack(p);
        self.counts
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let (a, b) = (self.edges[k], self.edges[k + 1]);
                let p0 = normal_cdf((b - m0) / s) - normal_cdf((a - m0) / s);
                let p1 = normal_cdf((b - m1) / s) - normal_cdf((a - m1) / s);
                self.total * ((1.0 - w) * p0 + w * p1)
            })
            .collect()
    }
}

impl Problem for HistogramProblem<'_> {
    fn n_residuals(&self) -> usize {
        self.counts.len()
    }
    fn n_params(&self) -> usize {
        if self.components == 2 {
            4
        } else {
            2
        }
    }
    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for (k, e) in self.expected(p).into_iter().enumerate() {
            out[k] = (e - self.counts[k]) / self.scales[k];
        }
    }
    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) {
        let (m0, m1, s, w) = self.unpack(p);
        let n = self.total;
        for k in 0..self.counts.len() {
            let scale = 1.0 / self.scales[k];
            let (a, b) = (self.edges[k], self.edges[k + 1]);
            let (za0, zb0) = ((a - m0) / s, (b - m0) / s);
            let (za1, zb1) = ((a - m1) / s, (b - m1) / s);
            // d/dμ of [Φ(zb) − Φ(za)] and d/d ln σ of the same.
            let dmu0 = -(normal_pdf(zb0) - normal_pdf(za0)) / s;
            let dmu1 = -(normal_pdf(zb1) - normal_pdf(za1)) / s;
            let dls0 = -(zb0 * normal_pdf(zb0) - za0 * normal_pdf(za0));
            let dls1 = -(zb1 * normal_pdf(zb1) - za1 * normal_pdf(za1));
            if self.components == 2 {
                let p0 = normal_cdf(zb0) - normal_cdf(za0);
                let p1 = normal_cdf(zb1) - normal_cdf(za1);
                out[(k, 0)] = scale * n * (1.0 - w) * dmu0;
                out[(k, 1)] = scale * n * w * dmu1;
                out[(k, 2)] = scale * n * ((1.0 - w) * dls0 + w * dls1);
                out[(k, 3)] = scale * n * w * (1.0 - w) * (p1 - p0);
            } else {
                out[(k, 0)] = scale * n * dmu0;
                out[(k, 1)] = scale * n * dls0;
            }
        }
    }
}
