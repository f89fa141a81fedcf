//! Fit wrappers: normalize the data, guess a starting point, run
//! Levenberg–Marquardt on the internal parameterization and map the result
//! back to physical parameters with first-order error propagation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::lm::{least_squares_fit, FitResult, LmOptions};
use super::models::{
    CurveModel, CurveProblem, DampedCosine, Exponential, HistogramProblem, Line, Lorentzian,
    NotchProblem,
};
use crate::error::{Error, Result};

fn check_xy(x: &[f64], y: &[f64], min_points: usize, what: &str) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{what}: {} x values but {} y values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min_points {
        return Err(Error::InvalidArgument(format!(
            "{what} needs at least {min_points} points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what}: data contain NaN or infinity")));
    }
    Ok(())
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Marks a fit as unconverged when the parameter carrying the signal is not
/// resolved at three standard errors.
fn require_resolved(mut r: FitResult, value: f64, sigma: f64) -> FitResult {
    if !(value.abs() > 3.0 * sigma) {
        r.converged = false;
    }
    r
}

fn fit_curve<M: CurveModel>(model: &M, x: &[f64], y: &[f64], init: &[f64]) -> Result<FitResult> {
    let prob = CurveProblem {
        model,
        x,
        y,
        sigma: None,
    };
    least_squares_fit(&prob, init, &LmOptions::default())
}

/// Fits `y = a + b·x` with the general solver. See [`linear_fit`] for the
/// closed form.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<FitResult> {
    check_xy(x, y, 3, "line fit")?;
    let lf = linear_fit(x, y)?;
    fit_curve(&Line, x, y, &[lf.intercept, lf.slope])
}

/// Lorentzian peak or dip. Parameters `[center, fwhm, amplitude, offset]`.
pub fn fit_lorentzian(x: &[f64], y: &[f64]) -> Result<FitResult> {
    check_xy(x, y, 5, "Lorentzian fit")?;
    let (lo, hi) = min_max(x);
    let xm = 0.5 * (lo + hi);
    let xs = 0.5 * (hi - lo);
    if xs <= 0.0 {
        return Err(Error::InvalidArgument("Lorentzian fit: x values do not span a range".into()));
    }
    let y0 = median(y);
    let ys = y.iter().map(|v| (v - y0).abs()).fold(0.0, f64::max);
    let ys = if ys > 0.0 { ys } else { 1.0 };
    let xn: Vec<f64> = x.iter().map(|v| (v - xm) / xs).collect();
    let yn: Vec<f64> = y.iter().map(|v| (v - y0) / ys).collect();

    let k = (0..yn.len())
        .max_by(|&a, &b| yn[a].abs().total_cmp(&yn[b].abs()))
        .unwrap();
    let amp = yn[k];
    let above: Vec<f64> = (0..yn.len())
        .filter(|&i| yn[i] * amp.signum() >= 0.5 * amp.abs())
        .map(|i| xn[i])
        .collect();
    let (a, b) = min_max(&above);
    let width = (b - a).max(4.0 / xn.len() as f64);
    let init = [xn[k], width.ln(), amp, 0.0];
    let r = fit_curve(&Lorentzian, &xn, &yn, &init)?;

    let r = require_resolved(r.clone(), r.params[2], r.sigma[2]);
    let fwhm = xs * r.params[1].exp();
    Ok(FitResult {
        params: vec![xm + xs * r.params[0], fwhm, ys * r.params[2], y0 + ys * r.params[3]],
        sigma: vec![xs * r.sigma[0], fwhm * r.sigma[1], ys * r.sigma[2], ys * r.sigma[3]],
        residual_norm: ys * r.residual_norm,
        ..r
    })
}

/// `y = A·e^(−t/T1) + c`. Parameters `[t1, amplitude, offset]`.
pub fn fit_exponential(t: &[f64], y: &[f64]) -> Result<FitResult> {
    check_xy(t, y, 4, "exponential fit")?;
    let ts = t.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if ts <= 0.0 {
        return Err(Error::InvalidArgument("exponential fit: time axis is all zero".into()));
    }
    let tn: Vec<f64> = t.iter().map(|v| v / ts).collect();
    let edge = (y.len() / 10).max(1);
    let (first, last) = order_by_time(&tn, y, edge);
    let c = last;
    let a = first - c;
    let target = a.abs() / std::f64::consts::E;
    let mut idx: Vec<usize> = (0..tn.len()).collect();
    idx.sort_by(|&i, &j| tn[i].total_cmp(&tn[j]));
    let (tmin, tmax) = min_max(&tn);
    let tau = idx
        .iter()
        .find(|&&i| (y[i] - c).abs() < target)
        .map(|&i| tn[i] - tmin)
        .filter(|&v| v > 0.0)
        .unwrap_or((tmax - tmin) / 3.0)
        .max(1e-3);
    let r = fit_curve(&Exponential, &tn, y, &[tau.ln(), a, c])?;
    let r = require_resolved(r.clone(), r.params[1], r.sigma[1]);
    let t1 = ts * r.params[0].exp();
    Ok(FitResult {
        params: vec![t1, r.params[1], r.params[2]],
        sigma: vec![t1 * r.sigma[0], r.sigma[1], r.sigma[2]],
        ..r
    })
}

/// Means of the `edge` earliest and latest points.
fn order_by_time(t: &[f64], y: &[f64], edge: usize) -> (f64, f64) {
    let mut idx: Vec<usize> = (0..t.len()).collect();
    idx.sort_by(|&i, &j| t[i].total_cmp(&t[j]));
    let first = idx[..edge].iter().map(|&i| y[i]).sum::<f64>() / edge as f64;
    let last = idx[idx.len() - edge..].iter().map(|&i| y[i]).sum::<f64>() / edge as f64;
    (first, last)
}

/// `y = A·e^(−t/T2*)·cos(δt + φ) + c`. Parameters
/// `[t2_star, detuning, phase, amplitude, offset]`, with `δ ≥ 0` (rad/s)
/// and `φ ∈ (−π/2, π/2]`; a π phase shift therefore appears as a sign flip
/// of the amplitude. With `δ = 0` the model reduces to [`fit_exponential`]
/// and the phase/amplitude pair is unidentifiable, so the fit is flagged.
pub fn fit_damped_cosine(t: &[f64], y: &[f64]) -> Result<FitResult> {
    check_xy(t, y, 8, "damped-cosine fit")?;
    let ts = t.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if ts <= 0.0 {
        return Err(Error::InvalidArgument("damped-cosine fit: time axis is all zero".into()));
    }
    let tn: Vec<f64> = t.iter().map(|v| v / ts).collect();
    let c = y.iter().sum::<f64>() / y.len() as f64;
    let (tmin, tmax) = min_max(&tn);
    let span = tmax - tmin;
    let nyquist = PI * (tn.len() - 1) as f64 / span;
    let grid = 20 * tn.len();
    let dft = |w: f64| -> Complex64 {
        tn.iter()
            .zip(y)
            .map(|(&t, &v)| (v - c) * Complex64::from_polar(1.0, -w * (t - tmin)))
            .sum()
    };
    let (w0, f0) = (0..=grid)
        .map(|k| {
            let w = nyquist * k as f64 / grid as f64;
            (w, dft(w))
        })
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .unwrap();
    let amp = 2.0 * f0.norm() / tn.len() as f64 * if w0 == 0.0 { 0.5 } else { 1.0 };
    let phase = f0.arg() - w0 * tmin;
    let init = [(span / 2.0).ln(), w0, phase, 1.5 * amp, c];
    let r = fit_curve(&DampedCosine, &tn, y, &init)?;
    let r = require_resolved(r.clone(), r.params[3], r.sigma[3]);

    let mut p = r.params.clone();
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[2] = -p[2];
    }
    let mut phi = p[2].rem_euclid(TAU);
    if phi > PI {
        phi -= TAU;
    }
    if phi > FRAC_PI_2 {
        phi -= PI;
        p[3] = -p[3];
    } else if phi <= -FRAC_PI_2 {
        phi += PI;
        p[3] = -p[3];
    }
    let t2 = ts * p[0].exp();
    Ok(FitResult {
        params: vec![t2, p[1] / ts, phi, p[3], p[4]],
        sigma: vec![t2 * r.sigma[0], r.sigma[1] / ts, r.sigma[2], r.sigma[3], r.sigma[4]],
        ..r
    })
}

/// Side-coupled notch resonator with amplitude, phase and cable-delay
/// nuisance. `f` in Hz. Parameters
/// `[f0, kappa_ee, kappa_ei, amplitude, phase, delay]` with the rates in Hz
/// (κ/2π), the phase referred to `f0` and the delay in seconds.
pub fn fit_notch_resonator(f: &[f64], s: &[Complex64]) -> Result<FitResult> {
    if f.len() != s.len() {
        return Err(Error::InvalidArgument("notch fit: length mismatch".into()));
    }
    if f.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "notch fit needs at least 10 points, got {}",
            f.len()
        )));
    }
    if f.iter().any(|v| !v.is_finite()) || s.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidArgument("notch fit: data contain NaN or infinity".into()));
    }
    let (lo, hi) = min_max(f);
    let fm = 0.5 * (lo + hi);
    let fs = 0.5 * (hi - lo);
    if fs <= 0.0 {
        return Err(Error::InvalidArgument("notch fit: frequencies do not span a range".into()));
    }
    let mut idx: Vec<usize> = (0..f.len()).collect();
    idx.sort_by(|&i, &j| f[i].total_cmp(&f[j]));
    let x: Vec<f64> = idx.iter().map(|&i| (f[i] - fm) / fs).collect();
    let sv: Vec<Complex64> = idx.iter().map(|&i| s[i]).collect();
    let n = x.len();

    // Cable delay from the phase slope between the two band edges.
    let edge = (n / 10).max(2);
    let unwrapped = unwrap_phase(&sv);
    let left = (0..edge).map(|i| (x[i], unwrapped[i]));
    let right = (n - edge..n).map(|i| (x[i], unwrapped[i]));
    let mean = |it: &mut dyn Iterator<Item = (f64, f64)>| {
        let (sx, sy, c) = it.fold((0.0, 0.0, 0.0), |a, (x, y)| (a.0 + x, a.1 + y, a.2 + 1.0));
        (sx / c, sy / c)
    };
    let (xl, pl) = mean(&mut left.clone());
    let (xr, pr) = mean(&mut right.clone());
    let tau = -(pr - pl) / (xr - xl);
    let undelayed: Vec<Complex64> = x
        .iter()
        .zip(&sv)
        .map(|(&x, &s)| s * Complex64::from_polar(1.0, x * tau))
        .collect();
    let bg: Complex64 = (0..edge).chain(n - edge..n).map(|i| undelayed[i]).sum::<Complex64>()
        / (2 * edge) as f64;
    let a = bg.norm().max(1e-300);
    let theta = bg.arg();
    let norm: Vec<Complex64> = undelayed.iter().map(|v| v / bg).collect();
    let dip: Vec<f64> = norm.iter().map(|v| (1.0 - v).norm()).collect();
    let k = (0..n).max_by(|&i, &j| dip[i].total_cmp(&dip[j])).unwrap();
    let depth = dip[k].clamp(1e-3, 0.999);
    let above: Vec<f64> = (0..n).filter(|&i| dip[i] >= 0.5 * dip[k]).map(|i| x[i]).collect();
    let (wa, wb) = min_max(&above);
    let kappa = ((wb - wa) / 3f64.sqrt()).max(2.0 / n as f64);
    let init = [
        x[k],
        (kappa * depth).ln(),
        (kappa * (1.0 - depth)).ln(),
        a,
        theta + x[k] * tau,
        tau,
    ];
    let prob = NotchProblem { x: &x, s: &sv };
    let r = least_squares_fit(&prob, &init, &LmOptions::default())?;
    // κ_e is resolved when its log has an uncertainty below 1/3.
    let r = require_resolved(r.clone(), 1.0, r.sigma[1]);

    let p = &r.params;
    let (ke, ki) = (fs * p[1].exp(), fs * p[2].exp());
    let mut amp = p[3];
    let mut phase = p[4] - p[0] * p[5];
    if amp < 0.0 {
        amp = -amp;
        phase += PI;
    }
    phase = (phase + PI).rem_euclid(TAU) - PI;
    Ok(FitResult {
        params: vec![fm + fs * p[0], ke, ki, amp, phase, p[5] / (TAU * fs)],
        sigma: vec![
            fs * r.sigma[0],
            ke * r.sigma[1],
            ki * r.sigma[2],
            r.sigma[3],
            r.sigma[4],
            r.sigma[5] / (TAU * fs),
        ],
        ..r
    })
}

fn unwrap_phase(s: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(s.len());
    let mut offset = 0.0;
    let mut prev = s[0].arg();
    out.push(prev);
    for v in &s[1..] {
        let a = v.arg();
        let mut d = a - prev;
        while d > PI {
            d -= TAU;
            offset -= TAU;
        }
        while d < -PI {
            d += TAU;
            offset += TAU;
        }
        out.push(a + offset);
        prev = a;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_sigma: f64,
    pub intercept_sigma: f64,
    /// Residual standard deviation.
    pub residual_std: f64,
}

/// Ordinary least squares `y = intercept + slope·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    check_xy(x, y, 2, "linear fit")?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("linear fit: all x values are equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let s2 = if x.len() > 2 { ssr / (n - 2.0) } else { 0.0 };
    Ok(LinearFit {
        slope,
        intercept,
        slope_sigma: (s2 / sxx).sqrt(),
        intercept_sigma: (s2 * (1.0 / n + mx * mx / sxx)).sqrt(),
        residual_std: s2.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimodalFit {
    /// `[mu0, mu1, sigma, weight]` with `mu0 ≤ mu1` and `weight` the
    /// fraction in the `mu1` component.
    pub result: FitResult,
    /// `|mu1 − mu0| / sigma`, zero when degenerate.
    pub snr: f64,
    /// χ² improvement of two components over one.
    pub delta_chi2: f64,
    pub degenerate: bool,
    pub n_bins: usize,
}

/// χ² improvement below which a second component is not supported.
const MIN_DELTA_CHI2: f64 = 25.0;
const MIN_WEIGHT: f64 = 0.01;

/// Equal-width two-Gaussian fit to a histogram of `samples`, initialized by
/// a two-means split.
pub fn fit_bimodal_gaussian(samples: &[f64]) -> Result<BimodalFit> {
    if samples.len() < 100 {
        return Err(Error::InvalidArgument(format!(
            "bimodal fit needs at least 100 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("bimodal fit: samples contain NaN or infinity".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let std = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if std > 0.0 { std } else { 1.0 };
    let mut z: Vec<f64> = samples.iter().map(|v| (v - mean) / scale).collect();
    z.sort_by(f64::total_cmp);

    let n_bins = (n.sqrt().round() as usize).clamp(50, 400);
    let (lo, hi) = (z[0], z[z.len() - 1]);
    let pad = 1e-9 * (hi - lo).max(1.0);
    let (lo, hi) = (lo - pad, hi + pad);
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|k| lo + width * k as f64).collect();
    let mut counts = vec![0.0f64; n_bins];
    for &v in &z {
        let k = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[k] += 1.0;
    }

    let (m0, m1, split) = two_means(&z);
    let w = (z.len() - split) as f64 / n;
    let within = z[..split]
        .iter()
        .map(|v| (v - m0).powi(2))
        .chain(z[split..].iter().map(|v| (v - m1).powi(2)))
        .sum::<f64>()
        / n;
    let s0 = within.sqrt().max(width);
    let wc = w.clamp(1e-3, 1.0 - 1e-3);

    let opts = LmOptions::default();
    // Neyman weights first, then Pearson weights from that fit's expected
    // counts, which removes most of the low-count bias.
    let neyman: Vec<f64> = counts.iter().map(|c| c.max(1.0).sqrt()).collect();
    let fit_pass = |components: usize, init: &[f64]| -> Result<(FitResult, f64)> {
        let first = HistogramProblem {
            edges: &edges,
            counts: &counts,
            scales: &neyman,
            total: n,
            components,
        };
        let r = least_squares_fit(&first, init, &opts)?;
        let pearson: Vec<f64> = first.expected(&r.params).iter().map(|e: &f64| e.max(1.0).sqrt()).collect();
        let second = HistogramProblem {
            edges: &edges,
            counts: &counts,
            scales: &pearson,
            total: n,
            components,
        };
        let r = least_squares_fit(&second, &r.params, &opts)?;
        // χ² of both models is compared under the same Pearson weights.
        let e = second.expected(&r.params);
        let chi2 = e
            .iter()
            .zip(&counts)
            .map(|(e, c): (&f64, &f64)| (e - c).powi(2) / e.max(1.0))
            .sum::<f64>();
        Ok((r, chi2))
    };
    let (r2, chi2_two) = fit_pass(2, &[m0, m1, s0.ln(), (wc / (1.0 - wc)).ln()])?;
    let zstd = (z.iter().map(|v| v * v).sum::<f64>() / n).sqrt().max(width);
    let (_, chi2_one) = fit_pass(1, &[0.0, zstd.ln()])?;
    let delta_chi2 = chi2_one - chi2_two;

    let p = &r2.params;
    let sigma_z = p[2].exp();
    let weight = 1.0 / (1.0 + (-p[3]).exp());
    let (mut mu0, mut mu1, mut wt) = (p[0], p[1], weight);
    let (mut e0, mut e1) = (r2.sigma[0], r2.sigma[1]);
    if mu0 > mu1 {
        std::mem::swap(&mut mu0, &mut mu1);
        std::mem::swap(&mut e0, &mut e1);
        wt = 1.0 - wt;
    }
    let degenerate = delta_chi2 < MIN_DELTA_CHI2
        || !(MIN_WEIGHT..=1.0 - MIN_WEIGHT).contains(&wt)
        || !r2.converged;
    let snr = if degenerate { 0.0 } else { (mu1 - mu0) / sigma_z };
    let result = FitResult {
        params: vec![mean + scale * mu0, mean + scale * mu1, scale * sigma_z, wt],
        sigma: vec![
            scale * e0,
            scale * e1,
            scale * sigma_z * r2.sigma[2],
            weight * (1.0 - weight) * r2.sigma[3],
        ],
        ..r2
    };
    Ok(BimodalFit {
        result,
        snr,
        delta_chi2,
        degenerate,
        n_bins,
    })
}

/// 1-D two-means on sorted data. Returns the cluster means and the index of
/// the first element of the upper cluster.
fn two_means(sorted: &[f64]) -> (f64, f64, usize) {
    let n = sorted.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in sorted {
        prefix.push(prefix.last().unwrap() + v);
    }
    let mean_of = |a: usize, b: usize| (prefix[b] - prefix[a]) / (b - a) as f64;
    let mut split = n / 2;
    let mut thr = 0.5 * (sorted[0] + sorted[n - 1]);
    for _ in 0..100 {
        let s = sorted.partition_point(|&v| v <= thr).clamp(1, n - 1);
        let new_thr = 0.5 * (mean_of(0, s) + mean_of(s, n));
        split = s;
        if new_thr == thr {
            break;
        }
        thr = new_thr;
    }
    (mean_of(0, split), mean_of(split, n), split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSpec;
    use crate::transducer::coil_tuned_frequency;

    fn noise(seed: u64, n: usize, sigma: f64) -> Vec<f64> {
        let s = SeedSpec::new(seed, 77);
        (0..n as u64).map(|i| sigma * s.normal(i)).collect()
    }

    fn lorentz(x: f64, c: f64, w: f64, a: f64, o: f64) -> f64 {
        a / (1.0 + (2.0 * (x - c) / w).powi(2)) + o
    }

    #[test]
    fn lorentzian_noiseless_exact() {
        let x: Vec<f64> = (0..200).map(|i| 5.1844e9 + 20e6 * i as f64 / 199.0).collect();
        let y: Vec<f64> = x.iter().map(|&x| lorentz(x, 5.19442e9, 1.53e6, 2.0, 0.1)).collect();
        let r = fit_lorentzian(&x, &y).unwrap();
        assert!(r.converged);
        assert!((r.params[0] / 5.19442e9 - 1.0).abs() < 1e-8);
        assert!((r.params[1] / 1.53e6 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn lorentzian_with_noise() {
        let x: Vec<f64> = (0..200).map(|i| 5.1844e9 + 20e6 * i as f64 / 199.0).collect();
        let e = noise(3, 200, 0.005);
        let y: Vec<f64> = x
            .iter()
            .zip(&e)
            .map(|(&x, n)| lorentz(x, 5.19442e9, 1.53e6, 1.0, 0.0) + n)
            .collect();
        let r = fit_lorentzian(&x, &y).unwrap();
        assert!((r.params[0] - 5.19442e9).abs() < 0.01 * 1.53e6);
        assert!((r.params[1] / 1.53e6 - 1.0).abs() < 0.01);
    }

    #[test]
    fn lorentzian_offset_equivariance() {
        let x: Vec<f64> = (0..100).map(|i| -5.0 + 10.0 * i as f64 / 99.0).collect();
        let e = noise(4, 100, 0.01);
        let y: Vec<f64> = x.iter().zip(&e).map(|(&x, n)| lorentz(x, 0.3, 1.2, -1.0, 0.2) + n).collect();
        let y2: Vec<f64> = y.iter().map(|v| v + 3.0).collect();
        let (a, b) = (fit_lorentzian(&x, &y).unwrap(), fit_lorentzian(&x, &y2).unwrap());
        assert!((b.params[3] - a.params[3] - 3.0).abs() < 1e-8);
        for j in 0..3 {
            assert!((a.params[j] - b.params[j]).abs() < 1e-8 * (1.0 + a.params[j].abs()));
        }
    }

    #[test]
    fn flat_lorentzian_is_flagged() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y = vec![1.0; 50];
        let r = fit_lorentzian(&x, &y).unwrap();
        assert!(!r.converged || r.params[2].abs() < 1e-6);
    }

    #[test]
    fn exponential_cases() {
        let t: Vec<f64> = (0..40).map(|i| 200e-6 * i as f64 / 39.0).collect();
        let y: Vec<f64> = t.iter().map(|&t| 0.8 * (-t / 60.2e-6).exp() + 0.1).collect();
        let r = fit_exponential(&t, &y).unwrap();
        assert!(r.converged);
        assert!((r.params[0] / 60.2e-6 - 1.0).abs() < 1e-8);
        let t3: Vec<f64> = t.iter().map(|v| v * 3.0).collect();
        let r3 = fit_exponential(&t3, &y).unwrap();
        assert!((r3.params[0] / r.params[0] - 3.0).abs() < 1e-12);
        let e = noise(5, 40, 0.02);
        let yn: Vec<f64> = y.iter().zip(&e).map(|(a, b)| a + b).collect();
        let rn = fit_exponential(&t, &yn).unwrap();
        assert!((rn.params[0] / 60.2e-6 - 1.0).abs() < 0.1);
    }

    #[test]
    fn damped_cosine_cases() {
        let t: Vec<f64> = (0..80).map(|i| 20e-6 * i as f64 / 79.0).collect();
        let delta = TAU * 0.5e6;
        let gen = |phi: f64| -> Vec<f64> {
            t.iter()
                .map(|&t| 0.5 * (-t / 8.97e-6).exp() * (delta * t + phi).cos() + 0.5)
                .collect()
        };
        let r = fit_damped_cosine(&t, &gen(0.3)).unwrap();
        assert!(r.converged);
        assert!((r.params[0] / 8.97e-6 - 1.0).abs() < 1e-8);
        assert!((r.params[1] / delta - 1.0).abs() < 1e-8);
        assert!((r.params[2] - 0.3).abs() < 1e-8);
        let flipped = fit_damped_cosine(&t, &gen(0.3 + PI)).unwrap();
        assert!((flipped.params[3] + r.params[3]).abs() < 1e-8);
        assert!((flipped.params[0] / r.params[0] - 1.0).abs() < 1e-8);
        // Fringe period equals 2π/δ.
        assert!((TAU / r.params[1] - 2e-6).abs() < 1e-12);
    }

    #[test]
    fn damped_cosine_without_fringes_reduces_to_exponential() {
        let t: Vec<f64> = (0..40).map(|i| 40e-6 * i as f64 / 39.0).collect();
        let y: Vec<f64> = t.iter().map(|&t| 0.5 * (-t / 9e-6).exp() + 0.5).collect();
        let d = fit_damped_cosine(&t, &y).unwrap();
        let e = fit_exponential(&t, &y).unwrap();
        assert!((d.params[0] / e.params[0] - 1.0).abs() < 1e-4, "{} {}", d.params[0], e.params[0]);
    }

    fn notch(f: f64, f0: f64, ke: f64, ki: f64, a: f64, th: f64, tau: f64) -> Complex64 {
        let k = ke + ki;
        let n = 1.0 - (ke / k) / Complex64::new(1.0, 2.0 * (f - f0) / k);
        Complex64::from_polar(a, th - TAU * f * tau) * n
    }

    #[test]
    fn notch_recovers_rates() {
        let f: Vec<f64> = (0..401).map(|i| 5.16e9 + 80e6 * i as f64 / 400.0).collect();
        let ei = noise(6, 401, 1e-3);
        let eq = noise(7, 401, 1e-3);
        let s: Vec<Complex64> = f
            .iter()
            .enumerate()
            .map(|(i, &f)| notch(f, 5.2e9, 12.2e6, 11.4e6, 0.8, 0.4, 3e-9) + Complex64::new(ei[i], eq[i]))
            .collect();
        let r = fit_notch_resonator(&f, &s).unwrap();
        assert!(r.converged);
        assert!((r.params[1] / 12.2e6 - 1.0).abs() < 0.02, "{:?}", r.params);
        assert!((r.params[2] / 11.4e6 - 1.0).abs() < 0.02, "{:?}", r.params);
        let rotated: Vec<Complex64> = s.iter().map(|v| v * Complex64::from_polar(1.0, 1.7)).collect();
        let rr = fit_notch_resonator(&f, &rotated).unwrap();
        for j in 0..3 {
            assert!((rr.params[j] / r.params[j] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn notch_without_resonance_is_flagged() {
        let f: Vec<f64> = (0..200).map(|i| 5.16e9 + 80e6 * i as f64 / 199.0).collect();
        let ei = noise(8, 200, 1e-3);
        let eq = noise(9, 200, 1e-3);
        let s: Vec<Complex64> = (0..200).map(|i| Complex64::new(1.0 + ei[i], eq[i])).collect();
        let r = fit_notch_resonator(&f, &s).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn coil_slope_via_line_fit() {
        let coeff = 2.0e12;
        let omega0 = TAU * 5.2e9;
        let currents: Vec<f64> = (0..15).map(|i| 1e-3 * i as f64).collect();
        let x: Vec<f64> = currents.iter().map(|i| i * i).collect();
        let y: Vec<f64> = currents
            .iter()
            .map(|&i| coil_tuned_frequency(omega0, coeff, i))
            .collect();
        let r = fit_line(&x, &y).unwrap();
        assert!((-r.params[1] / coeff - 1.0).abs() < 1e-3);
        let l = linear_fit(&x, &y).unwrap();
        assert!((-l.slope / coeff - 1.0).abs() < 1e-9);
    }

    #[test]
    fn linear_fit_sigma() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let l = linear_fit(&x, &y).unwrap();
        assert!((l.slope - 2.0).abs() < 1e-12 && (l.intercept - 1.0).abs() < 1e-12);
        assert!(l.slope_sigma < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    fn mixture(seed: u64, n: usize, snr: f64) -> Vec<f64> {
        let s = SeedSpec::new(seed, 0);
        (0..n as u64)
            .map(|i| s.normal(i) + if i % 2 == 0 { 0.0 } else { snr })
            .collect()
    }

    #[test]
    fn bimodal_recovers_snr() {
        let v = mixture(10, 10_000, 3.0);
        let b = fit_bimodal_gaussian(&v).unwrap();
        assert!(!b.degenerate);
        assert!((b.snr / 3.0 - 1.0).abs() < 0.05, "{}", b.snr);
        let scaled: Vec<f64> = v.iter().map(|x| -4.0 * x + 100.0).collect();
        let bs = fit_bimodal_gaussian(&scaled).unwrap();
        assert!((bs.snr - b.snr).abs() < 1e-6 * b.snr, "{} {}", bs.snr, b.snr);
    }

    #[test]
    fn bimodal_flags_unimodal() {
        let v = mixture(11, 10_000, 0.0);
        let b = fit_bimodal_gaussian(&v).unwrap();
        assert!(b.degenerate);
        assert_eq!(b.snr, 0.0);
        assert!(fit_bimodal_gaussian(&v[..50]).is_err());
    }
}
