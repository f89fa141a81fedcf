//! Levenberg–Marquardt least squares.
//!
//! Damping `λ` starts at 1e-3 and is divided by 10 after an accepted step and
//! multiplied by 10 after a rejected one. The normal equations are damped
//! with Marquardt's diagonal scaling, `(JᵀJ + λ·diag JᵀJ) δ = −Jᵀr`.
//! Iteration stops when an accepted step changes the squared residual by
//! less than `ftol` relative, when the scaled gradient
//! `max_j |Jᵀr|_j / (‖r‖·‖J_j‖)` drops below `gtol`, or when the step is
//! below `xtol` relative to the parameters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A residual vector `r(p)` and its Jacobian `∂r_i/∂p_j`.
pub trait Problem {
    fn n_residuals(&self) -> usize;
    fn n_params(&self) -> usize;
    fn residuals(&self, p: &[f64], out: &mut [f64]);

    /// Defaults to central differences.
    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) {
        numeric_jacobian(self, p, out)
    }
}

pub fn numeric_jacobian<P: Problem + ?Sized>(problem: &P, p: &[f64], out: &mut DMatrix<f64>) {
    let m = problem.n_residuals();
    let mut plus = vec![0.0; m];
    let mut minus = vec![0.0; m];
    let mut q = p.to_vec();
    for j in 0..p.len() {
        let h = f64::EPSILON.cbrt() * p[j].abs().max(1.0);
        q[j] = p[j] + h;
        problem.residuals(&q, &mut plus);
        q[j] = p[j] - h;
        problem.residuals(&q, &mut minus);
        q[j] = p[j];
        for i in 0..m {
            out[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub ftol: f64,
    pub gtol: f64,
    pub xtol: f64,
    pub max_iterations: usize,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            ftol: 1e-10,
            gtol: 1e-10,
            xtol: 1e-12,
            max_iterations: 200,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `‖r‖` at the optimum.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Squared residual after each accepted step, starting with the initial
    /// point.
    #[serde(skip)]
    pub history: Vec<f64>,
}

impl FitResult {
    pub fn param(&self, i: usize) -> f64 {
        self.params[i]
    }
}

pub fn least_squares_fit<P: Problem + ?Sized>(
    problem: &P,
    init: &[f64],
    opts: &LmOptions,
) -> Result<FitResult> {
    let n = problem.n_params();
    let m = problem.n_residuals();
    if init.len() != n {
        return Err(Error::InvalidArgument(format!(
            "expected {n} initial parameters, got {}",
            init.len()
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("no data to fit".into()));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("initial parameters must be finite".into()));
    }

    let mut p = DVector::from_column_slice(init);
    let mut r = DVector::zeros(m);
    problem.residuals(p.as_slice(), r.as_mut_slice());
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "residuals at the initial point are not finite".into(),
        ));
    }
    let mut cost = r.norm_squared();
    let mut history = vec![cost];
    let mut jac = DMatrix::zeros(m, n);
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;
    let mut trial_r = DVector::zeros(m);

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        problem.jacobian(p.as_slice(), &mut jac);
        let grad = jac.tr_mul(&r);
        let jtj = jac.tr_mul(&jac);
        let rnorm = cost.sqrt();
        if rnorm == 0.0 {
            converged = true;
            break;
        }
        let scaled_grad = (0..n)
            .map(|j| {
                let cn = jtj[(j, j)].sqrt();
                if cn > 0.0 {
                    grad[j].abs() / (rnorm * cn)
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        if scaled_grad < opts.gtol {
            converged = true;
            break;
        }
        let diag: Vec<f64> = (0..n).map(|j| jtj[(j, j)].max(1e-300)).collect();

        loop {
            let mut a = jtj.clone();
            for j in 0..n {
                a[(j, j)] += lambda * diag[j];
            }
            let step = a.cholesky().map(|c| c.solve(&(-&grad)));
            let Some(step) = step else {
                lambda *= 10.0;
                if lambda > 1e20 {
                    break 'outer;
                }
                continue;
            };
            let trial = &p + &step;
            problem.residuals(trial.as_slice(), trial_r.as_mut_slice());
            let trial_cost = trial_r.norm_squared();
            if trial_cost.is_finite() && trial_cost < cost {
                let rel_change = (cost - trial_cost) / cost;
                let small_step = step.norm() <= opts.xtol * (p.norm() + opts.xtol);
                p = trial;
                std::mem::swap(&mut r, &mut trial_r);
                cost = trial_cost;
                history.push(cost);
                lambda = (lambda / 10.0).max(1e-300);
                if rel_change < opts.ftol || small_step {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
            if step.norm() <= opts.xtol * (p.norm() + opts.xtol) || lambda > 1e20 {
                // No downhill step exists at machine precision.
                converged = scaled_grad < opts.gtol.sqrt();
                break 'outer;
            }
        }
    }

    problem.jacobian(p.as_slice(), &mut jac);
    let dof = m.saturating_sub(n).max(1) as f64;
    let s2 = cost / dof;
    let cov = jac.tr_mul(&jac).try_inverse();
    let sigma: Vec<f64> = match &cov {
        Some(c) if (0..n).all(|j| c[(j, j)].is_finite() && c[(j, j)] >= 0.0) => {
            (0..n).map(|j| (c[(j, j)] * s2).sqrt()).collect()
        }
        _ => vec![f64::INFINITY; n],
    };
    if sigma.iter().any(|s| !s.is_finite()) || !well_conditioned(&jac) {
        converged = false;
    }

    Ok(FitResult {
        params: p.as_slice().to_vec(),
        sigma,
        residual_norm: cost.sqrt(),
        iterations,
        converged,
        history,
    })
}

fn well_conditioned(jac: &DMatrix<f64>) -> bool {
    // Column-equilibrated condition number of J.
    let mut j = jac.clone();
    for mut col in j.column_iter_mut() {
        let n = col.norm();
        if n == 0.0 {
            return false;
        }
        col /= n;
    }
    let sv = j.singular_values();
    let max = sv.max();
    let min = sv.min();
    min > 0.0 && max / min < 1e8
}
