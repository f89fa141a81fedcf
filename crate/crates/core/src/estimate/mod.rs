//! Least-squares fitting, model library and state discrimination.

pub mod classify;
pub mod fits;
pub mod lm;
pub mod models;

pub use classify::{
    fidelity_report, fidelity_vs_snr, lda_boundary, ConfusionCounts, DecisionBoundary,
    FidelityReport,
};
pub use fits::{
    fit_bimodal_gaussian, fit_damped_cosine, fit_exponential, fit_line, fit_lorentzian,
    fit_notch_resonator, linear_fit, BimodalFit, LinearFit,
};
pub use lm::{least_squares_fit, FitResult, LmOptions, Problem};
