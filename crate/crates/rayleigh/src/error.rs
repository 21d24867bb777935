//! Error type shared by all modules.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RayleighError {
    #[error("config parse failure: {0}")]
    Parse(String),

    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("branch point; excise (xi = {xi})")]
    BranchPoint { xi: Complex64 },

    #[error("step-size underflow at Z = {z} (step {step})")]
    StepSizeUnderflow { z: f64, step: f64 },

    #[error("non-finite state encountered at Z = {z}")]
    NonFiniteState { z: f64 },

    #[error("near-resonance: |Delta| = {abs_delta} below threshold {threshold}")]
    NearResonance { abs_delta: f64, threshold: f64 },

    #[error("dual-route disagreement: {0}")]
    RouteMismatch(String),

    #[error("contour near zero: |f| = {abs_f} below floor {floor}")]
    ContourNearZero { abs_f: f64, floor: f64 },

    #[error("Volterra iteration did not converge after {iters} terms (ratio {ratio})")]
    NonConvergence { iters: usize, ratio: f64 },

    #[error("singular prefactor: {0}")]
    SingularPrefactor(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
