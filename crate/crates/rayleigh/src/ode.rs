//! Adaptive Dormand-Prince 5(4) integration for complex-valued systems.
//!
//! The propagation problems in this crate share one right-hand side across
//! several stacked solution columns, so the integrator works on a flat
//! `Vec<Complex64>` state and a caller-supplied derivative closure. Step
//! control uses the embedded fourth-order error estimate with a mixed
//! absolute/relative norm, and the integration range can be split at
//! breakpoints where the coefficients lose smoothness.

use crate::{RayleighError, Result};
use num_complex::Complex64;

// Dormand-Prince RK5(4)7M tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
// Fifth-order weights equal row 6 of A; the error weights are b5 - b4.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integration controls.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Smallest admissible step relative to the range length.
    pub min_step_frac: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-11,
            abs_tol: 1e-12,
            min_step_frac: 1e-12,
        }
    }
}

fn err_norm(err: &[Complex64], y0: &[Complex64], y1: &[Complex64], opts: &OdeOptions) -> f64 {
    let mut acc = 0.0f64;
    for i in 0..err.len() {
        let scale = opts.abs_tol + opts.rel_tol * y0[i].norm().max(y1[i].norm());
        acc = acc.max(err[i].norm() / scale);
    }
    acc
}

/// Integrates y' = f(z, y) from `z0` to `z1` in place, splitting the range
/// at any `breakpoints` lying strictly inside it (in either direction).
pub fn integrate<F>(
    f: &F,
    z0: f64,
    z1: f64,
    y: &mut Vec<Complex64>,
    breakpoints: &[f64],
    opts: &OdeOptions,
) -> Result<()>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    if z0 == z1 {
        return Ok(());
    }
    let mut stops: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| (b - z0) * (z1 - b) > 0.0)
        .collect();
    stops.push(z1);
    stops.sort_by(|a, b| {
        let (da, db) = ((a - z0).abs(), (b - z0).abs());
        da.partial_cmp(&db).unwrap()
    });
    stops.dedup();
    let mut left = z0;
    for stop in stops {
        integrate_segment(f, left, stop, y, opts)?;
        left = stop;
    }
    Ok(())
}

fn integrate_segment<F>(
    f: &F,
    z0: f64,
    z1: f64,
    y: &mut Vec<Complex64>,
    opts: &OdeOptions,
) -> Result<()>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    let n = y.len();
    let dir = (z1 - z0).signum();
    let len = (z1 - z0).abs();
    if len == 0.0 {
        return Ok(());
    }
    let min_step = opts.min_step_frac * len;
    let mut z = z0;
    let mut h = dir * (len / 16.0).min(len);
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut ytmp = vec![Complex64::new(0.0, 0.0); n];
    let mut ynew = vec![Complex64::new(0.0, 0.0); n];
    let mut err = vec![Complex64::new(0.0, 0.0); n];
    // FSAL: k[0] holds f at the current point.
    {
        let (k0, _) = k.split_at_mut(1);
        f(z, y, &mut k0[0]);
    }
    loop {
        let remaining = (z1 - z) * dir;
        if remaining <= 1e-14 * len {
            return Ok(());
        }
        if h.abs() > remaining {
            h = dir * remaining;
        }
        // Six derivative stages beyond k[0].
        for s in 0..6 {
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    acc += A[s][j] * kj[i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            f(z + C[s] * h, &ytmp, &mut k[s + 1]);
        }
        // Stage 7 input is the fifth-order solution itself (FSAL).
        ynew.copy_from_slice(&ytmp);
        for i in 0..n {
            let mut e = Complex64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            err[i] = h * e;
        }
        let norm = err_norm(&err, y, &ynew, opts);
        if !ynew.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(RayleighError::NonFiniteState { z });
        }
        if norm <= 1.0 {
            z += h;
            y.copy_from_slice(&ynew);
            let last = k[6].clone();
            k[0].copy_from_slice(&last);
        }
        let factor = if norm == 0.0 {
            5.0
        } else {
            (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() < min_step {
            return Err(RayleighError::StepSizeUnderflow { z, step: h.abs() });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_exponential() {
        // y' = i w y, exact solution e^{i w z}.
        let w = Complex64::new(0.0, 3.0);
        let f = |_z: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = w * y[0];
        };
        let mut y = vec![Complex64::new(1.0, 0.0)];
        integrate(&f, 0.0, 2.0, &mut y, &[], &OdeOptions::default()).unwrap();
        let exact = (w * 2.0).exp();
        assert!((y[0] - exact).norm() < 1e-9);
    }

    #[test]
    fn backward_direction_and_breakpoints() {
        // y' = a(z) y with a piecewise-constant coefficient; integrating
        // backward from 0 to -2 across the kink at z = -1.
        let f = |z: f64, y: &[Complex64], dy: &mut [Complex64]| {
            let a = if z < -1.0 { 2.0 } else { -1.0 };
            dy[0] = a * y[0];
        };
        let mut y = vec![Complex64::new(1.0, 0.0)];
        integrate(&f, 0.0, -2.0, &mut y, &[-1.0], &OdeOptions::default()).unwrap();
        // Exact: e^{1} over [-1,0] backward gives e^{1}; then e^{-2}.
        let exact = (1.0f64 - 2.0).exp();
        assert!((y[0].re - exact).abs() < 1e-9, "{} vs {exact}", y[0].re);
    }

    #[test]
    fn harmonic_oscillator_system() {
        // (y, y')' for y'' = -4 y from (1, 0): y = cos(2z).
        let f = |_z: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = y[1];
            dy[1] = -4.0 * y[0];
        };
        let mut y = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        integrate(&f, 0.0, 5.0, &mut y, &[], &OdeOptions::default()).unwrap();
        assert!((y[0].re - (10.0f64).cos()).abs() < 1e-8);
        assert!((y[1].re + 2.0 * (10.0f64).sin()).abs() < 1e-8);
    }

    #[test]
    fn step_underflow_reported() {
        // A right-hand side with a non-integrable blow-up forces failure.
        let f = |z: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = y[0] / (1.0 - z).powi(2);
        };
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let r = integrate(&f, 0.0, 2.0, &mut y, &[], &OdeOptions::default());
        assert!(r.is_err());
    }
}
