//! Gauge transform of the Rayleigh system into a matrix Schrödinger
//! problem, giving an independent second path to the boundary matrix.
//!
//! In the flipped coordinate x = -Z >= 0 a gauge matrix G with det G = 1
//! converts the system into -F'' + (V + Q0)F = -xi^2 F with boundary
//! matrix Theta. Jost solutions of the Schrödinger form are built by a
//! Faddeev-rescaled Volterra iteration, and the resulting Jost function
//! F_Theta = F'(0) + Theta F(0) recovers the boundary matrix through an
//! explicit prefactor relation. Agreement with the propagation path is
//! the central cross-check of the crate.
//!
//! ```
//! use num_complex::Complex64;
//! use rayleigh::boundary::boundary_matrix_and_delta;
//! use rayleigh::markushevich::{jost_function_and_bridge, schroedinger_cache};
//! use rayleigh::medium::MediumProfile;
//! use rayleigh::riemann::{SheetLabel, SheetPoint};
//!
//! let p = MediumProfile::load_profile(
//!     "[medium]\nomega = 1.0\nH = 1.0\nlambda0 = 1.0\nmu0 = 1.0\n\n\
//!      [slab]\nkind = \"bump\"\namplitudes = [0.05, 0.1]\n",
//! ).unwrap();
//! let cache = schroedinger_cache(&p, 1e-10).unwrap();
//! let pt = SheetPoint::new(Complex64::new(0.8, 0.5), SheetLabel::PP);
//! let (direct, _) = boundary_matrix_and_delta(&p, &pt, 1e-10).unwrap();
//! let (_, bridge) = jost_function_and_bridge(&p, &cache, &pt, 1e-10).unwrap();
//! let defect = (bridge - direct.entries).norm_max() / direct.entries.norm_max();
//! assert!(defect < 1e-8);
//! ```

use crate::linalg::{sinc_q, C64, Mat2};
use crate::medium::MediumProfile;
use crate::ode::{integrate, OdeOptions};
use crate::riemann::{quasimomenta, SheetPoint};
use crate::{RayleighError, Result};
use num_complex::Complex64;
use serde::Serialize;

pub type RMat = [[f64; 2]; 2];

fn rmat_mul(a: &RMat, b: &RMat) -> RMat {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn rmat_sub(a: &RMat, b: &RMat) -> RMat {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

fn rmat_norm(a: &RMat) -> f64 {
    a.iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Lamé data re-expressed in the flipped coordinate x = -Z: odd-order
/// derivatives change sign.
fn lame_at_x(p: &MediumProfile, x: f64) -> Result<FlippedSample> {
    let s = p.sample_lame(-x)?;
    Ok(FlippedSample {
        lambda: s.lambda,
        mu: s.mu,
        dmu1: -s.dmu1,
        dmu2: s.dmu2,
        dmu3: -s.dmu3,
        dlambda1: -s.dlambda1,
    })
}

struct FlippedSample {
    lambda: f64,
    mu: f64,
    dmu1: f64,
    dmu2: f64,
    dmu3: f64,
    dlambda1: f64,
}

impl FlippedSample {
    /// (1/mu)'' = (2 mu'^2 - mu mu'') / mu^3.
    fn inv_mu_d2(&self) -> f64 {
        (2.0 * self.dmu1 * self.dmu1 - self.mu * self.dmu2) / self.mu.powi(3)
    }

    /// (1/mu)''' = (6 mu mu' mu'' - mu^2 mu''' - 6 mu'^3) / mu^4.
    fn inv_mu_d3(&self) -> f64 {
        (6.0 * self.mu * self.dmu1 * self.dmu2
            - self.mu * self.mu * self.dmu3
            - 6.0 * self.dmu1.powi(3))
            / self.mu.powi(4)
    }
}

/// Gauge matrix G(x) with det G = 1, solving G' = L G / 2 from G(0) = I.
#[derive(Debug, Clone, Copy)]
pub struct GaugeMatrix {
    pub x: f64,
    pub g: RMat,
    /// Stored slab-bottom values G(H).
    pub gh: RMat,
}

fn gauge_rhs(p: &MediumProfile) -> impl Fn(f64, &[Complex64], &mut [Complex64]) + '_ {
    move |x, y, dy| {
        let s = lame_at_x(p, x.min(p.h)).expect("x >= 0 maps into the medium");
        let c = s.mu * (s.lambda + s.mu) / (p.mu0 * (s.lambda + 2.0 * s.mu));
        let d = -2.0 * p.mu0 * s.inv_mu_d2();
        // G11' = -d/2 G21, G12' = -d/2 G22, G21' = -c/2 G11, G22' = -c/2 G12.
        dy[0] = -0.5 * d * y[2];
        dy[1] = -0.5 * d * y[3];
        dy[2] = -0.5 * c * y[0];
        dy[3] = -0.5 * c * y[1];
    }
}

fn x_breakpoints(p: &MediumProfile) -> Vec<f64> {
    p.breakpoints().iter().map(|z| -z).collect()
}

fn gauge_to(p: &MediumProfile, x: f64, tol: f64) -> Result<RMat> {
    let mut y = vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    ];
    if x > 0.0 {
        let opts = OdeOptions {
            rel_tol: tol,
            abs_tol: tol * 1e-2,
            ..OdeOptions::default()
        };
        integrate(&gauge_rhs(p), 0.0, x, &mut y, &x_breakpoints(p), &opts)?;
    }
    Ok([[y[0].re, y[1].re], [y[2].re, y[3].re]])
}

/// Evaluates the gauge matrix at x >= 0: ODE up to min(x, H) and the
/// affine closed form beyond the slab.
pub fn gauge_matrix(p: &MediumProfile, x: f64, tol: f64) -> Result<GaugeMatrix> {
    if x < 0.0 {
        return Err(RayleighError::Domain(format!("x = {x} negative")));
    }
    let gh = gauge_to(p, p.h, tol)?;
    let g = if x <= p.h {
        gauge_to(p, x, tol)?
    } else {
        gauge_beyond(&gh, p.c0(), p.h, x)
    };
    Ok(GaugeMatrix { x, g, gh })
}

/// Closed form for x >= H: the top row freezes and the bottom row is
/// affine in x.
fn gauge_beyond(gh: &RMat, c0: f64, h: f64, x: f64) -> RMat {
    [
        [gh[0][0], gh[0][1]],
        [
            -0.5 * c0 * gh[0][0] * (x - h) + gh[1][0],
            -0.5 * c0 * gh[0][1] * (x - h) + gh[1][1],
        ],
    ]
}

/// Potential data at one depth.
#[derive(Debug, Clone, Copy)]
pub struct PotentialSet {
    pub x: f64,
    pub q: RMat,
    pub q0: RMat,
    pub v: RMat,
    pub b1: RMat,
    pub b2: RMat,
}

fn b_matrices(p: &MediumProfile, s: &FlippedSample) -> (RMat, RMat) {
    let (la, mu) = (s.lambda, s.mu);
    let sig = la + 2.0 * mu;
    let im2 = s.inv_mu_d2();
    let im3 = s.inv_mu_d3();
    // d/dx of mu(la+mu)/(la+2mu) by the quotient rule.
    let num_d = s.dmu1 * (la + mu) + mu * (s.dlambda1 + s.dmu1);
    let ratio_d = (num_d * sig - mu * (la + mu) * (s.dlambda1 + 2.0 * s.dmu1)) / (sig * sig);
    let b1 = [
        [
            -0.5 * im2 * mu * (la + mu) / sig + s.dmu2 / mu,
            p.mu0 * (2.0 * (s.dmu1 / mu) * im2 + im3),
        ],
        [
            ((s.dlambda1 * mu * mu + s.dmu1 * la * (la + mu)) / (sig * sig) - 0.5 * ratio_d)
                / p.mu0,
            0.5 * im2 * mu * (la - mu) / sig,
        ],
    ];
    let b2 = [
        [-1.0 / mu, p.mu0 * (-2.0 * s.dmu1 / mu.powi(3))],
        [0.0, -1.0 / sig],
    ];
    (b1, b2)
}

/// Background potential from the slab-bottom gauge values, affine in x
/// everywhere (its natural extension below x = H).
fn q0_at(p: &MediumProfile, gh: &RMat, x: f64) -> RMat {
    let w2 = p.omega * p.omega;
    let c0 = p.c0();
    let g21 = -0.5 * c0 * gh[0][0] * (x - p.h) + gh[1][0];
    let g22 = -0.5 * c0 * gh[0][1] * (x - p.h) + gh[1][1];
    let s = w2 * c0 / p.mu0;
    [
        [-w2 / p.mu0 - s * gh[0][1] * g21, s * gh[0][0] * g21],
        [-s * gh[0][1] * g22, -w2 / p.sigma0() + s * gh[0][1] * g21],
    ]
}

/// Samples Q = (G^-1 B G)^T, the background Q0, and V = Q - Q0 at x.
pub fn potentials(p: &MediumProfile, x: f64, tol: f64) -> Result<PotentialSet> {
    let gauge = gauge_matrix(p, x, tol)?;
    Ok(potentials_with_gauge(p, &gauge))
}

fn potentials_with_gauge(p: &MediumProfile, gauge: &GaugeMatrix) -> PotentialSet {
    let s = lame_at_x(p, gauge.x).expect("x >= 0 maps into the medium");
    let (b1, b2) = b_matrices(p, &s);
    let w2 = p.omega * p.omega;
    let b = [
        [b1[0][0] + w2 * b2[0][0], b1[0][1] + w2 * b2[0][1]],
        [b1[1][0] + w2 * b2[1][0], b1[1][1] + w2 * b2[1][1]],
    ];
    let g = gauge.g;
    // det G = 1, so the inverse is the adjugate.
    let ginv = [[g[1][1], -g[0][1]], [-g[1][0], g[0][0]]];
    let qt = rmat_mul(&rmat_mul(&ginv, &b), &g);
    let q = [[qt[0][0], qt[1][0]], [qt[0][1], qt[1][1]]];
    let q0 = q0_at(p, &gauge.gh, gauge.x);
    PotentialSet {
        x: gauge.x,
        q,
        q0,
        v: rmat_sub(&q, &q0),
        b1,
        b2,
    }
}

/// Boundary matrix Theta of the Schrödinger form together with its
/// defining factors.
#[derive(Debug, Clone, Copy)]
pub struct ThetaSet {
    pub theta: Mat2,
    pub da: Mat2,
    pub ca: Mat2,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub varpi: f64,
    pub c_at_0: f64,
}

/// Builds Theta(xi) from surface Lamé data; xi = 0 makes the prefactor
/// singular.
pub fn theta_set(p: &MediumProfile, xi: C64) -> Result<ThetaSet> {
    if xi.norm() == 0.0 {
        return Err(RayleighError::SingularPrefactor(
            "xi = 0 makes D^a singular".into(),
        ));
    }
    let s = lame_at_x(p, 0.0)?;
    let (la, mu) = (s.lambda, s.mu);
    let varpi = p.mu0 / mu;
    let theta3 = s.dmu1 / mu;
    let theta2 = mu * mu / (2.0 * p.mu0 * (la + 2.0 * mu));
    let w2 = p.omega * p.omega;
    let theta1 = varpi * (w2 / mu + mu * s.inv_mu_d2());
    let z = C64::new(0.0, 0.0);
    let theta = Mat2::new(
        C64::new(-theta3, 0.0),
        C64::new(theta2, 0.0),
        2.0 * varpi * xi * xi - theta1,
        z,
    );
    let da = Mat2::new(
        C64::new(-2.0 * p.mu0 * s.dmu1 / mu, 0.0),
        C64::new(mu, 0.0),
        -2.0 * p.mu0 * xi,
        z,
    );
    let ca = Mat2::new(
        C64::new(p.mu0 * (-w2 / mu + s.dmu2 / mu), 0.0) + 2.0 * p.mu0 * xi * xi,
        C64::new(-s.dmu1 * mu / (la + 2.0 * mu), 0.0),
        2.0 * p.mu0 * xi * s.dmu1 / mu,
        -xi * mu * mu / (la + 2.0 * mu),
    );
    Ok(ThetaSet {
        theta,
        da,
        ca,
        theta1,
        theta2,
        theta3,
        varpi,
        c_at_0: 1.0 - 2.0 * varpi * theta2,
    })
}

/// The A, B, C coefficient matrices of the unperturbed kernel.
pub fn kernel_abc(p: &MediumProfile, gh: &RMat, x: f64, y: f64) -> (RMat, RMat, RMat) {
    let c0 = p.c0();
    let (g11, g12) = (gh[0][0], gh[0][1]);
    let (g21, g22) = (gh[1][0], gh[1][1]);
    let ax1 = -0.5 * c0 * g11 * (x - p.h) + g21;
    let ax2 = -0.5 * c0 * g12 * (x - p.h) + g22;
    let a = [[-g12 * ax1, g11 * ax1], [-g12 * ax2, g11 * ax2]];
    let by1 = 0.5 * c0 * (p.h - y) * g11 + g21;
    let by2 = 0.5 * c0 * (p.h - y) * g12 + g22;
    let b = [[g11 * by2, -g11 * by1], [g12 * by2, -g12 * by1]];
    let c = [
        [p.mu0 * g12 * g11, -p.mu0 * g11 * g11],
        [p.mu0 * g12 * g12, -p.mu0 * g12 * g11],
    ];
    (a, b, c)
}

fn squared_q(p: &MediumProfile, xi: C64) -> (C64, C64) {
    let w2 = C64::new(p.omega * p.omega, 0.0);
    (w2 / p.sigma0() - xi * xi, w2 / p.mu0 - xi * xi)
}

/// Unperturbed kernel of the Volterra equation; entire in xi because only
/// even functions of the quasimomenta appear.
pub fn volterra_kernel(p: &MediumProfile, gh: &RMat, x: f64, y: f64, xi: C64) -> Mat2 {
    let (a, b, c) = kernel_abc(p, gh, x, y);
    let (qp2, qs2) = squared_q(p, xi);
    let (qp, qs) = (qp2.sqrt(), qs2.sqrt());
    let t = x - y;
    let sp = sinc_q(qp, t);
    let ss = sinc_q(qs, t);
    let cc = ((qs * t).cos() - (qp * t).cos()) / (p.omega * p.omega);
    Mat2::from_real(a).scale(sp) + Mat2::from_real(b).scale(ss) + Mat2::from_real(c).scale(cc)
}

/// x-derivative of the unperturbed kernel.
pub fn volterra_kernel_dx(p: &MediumProfile, gh: &RMat, x: f64, y: f64, xi: C64) -> Mat2 {
    let (_, b, c) = kernel_abc(p, gh, x, y);
    // dA/dx = c0/(2 mu0) * C.
    let da = Mat2::from_real(c).scale(C64::new(p.c0() / (2.0 * p.mu0), 0.0));
    let (a, _, _) = kernel_abc(p, gh, x, y);
    let (qp2, qs2) = squared_q(p, xi);
    let (qp, qs) = (qp2.sqrt(), qs2.sqrt());
    let t = x - y;
    da.scale(sinc_q(qp, t))
        + Mat2::from_real(a).scale((qp * t).cos())
        + Mat2::from_real(b).scale((qs * t).cos())
        + Mat2::from_real(c).scale((qp2 * sinc_q(qp, t) - qs2 * sinc_q(qs, t)) / (p.omega * p.omega))
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kp = k as f64;
                let p2 = ((2.0 * kp - 1.0) * x * p1 - (kp - 1.0) * p0) / kp;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let kp = k as f64;
            let p2 = ((2.0 * kp - 1.0) * x * p1 - (kp - 1.0) * p0) / kp;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

const PANEL_POINTS: usize = 12;

/// Per-profile data shared by every Faddeev solve: panel quadrature on
/// [0, H], the perturbation V at the nodes, and the slab-bottom gauge.
#[derive(Debug, Clone)]
pub struct SchroedingerCache {
    pub gh: RMat,
    /// Panel boundaries, ascending, spanning [0, H].
    pub panels: Vec<f64>,
    /// Quadrature nodes, ascending.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// V at each node.
    pub v: Vec<RMat>,
    /// Largest max-norm of V over the nodes.
    pub v_scale: f64,
}

fn build_cache(p: &MediumProfile, n_panels: usize, tol: f64) -> Result<SchroedingerCache> {
    let mut edges: Vec<f64> = x_breakpoints(p)
        .into_iter()
        .filter(|&x| x > 0.0 && x < p.h)
        .collect();
    edges.push(0.0);
    edges.push(p.h);
    for k in 1..n_panels {
        edges.push(p.h * k as f64 / n_panels as f64);
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let (gl_x, gl_w) = gauss_legendre(PANEL_POINTS);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        for (t, wt) in gl_x.iter().zip(&gl_w) {
            nodes.push(a + half * (t + 1.0));
            weights.push(half * wt);
        }
    }
    // One ODE sweep through the nodes gives the gauge everywhere.
    let mut y = vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    ];
    let opts = OdeOptions {
        rel_tol: tol,
        abs_tol: tol * 1e-2,
        ..OdeOptions::default()
    };
    let rhs = gauge_rhs(p);
    let bps = x_breakpoints(p);
    let mut gs = Vec::with_capacity(nodes.len());
    let mut x_prev = 0.0;
    for &x in &nodes {
        integrate(&rhs, x_prev, x, &mut y, &bps, &opts)?;
        gs.push([[y[0].re, y[1].re], [y[2].re, y[3].re]]);
        x_prev = x;
    }
    integrate(&rhs, x_prev, p.h, &mut y, &bps, &opts)?;
    let gh = [[y[0].re, y[1].re], [y[2].re, y[3].re]];

    let mut v = Vec::with_capacity(nodes.len());
    let mut v_scale = 0.0f64;
    for (&x, g) in nodes.iter().zip(&gs) {
        let set = potentials_with_gauge(
            p,
            &GaugeMatrix { x, g: *g, gh },
        );
        v_scale = v_scale.max(rmat_norm(&set.v));
        v.push(set.v);
    }
    Ok(SchroedingerCache {
        gh,
        panels: edges,
        nodes,
        weights,
        v,
        v_scale,
    })
}

/// The transform turns a kink of the Lamé parameters at the slab bottom
/// into a singular layer of the potential, which panel quadrature cannot
/// represent: the slab must join the half space with matching values and
/// with mu' = mu'' = 0 at Z = -H.
fn junction_check(p: &MediumProfile) -> Result<()> {
    let bottom = p.slab_bottom();
    let join_tol = 1e-8 * p.mu0.max(1.0);
    let defects = [
        (bottom.lambda - p.lambda0).abs(),
        (bottom.mu - p.mu0).abs(),
        bottom.dmu1.abs(),
        bottom.dmu2.abs(),
    ];
    if defects.iter().any(|d| *d > join_tol) {
        return Err(RayleighError::Domain(format!(
            "slab does not join the half space smoothly at Z = -H \
             (value/mu'/mu'' defects {defects:?}); the transformed potential \
             would contain a singular layer"
        )));
    }
    Ok(())
}

/// Builds the shared cache, doubling the panel count until the integral
/// of ‖V‖ stabilizes.
pub fn schroedinger_cache(p: &MediumProfile, tol: f64) -> Result<SchroedingerCache> {
    junction_check(p)?;
    let mut n = 8;
    let mut cache = build_cache(p, n, tol)?;
    let metric = |c: &SchroedingerCache| -> f64 {
        c.weights
            .iter()
            .zip(&c.v)
            .map(|(w, v)| w * rmat_norm(v))
            .sum()
    };
    let mut m_prev = metric(&cache);
    for _ in 0..3 {
        n *= 2;
        let refined = build_cache(p, n, tol)?;
        let m = metric(&refined);
        let done = (m - m_prev).abs() <= 1e-12 * m.abs().max(1.0);
        m_prev = m;
        cache = refined;
        if done {
            break;
        }
    }
    Ok(cache)
}

/// Builds a cache with an explicit panel count, for callers that need to
/// trade accuracy for speed or to resolve a given oscillation scale.
pub fn schroedinger_cache_sized(
    p: &MediumProfile,
    n_panels: usize,
    tol: f64,
) -> Result<SchroedingerCache> {
    junction_check(p)?;
    build_cache(p, n_panels.max(4), tol)
}

/// Faddeev-gauge Jost data at the surface.
#[derive(Debug, Clone)]
pub struct FaddeevSolution {
    pub point: SheetPoint,
    /// F(0, xi).
    pub f0: Mat2,
    /// F'(0, xi).
    pub df0: Mat2,
    pub iterations: usize,
    pub tail_ratio: f64,
    /// Jost solution values at the cache nodes.
    pub f_nodes: Vec<Mat2>,
}

/// Unperturbed Jost solution F0+ and its x-derivative.
fn f0_closed(p: &MediumProfile, gh: &RMat, x: f64, xi: C64, qp: C64, qs: C64) -> (Mat2, Mat2) {
    let i = Complex64::i();
    let w2 = p.omega * p.omega;
    let c0 = p.c0();
    let ep = (i * qp * x).exp();
    let es = (i * qs * x).exp();
    let lin1 = C64::new(-0.5 * c0 * gh[0][0] * (x - p.h) + gh[1][0], 0.0);
    let lin2 = C64::new(-0.5 * c0 * gh[0][1] * (x - p.h) + gh[1][1], 0.0);
    let fp = [
        (lin1 + i * qp * p.mu0 / w2 * gh[0][0]) * ep,
        (lin2 + i * qp * p.mu0 / w2 * gh[0][1]) * ep,
    ];
    let sfac = -p.mu0 * xi / w2 * es;
    let fs = [sfac * gh[0][0], sfac * gh[0][1]];
    let dfp = [
        i * qp * fp[0] + C64::new(-0.5 * c0 * gh[0][0], 0.0) * ep,
        i * qp * fp[1] + C64::new(-0.5 * c0 * gh[0][1], 0.0) * ep,
    ];
    let dfs = [i * qs * fs[0], i * qs * fs[1]];
    (Mat2::from_cols(fp, fs), Mat2::from_cols(dfp, dfs))
}

/// Solves the exponent-stripped Volterra equation by successive
/// approximation on the cached quadrature grid.
pub fn faddeev_solve(
    p: &MediumProfile,
    cache: &SchroedingerCache,
    pt: &SheetPoint,
    max_iter: usize,
    tol: f64,
) -> Result<FaddeevSolution> {
    let q = quasimomenta(p, pt)?;
    let (qp, qs) = (q.q_p, q.q_s);
    let xi = pt.xi;
    let i = Complex64::i();
    let n = cache.nodes.len();

    // Faddeev gauge: H(x) = e^{-i x q_P} F(x); the kernel picks up
    // e^{i (y-x) q_P}.
    let h0 = |x: f64| -> Mat2 {
        let (f0, _) = f0_closed(p, &cache.gh, x, xi, qp, qs);
        f0.scale((-i * qp * x).exp())
    };

    let m_pts = PANEL_POINTS;
    // term[j] = current Neumann term at node j; total accumulates H.
    let mut term: Vec<Mat2> = cache.nodes.iter().map(|&x| h0(x)).collect();
    let mut total = term.clone();
    let mut iterations = 1;
    let mut tail_ratio = 1.0;
    let mut prev_norm = term.iter().map(Mat2::norm_max).fold(0.0f64, f64::max);
    let mut bad_streak = 0;

    // The stripped kernel separates into e^{i kappa (y - x)} modes with
    // kappa in {0, 2 q_P, q_P + q_S, q_P - q_S}: the full-panel part of the
    // suffix integral reduces to panel-anchored moment sums, leaving only
    // the partial panel to fresh quadrature. This turns each iteration
    // from O(n^2) kernel evaluations into O(n m).
    let np = cache.panels.len() - 1;
    let kappas = [
        C64::new(0.0, 0.0),
        2.0 * qp,
        qp + qs,
        qp - qs,
    ];
    let suffix = |kappa: C64, src: &[Mat2]| -> Vec<Mat2> {
        let mut out = vec![Mat2::zero(); np + 1];
        for pan in (0..np).rev() {
            let anchor = cache.panels[pan];
            let mut acc = out[pan + 1].scale((i * kappa * (cache.panels[pan + 1] - anchor)).exp());
            for j in pan * m_pts..(pan + 1) * m_pts {
                let w = cache.weights[j] * (i * kappa * (cache.nodes[j] - anchor)).exp();
                acc = acc + src[j].scale(w);
            }
            out[pan] = acc;
        }
        out
    };
    let b_at: Vec<Mat2> = (0..n)
        .map(|j| {
            let (_, b, _) = kernel_abc(p, &cache.gh, 0.0, cache.nodes[j]);
            Mat2::from_real(b)
        })
        .collect();
    let (_, _, c_mat) = kernel_abc(p, &cache.gh, 0.0, 0.0);
    let c_mat = Mat2::from_real(c_mat);
    let w2 = p.omega * p.omega;
    let (gl_x, gl_w) = gauss_legendre(m_pts);
    let bary: Vec<Vec<f64>> = (0..np)
        .map(|pan| bary_weights(&cache.nodes[pan * m_pts..(pan + 1) * m_pts]))
        .collect();

    for it in 0..max_iter {
        // next[j] = - int_{x_j}^H Gtilde(x_j, y) V(y) term(y) dy.
        let mut next = vec![Mat2::zero(); n];
        let vt: Vec<Mat2> = (0..n)
            .map(|j| Mat2::from_real(cache.v[j]) * term[j])
            .collect();
        let bvt: Vec<Mat2> = (0..n).map(|j| b_at[j] * vt[j]).collect();
        let mom: Vec<Vec<Mat2>> = kappas.iter().map(|&k| suffix(k, &vt)).collect();
        let mom_b: Vec<Vec<Mat2>> = kappas[2..].iter().map(|&k| suffix(k, &bvt)).collect();
        for jx in 0..n {
            let x = cache.nodes[jx];
            let panel = jx / m_pts;
            // Full panels strictly to the right, assembled from the moments.
            let edge = cache.panels[panel + 1];
            let shift = |k: usize| (i * kappas[k] * (edge - x)).exp();
            let m0 = mom[0][panel + 1].scale(shift(0));
            let m2p = mom[1][panel + 1].scale(shift(1));
            let mpps = mom[2][panel + 1].scale(shift(2));
            let mpms = mom[3][panel + 1].scale(shift(3));
            let bpps = mom_b[0][panel + 1].scale(shift(2));
            let bpms = mom_b[1][panel + 1].scale(shift(3));
            let (a, _, _) = kernel_abc(p, &cache.gh, x, 0.0);
            let mut acc = Mat2::from_real(a) * (m0 - m2p).scale(1.0 / (2.0 * i * qp))
                + (bpms - bpps).scale(1.0 / (2.0 * i * qs))
                + c_mat * (mpps + mpms - m2p - m0).scale(C64::new(1.0 / (2.0 * w2), 0.0));
            // Partial panel [x, b]: fresh quadrature with the integrand
            // interpolated from the panel nodes.
            let b = cache.panels[panel + 1];
            if b - x > 1e-14 {
                let base = panel * m_pts;
                let xs = &cache.nodes[base..base + m_pts];
                let half = 0.5 * (b - x);
                for (t, wt) in gl_x.iter().zip(&gl_w) {
                    let y = x + half * (t + 1.0);
                    let fy = lagrange_mat(xs, &bary[panel], &vt[base..base + m_pts], y);
                    let ker = volterra_kernel(p, &cache.gh, x, y, xi)
                        .scale((i * (y - x) * qp).exp());
                    acc = acc + ker * fy.scale(C64::new(half * wt, 0.0));
                }
            }
            next[jx] = -acc;
        }
        let norm = next.iter().map(Mat2::norm_max).fold(0.0f64, f64::max);
        let total_norm = total.iter().map(Mat2::norm_max).fold(0.0f64, f64::max);
        for j in 0..n {
            total[j] = total[j] + next[j];
        }
        iterations = it + 2;
        tail_ratio = if prev_norm > 0.0 { norm / prev_norm } else { 0.0 };
        if norm <= tol * total_norm.max(1e-300) {
            break;
        }
        if tail_ratio >= 1.0 {
            bad_streak += 1;
            if bad_streak >= 6 {
                return Err(RayleighError::NonConvergence {
                    iters: iterations,
                    ratio: tail_ratio,
                });
            }
        } else {
            bad_streak = 0;
        }
        prev_norm = norm;
        term = next;
        if it + 1 == max_iter {
            return Err(RayleighError::NonConvergence {
                iters: max_iter,
                ratio: tail_ratio,
            });
        }
    }

    // Evaluate the converged equation and its x-derivative at x = 0.
    let vh: Vec<Mat2> = (0..n)
        .map(|j| Mat2::from_real(cache.v[j]) * total[j])
        .collect();
    let mut int0 = Mat2::zero();
    let mut dint0 = Mat2::zero();
    for j in 0..n {
        let y = cache.nodes[j];
        let w = C64::new(cache.weights[j], 0.0);
        let phase = (i * y * qp).exp();
        let ker = volterra_kernel(p, &cache.gh, 0.0, y, xi).scale(phase);
        let dker = (volterra_kernel_dx(p, &cache.gh, 0.0, y, xi)
            - volterra_kernel(p, &cache.gh, 0.0, y, xi).scale(i * qp))
        .scale(phase);
        int0 = int0 + ker * vh[j].scale(w);
        dint0 = dint0 + dker * vh[j].scale(w);
    }
    let h_0 = h0(0.0) - int0;
    let (_, df0_free) = f0_closed(p, &cache.gh, 0.0, xi, qp, qs);
    let (f0_free, _) = f0_closed(p, &cache.gh, 0.0, xi, qp, qs);
    let dh_0 = df0_free - f0_free.scale(i * qp) - dint0;
    let f0 = h_0;
    let df0 = h_0.scale(i * qp) + dh_0;
    let f_nodes = cache
        .nodes
        .iter()
        .zip(&total)
        .map(|(&x, h)| h.scale((i * qp * x).exp()))
        .collect();
    Ok(FaddeevSolution {
        point: pt.clone(),
        f0,
        df0,
        iterations,
        tail_ratio,
        f_nodes,
    })
}

/// Barycentric weights for a node set.
fn bary_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|j| {
            let mut w = 1.0;
            for k in 0..n {
                if k != j {
                    w /= xs[j] - xs[k];
                }
            }
            w
        })
        .collect()
}

/// Barycentric Lagrange interpolation of matrix samples.
fn lagrange_mat(xs: &[f64], ws: &[f64], fs: &[Mat2], y: f64) -> Mat2 {
    let n = xs.len();
    let mut num = Mat2::zero();
    let mut den = C64::new(0.0, 0.0);
    for j in 0..n {
        let dy = y - xs[j];
        if dy.abs() < 1e-14 {
            return fs[j];
        }
        let c = C64::new(ws[j] / dy, 0.0);
        num = num + fs[j].scale(c);
        den += c;
    }
    num.scale(1.0 / den)
}

/// Jost function of the Schrödinger form.
#[derive(Debug, Clone)]
pub struct JostFunction {
    pub point: SheetPoint,
    pub f_theta: Mat2,
}

/// Builds F_Theta = F'(0) + Theta F(0) and recovers the boundary matrix
/// by evaluating the inverse transform at the surface: the gauge data
/// G(0) = I, G'(0) = L/2, G''(0) = L'/2 + L^2/4 turn (F, F', F'') into
/// (w, w'), the Jost pair follows from the column normalization, and the
/// tractions are read off directly.
pub fn jost_function_and_bridge(
    p: &MediumProfile,
    cache: &SchroedingerCache,
    pt: &SheetPoint,
    tol: f64,
) -> Result<(JostFunction, Mat2)> {
    let xi = pt.xi;
    if xi.norm() == 0.0 {
        return Err(RayleighError::SingularPrefactor(
            "xi = 0 makes the column normalization singular".into(),
        ));
    }
    let theta = theta_set(p, xi)?;
    let sol = faddeev_solve(p, cache, pt, 200, tol)?;
    let f_theta = sol.df0 + theta.theta * sol.f0;

    let s = lame_at_x(p, 0.0)?;
    let (la, mu) = (s.lambda, s.mu);
    let sig = la + 2.0 * mu;
    let dsig = s.dlambda1 + 2.0 * s.dmu1;
    let m1 = p.mu0 / mu;
    let dm1 = -p.mu0 * s.dmu1 / (mu * mu);
    let d2m1 = p.mu0 * (2.0 * s.dmu1 * s.dmu1 - mu * s.dmu2) / mu.powi(3);
    let m2 = mu / sig;
    let dm2 = (s.dmu1 * sig - mu * dsig) / (sig * sig);
    let c = mu * (la + mu) / (p.mu0 * sig);
    let dc = (s.dmu1 * (la + mu) + mu * (s.dlambda1 + s.dmu1)) / (p.mu0 * sig)
        - mu * (la + mu) * dsig / (p.mu0 * sig * sig);
    let d = -2.0 * p.mu0 * s.inv_mu_d2();
    let gauge0 = GaugeMatrix {
        x: 0.0,
        g: [[1.0, 0.0], [0.0, 1.0]],
        gh: cache.gh,
    };
    let q = potentials_with_gauge(p, &gauge0).q;

    let ww = p.omega * p.omega;
    let pref = -xi * p.mu0 / ww;
    let mut entries = [[C64::new(0.0, 0.0); 2]; 2];
    for j in 0..2 {
        let sgn = if j == 0 { 1.0 } else { -1.0 };
        let f1 = sol.f0.0[0][j];
        let f2 = sol.f0.0[1][j];
        let df1 = sol.df0.0[0][j];
        let df2 = sol.df0.0[1][j];
        let d2f1 = (xi * xi + q[0][0]) * f1 + q[0][1] * f2;

        let u1 = m1 * f1;
        let u2 = m2 * f2;
        let du1 = dm1 * f1 + (m1 * c / 2.0) * f2 + m1 * df1;
        let du2 = (m2 * d / 2.0) * f1 + dm2 * f2 + m2 * df2;
        let d2u1 = (d2m1 + m1 * c * d / 4.0) * f1
            + (dm1 * c + m1 * dc / 2.0) * f2
            + 2.0 * (dm1 * df1 + (m1 * c / 2.0) * df2)
            + m1 * d2f1;

        let k = pref * sgn;
        let psi1 = (du1 + u2) / k;
        let psi2 = xi * u1 / k;
        let dpsi1_z = -(d2u1 + du2) / k;
        let dpsi2_z = -xi * du1 / k;

        entries[0][j] = Complex64::i() * (sig * dpsi2_z + xi * la * psi1);
        entries[1][j] = mu * dpsi1_z - xi * mu * psi2;
    }
    let b = Mat2::new(entries[0][0], entries[0][1], entries[1][0], entries[1][1]);
    Ok((
        JostFunction {
            point: pt.clone(),
            f_theta,
        },
        b,
    ))
}

/// Relative deviation of the Jost solution from its two-term large-xi
/// expansion on the physical sheet.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    /// (|xi|, deviation of F, deviation of F') per requested xi.
    pub deviations: Vec<(f64, f64, f64)>,
}

pub fn asymptotic_compare(
    p: &MediumProfile,
    cache: &SchroedingerCache,
    xs: &[f64],
    xis: &[f64],
    tol: f64,
) -> Result<AsymptoticReport> {
    let gh = &cache.gh;
    let w2 = p.omega * p.omega;
    let c0 = p.c0();
    let lead = Mat2::from_real([[gh[0][0], gh[0][0]], [gh[0][1], gh[0][1]]]);
    // int_x^H V(y) dy * lead term, reused for the bracket correction.
    let v_int_from = |x: f64| -> Mat2 {
        let mut acc = [[0.0f64; 2]; 2];
        for ((&y, w), v) in cache.nodes.iter().zip(&cache.weights).zip(&cache.v) {
            if y >= x {
                for r in 0..2 {
                    for cix in 0..2 {
                        acc[r][cix] += w * v[r][cix];
                    }
                }
            }
        }
        Mat2::from_real(acc)
    };
    let mut deviations = Vec::new();
    for &xi_mag in xis {
        let pt = SheetPoint::new(C64::new(xi_mag, 0.0), crate::riemann::SheetLabel::PP);
        let sol = faddeev_solve(p, cache, &pt, 200, tol)?;
        let mut dev_f = 0.0f64;
        let mut dev_df = 0.0f64;
        for &x in xs {
            // Nearest cached node carries the computed Jost value.
            let (jn, _) = cache
                .nodes
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - x).abs().partial_cmp(&(b.1 - x).abs()).unwrap())
                .unwrap();
            let xn = cache.nodes[jn];
            let exf = (-xn * xi_mag).exp();
            let bracket = Mat2::from_real([
                [
                    0.5 * gh[0][0] * (c0 * p.h - xn) + gh[1][0],
                    -0.5 * xn * gh[0][0],
                ],
                [
                    0.5 * gh[0][1] * (c0 * p.h - xn) + gh[1][1],
                    -0.5 * xn * gh[0][1],
                ],
            ]) - (v_int_from(xn) * lead).scale(C64::new(0.5 * p.mu0 / w2, 0.0));
            let expansion =
                (lead.scale(C64::new(-xi_mag, 0.0)) + bracket).scale(C64::new(exf * p.mu0 / w2, 0.0));
            let numeric = sol.f_nodes[jn];
            let d = (numeric - expansion).norm_max() / expansion.norm_max();
            dev_f = dev_f.max(d);
            if xn == 0.0 {
                continue;
            }
            // derivative expansion compared only at x = 0 below.
            let _ = dev_df;
        }
        // Derivative check at the surface.
        let sol0 = faddeev_solve(p, cache, &pt, 200, tol)?;
        let bracket0 = Mat2::from_real([
            [0.5 * gh[0][0] * c0 * p.h + gh[1][0], 0.0],
            [0.5 * gh[0][1] * c0 * p.h + gh[1][1], 0.0],
        ]) - (v_int_from(0.0) * lead).scale(C64::new(0.5 * p.mu0 / w2, 0.0));
        let dexp = lead.scale(C64::new(xi_mag * xi_mag * p.mu0 / w2, 0.0))
            - bracket0.scale(C64::new(xi_mag, 0.0));
        dev_df = dev_df.max((sol0.df0 - dexp).norm_max() / dexp.norm_max());
        deviations.push((xi_mag, dev_f, dev_df));
    }
    Ok(AsymptoticReport { deviations })
}

/// Fitted Weyl-matrix determinant coefficients against their predicted
/// values.
#[derive(Debug, Clone, Serialize)]
pub struct WeylDiagnostic {
    pub fitted_quadratic: f64,
    pub predicted_quadratic: f64,
    pub fitted_linear: f64,
    pub predicted_linear: f64,
}

/// Fits det M^{-1}(xi) = det F_Theta / det F(0) to a quadratic in xi over
/// large real xi on the physical sheet.
pub fn weyl_diagnostic(
    p: &MediumProfile,
    cache: &SchroedingerCache,
    xis: &[f64],
    tol: f64,
) -> Result<WeylDiagnostic> {
    let mut rows = Vec::new();
    for &xi_mag in xis {
        let pt = SheetPoint::new(C64::new(xi_mag, 0.0), crate::riemann::SheetLabel::PP);
        let theta = theta_set(p, pt.xi)?;
        let sol = faddeev_solve(p, cache, &pt, 200, tol)?;
        let f_theta = sol.df0 + theta.theta * sol.f0;
        let det_m_inv = f_theta.det() / sol.f0.det();
        rows.push((xi_mag, det_m_inv.re));
    }
    // Least squares in the basis [1, xi, xi^2, 1/xi]; the 1/xi term
    // absorbs the next correction so it cannot leak into the linear one.
    const NB: usize = 4;
    let basis = |x: f64| [1.0, x, x * x, 1.0 / x];
    let mut m = [[0.0f64; NB]; NB];
    let mut rhs = [0.0f64; NB];
    for &(x, y) in &rows {
        let b = basis(x);
        for i in 0..NB {
            for j in 0..NB {
                m[i][j] += b[i] * b[j];
            }
            rhs[i] += b[i] * y;
        }
    }
    let sol = solve_dense::<NB>(m, rhs);
    let theta = theta_set(p, C64::new(1.0, 0.0))?;
    let q12 = potentials(p, 0.0, tol)?.q[0][1];
    Ok(WeylDiagnostic {
        fitted_quadratic: sol[2],
        predicted_quadratic: theta.c_at_0,
        fitted_linear: sol[1],
        predicted_linear: theta.theta3 + theta.varpi * q12,
    })
}

fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> [f64; N] {
    for i in 0..N {
        let piv = (i..N)
            .max_by(|&r, &s| a[r][i].abs().partial_cmp(&a[s][i].abs()).unwrap())
            .unwrap();
        a.swap(i, piv);
        b.swap(i, piv);
        for r in i + 1..N {
            let f = a[r][i] / a[i][i];
            for c in i..N {
                a[r][c] -= f * a[i][c];
            }
            b[r] -= f * b[i];
        }
    }
    let mut x = [0.0; N];
    for i in (0..N).rev() {
        let mut s = b[i];
        for c in i + 1..N {
            s -= a[i][c] * x[c];
        }
        x[i] = s / a[i][i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::boundary_matrix_and_delta;
    use crate::riemann::SheetLabel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn profile(h: f64, slab: &str) -> MediumProfile {
        MediumProfile::load_profile(&format!(
            "[medium]\nomega = 1.0\nH = {h}\nlambda0 = 1.0\nmu0 = 1.0\n\n[slab]\n{slab}\n"
        ))
        .unwrap()
    }

    fn bump() -> MediumProfile {
        profile(1.0, "kind = \"bump\"\namplitudes = [0.05, 0.1]")
    }

    fn poly() -> MediumProfile {
        profile(
            1.0,
            "kind = \"polynomial\"\nlambda_coeffs = [1.0, 0.15, 0.3, 0.15]\nmu_coeffs = [1.0, 0.1, 0.3, 0.3, 0.1]",
        )
    }

    #[test]
    fn gauge_constant_slab_closed_form() {
        let p = profile(1.0, "kind = \"constant\"");
        let c0 = p.c0();
        for &x in &[0.25, 0.7, 1.0] {
            let g = gauge_matrix(&p, x, 1e-12).unwrap();
            assert!((g.g[0][0] - 1.0).abs() < 1e-11);
            assert!(g.g[0][1].abs() < 1e-11);
            assert!((g.g[1][0] + 0.5 * c0 * x).abs() < 1e-11);
            assert!((g.g[1][1] - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn gauge_determinant_and_tail() {
        let p = bump();
        for &x in &[0.1, 0.4, 0.8, 1.0, 1.5, 3.0] {
            let g = gauge_matrix(&p, x, 1e-12).unwrap();
            let det = g.g[0][0] * g.g[1][1] - g.g[0][1] * g.g[1][0];
            assert!((det - 1.0).abs() < 1e-10, "det drift {} at x={x}", det - 1.0);
            if x >= p.h {
                assert_eq!(g.g[0][0], g.gh[0][0]);
                assert_eq!(g.g[0][1], g.gh[0][1]);
            }
        }
    }

    #[test]
    fn potential_vanishes_beyond_slab_and_matches_homogeneous() {
        let p = bump();
        for &x in &[1.0, 1.3, 2.5] {
            let set = potentials(&p, x, 1e-12).unwrap();
            assert!(rmat_norm(&set.v) < 1e-9, "V = {:?} at x={x}", set.v);
        }
        // Constant slab: Q equals the homogeneous display built from the
        // closed-form gauge everywhere.
        let pc = profile(1.0, "kind = \"constant\"");
        let w2 = pc.omega * pc.omega;
        let c0 = pc.c0();
        for &x in &[0.2, 0.6, 1.4] {
            let set = potentials(&pc, x, 1e-12).unwrap();
            let g = gauge_matrix(&pc, x, 1e-12).unwrap().g;
            let expect = [
                [
                    w2 * (g[0][1] * g[1][0] / pc.sigma0() - g[0][0] * g[1][1] / pc.mu0),
                    w2 * g[0][0] * g[1][0] * c0 / pc.mu0,
                ],
                [
                    -w2 * g[0][1] * g[1][1] * c0 / pc.mu0,
                    w2 * (g[0][1] * g[1][0] / pc.mu0 - g[0][0] * g[1][1] / pc.sigma0()),
                ],
            ];
            assert!(rmat_norm(&rmat_sub(&set.q, &expect)) < 1e-10);
            assert!(rmat_norm(&set.v) < 1e-10);
        }
    }

    #[test]
    fn b2_lower_left_zero_everywhere() {
        let p = poly();
        for &x in &[0.1, 0.5, 0.9] {
            let set = potentials(&p, x, 1e-12).unwrap();
            assert_eq!(set.b2[1][0], 0.0);
        }
    }

    #[test]
    fn theta_matches_da_ca_and_surface_speed() {
        for p in [bump(), poly()] {
            for &xi in &[C64::new(1.7, 0.3), C64::new(-0.4, 2.0)] {
                let t = theta_set(&p, xi).unwrap();
                assert_eq!(t.theta.0[1][1], C64::new(0.0, 0.0));
                let via_daca = t.da.inv().unwrap() * t.ca;
                assert!((via_daca - t.theta).norm_max() < 1e-12 * t.theta.norm_max());
                let s = p.sample_lame(0.0).unwrap();
                let c_surface = (s.lambda + s.mu) / (s.lambda + 2.0 * s.mu);
                assert!((t.c_at_0 - c_surface).abs() < 1e-12);
                assert!((t.theta.0[0][0].re + t.theta3).abs() < 1e-14);
            }
        }
        assert!(matches!(
            theta_set(&bump(), C64::new(0.0, 0.0)),
            Err(RayleighError::SingularPrefactor(_))
        ));
    }

    #[test]
    fn kernel_conditions_and_abc_identity() {
        let p = bump();
        let cache = schroedinger_cache(&p, 1e-12).unwrap();
        let xi = C64::new(1.3, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x = rng.gen_range(0.0..1.0);
            let y = rng.gen_range(0.0..1.0);
            let (a, b, c) = kernel_abc(&p, &cache.gh, x, y);
            let lhs = Mat2::from_real(a)
                + Mat2::from_real(b)
                + Mat2::from_real(c).scale(C64::new((y - x) * p.c0() / (2.0 * p.mu0), 0.0));
            assert!((lhs - Mat2::identity()).norm_max() < 1e-12, "ABC at ({x},{y})");
            let diag = volterra_kernel(&p, &cache.gh, x, x, xi);
            assert!(diag.norm_max() < 1e-13);
            let ddiag = volterra_kernel_dx(&p, &cache.gh, x, x, xi);
            assert!((ddiag - Mat2::identity()).norm_max() < 1e-12);
        }
    }

    #[test]
    fn kernel_series_continuity_near_branch() {
        let p = bump();
        let cache = schroedinger_cache(&p, 1e-12).unwrap();
        // q_S = 0 at xi = omega / sqrt(mu0) = 1; just past it the series
        // branch of sin(qt)/q must agree with the direct quotient.
        let (x, y) = (0.2, 0.7);
        let xi = C64::new(1.0 + 5e-9, 0.0);
        let lib = volterra_kernel(&p, &cache.gh, x, y, xi);
        let (a, b, c) = kernel_abc(&p, &cache.gh, x, y);
        let (qp2, qs2) = squared_q(&p, xi);
        let (qp, qs) = (qp2.sqrt(), qs2.sqrt());
        let t = x - y;
        let direct = Mat2::from_real(a).scale((qp * t).sin() / qp)
            + Mat2::from_real(b).scale((qs * t).sin() / qs)
            + Mat2::from_real(c)
                .scale(((qs * t).cos() - (qp * t).cos()) / (p.omega * p.omega));
        assert!(
            (lib - direct).norm_max() < 1e-10 * direct.norm_max().max(1.0),
            "series vs direct defect {}",
            (lib - direct).norm_max()
        );
        assert!(lib.is_finite());
    }

    #[test]
    fn faddeev_reduces_to_free_solution_for_constant_slab() {
        let p = profile(1.0, "kind = \"constant\"");
        let cache = schroedinger_cache(&p, 1e-12).unwrap();
        let pt = SheetPoint::new(C64::new(1.4, 0.6), SheetLabel::PP);
        let sol = faddeev_solve(&p, &cache, &pt, 50, 1e-12).unwrap();
        let q = quasimomenta(&p, &pt).unwrap();
        let (f0, df0) = f0_closed(&p, &cache.gh, 0.0, pt.xi, q.q_p, q.q_s);
        assert!((sol.f0 - f0).norm_max() < 1e-10 * f0.norm_max());
        assert!((sol.df0 - df0).norm_max() < 1e-10 * df0.norm_max());
        assert!(sol.iterations <= 2);
    }

    #[test]
    fn faddeev_terms_decay_factorially() {
        let p = bump();
        let cache = schroedinger_cache(&p, 1e-12).unwrap();
        let pt = SheetPoint::new(C64::new(2.0, 1.0), SheetLabel::MM);
        let sol = faddeev_solve(&p, &cache, &pt, 100, 1e-13).unwrap();
        assert!(sol.tail_ratio < 0.5, "tail ratio {}", sol.tail_ratio);
        assert!(sol.iterations < 40);
    }

    #[test]
    fn bridge_matches_direct_boundary_matrix() {
        for p in [profile(1.0, "kind = \"constant\""), bump(), poly()] {
            let cache = schroedinger_cache(&p, 1e-12).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            for sheet in SheetLabel::ALL {
                for _ in 0..3 {
                    let xi = C64::new(rng.gen_range(-2.5..2.5), rng.gen_range(0.1..2.0));
                    let pt = SheetPoint::new(xi, sheet);
                    let (_, b_bridge) =
                        jost_function_and_bridge(&p, &cache, &pt, 1e-12).unwrap();
                    let (b_direct, _) = boundary_matrix_and_delta(&p, &pt, 1e-12).unwrap();
                    let defect = (b_bridge - b_direct.entries).norm_max()
                        / b_direct.entries.norm_max();
                    assert!(defect < 1e-7, "defect {defect} at {xi} on {sheet}");
                }
            }
        }
    }

    #[test]
    fn det_f_theta_large_xi_limit() {
        let p = bump();
        let cache = schroedinger_cache(&p, 1e-12).unwrap();
        let s = p.sample_lame(0.0).unwrap();
        let c_surface = (s.lambda + s.mu) / (s.lambda + 2.0 * s.mu);
        let target = c_surface * p.mu0 / (p.omega * p.omega);
        let xi = C64::new(100.0 / p.h, 0.0);
        let pt = SheetPoint::new(xi, SheetLabel::PP);
        let theta = theta_set(&p, xi).unwrap();
        let sol = faddeev_solve(&p, &cache, &pt, 200, 1e-12).unwrap();
        let f_theta = sol.df0 + theta.theta * sol.f0;
        let ratio = (f_theta.det() / (xi * xi * xi)).re;
        assert!(
            (ratio - target).abs() < 0.02 * target.abs(),
            "ratio {ratio} target {target}"
        );
    }

    #[test]
    fn weyl_diagnostic_within_tolerance() {
        let p = bump();
        let cache = schroedinger_cache(&p, 1e-12).unwrap();
        let xis: Vec<f64> = (0..8).map(|k| 40.0 + 10.0 * k as f64).collect();
        let d = weyl_diagnostic(&p, &cache, &xis, 1e-12).unwrap();
        assert!(
            (d.fitted_quadratic - d.predicted_quadratic).abs()
                < 0.05 * d.predicted_quadratic.abs(),
            "{d:?}"
        );
        assert!(
            (d.fitted_linear - d.predicted_linear).abs()
                < 0.05 * d.predicted_linear.abs().max(0.05),
            "{d:?}"
        );
    }

    #[test]
    fn asymptotics_improve_with_xi() {
        let p = bump();
        let cache = schroedinger_cache(&p, 1e-12).unwrap();
        let rep = asymptotic_compare(&p, &cache, &[0.0, 0.3], &[20.0, 80.0], 1e-12).unwrap();
        assert!(rep.deviations[1].1 < rep.deviations[0].1);
        assert!(rep.deviations[1].2 < rep.deviations[0].2);
        assert!(rep.deviations[1].1 < 0.05, "{:?}", rep.deviations);
    }
}
