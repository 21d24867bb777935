//! Propagation of solution columns through the slab.
//!
//! A solution is carried as the pair (psi, v) where v is the traction
//! vector v = P psi' - xi N^T psi; this first-order form keeps the
//! transmission conditions trivial across coefficient kinks. Two bases are
//! provided: the Jost columns, fixed by oscillatory data in the half
//! space, and the entire columns theta/phi, whose initial data are even in
//! the quasimomenta and therefore single-valued in xi.

use crate::linalg::{sinc_q, C64};
use crate::medium::{LameSample, MediumProfile};
use crate::ode::{integrate, OdeOptions};
use crate::riemann::{quasimomenta, QuasimomentumPair, SheetPoint};
use crate::Result;
use num_complex::Complex64;

/// One solution column: displacement pair and traction pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub psi: [C64; 2],
    pub v: [C64; 2],
}

impl State {
    /// Builds (psi, v) from (psi, psi') at a depth with moduli `s`.
    pub fn from_psi_dpsi(psi: [C64; 2], dpsi: [C64; 2], s: &LameSample, xi: C64) -> State {
        let sigma = s.lambda + 2.0 * s.mu;
        State {
            psi,
            v: [
                s.mu * dpsi[0] - xi * s.mu * psi[1],
                sigma * dpsi[1] + xi * s.lambda * psi[0],
            ],
        }
    }

    /// Recovers psi' from the carried variables.
    pub fn dpsi(&self, s: &LameSample, xi: C64) -> [C64; 2] {
        let sigma = s.lambda + 2.0 * s.mu;
        [
            (self.v[0] + xi * s.mu * self.psi[1]) / s.mu,
            (self.v[1] - xi * s.lambda * self.psi[0]) / sigma,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.psi
            .iter()
            .chain(self.v.iter())
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Bilinear concomitant of two solutions, constant in depth:
/// `v_a . psi_b - psi_a . v_b` (plain dot products, no conjugation).
pub fn wronskian(a: &State, b: &State) -> C64 {
    a.v[0] * b.psi[0] + a.v[1] * b.psi[1] - a.psi[0] * b.v[0] - a.psi[1] * b.v[1]
}

fn pack(states: &[State]) -> Vec<C64> {
    let mut y = Vec::with_capacity(4 * states.len());
    for s in states {
        y.extend_from_slice(&[s.psi[0], s.psi[1], s.v[0], s.v[1]]);
    }
    y
}

fn unpack(y: &[C64]) -> Vec<State> {
    y.chunks(4)
        .map(|c| State {
            psi: [c[0], c[1]],
            v: [c[2], c[3]],
        })
        .collect()
}

/// Propagates a bundle of solution columns from depth `z0` to `z1` with a
/// shared adaptive step. `tol` is the relative ODE tolerance.
pub fn propagate(
    profile: &MediumProfile,
    xi: C64,
    states: &[State],
    z0: f64,
    z1: f64,
    tol: f64,
) -> Result<Vec<State>> {
    if z0 == z1 || states.is_empty() {
        return Ok(states.to_vec());
    }
    let omega2 = profile.omega * profile.omega;
    let rhs = move |z: f64, y: &[C64], dy: &mut [C64]| {
        // sample_lame only fails above the surface, which the integrator
        // never queries for our ranges; fall back to the surface sample.
        let s = profile
            .sample_lame(z.min(0.0))
            .expect("depth below surface");
        let sigma = s.lambda + 2.0 * s.mu;
        for (c, d) in y.chunks(4).zip(dy.chunks_mut(4)) {
            let (p1, p2, v1, v2) = (c[0], c[1], c[2], c[3]);
            let dp1 = (v1 + xi * s.mu * p2) / s.mu;
            let dp2 = (v2 - xi * s.lambda * p1) / sigma;
            d[0] = dp1;
            d[1] = dp2;
            d[2] = xi * s.lambda * dp2 - (omega2 - xi * xi * sigma) * p1;
            d[3] = -xi * s.mu * dp1 - (omega2 - xi * xi * s.mu) * p2;
        }
    };
    let mut y = pack(states);
    let opts = OdeOptions {
        rel_tol: tol,
        abs_tol: tol * 1e-2,
        ..OdeOptions::default()
    };
    integrate(&rhs, z0, z1, &mut y, &profile.breakpoints(), &opts)?;
    Ok(unpack(&y))
}

/// Closed-form Jost columns [psi_P^-, psi_S^-] in the half space at depth
/// `z <= -H`: oscillatory data `(-xi, -i q_P) e^{-i z q_P}` and
/// `(-i q_S, -xi) e^{-i z q_S}` with the sheeted quasimomenta.
pub fn jost_closed_form(
    profile: &MediumProfile,
    xi: C64,
    q: &QuasimomentumPair,
    z: f64,
) -> [State; 2] {
    let i = Complex64::i();
    let s = profile.sample_lame(z.min(-profile.h)).expect("tail depth");
    let ep = (-i * q.q_p * z).exp();
    let es = (-i * q.q_s * z).exp();
    let psi_p = [-xi * ep, -i * q.q_p * ep];
    let dpsi_p = [-i * q.q_p * psi_p[0], -i * q.q_p * psi_p[1]];
    let psi_s = [-i * q.q_s * es, -xi * es];
    let dpsi_s = [-i * q.q_s * psi_s[0], -i * q.q_s * psi_s[1]];
    [
        State::from_psi_dpsi(psi_p, dpsi_p, &s, xi),
        State::from_psi_dpsi(psi_s, dpsi_s, &s, xi),
    ]
}

/// Jost columns [psi_P^-, psi_S^-] at depth `z` for a surface point.
/// Closed form below the slab, propagated through it above.
pub fn jost_states_at(
    profile: &MediumProfile,
    pt: &SheetPoint,
    z: f64,
    tol: f64,
) -> Result<[State; 2]> {
    let q = quasimomenta(profile, pt)?;
    let bottom = -profile.h;
    if z <= bottom {
        return Ok(jost_closed_form(profile, pt.xi, &q, z));
    }
    let init = jost_closed_form(profile, pt.xi, &q, bottom);
    let out = propagate(profile, pt.xi, &init, bottom, z, tol)?;
    Ok([out[0], out[1]])
}

/// Jost columns at the free surface.
pub fn jost_basis_surface(
    profile: &MediumProfile,
    pt: &SheetPoint,
    tol: f64,
) -> Result<[State; 2]> {
    jost_states_at(profile, pt, 0.0, tol)
}

/// Closed-form entire columns [theta_P, phi_P, theta_S, phi_S] at depth
/// `z <= -H`. All components are even in the quasimomenta, so any square
/// root of `omega^2/c - xi^2` may be used.
pub fn entire_closed_form(profile: &MediumProfile, xi: C64, z: f64) -> [State; 4] {
    let i = Complex64::i();
    let omega2 = profile.omega * profile.omega;
    let s = profile.sample_lame(z.min(-profile.h)).expect("tail depth");
    let qp = (Complex64::new(omega2 / profile.sigma0(), 0.0) - xi * xi).sqrt();
    let qs = (Complex64::new(omega2 / profile.mu0, 0.0) - xi * xi).sqrt();
    let mk = |psi: [C64; 2], dpsi: [C64; 2]| State::from_psi_dpsi(psi, dpsi, &s, xi);
    let (cp, sp) = ((qp * z).cos(), sinc_q(qp, z));
    let (cs, ss) = ((qs * z).cos(), sinc_q(qs, z));
    let (qp2, qs2) = (qp * qp, qs * qs);
    [
        // theta_P = (-xi cos(q_P z), -q_P sin(q_P z))
        mk([-xi * cp, -qp2 * sp], [xi * qp2 * sp, -qp2 * cp]),
        // phi_P = (-i xi sin(q_P z)/q_P, i cos(q_P z))
        mk([-i * xi * sp, i * cp], [-i * xi * cp, -i * qp2 * sp]),
        // theta_S = (-q_S sin(q_S z), -xi cos(q_S z))
        mk([-qs2 * ss, -xi * cs], [-qs2 * cs, xi * qs2 * ss]),
        // phi_S = (i cos(q_S z), -i xi sin(q_S z)/q_S)
        mk([i * cs, -i * xi * ss], [-i * qs2 * ss, -i * xi * cs]),
    ]
}

/// Entire columns [theta_P, phi_P, theta_S, phi_S] at the free surface.
/// These depend on the base value `xi` only, never on a sheet choice.
pub fn entire_basis_surface(profile: &MediumProfile, xi: C64, tol: f64) -> Result<[State; 4]> {
    let bottom = -profile.h;
    let init = entire_closed_form(profile, xi, bottom);
    if profile.h == 0.0 {
        return Ok(init);
    }
    let out = propagate(profile, xi, &init, bottom, 0.0, tol)?;
    Ok([out[0], out[1], out[2], out[3]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riemann::SheetLabel;

    fn profile(h: f64, slab: &str) -> MediumProfile {
        MediumProfile::load_profile(&format!(
            "[medium]\nomega = 1.0\nH = {h}\nlambda0 = 1.0\nmu0 = 1.0\n\n[slab]\n{slab}\n"
        ))
        .unwrap()
    }

    fn bump(h: f64) -> MediumProfile {
        profile(h, "kind = \"bump\"\namplitudes = [0.05, 0.1]")
    }

    #[test]
    fn dpsi_round_trip() {
        let p = profile(0.0, "kind = \"constant\"");
        let s = p.sample_lame(0.0).unwrap();
        let xi = Complex64::new(1.3, -0.4);
        let psi = [Complex64::new(0.2, 1.0), Complex64::new(-0.7, 0.3)];
        let dpsi = [Complex64::new(1.1, -0.2), Complex64::new(0.4, 0.9)];
        let st = State::from_psi_dpsi(psi, dpsi, &s, xi);
        let back = st.dpsi(&s, xi);
        assert!((back[0] - dpsi[0]).norm() < 1e-14);
        assert!((back[1] - dpsi[1]).norm() < 1e-14);
    }

    #[test]
    fn homogeneous_slab_matches_closed_form() {
        // A constant slab is indistinguishable from the half space, so
        // propagation must reproduce the oscillatory closed form at Z = 0.
        let p = profile(1.0, "kind = \"constant\"");
        for sheet in SheetLabel::ALL {
            let pt = SheetPoint::new(Complex64::new(1.7, 0.6), sheet);
            let q = quasimomenta(&p, &pt).unwrap();
            let got = jost_basis_surface(&p, &pt, 1e-11).unwrap();
            let want = jost_closed_form(&p, pt.xi, &q, 0.0);
            for (g, w) in got.iter().zip(want.iter()) {
                for k in 0..2 {
                    assert!((g.psi[k] - w.psi[k]).norm() < 1e-8, "{sheet}");
                    assert!((g.v[k] - w.v[k]).norm() < 1e-8, "{sheet}");
                }
            }
        }
    }

    #[test]
    fn homogeneous_entire_basis_matches_closed_form() {
        let p = profile(1.0, "kind = \"constant\"");
        let xi = Complex64::new(0.9, -1.2);
        let got = entire_basis_surface(&p, xi, 1e-11).unwrap();
        let want = entire_closed_form(&p, xi, 0.0);
        for (g, w) in got.iter().zip(want.iter()) {
            for k in 0..2 {
                assert!((g.psi[k] - w.psi[k]).norm() < 1e-8);
                assert!((g.v[k] - w.v[k]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn jost_is_entire_combination() {
        // psi^- = theta - q phi holds in the half space, and by linearity
        // of the system it persists through an inhomogeneous slab.
        let p = bump(1.0);
        let pt = SheetPoint::new(Complex64::new(1.4, 0.8), SheetLabel::PP);
        let q = quasimomenta(&p, &pt).unwrap();
        let jost = jost_basis_surface(&p, &pt, 1e-11).unwrap();
        let e = entire_basis_surface(&p, pt.xi, 1e-11).unwrap();
        for k in 0..2 {
            let combo_p = e[0].psi[k] - q.q_p * e[1].psi[k];
            let combo_s = e[2].psi[k] - q.q_s * e[3].psi[k];
            assert!((jost[0].psi[k] - combo_p).norm() < 1e-8);
            assert!((jost[1].psi[k] - combo_s).norm() < 1e-8);
            let combo_pv = e[0].v[k] - q.q_p * e[1].v[k];
            let combo_sv = e[2].v[k] - q.q_s * e[3].v[k];
            assert!((jost[0].v[k] - combo_pv).norm() < 1e-8);
            assert!((jost[1].v[k] - combo_sv).norm() < 1e-8);
        }
    }

    #[test]
    fn wronskian_oracle_and_constancy() {
        // In the half space the plus and minus families pair to
        // 2 i omega^2 diag(q_P, q_S); the pairing is depth independent
        // through the slab.
        let p = bump(1.0);
        let pt = SheetPoint::new(Complex64::new(1.1, 0.35), SheetLabel::PM);
        let q = quasimomenta(&p, &pt).unwrap();
        let qflip = QuasimomentumPair {
            q_p: -q.q_p,
            q_s: -q.q_s,
        };
        let omega2 = p.omega * p.omega;
        let minus = jost_closed_form(&p, pt.xi, &q, -1.0);
        let plus = jost_closed_form(&p, pt.xi, &qflip, -1.0);
        let w = wronskian(&plus[0], &minus[0]);
        assert!((w - Complex64::i() * 2.0 * omega2 * q.q_p).norm() < 1e-10);
        let ws = wronskian(&plus[1], &minus[1]);
        assert!((ws - Complex64::i() * 2.0 * omega2 * q.q_s).norm() < 1e-10);
        assert!(wronskian(&plus[0], &minus[1]).norm() < 1e-10);
        assert!(wronskian(&plus[1], &minus[0]).norm() < 1e-10);
        // Constancy through the slab.
        let both = [minus[0], minus[1], plus[0], plus[1]];
        for z in [-0.6, -0.2, 0.0] {
            let out = propagate(&p, pt.xi, &both, -1.0, z, 1e-11).unwrap();
            let w2 = wronskian(&out[2], &out[0]);
            assert!((w2 - w).norm() < 1e-8, "z = {z}");
        }
    }

    #[test]
    fn entire_basis_continuous_near_branch_point() {
        // phi columns stay finite and smooth as q -> 0 thanks to the
        // sinc form of the initial data.
        let p = bump(1.0);
        let x0 = 1.0; // branch point of q_P for these constants
        let a = entire_basis_surface(&p, Complex64::new(x0 - 1e-5, 0.0), 1e-11).unwrap();
        let b = entire_basis_surface(&p, Complex64::new(x0 + 1e-5, 0.0), 1e-11).unwrap();
        for (sa, sb) in a.iter().zip(b.iter()) {
            for k in 0..2 {
                assert!(sa.is_finite() && sb.is_finite());
                assert!((sa.psi[k] - sb.psi[k]).norm() < 1e-3);
            }
        }
    }
}
