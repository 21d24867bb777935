//! Boundary tractions, the Rayleigh determinant, and its entire pieces.
//!
//! The boundary matrix collects the surface tractions of the two downgoing
//! Jost columns; its determinant Delta is the Rayleigh determinant, whose
//! zeros on the Riemann surface are the wavenumber resonances. Expanding
//! the Jost columns in the entire basis yields eight traction values
//! gamma_1..gamma_8 and four 2x2 determinants d_1..d_4 from which Delta on
//! every sheet follows by sign flips of the quasimomenta, along with the
//! entire product F of the four sheet values.

use crate::linalg::{Mat2, C64};
use crate::medium::MediumProfile;
use crate::propagator::{entire_basis_surface, jost_basis_surface, State};
use crate::riemann::{quasimomenta, QuasimomentumPair, Rim, SheetLabel, SheetPoint};
use crate::Result;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Floor used when normalizing identity defects near a common zero.
const DEFECT_FLOOR: f64 = 1e-30;

/// Surface traction functionals of a solution column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TractionPair {
    pub a_hat: C64,
    pub b_hat: C64,
}

/// a_hat = i v_2(0^-), b_hat = v_1(0^-).
pub fn traction_functionals(state: &State) -> TractionPair {
    TractionPair {
        a_hat: Complex64::i() * state.v[1],
        b_hat: state.v[0],
    }
}

/// Tractions of the downgoing Jost pair at the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryMatrix {
    pub entries: Mat2,
    pub point: SheetPoint,
}

/// Surface tractions of the entire basis [theta_P, phi_P, theta_S, phi_S]:
/// gamma[0..8] = a(theta_P), b(theta_P), a(phi_P), b(phi_P), a(theta_S),
/// b(theta_S), a(phi_S), b(phi_S). Single-valued functions of xi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntireOctet {
    pub xi: C64,
    pub gamma: [C64; 8],
}

/// The 2x2 determinants of the octet and the numerator functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminantSet {
    pub xi: C64,
    pub d1: C64,
    pub d2: C64,
    pub d3: C64,
    pub d4: C64,
    /// P-side numerator: -2 (gamma_3 gamma_2 - gamma_1 gamma_4).
    pub p_fun: C64,
    /// S-side numerator: -2 (gamma_7 gamma_6 - gamma_5 gamma_8).
    pub s_fun: C64,
}

impl EntireOctet {
    pub fn determinants(&self) -> DeterminantSet {
        let g = &self.gamma;
        DeterminantSet {
            xi: self.xi,
            d1: g[0] * g[5] - g[4] * g[1],
            d2: -g[2] * g[5] + g[4] * g[3],
            d3: -g[0] * g[7] + g[6] * g[1],
            d4: g[2] * g[7] - g[6] * g[3],
            p_fun: -2.0 * (g[2] * g[1] - g[0] * g[3]),
            s_fun: -2.0 * (g[6] * g[5] - g[4] * g[7]),
        }
    }

    /// Tractions of psi_P^-, psi_S^- for sheeted quasimomenta `q`:
    /// columns theta - q phi.
    pub fn boundary_entries(&self, q: &QuasimomentumPair) -> Mat2 {
        let g = &self.gamma;
        Mat2::new(
            g[0] - q.q_p * g[2],
            g[4] - q.q_s * g[6],
            g[1] - q.q_p * g[3],
            g[5] - q.q_s * g[7],
        )
    }

    /// Tractions of the upgoing pair psi_P^+, psi_S^+: theta + q phi.
    pub fn boundary_entries_up(&self, q: &QuasimomentumPair) -> Mat2 {
        let flipped = QuasimomentumPair {
            q_p: -q.q_p,
            q_s: -q.q_s,
        };
        self.boundary_entries(&flipped)
    }
}

impl DeterminantSet {
    /// Delta at the sheet point carrying quasimomenta `q`:
    /// d1 + q_P d2 + q_S d3 + q_P q_S d4.
    pub fn delta(&self, q: &QuasimomentumPair) -> C64 {
        self.d1 + q.q_p * self.d2 + q.q_s * self.d3 + q.q_p * q.q_s * self.d4
    }

    /// The entire product F = Delta * Delta(w_S .) * Delta(w_P .) *
    /// Delta(w_PS .) expressed through squared quasimomenta only.
    pub fn f_product(&self, qp2: C64, qs2: C64) -> C64 {
        let a = self.d1 * self.d1 - qp2 * self.d2 * self.d2 - qs2 * self.d3 * self.d3
            + qp2 * qs2 * self.d4 * self.d4;
        let b = self.d1 * self.d4 - self.d2 * self.d3;
        a * a - 4.0 * qp2 * qs2 * b * b
    }
}

/// Boundary matrix from the propagated Jost pair and its determinant.
pub fn boundary_matrix_and_delta(
    profile: &MediumProfile,
    pt: &SheetPoint,
    tol: f64,
) -> Result<(BoundaryMatrix, C64)> {
    let jost = jost_basis_surface(profile, pt, tol)?;
    let tp = traction_functionals(&jost[0]);
    let ts = traction_functionals(&jost[1]);
    let entries = Mat2::new(tp.a_hat, ts.a_hat, tp.b_hat, ts.b_hat);
    let delta = entries.det();
    Ok((BoundaryMatrix { entries, point: *pt }, delta))
}

/// Octet and determinant set from one propagation of the entire basis.
pub fn entire_octet_and_determinants(
    profile: &MediumProfile,
    xi: C64,
    tol: f64,
) -> Result<(EntireOctet, DeterminantSet)> {
    let basis = entire_basis_surface(profile, xi, tol)?;
    let mut gamma = [C64::new(0.0, 0.0); 8];
    for (k, st) in basis.iter().enumerate() {
        let t = traction_functionals(st);
        gamma[2 * k] = t.a_hat;
        gamma[2 * k + 1] = t.b_hat;
    }
    let octet = EntireOctet { xi, gamma };
    let dets = octet.determinants();
    Ok((octet, dets))
}

/// Squared quasimomenta at a base value (sheet independent).
pub fn squared_quasimomenta(profile: &MediumProfile, xi: C64) -> (C64, C64) {
    let omega2 = profile.omega * profile.omega;
    (
        Complex64::new(omega2 / profile.sigma0(), 0.0) - xi * xi,
        Complex64::new(omega2 / profile.mu0, 0.0) - xi * xi,
    )
}

/// The entire function F at a base value, from a single ODE family.
pub fn f_product(profile: &MediumProfile, xi: C64, tol: f64) -> Result<C64> {
    let (_, dets) = entire_octet_and_determinants(profile, xi, tol)?;
    let (qp2, qs2) = squared_quasimomenta(profile, xi);
    Ok(dets.f_product(qp2, qs2))
}

/// One identity's worst relative defect over a sample set.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityDefect {
    pub name: String,
    pub max_defect: f64,
    pub samples: usize,
}

/// Collection of identity defects with an overall verdict helper.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub entries: Vec<IdentityDefect>,
}

impl IdentityReport {
    pub fn max_defect(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.max_defect))
    }

    pub fn pass(&self, tol: f64) -> bool {
        self.max_defect() <= tol
    }
}

/// |lhs - rhs| normalized by the larger term modulus, with a floor.
pub(crate) fn rel_defect(lhs: C64, rhs: C64) -> f64 {
    (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(DEFECT_FLOOR)
}

fn defect_scaled(diff: f64, scale: f64) -> f64 {
    diff / scale.max(DEFECT_FLOOR)
}

struct PointDefects {
    conj: f64,
    ps_product: f64,
    ps_sum: f64,
    cross_sheet: f64,
    algebraic: f64,
    reconstruction: f64,
}

fn point_defects(profile: &MediumProfile, pt: &SheetPoint, tol: f64) -> Result<PointDefects> {
    let q = quasimomenta(profile, pt)?;
    let (octet, dets) = entire_octet_and_determinants(profile, pt.xi, tol)?;
    let (_, delta_direct) = boundary_matrix_and_delta(profile, pt, tol)?;
    let delta = dets.delta(&q);

    // Delta^*(xi) = -Delta(xi): conjugate of Delta at the conjugate base
    // value on the same sheet.
    let conj_pt = SheetPoint {
        xi: pt.xi.conj(),
        ..*pt
    };
    let (_, delta_conj) = boundary_matrix_and_delta(profile, &conj_pt, tol)?;
    let conj = rel_defect(delta_conj.conj(), -delta_direct);

    let prod4 = 4.0 * (dets.d1 * dets.d4 - dets.d2 * dets.d3);
    let ps_product = rel_defect(dets.p_fun * dets.s_fun, prod4);
    let ps_sum = defect_scaled(
        (dets.s_fun + dets.p_fun).norm(),
        dets.s_fun.norm().max(dets.p_fun.norm()),
    );

    // Cross-sheet determinant identity with the four sheet values obtained
    // from sign flips of the sheeted quasimomenta.
    let flip = |sp: f64, ss: f64| QuasimomentumPair {
        q_p: sp * q.q_p,
        q_s: ss * q.q_s,
    };
    let d_id = delta;
    let d_ps = dets.delta(&flip(-1.0, -1.0));
    let d_p = dets.delta(&flip(-1.0, 1.0));
    let d_s = dets.delta(&flip(1.0, -1.0));
    let lhs = d_id * d_ps - d_p * d_s;
    let rhs = q.q_p * q.q_s * dets.p_fun * dets.s_fun;
    let cross_sheet = rel_defect(lhs, rhs);

    // Algebraic lemma: (S/2) (g1..g4)^T = M(d) (g5..g8)^T.
    let g = &octet.gamma;
    let half_s = 0.5 * dets.s_fun;
    let m_rows = [
        -dets.d3 * g[4] - dets.d1 * g[6],
        -dets.d3 * g[5] - dets.d1 * g[7],
        dets.d4 * g[4] + dets.d2 * g[6],
        dets.d4 * g[5] + dets.d2 * g[7],
    ];
    let mut algebraic: f64 = 0.0;
    for k in 0..4 {
        algebraic = algebraic.max(rel_defect(half_s * g[k], m_rows[k]));
    }

    let reconstruction = rel_defect(delta, delta_direct);
    Ok(PointDefects {
        conj,
        ps_product,
        ps_sum,
        cross_sheet,
        algebraic,
        reconstruction,
    })
}

/// Conjugation identities that live on the cuts, checked on internal grids.
fn cut_defects(profile: &MediumProfile, tol: f64, n: usize) -> Result<(f64, f64, f64)> {
    let bp_p = profile.omega / profile.sigma0().sqrt();
    let mut real_cut: f64 = 0.0;
    let mut classes: f64 = 0.0;
    let mut im_cut: f64 = 0.0;
    for i in 0..n {
        // Real cut, away from the branch points and the origin.
        let x = bp_p * (0.07 + 0.86 * (i as f64 + 0.5) / n as f64);
        let pt = SheetPoint::with_rim(Complex64::new(x, 0.0), SheetLabel::PP, Rim::Upper);
        let q = quasimomenta(profile, &pt)?;
        let (octet, dets) = entire_octet_and_determinants(profile, pt.xi, tol)?;
        let (b, _) = boundary_matrix_and_delta(profile, &pt, tol)?;
        // conj(B(xi)) = diag(-1, 1) * B^+(xi) on the real cut.
        let up = octet.boundary_entries_up(&q);
        let scale = b.entries.norm_max().max(up.norm_max());
        for r in 0..2 {
            for c in 0..2 {
                let sign = if r == 0 { -1.0 } else { 1.0 };
                let diff = (b.entries.0[r][c].conj() - sign * up.0[r][c]).norm();
                real_cut = real_cut.max(defect_scaled(diff, scale));
            }
        }
        // Reality classes of the octet and the determinant set.
        let gs = octet.gamma.iter().map(|g| g.norm()).fold(0.0f64, f64::max);
        for k in [0, 3, 4, 7] {
            classes = classes.max(defect_scaled(octet.gamma[k].re.abs(), gs));
        }
        for k in [1, 2, 5, 6] {
            classes = classes.max(defect_scaled(octet.gamma[k].im.abs(), gs));
        }
        let ds = [dets.d1, dets.d2, dets.d3, dets.d4, dets.p_fun, dets.s_fun];
        let dscale = ds.iter().map(|d| d.norm()).fold(0.0f64, f64::max);
        classes = classes.max(defect_scaled(dets.d1.re.abs().max(dets.d4.re.abs()), dscale));
        classes = classes.max(defect_scaled(
            dets.d2
                .im
                .abs()
                .max(dets.d3.im.abs())
                .max(dets.p_fun.im.abs())
                .max(dets.s_fun.im.abs()),
            dscale,
        ));

        // Imaginary cut: conj(B(xi)) = diag(-1, 1) B(-xi) for xi on i R.
        let t = profile.omega * (0.2 + 1.6 * (i as f64 + 0.5) / n as f64);
        let plus = SheetPoint::new(Complex64::new(0.0, t), SheetLabel::PP);
        let minus = SheetPoint::new(Complex64::new(0.0, -t), SheetLabel::PP);
        let (bp, dp) = boundary_matrix_and_delta(profile, &plus, tol)?;
        let (bm, dm) = boundary_matrix_and_delta(profile, &minus, tol)?;
        let scale = bp.entries.norm_max().max(bm.entries.norm_max());
        for r in 0..2 {
            for c in 0..2 {
                let sign = if r == 0 { -1.0 } else { 1.0 };
                let diff = (bp.entries.0[r][c].conj() - sign * bm.entries.0[r][c]).norm();
                im_cut = im_cut.max(defect_scaled(diff, scale));
            }
        }
        im_cut = im_cut.max(rel_defect(dp.conj(), -dm));
    }
    Ok((real_cut, classes, im_cut))
}

/// Runs the full determinant identity suite over the supplied sheet points
/// plus internal grids on both cuts, reporting worst relative defects.
pub fn boundary_identity_suite(
    profile: &MediumProfile,
    samples: &[SheetPoint],
    tol: f64,
) -> Result<IdentityReport> {
    let per_point: Vec<PointDefects> = samples
        .par_iter()
        .map(|pt| point_defects(profile, pt, tol))
        .collect::<Result<Vec<_>>>()?;
    let fold = |f: fn(&PointDefects) -> f64| per_point.iter().map(f).fold(0.0f64, f64::max);
    let (real_cut, classes, im_cut) = cut_defects(profile, tol, 24)?;
    let entries = vec![
        IdentityDefect {
            name: "delta-conjugation".into(),
            max_defect: fold(|d| d.conj),
            samples: samples.len(),
        },
        IdentityDefect {
            name: "ps-product".into(),
            max_defect: fold(|d| d.ps_product),
            samples: samples.len(),
        },
        IdentityDefect {
            name: "s-plus-p".into(),
            max_defect: fold(|d| d.ps_sum),
            samples: samples.len(),
        },
        IdentityDefect {
            name: "cross-sheet".into(),
            max_defect: fold(|d| d.cross_sheet),
            samples: samples.len(),
        },
        IdentityDefect {
            name: "algebraic-lemma".into(),
            max_defect: fold(|d| d.algebraic),
            samples: samples.len(),
        },
        IdentityDefect {
            name: "delta-reconstruction".into(),
            max_defect: fold(|d| d.reconstruction),
            samples: samples.len(),
        },
        IdentityDefect {
            name: "real-cut-conjugation".into(),
            max_defect: real_cut,
            samples: 24,
        },
        IdentityDefect {
            name: "real-cut-classes".into(),
            max_defect: classes,
            samples: 24,
        },
        IdentityDefect {
            name: "imaginary-cut-conjugation".into(),
            max_defect: im_cut,
            samples: 24,
        },
    ];
    Ok(IdentityReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::jost_closed_form;
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

    #[test]
    fn homogeneous_traction_oracles() {
        // Closed-form tractions of the downgoing columns at xi on the
        // physical sheet: a(psi_P^-) = -i mu (w^2/mu - 2 xi^2),
        // b(psi_P^-) = 2 i mu xi q_P, a(psi_S^-) = -2 mu xi q_S,
        // b(psi_S^-) = -mu (w^2/mu - 2 xi^2).
        let p = profile(0.0, "kind = \"constant\"");
        let pt = SheetPoint::new(Complex64::new(1.9, 0.7), SheetLabel::PP);
        let q = quasimomenta(&p, &pt).unwrap();
        let jost = jost_closed_form(&p, pt.xi, &q, 0.0);
        let tp = traction_functionals(&jost[0]);
        let ts = traction_functionals(&jost[1]);
        let i = Complex64::i();
        let lame = 2.0 * pt.xi * pt.xi - 1.0; // -(w^2/mu - 2 xi^2), mu = w = 1
        assert!((tp.a_hat - i * lame).norm() < 1e-12);
        assert!((tp.b_hat - 2.0 * i * pt.xi * q.q_p).norm() < 1e-12);
        assert!((ts.a_hat + 2.0 * pt.xi * q.q_s).norm() < 1e-12);
        assert!((ts.b_hat - lame).norm() < 1e-12);
    }

    #[test]
    fn zero_state_zero_tractions() {
        let z = Complex64::new(0.0, 0.0);
        let st = State {
            psi: [z, z],
            v: [z, z],
        };
        let t = traction_functionals(&st);
        assert_eq!((t.a_hat, t.b_hat), (z, z));
    }

    #[test]
    fn homogeneous_determinant_set_closed_forms() {
        // H = 0: d1 = i mu^2 (w^2/mu - 2 xi^2)^2, d2 = d3 = 0,
        // d4 = 4 i mu^2 xi^2, and at xi -> 0 Delta -> d1 = i.
        let p = profile(0.0, "kind = \"constant\"");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let xi = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let (_, dets) = entire_octet_and_determinants(&p, xi, 1e-11).unwrap();
            let i = Complex64::i();
            let d1 = i * (Complex64::new(1.0, 0.0) - 2.0 * xi * xi).powi(2);
            assert!((dets.d1 - d1).norm() < 1e-10);
            assert!(dets.d2.norm() < 1e-12);
            assert!(dets.d3.norm() < 1e-12);
            assert!((dets.d4 - 4.0 * i * xi * xi).norm() < 1e-10);
        }
        let (_, at0) = entire_octet_and_determinants(&p, Complex64::new(0.0, 0.0), 1e-11).unwrap();
        assert!((at0.d1 - Complex64::i()).norm() < 1e-13);
    }

    #[test]
    fn homogeneous_delta_closed_form_all_sheets() {
        let p = profile(0.0, "kind = \"constant\"");
        let xi = Complex64::new(1.3, 0.4);
        for sheet in SheetLabel::ALL {
            let pt = SheetPoint::new(xi, sheet);
            let q = quasimomenta(&p, &pt).unwrap();
            let (_, delta) = boundary_matrix_and_delta(&p, &pt, 1e-11).unwrap();
            let want = Complex64::i()
                * ((Complex64::new(1.0, 0.0) - 2.0 * xi * xi).powi(2)
                    + 4.0 * q.q_p * q.q_s * xi * xi);
            assert!((delta - want).norm() < 1e-10, "{sheet}");
        }
    }

    #[test]
    fn constant_slab_matches_half_space() {
        let p0 = profile(0.0, "kind = \"constant\"");
        let p1 = profile(1.0, "kind = \"constant\"");
        for sheet in SheetLabel::ALL {
            let pt = SheetPoint::new(Complex64::new(0.8, -0.9), sheet);
            let (_, d0) = boundary_matrix_and_delta(&p0, &pt, 1e-11).unwrap();
            let (_, d1) = boundary_matrix_and_delta(&p1, &pt, 1e-11).unwrap();
            assert!(rel_defect(d0, d1) < 1e-8, "{sheet}");
        }
    }

    #[test]
    fn reconstruction_matches_direct_on_all_sheets() {
        let p = bump();
        let xi = Complex64::new(1.6, 0.5);
        let (_, dets) = entire_octet_and_determinants(&p, xi, 1e-11).unwrap();
        for sheet in SheetLabel::ALL {
            let pt = SheetPoint::new(xi, sheet);
            let q = quasimomenta(&p, &pt).unwrap();
            let (_, direct) = boundary_matrix_and_delta(&p, &pt, 1e-11).unwrap();
            assert!(rel_defect(dets.delta(&q), direct) < 1e-8, "{sheet}");
        }
    }

    #[test]
    fn f_product_dual_route() {
        // The closed form in squared quasimomenta must equal the product
        // of the four sheet values of Delta.
        let p = bump();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let xi = Complex64::new(rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5));
            if xi.norm() < 0.2 {
                continue;
            }
            let (_, dets) = entire_octet_and_determinants(&p, xi, 1e-11).unwrap();
            let (qp2, qs2) = squared_quasimomenta(&p, xi);
            let f = dets.f_product(qp2, qs2);
            let qp = qp2.sqrt();
            let qs = qs2.sqrt();
            let mut prod = Complex64::new(1.0, 0.0);
            for (sp, ss) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                prod *= dets.delta(&QuasimomentumPair {
                    q_p: sp * qp,
                    q_s: ss * qs,
                });
            }
            assert!(rel_defect(f, prod) < 1e-8, "xi = {xi}");
        }
    }

    #[test]
    fn f_homogeneous_square_structure() {
        // H = 0: d2 = d3 = 0, so F = Delta0(xi)^2 Delta0(w_P xi)^2.
        let p = profile(0.0, "kind = \"constant\"");
        let xi = Complex64::new(0.7, 1.1);
        let (_, dets) = entire_octet_and_determinants(&p, xi, 1e-11).unwrap();
        let (qp2, qs2) = squared_quasimomenta(&p, xi);
        let f = dets.f_product(qp2, qs2);
        let qp = qp2.sqrt();
        let qs = qs2.sqrt();
        let d0 = dets.delta(&QuasimomentumPair { q_p: qp, q_s: qs });
        let dwp = dets.delta(&QuasimomentumPair { q_p: -qp, q_s: qs });
        assert!(rel_defect(f, d0 * d0 * dwp * dwp) < 1e-10);
    }

    #[test]
    fn rayleigh_root_of_homogeneous_determinant() {
        // Bisection of the real secular function on (1, sqrt 3) gives the
        // Rayleigh wavenumber; Delta must vanish there on the physical
        // sheet.
        let secular = |x: f64| {
            (2.0 * x * x - 1.0).powi(2)
                - 4.0 * x * x * (x * x - 1.0).sqrt() * (x * x - 1.0 / 3.0).sqrt()
        };
        let (mut lo, mut hi) = (1.0 + 1e-9, 3.0f64.sqrt());
        assert!(secular(lo) > 0.0 && secular(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if secular(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let xi_r = 0.5 * (lo + hi);
        assert!((xi_r - 1.0877).abs() < 1e-3);
        assert!((1.0 / xi_r - 0.9194).abs() < 1e-3);
        let p = profile(0.0, "kind = \"constant\"");
        let pt = SheetPoint::new(Complex64::new(xi_r, 0.0), SheetLabel::PP);
        let (_, delta) = boundary_matrix_and_delta(&p, &pt, 1e-11).unwrap();
        assert!(delta.norm() < 1e-9, "|Delta(xi_R)| = {}", delta.norm());
    }

    #[test]
    fn octet_single_valued_across_real_cut() {
        // The octet entries are entire, so they cannot jump across the
        // cut of the sheeted square roots.
        let p = bump();
        let x = 0.4;
        let eps = 1e-7;
        let (above, _) =
            entire_octet_and_determinants(&p, Complex64::new(x, eps), 1e-11).unwrap();
        let (below, _) =
            entire_octet_and_determinants(&p, Complex64::new(x, -eps), 1e-11).unwrap();
        for k in 0..8 {
            let scale = above.gamma[k].norm().max(1.0);
            assert!((above.gamma[k] - below.gamma[k]).norm() < 1e-5 * scale);
        }
    }

    #[test]
    fn identity_suite_bump_small_sample() {
        let p = bump();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut samples = Vec::new();
        for sheet in SheetLabel::ALL {
            for _ in 0..8 {
                let xi = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.2..1.8));
                samples.push(SheetPoint::new(xi, sheet));
            }
        }
        let report = boundary_identity_suite(&p, &samples, 1e-11).unwrap();
        for e in &report.entries {
            assert!(e.max_defect <= 1e-7, "{}: {}", e.name, e.max_defect);
        }
    }
}
