//! Surface reflection matrix and its unitarity structure.
//!
//! At a non-resonant surface point the reflection matrix maps upgoing to
//! downgoing wave amplitudes. It is computed both as -B(xi)^{-1} B(w_PS xi)
//! and entrywise through the determinant set; the two routes must agree.
//! After flux normalization the matrix is unitary on the body-wave cut and
//! its S-to-S entry is unimodular on the evanescent-P band.
//!
//! ```
//! use num_complex::Complex64;
//! use rayleigh::medium::MediumProfile;
//! use rayleigh::riemann::{SheetLabel, SheetPoint};
//! use rayleigh::scattering::{flux_normalize, reflection_matrix};
//!
//! let p = MediumProfile::load_profile(
//!     "[medium]\nomega = 1.0\nH = 1.0\nlambda0 = 1.0\nmu0 = 1.0\n\n\
//!      [slab]\nkind = \"bump\"\namplitudes = [0.05, 0.1]\n",
//! ).unwrap();
//! // A point on the P-propagating cut: the flux-normalized matrix is unitary.
//! let pt = SheetPoint::new(Complex64::new(0.3, 0.0), SheetLabel::PP);
//! let r = reflection_matrix(&p, &pt, 1e-10).unwrap();
//! let rt = flux_normalize(&r);
//! let gram = rt.entries * rt.entries.adjoint();
//! let defect = (gram - rayleigh::linalg::Mat2::identity()).norm_max();
//! assert!(defect < 1e-8);
//! ```

use crate::boundary::{
    entire_octet_and_determinants, rel_defect, IdentityDefect,
    IdentityReport,
};
use crate::linalg::{Mat2, C64};
use crate::medium::MediumProfile;
use crate::riemann::{quasimomenta, QuasimomentumPair, Rim, SheetLabel, SheetPoint};
use crate::{RayleighError, Result};
use num_complex::Complex64;
use rayon::prelude::*;

/// Relative |Delta| floor below which a point counts as near-resonant.
const NEAR_RESONANCE: f64 = 1e-9;
/// Allowed relative disagreement between the two assembly routes.
const ROUTE_TOL: f64 = 1e-7;

/// Reflection matrix [[R2, q_S R1~], [-q_P R1, R2~]] at a surface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionMatrix {
    pub entries: Mat2,
    pub point: SheetPoint,
    pub q: QuasimomentumPair,
    pub r1: C64,
    pub r1_tilde: C64,
    pub r2: C64,
    pub r2_tilde: C64,
}

/// Flux-normalized form [[R2, i sqrt(q_P q_S) R1~], [i sqrt(q_P q_S) R1, R2~]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxNormalizedReflection {
    pub entries: Mat2,
}

/// Principal branch of sqrt(q_P q_S) taken on the product, not the
/// product of the individual principal roots.
pub fn sqrt_qpqs(q: &QuasimomentumPair) -> C64 {
    (q.q_p * q.q_s).sqrt()
}

/// Builds the reflection matrix by both routes, erroring on disagreement
/// or near a zero of Delta.
pub fn reflection_matrix(
    profile: &MediumProfile,
    pt: &SheetPoint,
    tol: f64,
) -> Result<ReflectionMatrix> {
    let q = quasimomenta(profile, pt)?;
    let (octet, dets) = entire_octet_and_determinants(profile, pt.xi, tol)?;
    let delta = dets.delta(&q);
    // Scale of the four terms entering Delta, for the resonance guard.
    let scale = dets
        .d1
        .norm()
        .max((q.q_p * dets.d2).norm())
        .max((q.q_s * dets.d3).norm())
        .max((q.q_p * q.q_s * dets.d4).norm());
    if delta.norm() < NEAR_RESONANCE * scale.max(1e-300) {
        return Err(RayleighError::NearResonance {
            abs_delta: delta.norm(),
            threshold: NEAR_RESONANCE * scale,
        });
    }
    // Entrywise route.
    let flip = |sp: f64, ss: f64| QuasimomentumPair {
        q_p: sp * q.q_p,
        q_s: ss * q.q_s,
    };
    let r1 = dets.p_fun / delta;
    let r1_tilde = dets.s_fun / delta;
    let r2 = -dets.delta(&flip(-1.0, 1.0)) / delta;
    let r2_tilde = -dets.delta(&flip(1.0, -1.0)) / delta;
    let entrywise = Mat2::new(r2, q.q_s * r1_tilde, -q.q_p * r1, r2_tilde);
    // Matrix route: -B(xi)^{-1} B(w_PS xi), both from the same octet.
    let b = octet.boundary_entries(&q);
    let b_ps = octet.boundary_entries_up(&q);
    let b_inv = b.inv().expect("Delta bounded away from zero");
    let matrix_route = -(b_inv * b_ps);
    let mut worst: f64 = 0.0;
    let scale = entrywise.norm_max().max(matrix_route.norm_max());
    for r in 0..2 {
        for c in 0..2 {
            worst = worst.max(
                (entrywise.0[r][c] - matrix_route.0[r][c]).norm() / scale.max(1e-300),
            );
        }
    }
    if worst > ROUTE_TOL {
        return Err(RayleighError::RouteMismatch(format!(
            "reflection routes disagree by {worst:.3e} at xi = {}",
            pt.xi
        )));
    }
    Ok(ReflectionMatrix {
        entries: entrywise,
        point: *pt,
        q,
        r1,
        r1_tilde,
        r2,
        r2_tilde,
    })
}

/// Applies flux normalization; diagonal entries are unchanged.
pub fn flux_normalize(r: &ReflectionMatrix) -> FluxNormalizedReflection {
    let root = Complex64::i() * sqrt_qpqs(&r.q);
    FluxNormalizedReflection {
        entries: Mat2::new(r.r2, root * r.r1_tilde, root * r.r1, r.r2_tilde),
    }
}

struct CutDefects {
    ruid1: f64,
    ruid2: f64,
    ruid3: f64,
    delta_pair: f64,
    unitarity: f64,
}

fn cut_point_defects(profile: &MediumProfile, x: f64, tol: f64) -> Result<CutDefects> {
    let pt = SheetPoint::with_rim(Complex64::new(x, 0.0), SheetLabel::PP, Rim::Upper);
    let q = quasimomenta(profile, &pt)?;
    let (_, dets) = entire_octet_and_determinants(profile, pt.xi, tol)?;
    let flip = |sp: f64, ss: f64| QuasimomentumPair {
        q_p: sp * q.q_p,
        q_s: ss * q.q_s,
    };
    let delta = dets.delta(&q);
    let d_p = dets.delta(&flip(-1.0, 1.0));
    let d_s = dets.delta(&flip(1.0, -1.0));
    let d_ps = dets.delta(&flip(-1.0, -1.0));
    let qq = (q.q_p * q.q_s).norm();
    let d2 = delta.norm_sqr();

    // |q_P q_S| |S|^2 + |Delta(w_P)|^2 = |Delta|^2 and the P-side twin.
    let lhs1 = qq * dets.s_fun.norm_sqr() + d_p.norm_sqr();
    let ruid1 = (lhs1 - d2).abs() / lhs1.max(d2).max(1e-300);
    let lhs2 = qq * dets.p_fun.norm_sqr() + d_s.norm_sqr();
    let ruid2 = (lhs2 - d2).abs() / lhs2.max(d2).max(1e-300);

    // Cross identity mixing the two off-diagonal channels.
    let root = sqrt_qpqs(&q);
    let i = Complex64::i();
    let t1 = i * root.conj() * d_p * dets.p_fun.conj();
    let t2 = i * root * d_s.conj() * dets.s_fun;
    let ruid3 = (t1 - t2).norm() / t1.norm().max(t2.norm()).max(1e-300);

    // Conjugate pairing of the sheet values on the cut.
    let delta_pair = rel_defect(d_p, -d_s.conj()).max(rel_defect(delta, -d_ps.conj()));

    // Full unitarity of the flux-normalized matrix.
    let refl = reflection_matrix(profile, &pt, tol)?;
    let f = flux_normalize(&refl);
    let prod = f.entries * f.entries.adjoint();
    let id = Mat2::identity();
    let mut unitarity: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            unitarity = unitarity.max((prod.0[r][c] - id.0[r][c]).norm());
        }
    }
    Ok(CutDefects {
        ruid1,
        ruid2,
        ruid3,
        delta_pair,
        unitarity,
    })
}

/// Runs the cut/band identity suite: the three unitarity identities and the
/// conjugate pairing on `cut_samples` in (-w/sqrt(sigma0), w/sqrt(sigma0)),
/// and S-to-S unimodularity on `band_samples` in (w/sqrt(sigma0), w/sqrt(mu0)).
pub fn scattering_identity_suite(
    profile: &MediumProfile,
    cut_samples: &[f64],
    band_samples: &[f64],
    tol: f64,
) -> Result<IdentityReport> {
    let cut: Vec<CutDefects> = cut_samples
        .par_iter()
        .map(|&x| cut_point_defects(profile, x, tol))
        .collect::<Result<Vec<_>>>()?;
    let fold = |f: fn(&CutDefects) -> f64| cut.iter().map(f).fold(0.0f64, f64::max);
    let band: Vec<f64> = band_samples
        .par_iter()
        .map(|&x| {
            let pt = SheetPoint::with_rim(Complex64::new(x, 0.0), SheetLabel::PP, Rim::Upper);
            let refl = reflection_matrix(profile, &pt, tol)?;
            Ok((refl.r2_tilde.norm() - 1.0).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    let entries = vec![
        IdentityDefect {
            name: "unitarity-s-channel".into(),
            max_defect: fold(|d| d.ruid1),
            samples: cut_samples.len(),
        },
        IdentityDefect {
            name: "unitarity-p-channel".into(),
            max_defect: fold(|d| d.ruid2),
            samples: cut_samples.len(),
        },
        IdentityDefect {
            name: "unitarity-cross".into(),
            max_defect: fold(|d| d.ruid3),
            samples: cut_samples.len(),
        },
        IdentityDefect {
            name: "cut-conjugate-pairing".into(),
            max_defect: fold(|d| d.delta_pair),
            samples: cut_samples.len(),
        },
        IdentityDefect {
            name: "flux-unitarity".into(),
            max_defect: fold(|d| d.unitarity),
            samples: cut_samples.len(),
        },
        IdentityDefect {
            name: "band-s-unimodularity".into(),
            max_defect: band.iter().copied().fold(0.0f64, f64::max),
            samples: band_samples.len(),
        },
    ];
    Ok(IdentityReport { entries })
}

/// Evenly spaced interior samples of the open interval (a, b).
pub fn interior_grid(a: f64, b: f64, n: usize, margin: f64) -> Vec<f64> {
    let lo = a + margin * (b - a);
    let hi = b - margin * (b - a);
    (0..n)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::boundary_matrix_and_delta;

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
    fn homogeneous_det_is_one() {
        // H = 0: Delta(w_PS xi) = Delta(xi), so det R = 1.
        let p = profile(0.0, "kind = \"constant\"");
        let pt = SheetPoint::new(Complex64::new(1.8, 0.6), SheetLabel::PP);
        let r = reflection_matrix(&p, &pt, 1e-11).unwrap();
        assert!((r.entries.det() - Complex64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn homogeneous_off_diagonal_numerators() {
        // H = 0: P = -S = -4 mu xi (w^2 - 2 mu xi^2)/..., so the
        // off-diagonal entries of R carry the factor 4 mu^2-free form
        // q 4 mu xi (w^2/mu - 2 xi^2)/Delta. Check against the closed form.
        let p = profile(0.0, "kind = \"constant\"");
        let xi = Complex64::new(1.4, 0.3);
        let pt = SheetPoint::new(xi, SheetLabel::PP);
        let q = quasimomenta(&p, &pt).unwrap();
        let r = reflection_matrix(&p, &pt, 1e-11).unwrap();
        let (_, delta) = boundary_matrix_and_delta(&p, &pt, 1e-11).unwrap();
        let l = Complex64::new(1.0, 0.0) - 2.0 * xi * xi; // w^2/mu - 2 xi^2
        let s_fun = 4.0 * xi * l; // mu = 1
        assert!(rel_defect(r.entries.0[0][1], q.q_s * s_fun / delta) < 1e-9);
        assert!(rel_defect(r.entries.0[1][0], q.q_p * s_fun / delta) < 1e-9);
    }

    #[test]
    fn det_equals_delta_ratio() {
        let p = bump();
        for sheet in SheetLabel::ALL {
            let pt = SheetPoint::new(Complex64::new(1.1, 0.8), sheet);
            let q = quasimomenta(&p, &pt).unwrap();
            let (_, dets) = entire_octet_and_determinants(&p, pt.xi, 1e-11).unwrap();
            let r = reflection_matrix(&p, &pt, 1e-11).unwrap();
            let d_ps = dets.delta(&QuasimomentumPair {
                q_p: -q.q_p,
                q_s: -q.q_s,
            });
            let want = d_ps / dets.delta(&q);
            assert!(rel_defect(r.entries.det(), want) < 1e-7, "{sheet}");
        }
    }

    #[test]
    fn flux_normalization_preserves_offdiagonal_product() {
        let p = bump();
        let pt = SheetPoint::new(Complex64::new(0.9, 1.1), SheetLabel::PM);
        let r = reflection_matrix(&p, &pt, 1e-11).unwrap();
        let f = flux_normalize(&r);
        assert_eq!(f.entries.0[0][0], r.entries.0[0][0]);
        assert_eq!(f.entries.0[1][1], r.entries.0[1][1]);
        let raw = r.entries.0[0][1] * r.entries.0[1][0];
        let nrm = f.entries.0[0][1] * f.entries.0[1][0];
        assert!(rel_defect(raw, nrm) < 1e-12);
    }

    #[test]
    fn near_resonance_rejected() {
        // The Rayleigh root of the homogeneous half space is a zero of
        // Delta on the physical sheet; the reflection matrix must refuse it.
        let p = profile(0.0, "kind = \"constant\"");
        let secular = |x: f64| {
            (2.0 * x * x - 1.0).powi(2)
                - 4.0 * x * x * (x * x - 1.0).sqrt() * (x * x - 1.0 / 3.0).sqrt()
        };
        let (mut lo, mut hi) = (1.0 + 1e-9, 3.0f64.sqrt());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if secular(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let pt = SheetPoint::new(Complex64::new(0.5 * (lo + hi), 0.0), SheetLabel::PP);
        match reflection_matrix(&p, &pt, 1e-11) {
            Err(RayleighError::NearResonance { .. }) => {}
            other => panic!("expected near-resonance, got {other:?}"),
        }
    }

    #[test]
    fn homogeneous_ruid1_exact() {
        // Symbolic check of the S-channel unitarity identity at H = 0 on
        // the cut: q_P q_S |S|^2 + |Delta(w_P)|^2 = |Delta|^2.
        let p = profile(0.0, "kind = \"constant\"");
        let suite = scattering_identity_suite(
            &p,
            &interior_grid(0.0, 1.0 / 3.0f64.sqrt(), 20, 0.05),
            &interior_grid(1.0 / 3.0f64.sqrt(), 1.0, 20, 0.05),
            1e-11,
        )
        .unwrap();
        for e in &suite.entries {
            assert!(e.max_defect < 1e-10, "{}: {}", e.name, e.max_defect);
        }
    }

    #[test]
    fn suite_bump_profile() {
        let p = bump();
        let bp_p = 1.0 / 3.0f64.sqrt();
        let suite = scattering_identity_suite(
            &p,
            &interior_grid(-bp_p, bp_p, 24, 0.04),
            &interior_grid(bp_p, 1.0, 24, 0.04),
            1e-11,
        )
        .unwrap();
        for e in &suite.entries {
            assert!(e.max_defect <= 1e-7, "{}: {}", e.name, e.max_defect);
        }
    }
}
