//! Elastic profile: an inhomogeneous slab on a homogeneous lower half space.
//!
//! Density is normalized to one, so the Lame moduli here are the
//! density-scaled ones. Slab models are restricted to kinds with analytic
//! derivatives up to third order, which the Markushevich path requires.
//!
//! ```
//! use rayleigh::medium::MediumProfile;
//!
//! let p = MediumProfile::load_profile(
//!     "[medium]\nomega = 1.0\nH = 1.0\nlambda0 = 1.0\nmu0 = 1.0\n\n\
//!      [slab]\nkind = \"bump\"\namplitudes = [0.05, 0.1]\n",
//! ).unwrap();
//! assert_eq!(p.sigma0(), 3.0);
//! let report = p.validate_profile(200);
//! assert!(report.pass);
//! assert!(report.min_mu > 0.0);
//! ```

use crate::{RayleighError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Evaluable coefficient model for the slab region `[-H, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum SlabModel {
    /// Constant moduli equal to the half-space constants.
    Constant,
    /// Polynomials in `Z` (ascending powers): moduli at depth Z.
    Polynomial { lambda: Vec<f64>, mu: Vec<f64> },
    /// Smooth preset: modulus = tail constant + amplitude * s(Z), where
    /// s(Z) = 256 (Z/H)^4 (1 + Z/H)^4 vanishes to fourth order at both ends.
    Bump { amp_lambda: f64, amp_mu: f64 },
    /// Piecewise-quintic Hermite spline: (value, d1, d2) given at each knot.
    Spline {
        knots: Vec<f64>,
        lambda: Vec<[f64; 3]>,
        mu: Vec<[f64; 3]>,
    },
}

/// Moduli and derivatives of the profile at one depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LameSample {
    pub z: f64,
    pub lambda: f64,
    pub mu: f64,
    pub dmu1: f64,
    pub dmu2: f64,
    pub dmu3: f64,
    pub dlambda1: f64,
}

/// Immutable elastic profile at a fixed angular frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumProfile {
    pub omega: f64,
    pub h: f64,
    pub lambda0: f64,
    pub mu0: f64,
    pub slab: SlabModel,
    /// Content hash of the canonicalized config this profile was loaded from.
    pub profile_hash: String,
}

/// Outcome of [`MediumProfile::validate_profile`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub min_mu: f64,
    pub min_ellipticity: f64,
    /// Depth at which the worst ellipticity margin was attained.
    pub worst_z: f64,
    /// |lambda(-H) - lambda0|, |mu(-H) - mu0| and the mu-derivative
    /// mismatches of orders 1..3 at the slab bottom.
    pub tail_defects: [f64; 5],
    pub violations: Vec<String>,
}

#[derive(Deserialize)]
struct RawConfig {
    medium: RawMedium,
    slab: toml::Table,
}

#[derive(Deserialize)]
struct RawMedium {
    omega: f64,
    #[serde(alias = "h")]
    #[serde(rename = "H")]
    h: f64,
    lambda0: f64,
    mu0: f64,
    #[serde(default)]
    rho: Option<f64>,
    #[serde(default)]
    density: Option<f64>,
}

fn get_f64_array(t: &toml::Table, key: &str) -> Result<Vec<f64>> {
    let v = t
        .get(key)
        .ok_or_else(|| RayleighError::Parse(format!("missing slab key `{key}`")))?;
    let arr = v
        .as_array()
        .ok_or_else(|| RayleighError::Parse(format!("slab key `{key}` must be an array")))?;
    arr.iter()
        .map(|x| {
            x.as_float()
                .or_else(|| x.as_integer().map(|i| i as f64))
                .ok_or_else(|| RayleighError::Parse(format!("non-numeric entry in `{key}`")))
        })
        .collect()
}

fn get_knot_data(t: &toml::Table, key: &str, n: usize) -> Result<Vec<[f64; 3]>> {
    let v = get_f64_array(t, key)?;
    if v.len() != 3 * n {
        return Err(RayleighError::Parse(format!(
            "slab key `{key}` must hold 3 values (value, d1, d2) per knot; got {} for {} knots",
            v.len(),
            n
        )));
    }
    Ok(v.chunks(3).map(|c| [c[0], c[1], c[2]]).collect())
}

impl MediumProfile {
    /// Parses a TOML profile config with sections `[medium]` and `[slab]`.
    pub fn load_profile(source: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(source).map_err(|e| RayleighError::Parse(e.to_string()))?;
        let m = raw.medium;
        if m.rho.is_some() || m.density.is_some() {
            return Err(RayleighError::Parse(
                "density is fixed to 1; remove the rho/density field".into(),
            ));
        }
        for (name, v) in [
            ("omega", m.omega),
            ("H", m.h),
            ("lambda0", m.lambda0),
            ("mu0", m.mu0),
        ] {
            if !v.is_finite() {
                return Err(RayleighError::Parse(format!("non-finite `{name}`")));
            }
        }
        if m.omega <= 0.0 {
            return Err(RayleighError::Parse("omega must be positive".into()));
        }
        if m.h < 0.0 {
            return Err(RayleighError::Parse("negative slab thickness H".into()));
        }
        if m.mu0 <= 0.0 {
            return Err(RayleighError::Parse("mu0 must be positive".into()));
        }

        let kind = raw
            .slab
            .get("kind")
            .and_then(|v| v.as_str())
            .ok_or_else(|| RayleighError::Parse("missing slab kind".into()))?;
        let slab = match kind {
            "constant" => SlabModel::Constant,
            "polynomial" => SlabModel::Polynomial {
                lambda: get_f64_array(&raw.slab, "lambda_coeffs")?,
                mu: get_f64_array(&raw.slab, "mu_coeffs")?,
            },
            "bump" => SlabModel::Bump {
                amp_lambda: get_f64_array(&raw.slab, "amplitudes")?
                    .first()
                    .copied()
                    .ok_or_else(|| RayleighError::Parse("amplitudes = [amp_lambda, amp_mu]".into()))?,
                amp_mu: get_f64_array(&raw.slab, "amplitudes")?
                    .get(1)
                    .copied()
                    .ok_or_else(|| RayleighError::Parse("amplitudes = [amp_lambda, amp_mu]".into()))?,
            },
            "spline" => {
                let knots = get_f64_array(&raw.slab, "knots")?;
                if knots.len() < 2 {
                    return Err(RayleighError::Parse("spline needs at least 2 knots".into()));
                }
                if !knots.windows(2).all(|w| w[0] < w[1]) {
                    return Err(RayleighError::Parse("spline knots must be increasing".into()));
                }
                let lo = *knots.first().unwrap();
                let hi = *knots.last().unwrap();
                if m.h > 0.0 && ((lo - (-m.h)).abs() > 1e-12 * m.h.max(1.0) || hi.abs() > 1e-12) {
                    return Err(RayleighError::Parse("slab domain incomplete".into()));
                }
                let n = knots.len();
                SlabModel::Spline {
                    lambda: get_knot_data(&raw.slab, "lambda_knots", n)?,
                    mu: get_knot_data(&raw.slab, "mu_knots", n)?,
                    knots,
                }
            }
            other => {
                return Err(RayleighError::Parse(format!("unsupported slab kind `{other}`")));
            }
        };

        let mut hasher = Sha256::new();
        // Canonicalize: strip whitespace-only differences line by line.
        for line in source.lines().map(str::trim).filter(|l| !l.is_empty()) {
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
        }
        let profile_hash = format!("{:x}", hasher.finalize());

        Ok(MediumProfile {
            omega: m.omega,
            h: m.h,
            lambda0: m.lambda0,
            mu0: m.mu0,
            slab,
            profile_hash,
        })
    }

    /// lambda0 + 2 mu0, the squared P speed of the half space.
    pub fn sigma0(&self) -> f64 {
        self.lambda0 + 2.0 * self.mu0
    }

    /// (lambda0 + mu0) / (lambda0 + 2 mu0).
    pub fn c0(&self) -> f64 {
        (self.lambda0 + self.mu0) / self.sigma0()
    }

    /// Depths inside `[-H, 0]` where the model is only piecewise smooth;
    /// integrators must place step points there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.slab {
            SlabModel::Spline { knots, .. } => knots.clone(),
            _ => vec![],
        }
    }

    fn model_eval(&self, z: f64) -> LameSample {
        match &self.slab {
            SlabModel::Constant => LameSample {
                z,
                lambda: self.lambda0,
                mu: self.mu0,
                dmu1: 0.0,
                dmu2: 0.0,
                dmu3: 0.0,
                dlambda1: 0.0,
            },
            SlabModel::Polynomial { lambda, mu } => {
                let (l, dl) = poly_eval1(lambda, z);
                let (m, d1, d2, d3) = poly_eval3(mu, z);
                LameSample {
                    z,
                    lambda: l,
                    mu: m,
                    dmu1: d1,
                    dmu2: d2,
                    dmu3: d3,
                    dlambda1: dl,
                }
            }
            SlabModel::Bump { amp_lambda, amp_mu } => {
                if self.h == 0.0 {
                    return self.tail_sample(z);
                }
                let (s, s1, s2, s3) = bump_eval(z / self.h);
                let hi = 1.0 / self.h;
                LameSample {
                    z,
                    lambda: self.lambda0 + amp_lambda * s,
                    mu: self.mu0 + amp_mu * s,
                    dmu1: amp_mu * s1 * hi,
                    dmu2: amp_mu * s2 * hi * hi,
                    dmu3: amp_mu * s3 * hi * hi * hi,
                    dlambda1: amp_lambda * s1 * hi,
                }
            }
            SlabModel::Spline { knots, lambda, mu } => {
                let (l, dl, _, _) = spline_eval(knots, lambda, z);
                let (m, d1, d2, d3) = spline_eval(knots, mu, z);
                LameSample {
                    z,
                    lambda: l,
                    mu: m,
                    dmu1: d1,
                    dmu2: d2,
                    dmu3: d3,
                    dlambda1: dl,
                }
            }
        }
    }

    fn tail_sample(&self, z: f64) -> LameSample {
        LameSample {
            z,
            lambda: self.lambda0,
            mu: self.mu0,
            dmu1: 0.0,
            dmu2: 0.0,
            dmu3: 0.0,
            dlambda1: 0.0,
        }
    }

    /// Moduli and derivatives at depth `Z <= 0`; exact tail constants for
    /// `Z <= -H`.
    pub fn sample_lame(&self, z: f64) -> Result<LameSample> {
        if z > 0.0 {
            return Err(RayleighError::Domain(format!("Z = {z} above the surface")));
        }
        if z <= -self.h {
            Ok(self.tail_sample(z))
        } else {
            Ok(self.model_eval(z))
        }
    }

    /// Slab-side limit of the Lamé data at the bottom Z = -H.
    pub(crate) fn slab_bottom(&self) -> LameSample {
        self.model_eval(-self.h)
    }

    /// Ellipticity margins, tail-matching defects, and pass/fail.
    pub fn validate_profile(&self, n_samples: usize) -> ValidationReport {
        let n = n_samples.max(2);
        let mut min_mu = f64::INFINITY;
        let mut min_ell = f64::INFINITY;
        let mut worst_z = 0.0;
        let mut violations = Vec::new();
        for i in 0..n {
            let z = if self.h == 0.0 {
                0.0
            } else {
                -self.h * (i as f64) / ((n - 1) as f64)
            };
            let s = self.model_eval(z);
            if s.mu < min_mu {
                min_mu = s.mu;
            }
            let ell = 2.0 * s.mu + 3.0 * s.lambda;
            if ell < min_ell {
                min_ell = ell;
                worst_z = z;
            }
            if s.mu <= 0.0 {
                violations.push(format!("mu(Z) = {} <= 0 at Z = {z}", s.mu));
            }
            if ell <= 0.0 {
                violations.push(format!("2mu+3lambda = {ell} <= 0 at Z = {z}"));
            }
        }
        let bottom = self.model_eval(-self.h);
        let tail_defects = [
            (bottom.lambda - self.lambda0).abs(),
            (bottom.mu - self.mu0).abs(),
            bottom.dmu1.abs(),
            bottom.dmu2.abs(),
            bottom.dmu3.abs(),
        ];
        let smooth_tol = 1e-9 * self.mu0.max(1.0);
        let tail_ok = tail_defects.iter().all(|d| *d <= smooth_tol);
        if !tail_ok {
            violations.push(format!(
                "tail matching defects at Z = -H exceed {smooth_tol}: {tail_defects:?}"
            ));
        }
        ValidationReport {
            pass: violations.is_empty(),
            min_mu,
            min_ellipticity: min_ell,
            worst_z,
            tail_defects,
            violations,
        }
    }
}

/// Polynomial value and first derivative (ascending coefficients).
fn poly_eval1(c: &[f64], x: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for &ck in c.iter().rev() {
        d = d * x + v;
        v = v * x + ck;
    }
    (v, d)
}

/// Polynomial value and derivatives up to order 3.
fn poly_eval3(c: &[f64], x: f64) -> (f64, f64, f64, f64) {
    let (mut v, mut d1, mut d2, mut d3) = (0.0, 0.0, 0.0, 0.0);
    for &ck in c.iter().rev() {
        d3 = d3 * x + 3.0 * d2;
        d2 = d2 * x + 2.0 * d1;
        d1 = d1 * x + v;
        v = v * x + ck;
    }
    (v, d1, d2, d3)
}

/// s(t) = 256 (t (1+t))^4 on t in [-1, 0] with derivatives in t.
fn bump_eval(t: f64) -> (f64, f64, f64, f64) {
    let u = t * (1.0 + t);
    let up = 1.0 + 2.0 * t;
    let s = 256.0 * u.powi(4);
    let s1 = 1024.0 * u.powi(3) * up;
    let s2 = 1024.0 * u * u * (3.0 * up * up + 2.0 * u);
    let s3 = 1024.0 * 6.0 * u * up * (up * up + 3.0 * u);
    (s, s1, s2, s3)
}

/// Quintic Hermite segment evaluation with derivatives up to order 3.
fn spline_eval(knots: &[f64], data: &[[f64; 3]], z: f64) -> (f64, f64, f64, f64) {
    let n = knots.len();
    let mut seg = n - 2;
    for i in 0..n - 1 {
        if z <= knots[i + 1] {
            seg = i;
            break;
        }
    }
    let a = knots[seg];
    let b = knots[seg + 1];
    let h = b - a;
    let s = (z - a) / h;
    let [v0, dv0, ddv0] = data[seg];
    let [v1, dv1, ddv1] = data[seg + 1];
    // Power-basis coefficients in the scaled variable s.
    let m0 = dv0 * h;
    let k0 = ddv0 * h * h;
    let m1 = dv1 * h;
    let k1 = ddv1 * h * h;
    let a0 = v0;
    let a1 = m0;
    let a2 = 0.5 * k0;
    let r = v1 - a0 - a1 - a2;
    let r1 = m1 - a1 - 2.0 * a2;
    let r2 = k1 - 2.0 * a2;
    let a3 = 10.0 * r - 4.0 * r1 + 0.5 * r2;
    let a4 = -15.0 * r + 7.0 * r1 - r2;
    let a5 = 6.0 * r - 3.0 * r1 + 0.5 * r2;
    let c = [a0, a1, a2, a3, a4, a5];
    let (v, d1, d2, d3) = poly_eval3(&c, s);
    (v, d1 / h, d2 / (h * h), d3 / (h * h * h))
}
