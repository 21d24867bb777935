//! Four-sheeted Riemann surface of the quasimomenta.
//!
//! The two square roots q_P, q_S of `omega^2/c - xi^2` (with c the squared
//! P and S speeds of the half space) define a surface with four sheets,
//! labelled by the signs of Im q_P and Im q_S away from the cuts. The cut
//! set is the union of the real segment between the branch points and the
//! full imaginary axis; on the cuts a point carries a rim tag.

use crate::medium::MediumProfile;
use crate::{RayleighError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Relative half-width of the band around the cut set inside which a point
/// is treated as lying on a cut.
pub const CUT_BAND: f64 = 1e-9;

/// Sheet of the Riemann surface: signs of (Im q_P, Im q_S) off the cuts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SheetLabel {
    #[serde(rename = "++")]
    PP,
    #[serde(rename = "+-")]
    PM,
    #[serde(rename = "-+")]
    MP,
    #[serde(rename = "--")]
    MM,
}

impl SheetLabel {
    pub const ALL: [SheetLabel; 4] = [SheetLabel::PP, SheetLabel::PM, SheetLabel::MP, SheetLabel::MM];

    /// (sigma_P, sigma_S) as +-1.
    pub fn signs(self) -> (f64, f64) {
        match self {
            SheetLabel::PP => (1.0, 1.0),
            SheetLabel::PM => (1.0, -1.0),
            SheetLabel::MP => (-1.0, 1.0),
            SheetLabel::MM => (-1.0, -1.0),
        }
    }

    fn from_signs(sp: f64, ss: f64) -> SheetLabel {
        match (sp > 0.0, ss > 0.0) {
            (true, true) => SheetLabel::PP,
            (true, false) => SheetLabel::PM,
            (false, true) => SheetLabel::MP,
            (false, false) => SheetLabel::MM,
        }
    }
}

impl fmt::Display for SheetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SheetLabel::PP => "++",
            SheetLabel::PM => "+-",
            SheetLabel::MP => "-+",
            SheetLabel::MM => "--",
        };
        f.write_str(s)
    }
}

impl FromStr for SheetLabel {
    type Err = RayleighError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "++" => Ok(SheetLabel::PP),
            "+-" => Ok(SheetLabel::PM),
            "-+" => Ok(SheetLabel::MP),
            "--" => Ok(SheetLabel::MM),
            other => Err(RayleighError::Parse(format!("bad sheet label `{other}`"))),
        }
    }
}

/// Which rim of a cut a point sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rim {
    Upper,
    Lower,
}

/// Sheet involution: which quasimomenta change sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SheetMap {
    /// Flip the sign of q_P.
    WP,
    /// Flip the sign of q_S.
    WS,
    /// Flip both signs.
    WPS,
}

/// A point on the Riemann surface: base value, sheet, and optional rim tag
/// used only when the point lies on the cut set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetPoint {
    pub xi: Complex64,
    pub sheet: SheetLabel,
    pub rim: Option<Rim>,
}

impl SheetPoint {
    pub fn new(xi: Complex64, sheet: SheetLabel) -> Self {
        SheetPoint { xi, sheet, rim: None }
    }

    pub fn with_rim(xi: Complex64, sheet: SheetLabel, rim: Rim) -> Self {
        SheetPoint { xi, sheet, rim: Some(rim) }
    }
}

/// Both quasimomenta at a surface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasimomentumPair {
    pub q_p: Complex64,
    pub q_s: Complex64,
}

/// True if `xi` lies inside the cut band for squared speed `c`.
fn on_cut(xi: Complex64, omega: f64, c: f64) -> bool {
    let band = CUT_BAND * xi.norm().max(1.0);
    let bp = omega / c.sqrt();
    (xi.im.abs() <= band && xi.re.abs() <= bp + band) || xi.re.abs() <= band
}

/// One sheeted square root q = sqrt(omega^2/c - xi^2) with
/// sign(Im q) = sigma off the cuts and the rim convention on them.
fn sheeted_root(xi: Complex64, omega: f64, c: f64, sigma: f64, rim: Option<Rim>) -> Complex64 {
    let w = Complex64::new(omega * omega / c, 0.0) - xi * xi;
    let band = CUT_BAND * xi.norm().max(1.0);
    if on_cut(xi, omega, c) {
        // q is real on the cuts; fix its sign from the rim tag, defaulting
        // to the limit taken from the right half plane / upper half plane.
        let mag = w.re.abs().sqrt();
        let plus_sign = match rim {
            Some(Rim::Upper) => -1.0,
            Some(Rim::Lower) => 1.0,
            None => {
                if xi.im.abs() <= band {
                    -xi.re.signum()
                } else {
                    -xi.im.signum()
                }
            }
        };
        Complex64::new(sigma * plus_sign * mag, 0.0)
    } else {
        let r = w.sqrt();
        if sigma * r.im >= 0.0 {
            r
        } else {
            -r
        }
    }
}

/// Quasimomenta q_P, q_S at a surface point. Rejects xi = 0 and the branch
/// points, where the sheet structure degenerates.
pub fn quasimomenta(profile: &MediumProfile, pt: &SheetPoint) -> Result<QuasimomentumPair> {
    let xi = pt.xi;
    let band = CUT_BAND * xi.norm().max(1.0);
    if xi.norm() <= band.max(CUT_BAND) {
        return Err(RayleighError::BranchPoint { xi });
    }
    for c in [profile.sigma0(), profile.mu0] {
        let bp = profile.omega / c.sqrt();
        if (xi - bp).norm() <= band || (xi + bp).norm() <= band {
            return Err(RayleighError::BranchPoint { xi });
        }
    }
    let (sp, ss) = pt.sheet.signs();
    Ok(QuasimomentumPair {
        q_p: sheeted_root(xi, profile.omega, profile.sigma0(), sp, pt.rim),
        q_s: sheeted_root(xi, profile.omega, profile.mu0, ss, pt.rim),
    })
}

/// Applies a sheet involution: same base point, flipped sheet signs.
pub fn apply_sheet_map(pt: &SheetPoint, map: SheetMap) -> SheetPoint {
    let (sp, ss) = pt.sheet.signs();
    let (sp, ss) = match map {
        SheetMap::WP => (-sp, ss),
        SheetMap::WS => (sp, -ss),
        SheetMap::WPS => (-sp, -ss),
    };
    SheetPoint {
        xi: pt.xi,
        sheet: SheetLabel::from_signs(sp, ss),
        rim: pt.rim,
    }
}

/// Exponential growth rate of the Jost data at depth H: the largest of
/// [|Im q_P| - Im q_P], half of the same bracket for q_P - q_S and
/// q_P + q_S. Vanishes on the sheets where Im q_P >= 0.
pub fn gamma_bound(q: &QuasimomentumPair) -> f64 {
    let bracket = |y: f64| y.abs() - y;
    let a = bracket(q.q_p.im);
    let b = 0.5 * bracket((q.q_p - q.q_s).im);
    let c = 0.5 * bracket((q.q_p + q.q_s).im);
    a.max(b).max(c)
}
