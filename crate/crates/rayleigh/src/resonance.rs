//! Zero location for the Rayleigh determinant and counting diagnostics.
//!
//! Zeros are found per sheet by argument-principle counting on rectangles,
//! quadtree subdivision, and Newton refinement with a finite-difference
//! derivative. The entire product F supports the Weyl-type counting
//! function on circles and the distribution diagnostics: partial sums,
//! forbidden-region fit, and sector concentration.
//!
//! ```
//! use rayleigh::medium::MediumProfile;
//! use rayleigh::resonance::{resonance_search, Region, SearchOptions};
//! use rayleigh::riemann::SheetLabel;
//!
//! // The Rayleigh wave of the Poisson half space: a real zero of the
//! // determinant on the physical sheet at xi_R = omega / c_R.
//! let p = MediumProfile::load_profile(
//!     "[medium]\nomega = 1.0\nH = 0.0\nlambda0 = 1.0\nmu0 = 1.0\n\n\
//!      [slab]\nkind = \"constant\"\n",
//! ).unwrap();
//! let regions = vec![(SheetLabel::PP, Region::new(0.9, 1.3, -0.05, 0.05))];
//! let catalog = resonance_search(&p, &regions, &SearchOptions::default());
//! assert_eq!(catalog.entries.len(), 1);
//! let c_ratio = p.omega / catalog.entries[0].xi[0];
//! assert!((c_ratio - 0.9194).abs() < 1e-3); // c_R / c_S for Poisson media
//! ```

use crate::boundary::entire_octet_and_determinants;
use crate::linalg::C64;
use crate::markushevich::{jost_function_and_bridge, schroedinger_cache_sized, SchroedingerCache};
use crate::medium::MediumProfile;
use crate::riemann::{quasimomenta, SheetLabel, SheetPoint};
use crate::{RayleighError, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Axis-aligned search rectangle in the xi plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Region {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Self {
        Region {
            re: (re_lo, re_hi),
            im: (im_lo, im_hi),
        }
    }

    fn corners(&self) -> [C64; 4] {
        [
            Complex64::new(self.re.0, self.im.0),
            Complex64::new(self.re.1, self.im.0),
            Complex64::new(self.re.1, self.im.1),
            Complex64::new(self.re.0, self.im.1),
        ]
    }

    fn diameter(&self) -> f64 {
        let dr = self.re.1 - self.re.0;
        let di = self.im.1 - self.im.0;
        (dr * dr + di * di).sqrt()
    }

    fn center(&self) -> C64 {
        Complex64::new(0.5 * (self.re.0 + self.re.1), 0.5 * (self.im.0 + self.im.1))
    }

    fn contains(&self, z: C64) -> bool {
        z.re >= self.re.0 && z.re <= self.re.1 && z.im >= self.im.0 && z.im <= self.im.1
    }
}

/// Controls for zero location.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub ode_tol: f64,
    /// Box diameter below which Newton refinement takes over.
    pub min_box: f64,
    pub max_newton: usize,
    /// Absolute |f| floor on contours.
    pub contour_floor: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            ode_tol: 1e-11,
            min_box: 5e-3,
            max_newton: 80,
            contour_floor: 1e-13,
        }
    }
}

/// One located zero before catalog assembly.
#[derive(Debug, Clone, Copy)]
pub struct ZeroCandidate {
    pub xi: C64,
    pub multiplicity: u32,
    pub residual: f64,
    pub refine_iters: u32,
}

/// Serializable catalog entry.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub xi: [f64; 2],
    pub sheet: SheetLabel,
    pub multiplicity: u32,
    pub residual: f64,
    pub refine_iters: u32,
}

/// Catalog of located wavenumber resonances.
#[derive(Debug, Clone, Serialize)]
pub struct ResonanceCatalog {
    pub schema_version: u32,
    pub profile_hash: String,
    pub omega: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub entries: Vec<CatalogEntry>,
    pub search_regions: Vec<(SheetLabel, Region)>,
    pub tool_version: String,
    /// Per-region failures (message strings), non-fatal.
    pub failures: Vec<String>,
}

/// Counting function table for the entire product F.
#[derive(Debug, Clone, Serialize)]
pub struct CountingTable {
    pub radii: Vec<f64>,
    pub counts: Vec<i64>,
    pub slope_fit: f64,
    pub reference_slope: f64,
}

/// Winding number of `f` along the closed polyline `vertices` (last edge
/// closes back to the first vertex), with adaptive refinement until each
/// phase increment is below pi/2.
pub fn winding_count<F>(f: &F, vertices: &[C64], floor: f64) -> Result<i64>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let n = vertices.len();
    let vals: Vec<C64> = vertices
        .par_iter()
        .map(|&z| f(z))
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0f64;
    for i in 0..n {
        let (za, zb) = (vertices[i], vertices[(i + 1) % n]);
        let (fa, fb) = (vals[i], vals[(i + 1) % n]);
        total += segment_phase(f, za, zb, fa, fb, floor, 0)?;
    }
    let winding = total / (2.0 * std::f64::consts::PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.25 {
        return Err(RayleighError::NonConvergence {
            iters: 0,
            ratio: (winding - rounded).abs(),
        });
    }
    Ok(rounded as i64)
}

fn segment_phase<F>(f: &F, za: C64, zb: C64, fa: C64, fb: C64, floor: f64, depth: u32) -> Result<f64>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    if !(fa.norm() > floor) || !(fb.norm() > floor) {
        return Err(RayleighError::ContourNearZero {
            abs_f: fa.norm().min(fb.norm()),
            floor,
        });
    }
    let dphi = (fb / fa).arg();
    if dphi.abs() < std::f64::consts::FRAC_PI_2 && depth >= 1 {
        return Ok(dphi);
    }
    if depth > 48 {
        // Phase never settles only when the contour grazes a zero.
        return Err(RayleighError::ContourNearZero {
            abs_f: fa.norm().min(fb.norm()),
            floor,
        });
    }
    let zm = 0.5 * (za + zb);
    let fm = f(zm)?;
    Ok(segment_phase(f, za, zm, fa, fm, floor, depth + 1)?
        + segment_phase(f, zm, zb, fm, fb, floor, depth + 1)?)
}

/// Derivative by the 4-point Richardson central-difference rule.
fn richardson_derivative<F>(f: &F, z: C64, h: f64) -> Result<C64>
where
    F: Fn(C64) -> Result<C64>,
{
    let hp = Complex64::new(h, 0.0);
    let f1 = f(z + hp)?;
    let f2 = f(z - hp)?;
    let f3 = f(z + 2.0 * hp)?;
    let f4 = f(z - 2.0 * hp)?;
    Ok((8.0 * (f1 - f2) - (f3 - f4)) / (12.0 * h))
}

fn newton_refine<F>(f: &F, start: C64, opts: &SearchOptions) -> Result<(C64, u32)>
where
    F: Fn(C64) -> Result<C64>,
{
    let mut z = start;
    for it in 0..opts.max_newton {
        let fz = f(z)?;
        let h = 1e-6 * z.norm().max(1.0);
        let dfz = richardson_derivative(f, z, h)?;
        if dfz.norm() == 0.0 {
            break;
        }
        let step = fz / dfz;
        z -= step;
        if step.norm() <= 1e-12 * z.norm().max(1.0) {
            return Ok((z, it as u32 + 1));
        }
    }
    // Multiple zeros converge linearly; accept if the residual is tiny.
    let fz = f(z)?;
    if fz.norm().is_finite() {
        return Ok((z, opts.max_newton as u32));
    }
    Err(RayleighError::NonConvergence {
        iters: opts.max_newton,
        ratio: f64::INFINITY,
    })
}

fn circle_vertices(center: C64, r: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            center + r * Complex64::new(t.cos(), t.sin())
        })
        .collect()
}

/// Winding of `f` on a rectangle, retrying with slightly shifted edges if
/// the contour runs over a near-zero of `f`.
fn rect_winding<F>(f: &F, region: &Region, floor: f64) -> Result<i64>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let mut grow = 0.0;
    for attempt in 0..5 {
        let r = Region {
            re: (region.re.0 - grow, region.re.1 + grow),
            im: (region.im.0 - grow, region.im.1 + grow),
        };
        match winding_count(f, &r.corners(), floor) {
            Err(RayleighError::ContourNearZero { .. }) if attempt < 4 => {
                grow += 1e-4 * region.diameter();
            }
            other => return other,
        }
    }
    unreachable!()
}

/// Recursive quadtree zero search inside `region`.
pub fn locate_zeros<F>(f: &F, region: &Region, opts: &SearchOptions) -> Result<Vec<ZeroCandidate>>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let count = rect_winding(f, region, opts.contour_floor)?;
    if count == 0 {
        return Ok(Vec::new());
    }
    if region.diameter() > opts.min_box && count >= 1 {
        // Subdivide into quadrants; a retry shim in rect_winding handles
        // zeros sitting near the split lines.
        let cx = 0.5 * (region.re.0 + region.re.1);
        let cy = 0.5 * (region.im.0 + region.im.1);
        let quads = [
            Region::new(region.re.0, cx, region.im.0, cy),
            Region::new(cx, region.re.1, region.im.0, cy),
            Region::new(region.re.0, cx, cy, region.im.1),
            Region::new(cx, region.re.1, cy, region.im.1),
        ];
        let mut out = Vec::new();
        for q in &quads {
            out.extend(locate_zeros(f, q, opts)?);
        }
        // The overlap shim can introduce duplicates on the seams.
        out = dedup_candidates(out, 1e-8);
        if !out.is_empty() {
            return Ok(out);
        }
        // Winding said nonzero but subdivision lost it (seam effects):
        // fall through to direct refinement from the center.
    }
    let (xi, iters) = newton_refine(f, region.center(), opts)?;
    if !region.contains(xi) && (xi - region.center()).norm() > region.diameter() {
        return Err(RayleighError::NonConvergence {
            iters: iters as usize,
            ratio: (xi - region.center()).norm(),
        });
    }
    let residual = f(xi)?.norm();
    let mult = winding_count(
        f,
        &circle_vertices(xi, 1e-4 * xi.norm().max(1.0), 16),
        opts.contour_floor,
    )
    .unwrap_or(count)
    .max(1) as u32;
    Ok(vec![ZeroCandidate {
        xi,
        multiplicity: mult,
        residual,
        refine_iters: iters,
    }])
}

fn dedup_candidates(mut cands: Vec<ZeroCandidate>, radius: f64) -> Vec<ZeroCandidate> {
    cands.sort_by(|a, b| {
        (a.xi.norm(), a.xi.arg())
            .partial_cmp(&(b.xi.norm(), b.xi.arg()))
            .unwrap()
    });
    let mut out: Vec<ZeroCandidate> = Vec::new();
    for c in cands {
        if out
            .iter()
            .all(|o| (o.xi - c.xi).norm() > radius * c.xi.norm().max(1.0))
        {
            out.push(c);
        }
    }
    out
}

/// Radius of the excised disks around the branch points.
pub fn branch_excision_radius(profile: &MediumProfile) -> f64 {
    1e-3 * profile.omega / profile.mu0.sqrt()
}

/// Rayleigh determinant on a fixed sheet as a function of the base value,
/// assembled from the entire determinant set.
pub fn delta_on_sheet(
    profile: &MediumProfile,
    sheet: SheetLabel,
    tol: f64,
) -> impl Fn(C64) -> Result<C64> + Sync + '_ {
    move |xi: C64| {
        let pt = SheetPoint::new(xi, sheet);
        let q = quasimomenta(profile, &pt)?;
        let (_, dets) = entire_octet_and_determinants(profile, xi, tol)?;
        Ok(dets.delta(&q))
    }
}

/// `[lo, hi]` minus the open interval `(cut_lo, cut_hi)`.
fn interval_minus(lo: f64, hi: f64, cut_lo: f64, cut_hi: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if lo < cut_lo {
        out.push((lo, hi.min(cut_lo)));
    }
    if hi > cut_hi {
        out.push((lo.max(cut_hi), hi));
    }
    out.retain(|(a, b)| b - a > 0.0);
    out
}

/// Splits a requested region into sub-rectangles clear of the cuts. Delta is
/// discontinuous across the imaginary axis and across the real segment
/// |Re xi| <= omega/sqrt(mu0), so contours crossing either cannot carry a
/// winding number; a margin equal to the branch excision radius is removed.
fn cut_split(profile: &MediumProfile, region: &Region) -> Vec<Region> {
    let m = branch_excision_radius(profile);
    let band = profile.omega / profile.mu0.sqrt() + m;
    let mut out = Vec::new();
    for (rl, rh) in interval_minus(region.re.0, region.re.1, -m, m) {
        // portions of the re-interval overlapping the real cut band need the
        // im-interval split away from the real axis
        let overlap_lo = rl.max(-band);
        let overlap_hi = rh.min(band);
        let mut pieces: Vec<(f64, f64, bool)> = Vec::new();
        if overlap_lo < overlap_hi {
            pieces.push((overlap_lo, overlap_hi, true));
        }
        if rl < -band {
            pieces.push((rl, rh.min(-band), false));
        }
        if rh > band {
            pieces.push((rl.max(band), rh, false));
        }
        for (a, b, on_band) in pieces {
            if b - a <= 0.0 {
                continue;
            }
            if on_band {
                for (il, ih) in interval_minus(region.im.0, region.im.1, -m, m) {
                    out.push(Region::new(a, b, il, ih));
                }
            } else {
                out.push(Region::new(a, b, region.im.0, region.im.1));
            }
        }
    }
    out
}

/// Searches the requested regions sheet by sheet, producing a catalog.
pub fn resonance_search(
    profile: &MediumProfile,
    regions: &[(SheetLabel, Region)],
    opts: &SearchOptions,
) -> ResonanceCatalog {
    let excise = branch_excision_radius(profile);
    let bps = [
        profile.omega / profile.sigma0().sqrt(),
        profile.omega / profile.mu0.sqrt(),
    ];
    let jobs: Vec<(usize, SheetLabel, Region)> = regions
        .iter()
        .enumerate()
        .flat_map(|(k, (sheet, region))| {
            cut_split(profile, region)
                .into_iter()
                .map(move |sub| (k, *sheet, sub))
        })
        .collect();
    let results: Vec<(usize, std::result::Result<Vec<ZeroCandidate>, String>)> = jobs
        .par_iter()
        .map(|(k, sheet, region)| {
            let f = delta_on_sheet(profile, *sheet, opts.ode_tol);
            let r = locate_zeros(&f, region, opts).map_err(|e| format!("region {k}: {e}"));
            (*k, r)
        })
        .collect();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in results {
        let (sheet, _) = regions[k];
        match r {
            Ok(cands) => {
                for c in cands {
                    let near_bp = bps
                        .iter()
                        .any(|&b| (c.xi - b).norm() < excise || (c.xi + b).norm() < excise);
                    if near_bp {
                        failures.push(format!(
                            "region {k}: zero near branch point at {} left unresolved",
                            c.xi
                        ));
                        continue;
                    }
                    entries.push(CatalogEntry {
                        xi: [c.xi.re, c.xi.im],
                        sheet,
                        multiplicity: c.multiplicity,
                        residual: c.residual,
                        refine_iters: c.refine_iters,
                    });
                }
            }
            Err(msg) => failures.push(msg),
        }
    }
    entries.sort_by(|a, b| {
        let ka = (a.sheet.to_string(), a.xi[0].hypot(a.xi[1]), a.xi[1].atan2(a.xi[0]));
        let kb = (b.sheet.to_string(), b.xi[0].hypot(b.xi[1]), b.xi[1].atan2(b.xi[0]));
        ka.partial_cmp(&kb).unwrap()
    });
    entries.dedup_by(|a, b| {
        a.sheet == b.sheet
            && (a.xi[0] - b.xi[0]).hypot(a.xi[1] - b.xi[1])
                <= 1e-8 * a.xi[0].hypot(a.xi[1]).max(1.0)
    });
    ResonanceCatalog {
        schema_version: 1,
        profile_hash: profile.profile_hash.clone(),
        omega: profile.omega,
        h: profile.h,
        entries,
        search_regions: regions.to_vec(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        failures,
    }
}

/// The entire product evaluated on the rotated variable: F(-i z).
pub fn f_rotated(profile: &MediumProfile, tol: f64) -> impl Fn(C64) -> Result<C64> + Sync + '_ {
    use crate::boundary::squared_quasimomenta;
    move |z: C64| {
        let xi = -Complex64::i() * z;
        let (_, dets) = entire_octet_and_determinants(profile, xi, tol)?;
        let (qp2, qs2) = squared_quasimomenta(profile, xi);
        Ok(dets.f_product(qp2, qs2))
    }
}

fn counted_circle<F>(f: &F, r: f64, floor: f64) -> Result<i64>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let mut radius = r;
    for attempt in 0..5 {
        let n = (64.0 + 8.0 * radius) as usize;
        match winding_count(f, &circle_vertices(Complex64::new(0.0, 0.0), radius, n), floor) {
            Err(RayleighError::ContourNearZero { .. }) if attempt < 4 => {
                radius *= 1.005;
            }
            other => return other,
        }
    }
    unreachable!()
}

/// The entire product evaluated at xi = -i z through the transformed
/// problem: each sheet determinant comes from the exponent-stripped
/// Volterra solutions, which stay oscillatory whenever |Re xi| is
/// moderate. This keeps the product accurate for arbitrarily large
/// |Im xi|, where the basis propagation drowns in evanescent dynamic
/// range and loses every digit to cancellation.
fn bridge_f_rotated<'a>(
    profile: &'a MediumProfile,
    cache: &'a SchroedingerCache,
    tol: f64,
) -> impl Fn(C64) -> Result<C64> + Sync + 'a {
    move |z: C64| {
        let xi = -Complex64::i() * z;
        let mut f = Complex64::new(1.0, 0.0);
        for sheet in SheetLabel::ALL {
            let pt = SheetPoint::new(xi, sheet);
            let (_, b) = jost_function_and_bridge(profile, cache, &pt, tol)?;
            f *= b.det();
        }
        Ok(f)
    }
}

/// Height of the horizontal strip containing every zero of F(-i .) of
/// modulus <= r: apart from finitely many in a bounded set, the zeros obey
/// |Im z| <= A + (7/(4H)) log |Re z|, so a generous constant plus the
/// logarithmic term suffices.
fn strip_height(profile: &MediumProfile, r: f64) -> f64 {
    4.0 + 7.0 / (4.0 * profile.h) * (1.0 + r).ln()
}

/// Counterclockwise polygon around the intersection of the disk |z| <= r
/// with the strip |Im z| <= y, sampled at roughly `spacing`.
fn strip_vertices(r: f64, y: f64, spacing: f64) -> Vec<C64> {
    let x = (r * r - y * y).sqrt();
    let phi = (y / r).asin();
    let mut verts = Vec::new();
    let chord = |a: C64, b: C64, verts: &mut Vec<C64>| {
        let n = ((b - a).norm() / spacing).ceil().max(1.0) as usize;
        for k in 0..n {
            verts.push(a + (b - a) * (k as f64 / n as f64));
        }
    };
    let arc = |t0: f64, t1: f64, verts: &mut Vec<C64>| {
        let n = ((t1 - t0).abs() * r / spacing).ceil().max(1.0) as usize;
        for k in 0..n {
            let t = t0 + (t1 - t0) * k as f64 / n as f64;
            verts.push(r * Complex64::new(t.cos(), t.sin()));
        }
    };
    chord(Complex64::new(-x, -y), Complex64::new(x, -y), &mut verts);
    arc(-phi, phi, &mut verts);
    chord(Complex64::new(x, y), Complex64::new(-x, y), &mut verts);
    arc(
        std::f64::consts::PI - phi,
        std::f64::consts::PI + phi,
        &mut verts,
    );
    verts
}

/// Panel count resolving the oscillatory moment modes, whose rates reach
/// about twice the largest contour radius, over the slab width.
fn counting_panels(profile: &MediumProfile, r_max: f64) -> usize {
    (profile.h * r_max).ceil().max(16.0) as usize
}

/// Vertex spacing resolving the phase of a type-8H function: the argument
/// advances at up to 8H per unit length, so stay safely under a quarter
/// turn per segment.
fn counting_spacing(profile: &MediumProfile) -> f64 {
    // The mandatory first split in `segment_phase` halves this, so accepted
    // segments sample at pi/(24 H), below the pi/(16 H) phase-rate limit.
    (std::f64::consts::PI / (12.0 * profile.h.max(0.25))).min(0.7)
}

/// Zeros of F(-i .) in the disk of radius `r`, counted on the strip
/// contour; the full circle is used when the strip does not truncate it.
fn counted_strip(
    profile: &MediumProfile,
    cache: &SchroedingerCache,
    r: f64,
    tol: f64,
    floor: f64,
) -> Result<i64> {
    let f = bridge_f_rotated(profile, cache, tol);
    let spacing = counting_spacing(profile);
    let mut radius = r;
    for attempt in 0..5 {
        let y = strip_height(profile, radius);
        let verts = if y >= 0.9 * radius {
            circle_vertices(
                Complex64::new(0.0, 0.0),
                radius,
                (2.0 * std::f64::consts::PI * radius / spacing).ceil().max(16.0) as usize,
            )
        } else {
            strip_vertices(radius, y, spacing)
        };
        match winding_count(&f, &verts, floor) {
            Err(RayleighError::ContourNearZero { .. }) if attempt < 4 => {
                radius *= 1.005;
            }
            other => return other,
        }
    }
    unreachable!()
}

/// Counting function N(r, F(-i .)) on the supplied radii with a slope fit
/// over the largest half.
pub fn counting_function(
    profile: &MediumProfile,
    radii: &[f64],
    tol: f64,
) -> Result<CountingTable> {
    let counts: Vec<i64> = if profile.h == 0.0 {
        let f = f_rotated(profile, tol);
        radii
            .par_iter()
            .map(|&r| counted_circle(&f, r, 1e-13))
            .collect::<Result<Vec<_>>>()?
    } else {
        let r_max = radii.iter().fold(0.0f64, |m, &r| m.max(r));
        let cache = schroedinger_cache_sized(profile, counting_panels(profile, r_max), tol)?;
        radii
            .iter()
            .map(|&r| counted_strip(profile, &cache, r, tol.max(1e-6), 1e-13))
            .collect::<Result<Vec<_>>>()?
    };
    let half = radii.len() / 2;
    let pts: Vec<(f64, f64)> = radii[half..]
        .iter()
        .zip(&counts[half..])
        .map(|(&r, &n)| (r, n as f64))
        .collect();
    let slope_fit = crate::greens::fit_slope(&pts);
    Ok(CountingTable {
        radii: radii.to_vec(),
        counts,
        slope_fit,
        reference_slope: 16.0 * profile.h / std::f64::consts::PI,
    })
}

/// Zero counts of F(-i .) in the upper and lower half-disks of radius `r`,
/// split by a diameter offset slightly into the upper half plane so the
/// two counts sum exactly to the full-disk count.
pub fn counting_split(profile: &MediumProfile, r: f64, tol: f64) -> Result<(i64, i64)> {
    if profile.h == 0.0 {
        let f = f_rotated(profile, tol);
        let total = counted_circle(&f, r, 1e-13)?;
        let delta = 1e-3 * r;
        // Upper contour: offset diameter plus the upper arc.
        let n = (48.0 + 6.0 * r) as usize;
        let mut verts = Vec::new();
        let m = n / 2;
        for k in 0..=m {
            let t = -r + 2.0 * r * k as f64 / m as f64;
            verts.push(Complex64::new(t, delta));
        }
        let phi0 = (delta / r).asin();
        for k in 1..m {
            let t = phi0 + (std::f64::consts::PI - 2.0 * phi0) * k as f64 / m as f64;
            verts.push(r * Complex64::new(t.cos(), t.sin()));
        }
        let n_plus = winding_count(&f, &verts, 1e-13)?;
        return Ok((n_plus, total - n_plus));
    }
    let cache = schroedinger_cache_sized(profile, counting_panels(profile, r), tol)?;
    let total = counted_strip(profile, &cache, r, tol.max(1e-6), 1e-13)?;
    let f = bridge_f_rotated(profile, &cache, tol.max(1e-6));
    let spacing = counting_spacing(profile);
    // Upper contour: diameter chord offset slightly into the upper half
    // plane, capped by the strip when it truncates the disk, so that the
    // two counts sum exactly to the full count.
    let delta = 1e-3 * r;
    let full = strip_height(profile, r) >= 0.9 * r;
    let y = if full { r } else { strip_height(profile, r) };
    let x_top = (r * r - y * y).max(0.0).sqrt();
    let x_bot = (r * r - delta * delta).sqrt();
    let phi_top = if full {
        std::f64::consts::FRAC_PI_2
    } else {
        (y / r).asin()
    };
    let phi_bot = (delta / r).asin();
    let mut verts = Vec::new();
    let chord = |a: C64, b: C64, verts: &mut Vec<C64>| {
        let n = ((b - a).norm() / spacing).ceil().max(1.0) as usize;
        for k in 0..n {
            verts.push(a + (b - a) * (k as f64 / n as f64));
        }
    };
    let arc = |t0: f64, t1: f64, verts: &mut Vec<C64>| {
        let n = ((t1 - t0).abs() * r / spacing).ceil().max(1.0) as usize;
        for k in 0..n {
            let t = t0 + (t1 - t0) * k as f64 / n as f64;
            verts.push(r * Complex64::new(t.cos(), t.sin()));
        }
    };
    chord(
        Complex64::new(-x_bot, delta),
        Complex64::new(x_bot, delta),
        &mut verts,
    );
    arc(phi_bot, phi_top, &mut verts);
    chord(
        Complex64::new(x_top, y),
        Complex64::new(-x_top, y),
        &mut verts,
    );
    arc(
        std::f64::consts::PI - phi_top,
        std::f64::consts::PI - phi_bot,
        &mut verts,
    );
    let n_plus = winding_count(&f, &verts, 1e-13)?;
    Ok((n_plus, total - n_plus))
}

/// Diagnostics of the resonance distribution: partial sums, fitted
/// forbidden-region constant, and sector concentration.
#[derive(Debug, Clone, Serialize)]
pub struct DistributionReport {
    pub schema_version: u32,
    /// Partial sums of |Im xi_n| / |xi_n|^2 over entries ordered by |xi_n|.
    pub partial_sums: Vec<f64>,
    /// Fitted nonnegative A in Re xi = -A - (7/(4H)) log |Im xi|.
    pub forbidden_a: f64,
    /// Entries with Re xi < 0, |Im xi| >= 5 violating the fitted curve.
    pub forbidden_violations: Vec<[f64; 2]>,
    /// (radius, fraction of entries outside the delta-sectors about R).
    pub sector_fractions: Vec<(f64, f64)>,
    pub consistent: bool,
}

pub fn distribution_diagnostics(
    catalog: &ResonanceCatalog,
    profile: &MediumProfile,
) -> DistributionReport {
    let mut by_norm: Vec<(f64, f64, f64)> = catalog
        .entries
        .iter()
        .map(|e| (e.xi[0].hypot(e.xi[1]), e.xi[0], e.xi[1]))
        .collect();
    by_norm.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = by_norm
        .iter()
        .map(|&(n, _, im)| {
            acc += im.abs() / (n * n).max(1e-300);
            acc
        })
        .collect();

    let coef = 7.0 / (4.0 * profile.h.max(1e-300));
    let qualifying: Vec<&(f64, f64, f64)> = by_norm
        .iter()
        .filter(|&&(_, re, im)| re < 0.0 && im.abs() >= 5.0)
        .collect();
    let forbidden_a = qualifying
        .iter()
        .map(|&&(_, re, im)| -re - coef * im.abs().ln())
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let forbidden_a = if forbidden_a.is_finite() { forbidden_a } else { 0.0 };
    let forbidden_violations: Vec<[f64; 2]> = qualifying
        .iter()
        .filter(|&&&(_, re, im)| re > -forbidden_a - coef * im.abs().ln() + 1e-9)
        .map(|&&(_, re, im)| [re, im])
        .collect();

    let delta_sector = 0.2;
    let mut sector_fractions = Vec::new();
    for frac in [0.25, 0.5, 0.75, 1.0] {
        let rmax = by_norm.last().map(|e| e.0).unwrap_or(0.0) * frac;
        let within: Vec<&(f64, f64, f64)> =
            by_norm.iter().filter(|e| e.0 <= rmax && e.0 > 0.0).collect();
        if within.is_empty() {
            continue;
        }
        let outside = within
            .iter()
            .filter(|&&&(_, re, im)| {
                let ang = im.atan2(re).abs();
                ang.min((std::f64::consts::PI - ang).abs()) > delta_sector
            })
            .count();
        sector_fractions.push((rmax, outside as f64 / within.len() as f64));
    }
    let consistent = partial_sums.windows(2).all(|w| w[1] >= w[0])
        && forbidden_violations.is_empty();
    DistributionReport {
        schema_version: 1,
        partial_sums,
        forbidden_a,
        forbidden_violations,
        sector_fractions,
        consistent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(h: f64, slab: &str) -> MediumProfile {
        MediumProfile::load_profile(&format!(
            "[medium]\nomega = 1.0\nH = {h}\nlambda0 = 1.0\nmu0 = 1.0\n\n[slab]\n{slab}\n"
        ))
        .unwrap()
    }

    fn bump() -> MediumProfile {
        profile(1.0, "kind = \"bump\"\namplitudes = [0.05, 0.1]")
    }

    fn rayleigh_root_oracle() -> f64 {
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
        0.5 * (lo + hi)
    }

    #[test]
    fn winding_analytic_test_functions() {
        let a = Complex64::new(0.3, -0.2);
        let square = |z: C64| -> Result<C64> { Ok((z - a) * (z - a)) };
        let circle = circle_vertices(a, 0.7, 8);
        assert_eq!(winding_count(&square, &circle, 1e-13).unwrap(), 2);
        let offset = circle_vertices(a + Complex64::new(2.0, 0.0), 0.7, 8);
        assert_eq!(winding_count(&square, &offset, 1e-13).unwrap(), 0);
    }

    #[test]
    fn winding_rejects_contour_through_zero() {
        let a = Complex64::new(0.5, 0.0);
        let lin = |z: C64| -> Result<C64> { Ok(z - a) };
        // Square contour whose edge passes through the zero.
        let verts = [
            Complex64::new(0.5, -1.0),
            Complex64::new(1.5, -1.0),
            Complex64::new(1.5, 1.0),
            Complex64::new(0.5, 1.0),
        ];
        assert!(matches!(
            winding_count(&lin, &verts, 1e-6),
            Err(RayleighError::ContourNearZero { .. })
        ));
    }

    #[test]
    fn locate_rayleigh_root_homogeneous() {
        let p = profile(0.0, "kind = \"constant\"");
        let f = delta_on_sheet(&p, SheetLabel::PP, 1e-11);
        let region = Region::new(1.001, 3.0f64.sqrt(), -0.1, 0.1);
        let zeros = locate_zeros(&f, &region, &SearchOptions::default()).unwrap();
        assert_eq!(zeros.len(), 1);
        let z = &zeros[0];
        assert_eq!(z.multiplicity, 1);
        assert!((z.xi - Complex64::new(rayleigh_root_oracle(), 0.0)).norm() < 1e-8);
        assert!(z.residual < 1e-10);
    }

    #[test]
    fn search_region_straddling_real_cut() {
        // the requested box overlaps the real cut segment below Re xi = 1;
        // the search must clip away the cut band and still find the root
        let p = profile(0.0, "kind = \"constant\"");
        let regions = vec![(SheetLabel::PP, Region::new(0.9, 1.3, -0.05, 0.05))];
        let cat = resonance_search(&p, &regions, &SearchOptions::default());
        assert!(cat.failures.is_empty(), "{:?}", cat.failures);
        assert_eq!(cat.entries.len(), 1);
        let e = &cat.entries[0];
        assert!((e.xi[0] - rayleigh_root_oracle()).abs() < 1e-8);
        assert!(e.xi[1].abs() < 1e-8);
    }

    #[test]
    fn empty_region_is_empty() {
        let p = profile(0.0, "kind = \"constant\"");
        let f = delta_on_sheet(&p, SheetLabel::PP, 1e-11);
        let region = Region::new(2.0, 2.5, 0.3, 0.8);
        assert!(locate_zeros(&f, &region, &SearchOptions::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn catalog_constant_slab_matches_half_space() {
        let regions = vec![(SheetLabel::PP, Region::new(1.001, 1.7, -0.1, 0.1))];
        let p0 = profile(0.0, "kind = \"constant\"");
        let p1 = profile(1.0, "kind = \"constant\"");
        let c0 = resonance_search(&p0, &regions, &SearchOptions::default());
        let c1 = resonance_search(&p1, &regions, &SearchOptions::default());
        assert!(c0.failures.is_empty() && c1.failures.is_empty());
        assert_eq!(c0.entries.len(), 1);
        assert_eq!(c1.entries.len(), 1);
        let d = (c0.entries[0].xi[0] - c1.entries[0].xi[0]).abs();
        assert!(d < 1e-7, "root moved by {d}");
    }

    #[test]
    fn counting_is_nondecreasing_and_split_balances() {
        let p = bump();
        let radii = [4.0, 6.0, 8.0];
        let table = counting_function(&p, &radii, 1e-10).unwrap();
        assert!(table.counts.windows(2).all(|w| w[1] >= w[0]));
        let (np, nm) = counting_split(&p, 8.0, 1e-10).unwrap();
        assert_eq!(np + nm, *table.counts.last().unwrap());
    }

    #[test]
    fn distribution_report_consistent() {
        let entries = vec![
            CatalogEntry {
                xi: [-4.5, 6.0],
                sheet: SheetLabel::MM,
                multiplicity: 1,
                residual: 1e-12,
                refine_iters: 5,
            },
            CatalogEntry {
                xi: [-5.0, -8.0],
                sheet: SheetLabel::MM,
                multiplicity: 1,
                residual: 1e-12,
                refine_iters: 5,
            },
            CatalogEntry {
                xi: [3.0, 0.5],
                sheet: SheetLabel::PM,
                multiplicity: 1,
                residual: 1e-12,
                refine_iters: 4,
            },
        ];
        let p = bump();
        let catalog = ResonanceCatalog {
            schema_version: 1,
            profile_hash: p.profile_hash.clone(),
            omega: 1.0,
            h: 1.0,
            entries,
            search_regions: vec![],
            tool_version: "test".into(),
            failures: vec![],
        };
        let rep = distribution_diagnostics(&catalog, &p);
        assert!(rep.consistent, "{rep:?}");
        assert!(rep.forbidden_a >= 0.0);
        assert_eq!(rep.partial_sums.len(), 3);
    }
}
