//! Command-line driver for the `rayleigh` library: profile validation,
//! Rayleigh-determinant maps, resonance catalogs, identity suites,
//! reflection and Green's-kernel grids, argument-principle counting, and the
//! dual-path (direct vs Schrödinger-form) cross-check.
//!
//! Exit codes: 0 on success, 1 on runtime failure or threshold violation
//! (a machine-readable JSON error object is printed to stderr), 2 on usage
//! errors. Floating-point values in JSON and CSV outputs are written with a
//! fixed 17-significant-digit scientific format so that identical inputs
//! produce byte-identical artifacts.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use rayleigh::boundary::{
    boundary_identity_suite, boundary_matrix_and_delta, entire_octet_and_determinants,
    IdentityReport,
};
use rayleigh::greens::{greens_diagnostics, greens_kernel};
use rayleigh::markushevich::{jost_function_and_bridge, schroedinger_cache};
use rayleigh::medium::{MediumProfile, ValidationReport};
use rayleigh::resonance::{counting_function, resonance_search, Region, SearchOptions};
use rayleigh::riemann::{quasimomenta, SheetLabel, SheetPoint};
use rayleigh::scattering::{flux_normalize, interior_grid, reflection_matrix, scattering_identity_suite};
use rayleigh::RayleighError;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "rayleigh",
    version,
    about = "Wavenumber resonances of the Rayleigh system on a layered half space",
    after_help = "Exit codes: 0 success, 1 runtime failure or threshold violation \
                  (JSON error on stderr), 2 usage error.\n\
                  RAYLEIGH_WORKERS overrides the worker-thread count."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML profile config.
    #[arg(long)]
    config: PathBuf,
    /// ODE/quadrature tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_sheet(s: &str) -> Result<SheetSel, String> {
    if s == "all" {
        return Ok(SheetSel::All);
    }
    SheetLabel::from_str(s)
        .map(SheetSel::One)
        .map_err(|_| format!("expected ++, +-, -+, -- or all, got `{s}`"))
}

fn parse_single_sheet(s: &str) -> Result<SheetLabel, String> {
    SheetLabel::from_str(s).map_err(|_| format!("expected ++, +-, -+ or --, got `{s}`"))
}

#[derive(Clone, Copy, Debug)]
enum SheetSel {
    One(SheetLabel),
    All,
}

impl SheetSel {
    fn list(self) -> Vec<SheetLabel> {
        match self {
            SheetSel::One(s) => vec![s],
            SheetSel::All => SheetLabel::ALL.to_vec(),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Check ellipticity and tail matching of a profile.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Depth samples for the ellipticity scan.
        #[arg(long, default_value_t = 512)]
        samples: usize,
    },
    /// CSV grid of the Rayleigh determinant over a rectangle of base values.
    DetMap {
        #[command(flatten)]
        common: Common,
        /// Sheet label (++, +-, -+, --) or `all`.
        #[arg(long, value_parser = parse_sheet)]
        sheet: SheetSel,
        /// Rectangle: re-min re-max im-min im-max.
        #[arg(long, num_args = 4, allow_hyphen_values = true, default_values_t = [-2.5, 2.5, -1.5, 1.5])]
        window: Vec<f64>,
        /// Grid resolution along Re xi.
        #[arg(long, default_value_t = 81)]
        nre: usize,
        /// Grid resolution along Im xi.
        #[arg(long, default_value_t = 61)]
        nim: usize,
    },
    /// Locate wavenumber resonances and write the catalog JSON.
    Resonances {
        #[command(flatten)]
        common: Common,
        /// Sheet label or `all`.
        #[arg(long, value_parser = parse_sheet, default_value = "all")]
        sheet: SheetSel,
        /// Search rectangle: re-min re-max im-min im-max.
        #[arg(long, num_args = 4, allow_hyphen_values = true, required = true)]
        region: Vec<f64>,
    },
    /// Boundary-matrix identity suite (conjugation, products, cross-sheet).
    Identities {
        #[command(flatten)]
        common: Common,
        /// Sample points per sheet.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Maximal accepted relative defect.
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
    },
    /// Reflection-matrix unitarity suite, with an optional grid export.
    Scattering {
        #[command(flatten)]
        common: Common,
        /// Samples per cut/band interval.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Maximal accepted relative defect.
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
        /// Optional CSV grid of the flux-normalized reflection matrix.
        #[arg(long)]
        grid_output: Option<PathBuf>,
        /// Sheet for the grid export.
        #[arg(long, value_parser = parse_single_sheet, default_value = "++")]
        sheet: SheetLabel,
        /// Grid rectangle: re-min re-max im-min im-max.
        #[arg(long, num_args = 4, allow_hyphen_values = true, default_values_t = [-2.0, 2.0, 0.05, 1.0])]
        window: Vec<f64>,
        /// Grid resolution along Re xi.
        #[arg(long, default_value_t = 41)]
        nre: usize,
        /// Grid resolution along Im xi.
        #[arg(long, default_value_t = 21)]
        nim: usize,
    },
    /// Green's kernel grid (CSV) and its diagnostics (JSON).
    Greens {
        #[command(flatten)]
        common: Common,
        /// Sheet carrying the evaluation point.
        #[arg(long, value_parser = parse_single_sheet, default_value = "++")]
        sheet: SheetLabel,
        /// Base value: re im.
        #[arg(long, num_args = 2, allow_hyphen_values = true, required = true)]
        xi: Vec<f64>,
        /// Depth window: z-min z-max (both negative).
        #[arg(long, num_args = 2, allow_hyphen_values = true)]
        depths: Option<Vec<f64>>,
        /// Depth samples per axis.
        #[arg(long, default_value_t = 6)]
        nz: usize,
        /// Known resonance for the pole-exponent fit: re im.
        #[arg(long, num_args = 2, allow_hyphen_values = true)]
        resonance: Option<Vec<f64>>,
        /// Diagnostics JSON file (stderr summary always printed).
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Argument-principle counting N(r, F) on growing circles.
    Counting {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4.0)]
        r_min: f64,
        #[arg(long, default_value_t = 10.0)]
        r_max: f64,
        /// Number of radii.
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// Dual-path boundary matrix: direct propagation vs Schrödinger form.
    CrossCheck {
        #[command(flatten)]
        common: Common,
        /// Sample points per sheet.
        #[arg(long, default_value_t = 12)]
        samples: usize,
        /// Maximal accepted relative defect.
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
    },
}

// ---------------------------------------------------------------------------
// deterministic serialization

struct Sci17;

impl serde_json::ser::Formatter for Sci17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.write_f64(writer, value as f64)
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sci17);
    value
        .serialize(&mut ser)
        .expect("in-memory serialization cannot fail");
    String::from_utf8(buf).expect("serialized JSON is UTF-8")
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------------------
// failure plumbing

struct Failure {
    kind: &'static str,
    message: String,
}

type CliResult<T> = Result<T, Failure>;

fn lib_err(e: RayleighError) -> Failure {
    let kind = match &e {
        RayleighError::Parse(_) => "parse",
        RayleighError::Domain(_) => "domain",
        RayleighError::BranchPoint { .. } => "branch-point",
        RayleighError::StepSizeUnderflow { .. } => "step-underflow",
        RayleighError::NonFiniteState { .. } => "non-finite-state",
        RayleighError::NearResonance { .. } => "near-resonance",
        RayleighError::RouteMismatch(_) => "route-mismatch",
        RayleighError::ContourNearZero { .. } => "contour-near-zero",
        RayleighError::NonConvergence { .. } => "non-convergence",
        RayleighError::SingularPrefactor(_) => "singular-prefactor",
        RayleighError::Io(_) => "io",
    };
    Failure {
        kind,
        message: e.to_string(),
    }
}

fn io_err(e: std::io::Error) -> Failure {
    Failure {
        kind: "io",
        message: e.to_string(),
    }
}

#[derive(Serialize)]
struct ErrorEnvelope<'a> {
    schema_version: u32,
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: &'a str,
}

fn emit_failure(f: &Failure) {
    eprintln!(
        "{}",
        to_json(&ErrorEnvelope {
            schema_version: SCHEMA_VERSION,
            error: ErrorBody {
                kind: f.kind,
                message: &f.message,
            },
        })
    );
}

// ---------------------------------------------------------------------------
// shared helpers

fn init_workers() -> CliResult<()> {
    match std::env::var("RAYLEIGH_WORKERS") {
        Err(_) => Ok(()),
        Ok(v) => {
            let n: usize = v.parse().map_err(|_| Failure {
                kind: "env",
                message: format!("RAYLEIGH_WORKERS must be a positive integer, got `{v}`"),
            })?;
            if n == 0 {
                return Err(Failure {
                    kind: "env",
                    message: "RAYLEIGH_WORKERS must be positive".into(),
                });
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure {
                    kind: "env",
                    message: format!("worker pool: {e}"),
                })
        }
    }
}

fn load_profile(path: &PathBuf) -> CliResult<MediumProfile> {
    let text = std::fs::read_to_string(path).map_err(io_err)?;
    MediumProfile::load_profile(&text).map_err(lib_err)
}

fn write_artifact(path: &Option<PathBuf>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(io_err),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Deterministic low-discrepancy samples per sheet inside the standard
/// identity window, clear of the cuts and branch points.
fn sheet_samples(n: usize) -> Vec<SheetPoint> {
    let frac = |x: f64| x - x.floor();
    let mut out = Vec::with_capacity(4 * n);
    for sheet in SheetLabel::ALL {
        for k in 0..n {
            let t = k as f64 + 1.0;
            let re = -2.2 + 4.4 * frac(t * 0.618_033_988_749_894_9);
            let im = 0.15 + 1.55 * frac(t * 0.754_877_666_246_692_9);
            out.push(SheetPoint::new(Complex64::new(re, im), sheet));
        }
    }
    out
}

fn window4(w: &[f64]) -> (f64, f64, f64, f64) {
    (w[0], w[1], w[2], w[3])
}

#[derive(Serialize)]
struct DefectReport<'a> {
    schema_version: u32,
    profile_hash: &'a str,
    omega: f64,
    #[serde(rename = "H")]
    h: f64,
    threshold: f64,
    max_defect: f64,
    pass: bool,
    entries: &'a IdentityReport,
}

fn threshold_failure(max_defect: f64, threshold: f64) -> Failure {
    Failure {
        kind: "threshold-exceeded",
        message: format!("max relative defect {max_defect:.3e} exceeds threshold {threshold:.3e}"),
    }
}

// ---------------------------------------------------------------------------
// subcommands

fn run_validate(common: &Common, samples: usize) -> CliResult<()> {
    let p = load_profile(&common.config)?;
    let report = p.validate_profile(samples);
    #[derive(Serialize)]
    struct Out<'a> {
        schema_version: u32,
        profile_hash: &'a str,
        omega: f64,
        #[serde(rename = "H")]
        h: f64,
        report: &'a ValidationReport,
    }
    let pass = report.pass;
    eprintln!(
        "validate: {} (min mu = {:.6}, min ellipticity = {:.6} at Z = {:.4})",
        if pass { "pass" } else { "FAIL" },
        report.min_mu,
        report.min_ellipticity,
        report.worst_z
    );
    write_artifact(
        &common.output,
        &to_json(&Out {
            schema_version: SCHEMA_VERSION,
            profile_hash: &p.profile_hash,
            omega: p.omega,
            h: p.h,
            report: &report,
        }),
    )?;
    if pass {
        Ok(())
    } else {
        Err(Failure {
            kind: "validation-failed",
            message: report.violations.join("; "),
        })
    }
}

fn run_det_map(
    common: &Common,
    sheet: SheetSel,
    window: &[f64],
    nre: usize,
    nim: usize,
) -> CliResult<()> {
    let p = load_profile(&common.config)?;
    let (re_lo, re_hi, im_lo, im_hi) = window4(window);
    let sheets = sheet.list();
    let res = linspace(re_lo, re_hi, nre);
    let ims = linspace(im_lo, im_hi, nim);
    let pts: Vec<(f64, f64)> = res
        .iter()
        .flat_map(|&re| ims.iter().map(move |&im| (re, im)))
        .collect();
    let rows: Vec<Option<String>> = pts
        .par_iter()
        .map(|&(re, im)| {
            let xi = Complex64::new(re, im);
            let dets = match entire_octet_and_determinants(&p, xi, common.tol) {
                Ok((_, d)) => d,
                Err(_) => return None, // branch point or cut-straddling failure
            };
            let mut s = String::new();
            for &sh in &sheets {
                let q = match quasimomenta(&p, &SheetPoint::new(xi, sh)) {
                    Ok(q) => q,
                    Err(_) => return None,
                };
                let d = dets.delta(&q);
                let _ = writeln!(
                    s,
                    "{},{},{sh},{},{},{}",
                    sci(re),
                    sci(im),
                    sci(d.re),
                    sci(d.im),
                    sci(d.norm())
                );
            }
            Some(s)
        })
        .collect();
    let skipped = rows.iter().filter(|r| r.is_none()).count();
    let mut csv = String::from("re_xi,im_xi,sheet,re_delta,im_delta,abs_delta\n");
    for r in rows.into_iter().flatten() {
        csv.push_str(&r);
    }
    if skipped > 0 {
        eprintln!("det-map: skipped {skipped} grid points at branch points/cuts");
    }
    write_artifact(&common.output, &csv)
}

fn run_resonances(common: &Common, sheet: SheetSel, region: &[f64]) -> CliResult<()> {
    let p = load_profile(&common.config)?;
    let (re_lo, re_hi, im_lo, im_hi) = window4(region);
    if re_lo >= re_hi || im_lo >= im_hi {
        return Err(Failure {
            kind: "domain",
            message: format!("empty search region [{re_lo}, {re_hi}] x [{im_lo}, {im_hi}]"),
        });
    }
    let regions: Vec<(SheetLabel, Region)> = sheet
        .list()
        .into_iter()
        .map(|s| (s, Region::new(re_lo, re_hi, im_lo, im_hi)))
        .collect();
    let opts = SearchOptions {
        ode_tol: common.tol.min(1e-10),
        ..SearchOptions::default()
    };
    let catalog = resonance_search(&p, &regions, &opts);
    let pass = catalog.failures.is_empty();
    eprintln!(
        "resonances: {} entries, {} region failures",
        catalog.entries.len(),
        catalog.failures.len()
    );
    write_artifact(&common.output, &to_json(&catalog))?;
    if pass {
        Ok(())
    } else {
        Err(Failure {
            kind: "search-incomplete",
            message: catalog.failures.join("; "),
        })
    }
}

fn run_identities(common: &Common, samples: usize, threshold: f64) -> CliResult<()> {
    let p = load_profile(&common.config)?;
    let pts = sheet_samples(samples);
    let report = boundary_identity_suite(&p, &pts, common.tol).map_err(lib_err)?;
    let max_defect = report.max_defect();
    write_artifact(
        &common.output,
        &to_json(&DefectReport {
            schema_version: SCHEMA_VERSION,
            profile_hash: &p.profile_hash,
            omega: p.omega,
            h: p.h,
            threshold,
            max_defect,
            pass: max_defect <= threshold,
            entries: &report,
        }),
    )?;
    if max_defect <= threshold {
        Ok(())
    } else {
        Err(threshold_failure(max_defect, threshold))
    }
}

#[allow(clippy::too_many_arguments)]
fn run_scattering(
    common: &Common,
    samples: usize,
    threshold: f64,
    grid_output: &Option<PathBuf>,
    sheet: SheetLabel,
    window: &[f64],
    nre: usize,
    nim: usize,
) -> CliResult<()> {
    let p = load_profile(&common.config)?;
    let bp_p = p.omega / p.sigma0().sqrt();
    let bp_s = p.omega / p.mu0.sqrt();
    let report = scattering_identity_suite(
        &p,
        &interior_grid(-bp_p, bp_p, samples, 0.04),
        &interior_grid(bp_p, bp_s, samples, 0.04),
        common.tol,
    )
    .map_err(lib_err)?;
    let max_defect = report.max_defect();
    write_artifact(
        &common.output,
        &to_json(&DefectReport {
            schema_version: SCHEMA_VERSION,
            profile_hash: &p.profile_hash,
            omega: p.omega,
            h: p.h,
            threshold,
            max_defect,
            pass: max_defect <= threshold,
            entries: &report,
        }),
    )?;
    if let Some(path) = grid_output {
        let (re_lo, re_hi, im_lo, im_hi) = window4(window);
        let pts: Vec<(f64, f64)> = linspace(re_lo, re_hi, nre)
            .into_iter()
            .flat_map(|re| linspace(im_lo, im_hi, nim).into_iter().map(move |im| (re, im)))
            .collect();
        let rows: Vec<Option<String>> = pts
            .par_iter()
            .map(|&(re, im)| {
                let pt = SheetPoint::new(Complex64::new(re, im), sheet);
                let r = match reflection_matrix(&p, &pt, common.tol) {
                    Ok(r) => r,
                    Err(_) => return None,
                };
                let delta = r.entries.det();
                let f = flux_normalize(&r).entries;
                let mut s = format!(
                    "{},{},{sheet},{},{},{}",
                    sci(re),
                    sci(im),
                    sci(delta.re),
                    sci(delta.im),
                    sci(delta.norm())
                );
                for row in 0..2 {
                    for col in 0..2 {
                        let e = f.0[row][col];
                        let _ = write!(s, ",{},{}", sci(e.re), sci(e.im));
                    }
                }
                s.push('\n');
                Some(s)
            })
            .collect();
        let mut csv = String::from(
            "re_xi,im_xi,sheet,re_delta,im_delta,abs_delta,\
             re_r11,im_r11,re_r12,im_r12,re_r21,im_r21,re_r22,im_r22\n",
        );
        let skipped = rows.iter().filter(|r| r.is_none()).count();
        for r in rows.into_iter().flatten() {
            csv.push_str(&r);
        }
        if skipped > 0 {
            eprintln!("scattering: skipped {skipped} grid points (cuts or zeros of Delta)");
        }
        std::fs::write(path, csv).map_err(io_err)?;
    }
    if max_defect <= threshold {
        Ok(())
    } else {
        Err(threshold_failure(max_defect, threshold))
    }
}

#[allow(clippy::too_many_arguments)]
fn run_greens(
    common: &Common,
    sheet: SheetLabel,
    xi: &[f64],
    depths: &Option<Vec<f64>>,
    nz: usize,
    resonance: &Option<Vec<f64>>,
    diagnostics: &Option<PathBuf>,
) -> CliResult<()> {
    let p = load_profile(&common.config)?;
    let pt = SheetPoint::new(Complex64::new(xi[0], xi[1]), sheet);
    let (z_lo, z_hi) = match depths {
        Some(d) => (d[0], d[1]),
        None => (-(p.h.max(1.0)) - 0.5, -0.05),
    };
    if z_lo >= 0.0 || z_hi >= 0.0 {
        return Err(Failure {
            kind: "domain",
            message: format!("depths must be negative, got ({z_lo}, {z_hi})"),
        });
    }
    let zs = linspace(z_lo, z_hi, nz);
    // the kernel has a derivative jump across Z = Z'; keep pairs off-diagonal
    let grid: Vec<(f64, f64)> = zs
        .iter()
        .flat_map(|&z| zs.iter().map(move |&zp| (z, zp)))
        .filter(|(z, zp)| (z - zp).abs() > 1e-9 * z.abs().max(1.0))
        .collect();
    let rows: Vec<String> = grid
        .par_iter()
        .map(|&(z, zp)| {
            let g = greens_kernel(&p, &pt, z, zp, common.tol).map_err(lib_err)?;
            let mut s = format!("{},{},{sheet}", sci(z), sci(zp));
            for row in 0..2 {
                for col in 0..2 {
                    let e = g.value.0[row][col];
                    let _ = write!(s, ",{},{}", sci(e.re), sci(e.im));
                }
            }
            s.push('\n');
            Ok(s)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut csv = String::from(
        "z,zprime,sheet,re_g11,im_g11,re_g12,im_g12,re_g21,im_g21,re_g22,im_g22\n",
    );
    for r in rows {
        csv.push_str(&r);
    }
    write_artifact(&common.output, &csv)?;
    let res = resonance.as_ref().map(|r| Complex64::new(r[0], r[1]));
    let diag = greens_diagnostics(&p, &pt, &grid, res, common.tol).map_err(lib_err)?;
    #[derive(Serialize)]
    struct Out<'a> {
        schema_version: u32,
        profile_hash: &'a str,
        omega: f64,
        #[serde(rename = "H")]
        h: f64,
        diagnostics: &'a rayleigh::greens::GreensDiagnostics,
    }
    let body = to_json(&Out {
        schema_version: SCHEMA_VERSION,
        profile_hash: &p.profile_hash,
        omega: p.omega,
        h: p.h,
        diagnostics: &diag,
    });
    eprintln!(
        "greens: pde residual {:.3e}, jump defect {:.3e}",
        diag.pde_residual, diag.jump_defect
    );
    match diagnostics {
        Some(path) => std::fs::write(path, body).map_err(io_err),
        None => Ok(()),
    }
}

fn run_counting(common: &Common, r_min: f64, r_max: f64, n: usize) -> CliResult<()> {
    let p = load_profile(&common.config)?;
    if r_min <= 0.0 || r_min >= r_max {
        return Err(Failure {
            kind: "domain",
            message: format!("need 0 < r-min < r-max, got [{r_min}, {r_max}]"),
        });
    }
    let radii = linspace(r_min, r_max, n.max(2));
    let table = counting_function(&p, &radii, common.tol).map_err(lib_err)?;
    let mut csv = String::from("r,N,slope_fit\n");
    for (r, c) in table.radii.iter().zip(&table.counts) {
        let _ = writeln!(csv, "{},{c},{}", sci(*r), sci(table.slope_fit));
    }
    eprintln!(
        "counting: fitted slope {:.6} (reference 16H/pi = {:.6})",
        table.slope_fit, table.reference_slope
    );
    write_artifact(&common.output, &csv)
}

fn run_cross_check(common: &Common, samples: usize, threshold: f64) -> CliResult<()> {
    let p = load_profile(&common.config)?;
    let cache = schroedinger_cache(&p, common.tol.min(1e-11)).map_err(lib_err)?;
    let pts = sheet_samples(samples);
    #[derive(Serialize)]
    struct Entry {
        xi: [f64; 2],
        sheet: SheetLabel,
        defect: f64,
    }
    let entries: Vec<Entry> = pts
        .par_iter()
        .map(|pt| {
            let (direct, _) = boundary_matrix_and_delta(&p, pt, common.tol).map_err(lib_err)?;
            let (_, bridge) =
                jost_function_and_bridge(&p, &cache, pt, common.tol).map_err(lib_err)?;
            let scale = direct.entries.norm_max().max(1e-30);
            let defect = (bridge - direct.entries).norm_max() / scale;
            Ok(Entry {
                xi: [pt.xi.re, pt.xi.im],
                sheet: pt.sheet,
                defect,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let max_defect = entries.iter().fold(0.0f64, |m, e| m.max(e.defect));
    #[derive(Serialize)]
    struct Out<'a> {
        schema_version: u32,
        profile_hash: &'a str,
        omega: f64,
        #[serde(rename = "H")]
        h: f64,
        threshold: f64,
        max_defect: f64,
        pass: bool,
        entries: Vec<Entry>,
    }
    write_artifact(
        &common.output,
        &to_json(&Out {
            schema_version: SCHEMA_VERSION,
            profile_hash: &p.profile_hash,
            omega: p.omega,
            h: p.h,
            threshold,
            max_defect,
            pass: max_defect <= threshold,
            entries,
        }),
    )?;
    if max_defect <= threshold {
        Ok(())
    } else {
        Err(threshold_failure(max_defect, threshold))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    init_workers()?;
    match &cli.cmd {
        Cmd::Validate { common, samples } => run_validate(common, *samples),
        Cmd::DetMap {
            common,
            sheet,
            window,
            nre,
            nim,
        } => run_det_map(common, *sheet, window, *nre, *nim),
        Cmd::Resonances {
            common,
            sheet,
            region,
        } => run_resonances(common, *sheet, region),
        Cmd::Identities {
            common,
            samples,
            threshold,
        } => run_identities(common, *samples, *threshold),
        Cmd::Scattering {
            common,
            samples,
            threshold,
            grid_output,
            sheet,
            window,
            nre,
            nim,
        } => run_scattering(
            common,
            *samples,
            *threshold,
            grid_output,
            *sheet,
            window,
            *nre,
            *nim,
        ),
        Cmd::Greens {
            common,
            sheet,
            xi,
            depths,
            nz,
            resonance,
            diagnostics,
        } => run_greens(common, *sheet, xi, depths, *nz, resonance, diagnostics),
        Cmd::Counting {
            common,
            r_min,
            r_max,
            n,
        } => run_counting(common, *r_min, *r_max, *n),
        Cmd::CrossCheck {
            common,
            samples,
            threshold,
        } => run_cross_check(common, *samples, *threshold),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse(); // usage errors exit with code 2
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            emit_failure(&f);
            ExitCode::from(1)
        }
    }
}
