//! Leaky-mode (wavenumber resonance) computations for the isotropic Rayleigh
//! system on a half space carrying a heterogeneous slab.
//!
//! The library builds, at a fixed angular frequency, the Jost solutions of the
//! Rayleigh ODE in displacement-traction form, the boundary matrix and its
//! determinant (the Rayleigh determinant) on a four-sheeted Riemann surface,
//! the surface reflection matrix, the resolvent kernel, and an independent
//! second computation path through the Markushevich transform to a matrix
//! Schrodinger problem. Zeros of the Rayleigh determinant are located per
//! sheet by argument-principle contour subdivision and Newton refinement.
//!
//! ```
//! use rayleigh::medium::MediumProfile;
//! use rayleigh::riemann::{SheetLabel, SheetPoint};
//! use rayleigh::boundary::boundary_matrix_and_delta;
//! use num_complex::Complex64;
//!
//! // Homogeneous Poisson half space: the Rayleigh determinant at xi = 0 is i.
//! let p = MediumProfile::load_profile(
//!     "[medium]\nomega = 1.0\nH = 0.0\nlambda0 = 1.0\nmu0 = 1.0\n[slab]\nkind = \"constant\"\n",
//! ).unwrap();
//! let pt = SheetPoint::new(Complex64::new(2.0, 0.5), SheetLabel::PP);
//! let (_b, delta) = boundary_matrix_and_delta(&p, &pt, 1e-10).unwrap();
//! assert!(delta.norm() > 0.0);
//! ```

pub mod boundary;
pub mod error;
pub mod greens;
pub mod linalg;
pub mod markushevich;
pub mod medium;
pub mod ode;
pub mod propagator;
pub mod resonance;
pub mod riemann;
pub mod scattering;

pub use error::RayleighError;

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, RayleighError>;
