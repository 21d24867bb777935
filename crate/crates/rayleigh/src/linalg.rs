//! Small fixed-size complex linear algebra used throughout the crate.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

pub type C64 = Complex64;

/// 2x2 complex matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn zero() -> Self {
        Mat2([[C64::new(0.0, 0.0); 2]; 2])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        m.0[0][0] = C64::new(1.0, 0.0);
        m.0[1][1] = C64::new(1.0, 0.0);
        m
    }

    pub fn from_cols(c0: [C64; 2], c1: [C64; 2]) -> Self {
        Mat2([[c0[0], c1[0]], [c0[1], c1[1]]])
    }

    pub fn col(&self, j: usize) -> [C64; 2] {
        [self.0[0][j], self.0[1][j]]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn transpose(&self) -> Self {
        Mat2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    pub fn inv(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 {
            return None;
        }
        Some(Mat2([
            [self.0[1][1] / d, -self.0[0][1] / d],
            [-self.0[1][0] / d, self.0[0][0] / d],
        ]))
    }

    pub fn conj(&self) -> Self {
        let mut m = *self;
        for r in 0..2 {
            for c in 0..2 {
                m.0[r][c] = m.0[r][c].conj();
            }
        }
        m
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.conj().transpose()
    }

    /// Max-modulus (Chebyshev) matrix norm.
    pub fn norm_max(&self) -> f64 {
        let mut n = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                n = n.max(self.0[r][c].norm());
            }
        }
        n
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        for r in 0..2 {
            for c in 0..2 {
                m.0[r][c] *= s;
            }
        }
        m
    }

    pub fn mul_vec(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Mat2([
            [C64::new(m[0][0], 0.0), C64::new(m[0][1], 0.0)],
            [C64::new(m[1][0], 0.0), C64::new(m[1][1], 0.0)],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let mut m = self;
        for r in 0..2 {
            for c in 0..2 {
                m.0[r][c] += rhs.0[r][c];
            }
        }
        m
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut m = self;
        for r in 0..2 {
            for c in 0..2 {
                m.0[r][c] -= rhs.0[r][c];
            }
        }
        m
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let mut m = Mat2::zero();
        for r in 0..2 {
            for c in 0..2 {
                m.0[r][c] = self.0[r][0] * rhs.0[0][c] + self.0[r][1] * rhs.0[1][c];
            }
        }
        m
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// sin(q t)/q, entire in q^2; series expansion near q t = 0.
pub fn sinc_q(q: C64, t: f64) -> C64 {
    let z = q * t;
    if z.norm() < 1e-3 {
        // t * (1 - z^2/6 + z^4/120 - z^6/5040)
        let z2 = z * z;
        t * (C64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0 - z2 * z2 * z2 / 5040.0)
    } else {
        z.sin() / q
    }
}
