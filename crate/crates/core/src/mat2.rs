use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Real 2×2 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);
    /// Rotation by π/2.
    pub const J: Mat2 = Mat2([[0.0, -1.0], [1.0, 0.0]]);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Mat2([[a, 0.0], [0.0, b]])
    }

    pub fn from_rows(r1: [f64; 2], r2: [f64; 2]) -> Self {
        Mat2([r1, r2])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn transpose(&self) -> Self {
        Mat2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let [[a, b], [c, e]] = self.0;
        Some(Mat2([[e / d, -b / d], [-c / d, a / d]]))
    }

    pub fn symmetric_part(&self) -> Self {
        let off = 0.5 * (self.0[0][1] + self.0[1][0]);
        Mat2([[self.0[0][0], off], [off, self.0[1][1]]])
    }

    /// `σ₁₂ − σ₂₁`.
    pub fn skew(&self) -> f64 {
        self.0[0][1] - self.0[1][0]
    }

    /// Eigenvalues of the symmetric part, smallest first, by the quadratic formula.
    pub fn symmetric_eigenvalues(&self) -> (f64, f64) {
        let s = self.symmetric_part();
        let mean = 0.5 * (s.0[0][0] + s.0[1][1]);
        let half_diff = 0.5 * (s.0[0][0] - s.0[1][1]);
        let r = half_diff.hypot(s.0[0][1]);
        (mean - r, mean + r)
    }

    #[inline]
    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [self.0[0][0] * v[0] + self.0[0][1] * v[1], self.0[1][0] * v[0] + self.0[1][1] * v[1]]
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2([[s * self.0[0][0], s * self.0[0][1]], [s * self.0[1][0], s * self.0[1][1]]])
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2([
            [self.0[0][0] + o.0[0][0], self.0[0][1] + o.0[0][1]],
            [self.0[1][0] + o.0[1][0], self.0[1][1] + o.0[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2([
            [self.0[0][0] - o.0[0][0], self.0[0][1] - o.0[0][1]],
            [self.0[1][0] - o.0[1][0], self.0[1][1] - o.0[1][1]],
        ])
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
}

#[inline]
pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `J v`, rotation of `v` by π/2.
#[inline]
pub fn rotate(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(2.0, 0.3, -0.7, 1.5);
        let p = m * m.inverse().unwrap();
        assert!(p.max_abs_diff(&Mat2::IDENTITY) < 1e-15);
    }

    #[test]
    fn symmetric_eigenvalues_of_diagonal() {
        assert_eq!(Mat2::diag(3.0, 2.0).symmetric_eigenvalues(), (2.0, 3.0));
        // rotation part drops out of the symmetric part
        let (lo, hi) = Mat2::new(0.5, 0.8, -0.8, 0.5).symmetric_eigenvalues();
        assert!((lo - 0.5).abs() < 1e-15 && (hi - 0.5).abs() < 1e-15);
    }
}
