//! Biquaternions, 2×2 complex matrices with the trace pairing, and the
//! quaternion units as matrices.

use crate::error::{Error, Result};
use crate::scalar::{Scalar, C, I, ONE, ZERO};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<S> {
    pub m: [[S; 2]; 2],
}

pub type Mat2C = Mat2<C>;

impl<S: Scalar> Mat2<S> {
    pub fn new(a11: S, a12: S, a21: S, a22: S) -> Self {
        Self { m: [[a11, a12], [a21, a22]] }
    }
    pub fn identity() -> Self {
        Self::new(S::from_c(ONE), S::zero(), S::zero(), S::from_c(ONE))
    }
    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero(), S::zero(), S::zero())
    }
    pub fn trace(&self) -> S {
        self.m[0][0] + self.m[1][1]
    }
    pub fn det(&self) -> S {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }
    pub fn scale(&self, k: S) -> Self {
        Self::new(self.m[0][0] * k, self.m[0][1] * k, self.m[1][0] * k, self.m[1][1] * k)
    }
    pub fn commutator(&self, o: &Self) -> Self {
        *self * *o - *o * *self
    }
    pub fn lift(a: &Mat2C) -> Self {
        Self::new(S::from_c(a.m[0][0]), S::from_c(a.m[0][1]), S::from_c(a.m[1][0]), S::from_c(a.m[1][1]))
    }
    pub fn mul_vec(&self, v: &[S; 2]) -> [S; 2] {
        [self.m[0][0] * v[0] + self.m[0][1] * v[1], self.m[1][0] * v[0] + self.m[1][1] * v[1]]
    }
    pub fn outer(q: &[S; 2], p: &[S; 2]) -> Self {
        Self::new(q[0] * p[0], q[0] * p[1], q[1] * p[0], q[1] * p[1])
    }
}

impl Mat2C {
    pub fn conj(&self) -> Self {
        Self::new(self.m[0][0].conj(), self.m[0][1].conj(), self.m[1][0].conj(), self.m[1][1].conj())
    }
    pub fn adjoint(&self) -> Self {
        self.conj().transpose()
    }
    pub fn norm(&self) -> f64 {
        self.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
    pub fn entries(&self) -> [C; 4] {
        [self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]]
    }
    pub fn from_entries(e: [C; 4]) -> Self {
        Self::new(e[0], e[1], e[2], e[3])
    }
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() < 1e-300 {
            return None;
        }
        Some(Self::new(self.m[1][1] / d, -self.m[0][1] / d, -self.m[1][0] / d, self.m[0][0] / d))
    }
    /// Trace pairing ⟨A, B⟩ = Tr(AB).
    pub fn pairing(&self, o: &Self) -> C {
        (*self * *o).trace()
    }
}

impl<S: Scalar> Add for Mat2<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.m[0][0] + o.m[0][0], self.m[0][1] + o.m[0][1], self.m[1][0] + o.m[1][0], self.m[1][1] + o.m[1][1])
    }
}

impl<S: Scalar> Sub for Mat2<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.m[0][0] - o.m[0][0], self.m[0][1] - o.m[0][1], self.m[1][0] - o.m[1][0], self.m[1][1] - o.m[1][1])
    }
}

impl<S: Scalar> Neg for Mat2<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.m[0][0], -self.m[0][1], -self.m[1][0], -self.m[1][1])
    }
}

impl<S: Scalar> Mul for Mat2<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// The quaternion units as matrices: 𝕀 = diag(i, −i), 𝕁, 𝕂 with 𝕀𝕁 = 𝕂.
pub fn pauli_basis() -> (Mat2C, Mat2C, Mat2C) {
    (
        Mat2C::new(I, ZERO, ZERO, -I),
        Mat2C::new(ZERO, ONE, -ONE, ZERO),
        Mat2C::new(ZERO, I, I, ZERO),
    )
}

/// `u·1 + v·I + w·J + z·K` with complex coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Biquaternion {
    pub u: C,
    pub v: C,
    pub w: C,
    pub z: C,
}

impl Biquaternion {
    pub const ONE: Self = Self { u: ONE, v: ZERO, w: ZERO, z: ZERO };
    pub const I: Self = Self { u: ZERO, v: ONE, w: ZERO, z: ZERO };
    pub const J: Self = Self { u: ZERO, v: ZERO, w: ONE, z: ZERO };
    pub const K: Self = Self { u: ZERO, v: ZERO, w: ZERO, z: ONE };

    pub fn new(u: C, v: C, w: C, z: C) -> Self {
        Self { u, v, w, z }
    }
    pub fn coeffs(&self) -> [C; 4] {
        [self.u, self.v, self.w, self.z]
    }
    pub fn from_coeffs(c: [C; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }
    /// Γ = |u|² + |v|² + |w|² + |z|².
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs().iter().map(|c| c.norm_sqr()).sum()
    }
    pub fn scale(&self, k: C) -> Self {
        Self::from_coeffs(self.coeffs().map(|c| c * k))
    }
    pub fn to_matrix(&self) -> Mat2C {
        let (ii, jj, kk) = pauli_basis();
        Mat2C::identity().scale(self.u) + ii.scale(self.v) + jj.scale(self.w) + kk.scale(self.z)
    }
    pub fn distance(&self, o: &Self) -> f64 {
        (0..4).map(|k| (self.coeffs()[k] - o.coeffs()[k]).norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn biquat_mul(a: &Biquaternion, b: &Biquaternion) -> Biquaternion {
    let [a0, a1, a2, a3] = a.coeffs();
    let [b0, b1, b2, b3] = b.coeffs();
    Biquaternion::new(
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    )
}

impl Mul for Biquaternion {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        biquat_mul(&self, &o)
    }
}

impl Add for Biquaternion {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.u + o.u, self.v + o.v, self.w + o.w, self.z + o.z)
    }
}

/// Real 2n×2n matrix of a real-linear map on Cⁿ in (Re, Im) coordinates.
pub fn real_matrix(l: &dyn Fn(&[C]) -> Vec<C>, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..2 * n {
        let mut e = vec![ZERO; n];
        e[k / 2] = if k % 2 == 0 { ONE } else { I };
        let img = l(&e);
        for (r, w) in img.iter().enumerate() {
            m[(2 * r, k)] = w.re;
            m[(2 * r + 1, k)] = w.im;
        }
    }
    m
}

/// The covector `D` with `⟨D, X⟩ = conj(⟨df, L(X)⟩)` for a conjugate-linear `L`,
/// where ⟨a, X⟩ = Σ a_k X_k.
pub fn conjugate_adjoint(l: &dyn Fn(&[C]) -> Vec<C>, df: &[C]) -> Result<Vec<C>> {
    let n = df.len();
    let sv = real_matrix(l, n).singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 1e-12 * smax.max(1e-300)) {
        return Err(Error::SingularMap(smin));
    }
    Ok((0..n)
        .map(|k| {
            let mut e = vec![ZERO; n];
            e[k] = ONE;
            let img = l(&e);
            df.iter().zip(&img).map(|(a, b)| a * b).sum::<C>().conj()
        })
        .collect())
}

/// Flatten a matrix covector for the trace pairing: ⟨D, X⟩ = Tr(DX) = Σ_k a_k X_k
/// with X flattened row-major.
pub fn trace_covector(d: &Mat2C) -> [C; 4] {
    d.transpose().entries()
}

pub fn covector_to_matrix(a: &[C]) -> Mat2C {
    Mat2C::new(a[0], a[1], a[2], a[3]).transpose()
}
