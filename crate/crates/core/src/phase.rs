//! The holomorphic symplectic vector space C²⊕C²: symplectic form, group
//! actions, momentum maps and the three biquaternion identifications.
//!
//! The identification distinguishing axis I sends `u + vI + wJ + zK` to
//! `q = (u + iv, w + iz)/√2`, `p = (w̄ + iz̄, −ū − iv̄)/√2`. Axes J and K use the
//! same formula after the cyclic substitutions (v, w, z) → (w, z, v) and
//! (v, w, z) → (z, v, w). This is the cyclic order for which the three real
//! moments are the same functions of the biquaternion whichever axis is used
//! to compute them.

use crate::algebra::{Biquaternion, Mat2, Mat2C};
use crate::error::{Error, Result};
use crate::scalar::{complex_step_gradient, Bicomplex, Scalar, C, I, ZERO};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: [C; 2],
    pub p: [C; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    I,
    J,
    K,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::I, Axis::J, Axis::K];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self)
    }
}

impl PhasePoint {
    pub fn new(q: [C; 2], p: [C; 2]) -> Self {
        Self { q, p }
    }
    pub fn zero() -> Self {
        Self::new([ZERO; 2], [ZERO; 2])
    }
    pub fn as_array(&self) -> [C; 4] {
        [self.q[0], self.q[1], self.p[0], self.p[1]]
    }
    pub fn from_array(a: [C; 4]) -> Self {
        Self::new([a[0], a[1]], [a[2], a[3]])
    }
    pub fn scale(&self, k: C) -> Self {
        Self::from_array(self.as_array().map(|z| z * k))
    }
    pub fn add(&self, o: &Self) -> Self {
        let a = self.as_array();
        let b = o.as_array();
        Self::from_array([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(C::new(-1.0, 0.0)))
    }
    pub fn conj(&self) -> Self {
        Self::from_array(self.as_array().map(|z| z.conj()))
    }
    pub fn norm(&self) -> f64 {
        self.as_array().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
    pub fn q_norm_sqr(&self) -> f64 {
        self.q[0].norm_sqr() + self.q[1].norm_sqr()
    }
    pub fn p_norm_sqr(&self) -> f64 {
        self.p[0].norm_sqr() + self.p[1].norm_sqr()
    }
}

/// Ω((q1,p1),(q2,p2)) = p2ᵀq1 − p1ᵀq2.
pub fn omega(v1: &PhasePoint, v2: &PhasePoint) -> C {
    dot(&v2.p, &v1.q) - dot(&v1.p, &v2.q)
}

pub(crate) fn dot<S: Scalar>(a: &[S; 2], b: &[S; 2]) -> S {
    a[0] * b[0] + a[1] * b[1]
}

/// Scalar action (gq, g⁻¹p).
pub fn gl1_action(g: C, pt: &PhasePoint) -> Result<PhasePoint> {
    if g.norm() == 0.0 || !g.is_finite() {
        return Err(Error::InvalidGroupElement(format!("{g} is not invertible")));
    }
    Ok(PhasePoint::new([pt.q[0] * g, pt.q[1] * g], [pt.p[0] / g, pt.p[1] / g]))
}

const GROUP_TOL: f64 = 1e-10;

pub fn check_su2(g: &Mat2C) -> Result<()> {
    let u = (g.adjoint() * *g - Mat2C::identity()).norm();
    let d = (g.det() - 1.0).norm();
    if u > GROUP_TOL || d > GROUP_TOL {
        return Err(Error::InvalidGroupElement(format!(
            "not in SU(2): unitarity defect {u:e}, determinant defect {d:e}"
        )));
    }
    Ok(())
}

/// (gq, ḡp) for g ∈ SU(2).
pub fn su2_action(g: &Mat2C, pt: &PhasePoint) -> Result<PhasePoint> {
    check_su2(g)?;
    Ok(PhasePoint::new(g.mul_vec(&pt.q), g.conj().mul_vec(&pt.p)))
}

/// P(q, p) = qpᵀ.
pub fn momentum_p(pt: &PhasePoint) -> Mat2C {
    Mat2::outer(&pt.q, &pt.p)
}

/// μ(q, p) = pᵀq = Tr P(q, p).
pub fn mu_trace(pt: &PhasePoint) -> C {
    dot(&pt.p, &pt.q)
}

fn permute(b: &Biquaternion, axis: Axis) -> (C, C, C, C) {
    match axis {
        Axis::I => (b.u, b.v, b.w, b.z),
        Axis::J => (b.u, b.w, b.z, b.v),
        Axis::K => (b.u, b.z, b.v, b.w),
    }
}

fn unpermute(u: C, v: C, w: C, z: C, axis: Axis) -> Biquaternion {
    match axis {
        Axis::I => Biquaternion::new(u, v, w, z),
        Axis::J => Biquaternion::new(u, z, v, w),
        Axis::K => Biquaternion::new(u, w, z, v),
    }
}

pub fn biquat_to_phase(b: &Biquaternion, axis: Axis) -> PhasePoint {
    let (u, v, w, z) = permute(b, axis);
    let s = FRAC_1_SQRT_2;
    PhasePoint::new(
        [(u + I * v) * s, (w + I * z) * s],
        [(w.conj() + I * z.conj()) * s, (-u.conj() - I * v.conj()) * s],
    )
}

pub fn phase_to_biquat(pt: &PhasePoint, axis: Axis) -> Biquaternion {
    let r = std::f64::consts::SQRT_2;
    let (q0, q1) = (pt.q[0] * r, pt.q[1] * r);
    let (p0, p1) = (pt.p[0].conj() * r, pt.p[1].conj() * r);
    let w = (q1 + p0) / 2.0;
    let z = (q1 - p0) / (I * 2.0);
    let u = (q0 - p1) / 2.0;
    let v = (q0 + p1) / (I * 2.0);
    unpermute(u, v, w, z, axis)
}

/// Real moments of the circle action, computed through the identification
/// distinguishing `axis`: μ_a = (i/2)(|q|² − |p|²) and μ_{a+1} + iμ_{a+2} = pᵀq,
/// indices cyclic. All three values are imaginary.
pub fn mu123_via(b: &Biquaternion, axis: Axis) -> [C; 3] {
    let pt = biquat_to_phase(b, axis);
    let r = pt.q_norm_sqr() - pt.p_norm_sqr();
    let h = mu_trace(&pt);
    let a = axis.index();
    let mut mu = [ZERO; 3];
    mu[a] = I * (r / 2.0);
    mu[(a + 1) % 3] = I * h.im;
    mu[(a + 2) % 3] = -I * h.re;
    mu
}

pub fn mu123(b: &Biquaternion) -> [C; 3] {
    mu123_via(b, Axis::I)
}

/// The matrix g with `biquat_to_phase(b·a, axis) = (gq, ḡp)` for a real unit
/// quaternion `a`. Right multiplication commutes with the circle action, and
/// each identification turns it into the standard SU(2) action; the matrices
/// for different axes differ by a fixed inner automorphism of SU(2).
pub fn right_multiplication_matrix(a: &Biquaternion, axis: Axis) -> Mat2C {
    let col = |e: [C; 2]| {
        let b = phase_to_biquat(&PhasePoint::new(e, [ZERO; 2]), axis);
        biquat_to_phase(&(b * *a), axis).q
    };
    let c0 = col([crate::scalar::ONE, ZERO]);
    let c1 = col([ZERO, crate::scalar::ONE]);
    Mat2C::new(c0[0], c1[0], c0[1], c1[1])
}

/// Inverse of [`right_multiplication_matrix`] on SU(2).
pub fn su2_to_quaternion(g: &Mat2C, axis: Axis) -> Biquaternion {
    let units = [Biquaternion::ONE, Biquaternion::I, Biquaternion::J, Biquaternion::K];
    let c = units.map(|u| {
        let m = right_multiplication_matrix(&u, axis);
        C::new((m.adjoint() * *g).trace().re / 2.0, 0.0)
    });
    Biquaternion::from_coeffs(c)
}

/// Re-express the SU(2) element acting in the identification `from` as the
/// element acting in `to` (same underlying unit quaternion).
pub fn su2_transfer(g: &Mat2C, from: Axis, to: Axis) -> Mat2C {
    right_multiplication_matrix(&su2_to_quaternion(g, from), to)
}

/// A holomorphic function on C²⊕C², evaluable on any [`Scalar`].
pub trait PhaseFn: Sync {
    fn eval<S: Scalar>(&self, q: &[S; 2], p: &[S; 2]) -> S;

    fn value(&self, pt: &PhasePoint) -> C {
        self.eval(&pt.q, &pt.p)
    }
}

/// (∂f/∂q, ∂f/∂p) by complex step.
pub fn phase_gradient<F: PhaseFn + ?Sized>(f: &F, pt: &PhasePoint) -> PhasePoint {
    let g = complex_step_gradient(
        |x: &[Bicomplex; 4]| f.eval(&[x[0], x[1]], &[x[2], x[3]]),
        &pt.as_array(),
    );
    PhasePoint::from_array(g)
}

/// X_f = (∂f/∂p, −∂f/∂q), so that Ω(X_f, ·) = df.
pub fn phase_vector_field<F: PhaseFn + ?Sized>(f: &F, pt: &PhasePoint) -> PhasePoint {
    let g = phase_gradient(f, pt);
    PhasePoint::new(g.p, [-g.q[0], -g.q[1]])
}

/// {f, g} = Ω(X_f, X_g) = ∂_q f·∂_p g − ∂_p f·∂_q g.
pub fn canonical_bracket<F: PhaseFn + ?Sized, G: PhaseFn + ?Sized>(f: &F, g: &G, pt: &PhasePoint) -> C {
    let df = phase_gradient(f, pt);
    let dg = phase_gradient(g, pt);
    dot(&df.q, &dg.p) - dot(&df.p, &dg.q)
}
