//! Coadjoint-orbit models of the complex 2-sphere inside gl(2,C)*, the KKS
//! bracket, the reduced spaces of C²⊕C², the map Φ: CS² → T*CP¹ and the
//! bundle map CS² → S².
//!
//! Orbit coordinates: ξ = ½(t + x𝕀 + y𝕁 + z𝕂), so x = −Tr(ξ𝕀) and similarly
//! for y, z, with t = Tr ξ = ζ. Membership in the orbit is x² + y² + z² = −ζ².

use crate::algebra::{covector_to_matrix, pauli_basis, Mat2, Mat2C};
use crate::error::{Error, Result};
use crate::phase::{self, biquat_to_phase, mu_trace, phase_to_biquat, Axis, PhaseFn, PhasePoint};
use crate::sample::Sampler;
use crate::scalar::{complex_step_gradient, Bicomplex, Scalar, C, I, ONE, ZERO};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

pub const ZETA_CS2: C = I;
pub const ZETA_ICS2: C = C::new(-1.0, 0.0);
pub const MEMBERSHIP_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitPoint {
    pub x: C,
    pub y: C,
    pub z: C,
    pub zeta: C,
}

impl OrbitPoint {
    pub fn new(x: C, y: C, z: C, zeta: C) -> Result<Self> {
        let pt = Self { x, y, z, zeta };
        let r = pt.membership_residual();
        if !(r <= MEMBERSHIP_TOL * pt.hermitian_norm_sqr().max(1.0)) {
            return Err(Error::NotMember { space: space_name(zeta), residual: r });
        }
        Ok(pt)
    }
    pub fn cs2(x: C, y: C, z: C) -> Result<Self> {
        Self::new(x, y, z, ZETA_CS2)
    }
    pub fn ics2(x: C, y: C, z: C) -> Result<Self> {
        Self::new(x, y, z, ZETA_ICS2)
    }
    pub fn real(v: [f64; 3]) -> Result<Self> {
        Self::cs2(C::new(v[0], 0.0), C::new(v[1], 0.0), C::new(v[2], 0.0))
    }
    pub fn unchecked(c: [C; 3], zeta: C) -> Self {
        Self { x: c[0], y: c[1], z: c[2], zeta }
    }
    pub fn coords(&self) -> [C; 3] {
        [self.x, self.y, self.z]
    }
    /// x² + y² + z².
    pub fn quadric(&self) -> C {
        self.x * self.x + self.y * self.y + self.z * self.z
    }
    pub fn membership_residual(&self) -> f64 {
        (self.quadric() + self.zeta * self.zeta).norm()
    }
    /// |x|² + |y|² + |z|².
    pub fn hermitian_norm_sqr(&self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }
    pub fn distance(&self, o: &Self) -> f64 {
        let a = self.coords();
        let b = o.coords();
        (0..3).map(|k| (a[k] - b[k]).norm_sqr()).sum::<f64>().sqrt()
    }
    /// Rescale onto the orbit along the ray (principal square root).
    pub fn renormalized(c: [C; 3], zeta: C) -> Self {
        let qd = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        let k = (-zeta * zeta / qd).sqrt();
        Self::unchecked(c.map(|w| w * k), zeta)
    }
}

pub fn space_name(zeta: C) -> &'static str {
    if zeta == ZETA_CS2 {
        "CS²"
    } else if zeta == ZETA_ICS2 {
        "iCS²"
    } else {
        "the orbit"
    }
}

pub fn coords_to_matrix(pt: &OrbitPoint) -> Mat2C {
    let (ii, jj, kk) = pauli_basis();
    (Mat2C::identity().scale(pt.zeta) + ii.scale(pt.x) + jj.scale(pt.y) + kk.scale(pt.z)).scale(C::new(0.5, 0.0))
}

pub fn matrix_to_coords(xi: &Mat2C) -> Result<OrbitPoint> {
    let (ii, jj, kk) = pauli_basis();
    let det = xi.det().norm();
    if det > MEMBERSHIP_TOL * xi.norm().powi(2).max(1.0) {
        return Err(Error::NotMember { space: "a rank-one orbit (det ξ ≠ 0)", residual: det });
    }
    OrbitPoint::new(-xi.pairing(&ii), -xi.pairing(&jj), -xi.pairing(&kk), snap_zeta(xi.trace()))
}

/// Round a trace within 1e-12 of i or −1 to that exact label.
pub fn snap_zeta(t: C) -> C {
    for z in [ZETA_CS2, ZETA_ICS2] {
        if (t - z).norm() < 1e-12 {
            return z;
        }
    }
    t
}

/// Adjoint action ξ ↦ gξg⁻¹ of SU(2).
pub fn adjoint_action(g: &Mat2C, pt: &OrbitPoint) -> Result<OrbitPoint> {
    phase::check_su2(g)?;
    let xi = coords_to_matrix(pt);
    let r = *g * xi * g.adjoint();
    let (ii, jj, kk) = pauli_basis();
    Ok(OrbitPoint::unchecked([-r.pairing(&ii), -r.pairing(&jj), -r.pairing(&kk)], pt.zeta))
}

/// The rotation of R³ induced by g ∈ SU(2) on orbit coordinates.
pub fn su2_rotation(g: &Mat2C) -> Result<[[f64; 3]; 3]> {
    phase::check_su2(g)?;
    let (ii, jj, kk) = pauli_basis();
    let basis = [ii, jj, kk];
    let mut r = [[0.0; 3]; 3];
    for (j, b) in basis.iter().enumerate() {
        let img = *g * b.scale(C::new(0.5, 0.0)) * g.adjoint();
        for (i, e) in basis.iter().enumerate() {
            r[i][j] = (-img.pairing(e)).re;
        }
    }
    Ok(r)
}

/// A holomorphic function on gl(2,C), evaluable on any [`Scalar`].
pub trait MatFn: Sync {
    fn eval<S: Scalar>(&self, m: &Mat2<S>) -> S;

    fn value(&self, m: &Mat2C) -> C {
        self.eval(m)
    }
}

/// Gradient for the trace pairing: the matrix G with df_ξ(V) = Tr(G V).
pub fn trace_gradient<F: MatFn + ?Sized>(f: &F, xi: &Mat2C) -> Mat2C {
    let g = complex_step_gradient(
        |e: &[Bicomplex; 4]| f.eval(&Mat2::new(e[0], e[1], e[2], e[3])),
        &xi.entries(),
    );
    covector_to_matrix(&g)
}

/// Trace-pairing gradient of a holomorphic function that is only available on
/// complex arguments, by the four-point stencil
/// f'(z) ≈ Σ_k i^{−k} f(z + i^k h) / 4h, whose error is O(h⁴).
pub fn trace_gradient_fd(f: &dyn Fn(&Mat2C) -> C, xi: &Mat2C, h: f64) -> Mat2C {
    let e = xi.entries();
    let dirs = [ONE, I, -ONE, -I];
    let mut g = [ZERO; 4];
    for k in 0..4 {
        for d in dirs {
            let mut moved = e;
            moved[k] += d * h;
            g[k] += f(&Mat2C::from_entries(moved)) / d;
        }
        g[k] /= 4.0 * h;
    }
    covector_to_matrix(&g)
}

/// π_ξ(A, B) = Tr(ξ[A, B]).
pub fn kks_pairing(xi: &Mat2C, a: &Mat2C, b: &Mat2C) -> C {
    (*xi * a.commutator(b)).trace()
}

pub fn kks_bracket<F: MatFn + ?Sized, G: MatFn + ?Sized>(f: &F, g: &G, xi: &Mat2C) -> C {
    kks_pairing(xi, &trace_gradient(f, xi), &trace_gradient(g, xi))
}

pub struct TraceFn;
impl MatFn for TraceFn {
    fn eval<S: Scalar>(&self, m: &Mat2<S>) -> S {
        m.trace()
    }
}

pub struct DetFn;
impl MatFn for DetFn {
    fn eval<S: Scalar>(&self, m: &Mat2<S>) -> S {
        m.det()
    }
}

/// ξ ↦ Tr(Aξ).
pub struct LinearFn(pub Mat2C);
impl MatFn for LinearFn {
    fn eval<S: Scalar>(&self, m: &Mat2<S>) -> S {
        (Mat2::<S>::lift(&self.0) * *m).trace()
    }
}

/// Orbit coordinate x, y or z (index 0, 1, 2) as a linear function of ξ.
pub struct CoordinateFn(pub usize);
impl MatFn for CoordinateFn {
    fn eval<S: Scalar>(&self, m: &Mat2<S>) -> S {
        let (ii, jj, kk) = pauli_basis();
        let b = [ii, jj, kk][self.0];
        -(Mat2::<S>::lift(&b) * *m).trace()
    }
}

/// ξ ↦ Tr(Aξ) + Tr(Bξ)·Tr(Cξ) + Tr(Dξ²).
#[derive(Clone, Copy, Debug)]
pub struct QuadraticFn {
    pub a: Mat2C,
    pub b: Mat2C,
    pub c: Mat2C,
    pub d: Mat2C,
}
impl MatFn for QuadraticFn {
    fn eval<S: Scalar>(&self, m: &Mat2<S>) -> S {
        let l = |a: &Mat2C| (Mat2::<S>::lift(a) * *m).trace();
        l(&self.a) + l(&self.b) * l(&self.c) + (Mat2::<S>::lift(&self.d) * *m * *m).trace()
    }
}

/// f ∘ P for a function f on gl(2,C).
pub struct Pullback<'a, F: MatFn + ?Sized>(pub &'a F);
impl<F: MatFn + ?Sized> PhaseFn for Pullback<'_, F> {
    fn eval<S: Scalar>(&self, q: &[S; 2], p: &[S; 2]) -> S {
        self.0.eval(&Mat2::outer(q, p))
    }
}

/// The constant c with {x, y} = c·z, {y, z} = c·x, {z, x} = c·y.
pub fn structure_constant() -> C {
    static CACHE: OnceLock<C> = OnceLock::new();
    *CACHE.get_or_init(|| {
        let pt = OrbitPoint::real([0.0, 0.0, 1.0]).expect("pole is on CS²");
        kks_bracket(&CoordinateFn(0), &CoordinateFn(1), &coords_to_matrix(&pt)) / pt.z
    })
}

pub fn cross<S: Scalar>(a: &[S; 3], b: &[S; 3]) -> [S; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn dot3<S: Scalar>(a: &[S; 3], b: &[S; 3]) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Orbit symplectic form Ω(V, W) = x·(V×W) / (c·(x·x)) on tangent vectors in
/// orbit coordinates; inverse to the bracket, so Ω(X_f, X_g) = {f, g}.
pub fn kks_two_form(pt: &OrbitPoint, v: &[C; 3], w: &[C; 3]) -> C {
    dot3(&pt.coords(), &cross(v, w)) / (structure_constant() * pt.quadric())
}

/// Project an arbitrary complex vector onto the tangent space at `pt`.
pub fn tangent_projection(pt: &OrbitPoint, u: &[C; 3]) -> [C; 3] {
    let x = pt.coords();
    let k = dot3(&x, u) / dot3(&x, &x);
    [u[0] - k * x[0], u[1] - k * x[1], u[2] - k * x[2]]
}

/// A point of T*CP¹: |q| = 1 and pᵀq = 0, defined up to (e^{iθ}q, e^{−iθ}p).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CotangentPoint {
    pub q: [C; 2],
    pub p: [C; 2],
}

impl CotangentPoint {
    pub fn as_phase(&self) -> PhasePoint {
        PhasePoint::new(self.q, self.p)
    }
    /// Distance between circle orbits, measured on the invariants qq† and qpᵀ.
    pub fn phase_distance(&self, o: &Self) -> f64 {
        let proj = |q: &[C; 2]| Mat2C::outer(q, &[q[0].conj(), q[1].conj()]);
        (proj(&self.q) - proj(&o.q)).norm() + (Mat2C::outer(&self.q, &self.p) - Mat2C::outer(&o.q, &o.p)).norm()
    }
    /// Representative whose `q[k]` is real and non-negative.
    pub fn gauge_fixed(&self, k: usize) -> Self {
        let n = self.q[k].norm();
        if n == 0.0 {
            return *self;
        }
        let ph = self.q[k].conj() / n;
        Self { q: self.q.map(|z| z * ph), p: self.p.map(|z| z / ph) }
    }
    pub fn is_zero_section(&self, tol: f64) -> bool {
        self.p[0].norm() + self.p[1].norm() < tol
    }
}

pub fn reduce_to_cotangent(pt: &PhasePoint) -> Result<CotangentPoint> {
    let scale = pt.norm().max(1.0);
    let level = mu_trace(pt);
    if level.norm() > MEMBERSHIP_TOL * scale * scale {
        return Err(Error::LevelMismatch { expected: ZERO, found: level });
    }
    let nq = pt.q_norm_sqr().sqrt();
    if nq < 1e-12 * scale {
        return Err(Error::UnstablePoint);
    }
    Ok(CotangentPoint { q: pt.q.map(|z| z / nq), p: pt.p.map(|z| z * nq) })
}

pub fn reduce_to_sphere(pt: &PhasePoint, zeta: C) -> Result<OrbitPoint> {
    let level = mu_trace(pt);
    if (level - zeta).norm() > MEMBERSHIP_TOL * pt.norm().powi(2).max(1.0) {
        return Err(Error::LevelMismatch { expected: zeta, found: level });
    }
    let xi = phase::momentum_p(pt);
    let (ii, jj, kk) = pauli_basis();
    Ok(OrbitPoint::unchecked([-xi.pairing(&ii), -xi.pairing(&jj), -xi.pairing(&kk)], zeta))
}

/// A phase point in the K identification with qpᵀ = ξ and |q| = |p|, which
/// places it on the level set of all three real moments.
pub fn lift(pt: &OrbitPoint) -> Result<PhasePoint> {
    let xi = coords_to_matrix(pt);
    let c0 = [xi.m[0][0], xi.m[1][0]];
    let c1 = [xi.m[0][1], xi.m[1][1]];
    let n0 = c0[0].norm_sqr() + c0[1].norm_sqr();
    let n1 = c1[0].norm_sqr() + c1[1].norm_sqr();
    let (q, nq) = if n0 >= n1 { (c0, n0) } else { (c1, n1) };
    if nq == 0.0 {
        return Err(Error::LiftFailed(f64::INFINITY));
    }
    let p = [
        (q[0].conj() * xi.m[0][0] + q[1].conj() * xi.m[1][0]) / nq,
        (q[0].conj() * xi.m[0][1] + q[1].conj() * xi.m[1][1]) / nq,
    ];
    let np = (p[0].norm_sqr() + p[1].norm_sqr()).sqrt();
    let lam = (np / nq.sqrt()).sqrt();
    let lifted = PhasePoint::new(q.map(|z| z * lam), p.map(|z| z / lam));
    let r = (phase::momentum_p(&lifted) - xi).norm();
    if r > 1e-9 * xi.norm().max(1.0) {
        return Err(Error::LiftFailed(r));
    }
    Ok(lifted)
}

/// Φ: CS² → T*CP¹.
pub fn phi(pt: &OrbitPoint) -> Result<CotangentPoint> {
    if pt.zeta != ZETA_CS2 {
        return Err(Error::NotMember { space: "CS²", residual: (pt.zeta - ZETA_CS2).norm() });
    }
    OrbitPoint::new(pt.x, pt.y, pt.z, pt.zeta)?;
    let k = lift(pt)?;
    let i = biquat_to_phase(&phase_to_biquat(&k, Axis::K), Axis::I);
    let scale = i.norm().powi(2).max(1.0);
    let level = i.q_norm_sqr() - i.p_norm_sqr();
    if (level - 2.0).abs() > 1e-9 * scale {
        return Err(Error::LevelMismatch { expected: C::new(2.0, 0.0), found: C::new(level, 0.0) });
    }
    reduce_to_cotangent(&i)
}

pub trait Su2Invariant {
    fn su2_invariant(&self) -> f64;
}

/// |η|² = 4|q|²|p|².
impl Su2Invariant for CotangentPoint {
    fn su2_invariant(&self) -> f64 {
        let nq = self.q[0].norm_sqr() + self.q[1].norm_sqr();
        let np = self.p[0].norm_sqr() + self.p[1].norm_sqr();
        4.0 * nq * np
    }
}

/// Tr(ξ†ξ).
impl Su2Invariant for OrbitPoint {
    fn su2_invariant(&self) -> f64 {
        let xi = coords_to_matrix(self);
        (xi.adjoint() * xi).trace().re
    }
}

/// SU(2) action on T*CP¹ representatives, (gq, ḡp).
pub fn su2_cotangent(g: &Mat2C, pt: &CotangentPoint) -> Result<CotangentPoint> {
    let r = phase::su2_action(g, &pt.as_phase())?;
    Ok(CotangentPoint { q: r.q, p: r.p })
}

/// The element acting on T*CP¹ that corresponds to ξ ↦ gξg⁻¹ on CS² under Φ:
/// both come from right multiplication by one unit quaternion, seen through
/// the K and I identifications respectively.
pub fn phi_transfer(g: &Mat2C) -> Mat2C {
    phase::su2_transfer(g, Axis::K, Axis::I)
}

/// Affine fit |η|² ≈ slope·(|x|² + |y|² + |z|²) + intercept across Φ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub samples: usize,
}

pub const CALIBRATION_SEED: u64 = 0x00c5_2ca1;

pub fn fit_calibration(points: &[OrbitPoint]) -> Result<Calibration> {
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for pt in points {
        xs.push(pt.hermitian_norm_sqr());
        ys.push(phi(pt)?.su2_invariant());
    }
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("calibration needs at least two samples".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).abs()).fold(0.0, f64::max);
    Ok(Calibration { slope, intercept, max_residual, samples: xs.len() })
}

/// The calibration fitted once from 1000 seeded CS² samples.
pub fn calibration() -> &'static Calibration {
    static CACHE: OnceLock<Calibration> = OnceLock::new();
    CACHE.get_or_init(|| {
        let mut s = Sampler::new(CALIBRATION_SEED);
        let pts: Vec<OrbitPoint> = (0..1000).map(|_| s.cs2_point(2.0)).collect();
        fit_calibration(&pts).expect("calibration samples lie on CS²")
    })
}

/// CS² → S², x ↦ Re(x)/√(1 + |Im(x)|²).
pub fn bundle_map(pt: &OrbitPoint) -> Result<[f64; 3]> {
    if pt.zeta != ZETA_CS2 {
        return Err(Error::NotMember { space: "CS²", residual: (pt.zeta - ZETA_CS2).norm() });
    }
    OrbitPoint::new(pt.x, pt.y, pt.z, pt.zeta)?;
    let c = pt.coords();
    let im2: f64 = c.iter().map(|w| w.im * w.im).sum();
    let k = 1.0 / (1.0 + im2).sqrt();
    Ok([c[0].re * k, c[1].re * k, c[2].re * k])
}

/// Φ-pullback check at `pt`: Re Ω_can(dΦ V, dΦ W) − Im Ω_KKS(V, W) by
/// central differences with step `h`.
pub fn phi_symplectic_defect(pt: &OrbitPoint, v: &[C; 3], w: &[C; 3], h: f64) -> Result<f64> {
    let base = phi(pt)?;
    let k = if base.q[0].norm() >= base.q[1].norm() { 0 } else { 1 };
    let diff = |d: &[C; 3]| -> Result<PhasePoint> {
        let c = pt.coords();
        let at = |s: f64| {
            let moved = [c[0] + d[0] * s, c[1] + d[1] * s, c[2] + d[2] * s];
            phi(&OrbitPoint::renormalized(moved, pt.zeta)).map(|r| r.gauge_fixed(k).as_phase())
        };
        Ok(at(h)?.sub(&at(-h)?).scale(C::new(0.5 / h, 0.0)))
    };
    let dv = diff(v)?;
    let dw = diff(w)?;
    let lhs = phase::omega(&dv, &dw).re;
    let rhs = kks_two_form(pt, v, w).im;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{canonical_bracket, gl1_action};

    #[test]
    fn coordinates_example_and_roundtrip() {
        let pt = OrbitPoint::real([1.0, 0.0, 0.0]).unwrap();
        let xi = coords_to_matrix(&pt);
        assert_eq!(xi, Mat2C::new(I, ZERO, ZERO, ZERO));
        let mut s = Sampler::new(20);
        for _ in 0..500 {
            let pt = s.cs2_point(1.5);
            let xi = coords_to_matrix(&pt);
            assert!(xi.det().norm() < 1e-10);
            assert!((xi.trace() - I).norm() < 1e-14);
            assert!(matrix_to_coords(&xi).unwrap().distance(&pt) < 1e-14);
            let pt = s.ics2_point(1.5);
            let back = matrix_to_coords(&coords_to_matrix(&pt)).unwrap();
            assert!(back.distance(&pt) < 1e-14 && back.zeta == ZETA_ICS2);
        }
    }

    #[test]
    fn non_members_rejected() {
        assert!(matches!(OrbitPoint::real([1.0, 1.0, 0.0]), Err(Error::NotMember { .. })));
        let full_rank = Mat2C::identity();
        assert!(matrix_to_coords(&full_rank).is_err());
    }

    #[test]
    fn trace_is_a_casimir() {
        let mut s = Sampler::new(21);
        for _ in 0..100 {
            let xi = s.matrix();
            let f = s.quadratic_fn();
            assert_eq!(kks_bracket(&TraceFn, &f, &xi), ZERO);
            assert!(kks_bracket(&DetFn, &f, &xi).norm() < 1e-10);
        }
    }

    #[test]
    fn structure_constant_reproduces_coordinate_brackets() {
        let c = structure_constant();
        assert!((c - C::new(-2.0, 0.0)).norm() < 1e-12);
        let mut s = Sampler::new(22);
        for _ in 0..100 {
            let pt = s.cs2_point(1.0);
            let xi = coords_to_matrix(&pt);
            let b = |i, j| kks_bracket(&CoordinateFn(i), &CoordinateFn(j), &xi);
            assert!((b(0, 1) - c * pt.z).norm() < 1e-12);
            assert!((b(1, 2) - c * pt.x).norm() < 1e-12);
            assert!((b(2, 0) - c * pt.y).norm() < 1e-12);
            assert!((b(1, 0) + c * pt.z).norm() < 1e-12);
        }
    }

    struct Quadric;
    impl MatFn for Quadric {
        fn eval<S: Scalar>(&self, m: &Mat2<S>) -> S {
            let x = CoordinateFn(0).eval(m);
            let y = CoordinateFn(1).eval(m);
            let z = CoordinateFn(2).eval(m);
            x * x + y * y + z * z
        }
    }

    #[test]
    fn coordinate_quadric_is_central() {
        let mut s = Sampler::new(23);
        for _ in 0..50 {
            let xi = s.matrix();
            for k in 0..3 {
                assert!(kks_bracket(&Quadric, &CoordinateFn(k), &xi).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kks_jacobi_identity() {
        let mut s = Sampler::new(24);
        for _ in 0..30 {
            let xi = s.matrix();
            let (f, g, h) = (s.quadratic_fn(), s.quadratic_fn(), s.quadratic_fn());
            let outer = |a: &QuadraticFn, b: &QuadraticFn, c: &QuadraticFn| {
                let inner = |m: &Mat2C| kks_bracket(b, c, m);
                kks_pairing(&xi, &trace_gradient(a, &xi), &trace_gradient_fd(&inner, &xi, 1e-3))
            };
            let jac = outer(&f, &g, &h) + outer(&g, &h, &f) + outer(&h, &f, &g);
            assert!(jac.norm() < 1e-8, "Jacobi defect {}", jac.norm());
        }
    }

    #[test]
    fn kks_leibniz_rule() {
        let mut s = Sampler::new(25);
        let xi = s.matrix();
        let (f, g, h) = (s.quadratic_fn(), s.quadratic_fn(), s.quadratic_fn());
        struct Prod(QuadraticFn, QuadraticFn);
        impl MatFn for Prod {
            fn eval<S: Scalar>(&self, m: &Mat2<S>) -> S {
                self.0.eval(m) * self.1.eval(m)
            }
        }
        let lhs = kks_bracket(&f, &Prod(g, h), &xi);
        let rhs = kks_bracket(&f, &g, &xi) * h.value(&xi) + g.value(&xi) * kks_bracket(&f, &h, &xi);
        assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn momentum_map_is_poisson() {
        let mut s = Sampler::new(26);
        for _ in 0..200 {
            let pt = s.phase_point();
            let (f, g) = (s.quadratic_fn(), s.quadratic_fn());
            let lhs = canonical_bracket(&Pullback(&f), &Pullback(&g), &pt);
            let rhs = kks_bracket(&f, &g, &phase::momentum_p(&pt));
            assert!((lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn two_form_inverts_the_bracket() {
        let mut s = Sampler::new(27);
        let c = structure_constant();
        for _ in 0..50 {
            let pt = s.cs2_point(1.0);
            let (a, b) = (s.complex3(), s.complex3());
            let x = pt.coords();
            let xf = cross(&a, &x).map(|w| w * c);
            let xg = cross(&b, &x).map(|w| w * c);
            let bracket = c * dot3(&x, &cross(&a, &b));
            assert!((kks_two_form(&pt, &xf, &xg) - bracket).norm() < 1e-12);
        }
    }

    #[test]
    fn cotangent_reduction_examples() {
        let pt = PhasePoint::new([C::new(2.0, 0.0), ZERO], [ZERO, C::new(3.0, 0.0)]);
        let r = reduce_to_cotangent(&pt).unwrap();
        assert_eq!(r.q, [ONE, ZERO]);
        assert_eq!(r.p, [ZERO, C::new(6.0, 0.0)]);
        let r = reduce_to_cotangent(&PhasePoint::new([ONE, ZERO], [ZERO; 2])).unwrap();
        assert!(r.is_zero_section(1e-15));
        assert!(matches!(reduce_to_cotangent(&PhasePoint::new([ZERO; 2], [ONE, ZERO])), Err(Error::UnstablePoint)));
        assert!(matches!(reduce_to_cotangent(&PhasePoint::new([ONE, ZERO], [ONE, ZERO])), Err(Error::LevelMismatch { .. })));
    }

    #[test]
    fn cotangent_reduction_is_orbit_invariant() {
        let mut s = Sampler::new(28);
        for _ in 0..200 {
            let pt = s.cotangent_level_point();
            let g = s.nonzero_complex();
            let a = reduce_to_cotangent(&pt).unwrap();
            let b = reduce_to_cotangent(&gl1_action(g, &pt).unwrap()).unwrap();
            assert!(a.phase_distance(&b) < 1e-12);
        }
    }

    #[test]
    fn sphere_reduction() {
        let pt = PhasePoint::new([ONE, ZERO], [I, ZERO]);
        let r = reduce_to_sphere(&pt, I).unwrap();
        assert!(r.distance(&OrbitPoint::real([1.0, 0.0, 0.0]).unwrap()) < 1e-15);
        let mut s = Sampler::new(29);
        for _ in 0..200 {
            let pt = s.level_point(I);
            let g = s.nonzero_complex();
            let a = reduce_to_sphere(&pt, I).unwrap();
            let b = reduce_to_sphere(&gl1_action(g, &pt).unwrap(), I).unwrap();
            assert!(a.distance(&b) < 1e-12 * (1.0 + a.hermitian_norm_sqr()));
            assert!(a.membership_residual() < 1e-12 * (1.0 + a.hermitian_norm_sqr()));
        }
        assert!(reduce_to_sphere(&PhasePoint::new([ONE, ZERO], [ONE, ZERO]), I).is_err());
    }

    #[test]
    fn su2_invariant_examples() {
        let zs = CotangentPoint { q: [ONE, ZERO], p: [ZERO; 2] };
        assert_eq!(zs.su2_invariant(), 0.0);
        let pt = OrbitPoint::real([1.0, 0.0, 0.0]).unwrap();
        assert!((pt.su2_invariant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phi_sends_the_real_sphere_to_the_zero_section() {
        let cal = calibration();
        let r = phi(&OrbitPoint::real([0.0, 0.0, 1.0]).unwrap()).unwrap();
        assert!(r.su2_invariant() < 1e-20);
        assert!((cal.slope + cal.intercept - r.su2_invariant()).abs() < 1e-9);
        let mut s = Sampler::new(30);
        for _ in 0..100 {
            let r = phi(&s.s2_point()).unwrap();
            assert!(r.is_zero_section(1e-10));
        }
    }

    #[test]
    fn phi_rejects_other_orbits() {
        let mut s = Sampler::new(31);
        assert!(phi(&s.ics2_point(1.0)).is_err());
    }

    #[test]
    fn calibration_is_affine_with_slope_two() {
        let cal = calibration();
        assert!(cal.max_residual < 1e-9);
        assert!((cal.slope - 2.0).abs() < 1e-9 && (cal.intercept + 2.0).abs() < 1e-9);
    }

    #[test]
    fn phi_is_equivariant_and_symplectic() {
        let mut s = Sampler::new(32);
        for _ in 0..100 {
            let pt = s.cs2_point(1.5);
            let g = s.su2();
            let lhs = phi(&adjoint_action(&g, &pt).unwrap()).unwrap();
            let rhs = su2_cotangent(&phi_transfer(&g), &phi(&pt).unwrap()).unwrap();
            assert!(lhs.phase_distance(&rhs) < 1e-9);
        }
        for _ in 0..50 {
            let pt = s.cs2_point(1.5);
            let v = tangent_projection(&pt, &s.complex3());
            let w = tangent_projection(&pt, &s.complex3());
            assert!(phi_symplectic_defect(&pt, &v, &w, 1e-5).unwrap() < 1e-6);
        }
    }

    #[test]
    fn phi_is_injective_on_samples() {
        let mut s = Sampler::new(33);
        let pts: Vec<OrbitPoint> = (0..60).map(|_| s.cs2_point(1.5)).collect();
        let imgs: Vec<CotangentPoint> = pts.iter().map(|p| phi(p).unwrap()).collect();
        for i in 0..pts.len() {
            for j in 0..i {
                if pts[i].distance(&pts[j]) > 1e-3 {
                    assert!(imgs[i].phase_distance(&imgs[j]) > 1e-6);
                }
            }
        }
    }

    #[test]
    fn bundle_map_examples_and_equivariance() {
        assert_eq!(bundle_map(&OrbitPoint::real([0.0, 0.0, 1.0]).unwrap()).unwrap(), [0.0, 0.0, 1.0]);
        assert_eq!(bundle_map(&OrbitPoint::real([1.0, 0.0, 0.0]).unwrap()).unwrap(), [1.0, 0.0, 0.0]);
        let mut s = Sampler::new(34);
        for _ in 0..200 {
            let pt = s.cs2_point(2.0);
            let n = bundle_map(&pt).unwrap();
            assert!(((n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt() - 1.0).abs() < 1e-12);
            let g = s.su2();
            let rot = su2_rotation(&g).unwrap();
            let moved = bundle_map(&adjoint_action(&g, &pt).unwrap()).unwrap();
            for i in 0..3 {
                let expect: f64 = (0..3).map(|j| rot[i][j] * n[j]).sum();
                assert!((moved[i] - expect).abs() < 1e-9);
            }
        }
    }
}
