//! Seeded random samplers for the spaces in this crate, and a Halton
//! sequence for multi-start searches.

use crate::algebra::{pauli_basis, Biquaternion, Mat2C};
use crate::orbit::{OrbitPoint, QuadraticFn, ZETA_CS2, ZETA_ICS2};
use crate::phase::PhasePoint;
use crate::scalar::{C, ONE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }
    pub fn complex(&mut self) -> C {
        C::new(self.normal(), self.normal())
    }
    pub fn complex3(&mut self) -> [C; 3] {
        [self.complex(), self.complex(), self.complex()]
    }
    /// Modulus log-uniform in [e⁻¹, e], uniform argument.
    pub fn nonzero_complex(&mut self) -> C {
        let r = self.uniform(-1.0, 1.0).exp();
        C::from_polar(r, self.uniform(0.0, std::f64::consts::TAU))
    }
    pub fn vector3(&mut self) -> [f64; 3] {
        [self.normal(), self.normal(), self.normal()]
    }
    pub fn unit3(&mut self) -> [f64; 3] {
        loop {
            let v = self.vector3();
            let n = norm3(&v);
            if n > 1e-6 {
                return v.map(|c| c / n);
            }
        }
    }
    /// Unit vector orthogonal to `a` (any unit vector if `a` vanishes).
    pub fn unit_orthogonal(&mut self, a: &[f64; 3]) -> [f64; 3] {
        let na = norm3(a);
        loop {
            let mut v = self.vector3();
            if na > 0.0 {
                let k = dot(&v, a) / (na * na);
                v = [v[0] - k * a[0], v[1] - k * a[1], v[2] - k * a[2]];
            }
            let n = norm3(&v);
            if n > 1e-6 {
                return v.map(|c| c / n);
            }
        }
    }
    pub fn biquaternion(&mut self) -> Biquaternion {
        Biquaternion::new(self.complex(), self.complex(), self.complex(), self.complex())
    }
    pub fn phase_point(&mut self) -> PhasePoint {
        PhasePoint::new([self.complex(), self.complex()], [self.complex(), self.complex()])
    }
    pub fn matrix(&mut self) -> Mat2C {
        Mat2C::new(self.complex(), self.complex(), self.complex(), self.complex())
    }
    pub fn quadratic_fn(&mut self) -> QuadraticFn {
        let h = C::new(0.5, 0.0);
        QuadraticFn {
            a: self.matrix().scale(h),
            b: self.matrix().scale(h),
            c: self.matrix().scale(h),
            d: self.matrix().scale(h),
        }
    }
    pub fn unit_quaternion(&mut self) -> Biquaternion {
        let mut v = [self.normal(), self.normal(), self.normal(), self.normal()];
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        v.iter_mut().for_each(|c| *c /= n);
        Biquaternion::from_coeffs(v.map(|c| C::new(c, 0.0)))
    }
    pub fn su2(&mut self) -> Mat2C {
        let mut v = [self.normal(), self.normal(), self.normal(), self.normal()];
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        v.iter_mut().for_each(|c| *c /= n);
        let (ii, jj, kk) = pauli_basis();
        Mat2C::identity().scale(C::new(v[0], 0.0))
            + ii.scale(C::new(v[1], 0.0))
            + jj.scale(C::new(v[2], 0.0))
            + kk.scale(C::new(v[3], 0.0))
    }
    /// A point of the real sphere S² ⊂ CS².
    pub fn s2_point(&mut self) -> OrbitPoint {
        let v = self.unit3();
        OrbitPoint::unchecked(v.map(|c| C::new(c, 0.0)), ZETA_CS2)
    }
    /// x = a + ib on CS² with b Gaussian of per-component scale `im_scale`/√3.
    pub fn cs2_point(&mut self, im_scale: f64) -> OrbitPoint {
        let k = im_scale / 3f64.sqrt();
        let b = self.vector3().map(|c| c * k);
        let n = self.unit_orthogonal(&b);
        let r = (1.0 + dot(&b, &b)).sqrt();
        OrbitPoint::unchecked([0, 1, 2].map(|i| C::new(r * n[i], b[i])), ZETA_CS2)
    }
    /// x = a + ib on iCS² (a·a − b·b = −1, a·b = 0).
    pub fn ics2_point(&mut self, re_scale: f64) -> OrbitPoint {
        let k = re_scale / 3f64.sqrt();
        let a = self.vector3().map(|c| c * k);
        let n = self.unit_orthogonal(&a);
        let r = (1.0 + dot(&a, &a)).sqrt();
        OrbitPoint::unchecked([0, 1, 2].map(|i| C::new(a[i], r * n[i])), ZETA_ICS2)
    }
    /// A phase point on the level pᵀq = ζ.
    pub fn level_point(&mut self, zeta: C) -> PhasePoint {
        let pt = self.phase_point();
        let q = pt.q;
        let nq = q[0].norm_sqr() + q[1].norm_sqr();
        let alpha = (zeta - (pt.p[0] * q[0] + pt.p[1] * q[1])) / nq;
        PhasePoint::new(q, [pt.p[0] + alpha * q[0].conj(), pt.p[1] + alpha * q[1].conj()])
    }
    pub fn cotangent_level_point(&mut self) -> PhasePoint {
        self.level_point(C::new(0.0, 0.0))
    }
    pub fn unit_complex(&mut self) -> C {
        C::from_polar(1.0, self.uniform(0.0, std::f64::consts::TAU)) * ONE
    }
}

pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += (index % base) as f64 * f;
        index /= base;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// The `index`-th point of the `D`-dimensional Halton sequence in [0,1)^D.
pub fn halton<const D: usize>(index: u64) -> [f64; D] {
    std::array::from_fn(|k| radical_inverse(index, PRIMES[k]))
}
