//! The complexified spherical pendulum on CS²×CS²: the integrals H and J,
//! the factorwise Lie-Poisson bracket, Hamiltonian vector fields and flows.
//!
//! Coordinates are ordered (x1, y1, z1, x2, y2, z2). With the structure
//! constant c of [`crate::orbit::structure_constant`], the bracket is
//! {f, g} = c·Σ_k x_k·(∇_k f × ∇_k g) and the flow of f is ẋ_k = c·∇_k f × x_k.

mod flow;
mod invariance;

pub use flow::{flow, FlowControls, FlowError, StateRecord, Trajectory};
pub use invariance::{check_invariance, InvarianceReport};

use crate::error::{Error, Result};
use crate::orbit::{self, cross, dot3, OrbitPoint, ZETA_CS2};
use crate::scalar::{complex_step_gradient, Bicomplex, Scalar, C, I, ZERO};
use serde::{Deserialize, Serialize};

pub const SINGULAR_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductPoint {
    pub x: [C; 6],
}

impl ProductPoint {
    pub fn new(x: [C; 6]) -> Result<Self> {
        Self::from_factors(
            &OrbitPoint::cs2(x[0], x[1], x[2])?,
            &OrbitPoint::cs2(x[3], x[4], x[5])?,
        )
    }
    pub fn from_factors(a: &OrbitPoint, b: &OrbitPoint) -> Result<Self> {
        for f in [a, b] {
            if f.zeta != ZETA_CS2 {
                return Err(Error::NotMember { space: "CS²", residual: (f.zeta - ZETA_CS2).norm() });
            }
            OrbitPoint::new(f.x, f.y, f.z, f.zeta)?;
        }
        Ok(Self { x: [a.x, a.y, a.z, b.x, b.y, b.z] })
    }
    pub fn unchecked(x: [C; 6]) -> Self {
        Self { x }
    }
    pub fn real(a: [f64; 3], b: [f64; 3]) -> Result<Self> {
        Self::from_factors(&OrbitPoint::real(a)?, &OrbitPoint::real(b)?)
    }
    pub fn factor(&self, k: usize) -> OrbitPoint {
        OrbitPoint::unchecked([self.x[3 * k], self.x[3 * k + 1], self.x[3 * k + 2]], ZETA_CS2)
    }
    pub fn casimirs(&self) -> [C; 2] {
        [self.factor(0).quadric(), self.factor(1).quadric()]
    }
    pub fn distance(&self, o: &Self) -> f64 {
        (0..6).map(|k| (self.x[k] - o.x[k]).norm_sqr()).sum::<f64>().sqrt()
    }
    pub fn max_imaginary(&self) -> f64 {
        self.x.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

/// A holomorphic function on CS²×CS² in the six ambient coordinates.
pub trait ProductFn: Sync {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> S;

    fn value(&self, x: &[C; 6]) -> C {
        self.eval(x)
    }
    /// Gradient in the ambient coordinates; complex step unless overridden.
    fn gradient(&self, x: &[C; 6]) -> [C; 6] {
        complex_step_gradient(|y: &[Bicomplex; 6]| self.eval(y), x)
    }
    /// |radicand| for functions with a square-root singular set.
    fn singularity(&self, _x: &[C; 6]) -> Option<f64> {
        None
    }
}

pub fn complex_step_product_gradient<F: ProductFn + ?Sized>(f: &F, x: &[C; 6]) -> [C; 6] {
    complex_step_gradient(|y: &[Bicomplex; 6]| f.eval(y), x)
}

/// (x1 + x2)² + (y1 + y2)² + (z1 − z2)².
pub fn radicand<S: Scalar>(x: &[S; 6]) -> S {
    let a = x[0] + x[3];
    let b = x[1] + x[4];
    let c = x[2] - x[5];
    a * a + b * b + c * c
}

/// H = ½(x1x2 + y1y2 − z1z2) + (z1 − z2)/√radicand.
#[derive(Clone, Copy, Debug, Default)]
pub struct Energy;

impl ProductFn for Energy {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> S {
        let half = S::from_f(0.5);
        half * (x[0] * x[3] + x[1] * x[4] - x[2] * x[5]) + (x[2] - x[5]) / radicand(x).sqrt()
    }
    fn gradient(&self, x: &[C; 6]) -> [C; 6] {
        energy_gradient(x)
    }
    fn singularity(&self, x: &[C; 6]) -> Option<f64> {
        Some(radicand(x).norm())
    }
}

pub fn energy_gradient(x: &[C; 6]) -> [C; 6] {
    let r = radicand(x).sqrt();
    let r3 = r * r * r;
    let d = x[2] - x[5];
    let sx = x[0] + x[3];
    let sy = x[1] + x[4];
    [
        x[3] * 0.5 - d * sx / r3,
        x[4] * 0.5 - d * sy / r3,
        -x[5] * 0.5 + 1.0 / r - d * d / r3,
        x[0] * 0.5 - d * sx / r3,
        x[1] * 0.5 - d * sy / r3,
        -x[2] * 0.5 - 1.0 / r + d * d / r3,
    ]
}

/// J = (z1 + z2)/(2i).
#[derive(Clone, Copy, Debug, Default)]
pub struct Momentum;

impl ProductFn for Momentum {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> S {
        (x[2] + x[5]) / S::from_c(I * 2.0)
    }
    fn gradient(&self, _x: &[C; 6]) -> [C; 6] {
        let k = 1.0 / (I * 2.0);
        [ZERO, ZERO, k, ZERO, ZERO, k]
    }
}

/// k·f for a constant k (for instance i·H, the generator of the real-form
/// flow on an imaginary-symplectic fixed set).
#[derive(Clone, Copy, Debug)]
pub struct Scaled<F>(pub C, pub F);

impl<F: ProductFn> ProductFn for Scaled<F> {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> S {
        self.1.eval(x).scale(self.0)
    }
    fn gradient(&self, x: &[C; 6]) -> [C; 6] {
        self.1.gradient(x).map(|g| g * self.0)
    }
    fn singularity(&self, x: &[C; 6]) -> Option<f64> {
        self.1.singularity(x)
    }
}

/// A single ambient coordinate.
#[derive(Clone, Copy, Debug)]
pub struct Coordinate(pub usize);

impl ProductFn for Coordinate {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> S {
        x[self.0]
    }
}

/// x_k² + y_k² + z_k² for factor k.
#[derive(Clone, Copy, Debug)]
pub struct Casimir(pub usize);

impl ProductFn for Casimir {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> S {
        let o = 3 * self.0;
        x[o] * x[o] + x[o + 1] * x[o + 1] + x[o + 2] * x[o + 2]
    }
}

/// Σ a_k x_k + Σ b_kl x_k x_l, used as a random test observable.
#[derive(Clone, Copy, Debug)]
pub struct Quadratic {
    pub a: [C; 6],
    pub b: [[C; 6]; 6],
}

impl ProductFn for Quadratic {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> S {
        let mut s = S::zero();
        for k in 0..6 {
            s = s + x[k].scale(self.a[k]);
            for l in 0..6 {
                s = s + (x[k] * x[l]).scale(self.b[k][l]);
            }
        }
        s
    }
}

/// The named generators accepted by the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    H,
    J,
    #[serde(rename = "iH")]
    IH,
    #[serde(rename = "iJ")]
    IJ,
}

impl Generator {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "H" => Ok(Self::H),
            "J" => Ok(Self::J),
            "iH" => Ok(Self::IH),
            "iJ" => Ok(Self::IJ),
            _ => Err(Error::InvalidArgument(format!("unknown hamiltonian {s:?} (expected H, J, iH or iJ)"))),
        }
    }
    pub fn name(&self) -> &'static str {
        match self {
            Self::H => "H",
            Self::J => "J",
            Self::IH => "iH",
            Self::IJ => "iJ",
        }
    }
    fn scale(&self) -> C {
        match self {
            Self::H | Self::J => C::new(1.0, 0.0),
            Self::IH | Self::IJ => I,
        }
    }
    fn uses_energy(&self) -> bool {
        matches!(self, Self::H | Self::IH)
    }
}

impl ProductFn for Generator {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> S {
        let v = if self.uses_energy() { Energy.eval(x) } else { Momentum.eval(x) };
        v.scale(self.scale())
    }
    fn gradient(&self, x: &[C; 6]) -> [C; 6] {
        let g = if self.uses_energy() { Energy.gradient(x) } else { Momentum.gradient(x) };
        g.map(|v| v * self.scale())
    }
    fn singularity(&self, x: &[C; 6]) -> Option<f64> {
        if self.uses_energy() {
            Energy.singularity(x)
        } else {
            None
        }
    }
}

fn check_radicand(pt: &ProductPoint, tol: f64) -> Result<()> {
    let r = radicand(&pt.x).norm();
    if r < tol {
        return Err(Error::Singularity { radicand: r, location: pt.x });
    }
    Ok(())
}

pub fn hamiltonian_h(pt: &ProductPoint) -> Result<C> {
    check_radicand(pt, SINGULAR_TOL)?;
    Ok(Energy.value(&pt.x))
}

pub fn hamiltonian_j(pt: &ProductPoint) -> C {
    Momentum.value(&pt.x)
}

fn split(g: &[C; 6]) -> ([C; 3], [C; 3]) {
    ([g[0], g[1], g[2]], [g[3], g[4], g[5]])
}

/// Bracket from precomputed ambient gradients.
pub fn bracket_from_gradients(x: &[C; 6], df: &[C; 6], dg: &[C; 6]) -> C {
    let c = orbit::structure_constant();
    let (x1, x2) = split(x);
    let (f1, f2) = split(df);
    let (g1, g2) = split(dg);
    c * (dot3(&x1, &cross(&f1, &g1)) + dot3(&x2, &cross(&f2, &g2)))
}

pub fn product_bracket<F: ProductFn + ?Sized, G: ProductFn + ?Sized>(f: &F, g: &G, pt: &ProductPoint) -> C {
    bracket_from_gradients(&pt.x, &f.gradient(&pt.x), &g.gradient(&pt.x))
}

/// Vector field from an ambient gradient: c·∇_k f × x_k on each factor.
pub fn field_from_gradient(x: &[C; 6], df: &[C; 6]) -> [C; 6] {
    let c = orbit::structure_constant();
    let (x1, x2) = split(x);
    let (f1, f2) = split(df);
    let a = cross(&f1, &x1);
    let b = cross(&f2, &x2);
    [a[0] * c, a[1] * c, a[2] * c, b[0] * c, b[1] * c, b[2] * c]
}

pub fn hamiltonian_vector_field<F: ProductFn + ?Sized>(f: &F, pt: &ProductPoint) -> [C; 6] {
    field_from_gradient(&pt.x, &f.gradient(&pt.x))
}

/// Ω_KKS on each factor, summed.
pub fn product_two_form(pt: &ProductPoint, v: &[C; 6], w: &[C; 6]) -> C {
    let (v1, v2) = split(v);
    let (w1, w2) = split(w);
    orbit::kks_two_form(&pt.factor(0), &v1, &w1) + orbit::kks_two_form(&pt.factor(1), &v2, &w2)
}

/// Project an ambient vector onto the tangent space of CS²×CS² at `pt`.
pub fn product_tangent(pt: &ProductPoint, u: &[C; 6]) -> [C; 6] {
    let (u1, u2) = split(u);
    let a = orbit::tangent_projection(&pt.factor(0), &u1);
    let b = orbit::tangent_projection(&pt.factor(1), &u2);
    [a[0], a[1], a[2], b[0], b[1], b[2]]
}

/// One Newton step per factor towards x·x = 1 along the minimal-norm direction.
pub fn project_to_product(x: &[C; 6]) -> [C; 6] {
    let mut out = *x;
    for k in 0..2 {
        let o = 3 * k;
        let v = [x[o], x[o + 1], x[o + 2]];
        let g = dot3(&v, &v) - 1.0;
        let n2: f64 = v.iter().map(|z| 4.0 * z.norm_sqr()).sum();
        if n2 > 0.0 {
            for i in 0..3 {
                out[o + i] = v[i] - g * (v[i] * 2.0).conj() / n2;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realstruct::{apply_product, RealStructureId};
    use crate::sample::Sampler;
    use crate::scalar::ONE;

    pub(crate) fn random_product(s: &mut Sampler, scale: f64) -> ProductPoint {
        loop {
            let pt = ProductPoint::from_factors(&s.cs2_point(scale), &s.cs2_point(scale)).unwrap();
            if radicand(&pt.x).norm() > 1e-3 {
                return pt;
            }
        }
    }

    fn random_quadratic(s: &mut Sampler) -> Quadratic {
        let mut b = [[ZERO; 6]; 6];
        for row in b.iter_mut() {
            for v in row.iter_mut() {
                *v = s.complex() * 0.3;
            }
        }
        Quadratic { a: [0; 6].map(|_| s.complex()), b }
    }

    #[test]
    fn analytic_and_complex_step_gradients_agree() {
        let mut s = Sampler::new(40);
        for _ in 0..500 {
            let pt = random_product(&mut s, 1.0);
            let a = Energy.gradient(&pt.x);
            let b = complex_step_product_gradient(&Energy, &pt.x);
            for k in 0..6 {
                assert!((a[k] - b[k]).norm() < 1e-8 * (1.0 + a[k].norm()));
            }
        }
    }

    #[test]
    fn energy_and_momentum_commute() {
        let mut s = Sampler::new(41);
        for _ in 0..500 {
            let pt = random_product(&mut s, 1.0);
            assert!(product_bracket(&Energy, &Momentum, &pt).norm() < 1e-10);
        }
    }

    #[test]
    fn bracket_examples() {
        let mut s = Sampler::new(42);
        let c = orbit::structure_constant();
        for _ in 0..50 {
            let pt = random_product(&mut s, 1.0);
            assert_eq!(product_bracket(&Coordinate(0), &Coordinate(4), &pt), ZERO);
            assert!((product_bracket(&Coordinate(0), &Coordinate(1), &pt) - c * pt.x[2]).norm() < 1e-12);
            let q = random_quadratic(&mut s);
            assert!(product_bracket(&Casimir(0), &q, &pt).norm() < 1e-9);
            let f = random_quadratic(&mut s);
            let a = product_bracket(&f, &q, &pt);
            let b = product_bracket(&q, &f, &pt);
            assert!((a + b).norm() < 1e-10 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn product_jacobi_identity() {
        let mut s = Sampler::new(43);
        for _ in 0..30 {
            let pt = random_product(&mut s, 1.0);
            let (f, g, h) = (random_quadratic(&mut s), random_quadratic(&mut s), random_quadratic(&mut s));
            let outer = |a: &Quadratic, b: &Quadratic, c: &Quadratic| {
                let inner = |x: &[C; 6]| product_bracket(b, c, &ProductPoint::unchecked(*x));
                let grad = holomorphic_fd_gradient(&inner, &pt.x, 1e-3);
                bracket_from_gradients(&pt.x, &a.gradient(&pt.x), &grad)
            };
            let jac = outer(&f, &g, &h) + outer(&g, &h, &f) + outer(&h, &f, &g);
            assert!(jac.norm() < 1e-8, "Jacobi defect {}", jac.norm());
        }
    }

    pub(crate) fn holomorphic_fd_gradient(f: &dyn Fn(&[C; 6]) -> C, x: &[C; 6], h: f64) -> [C; 6] {
        let dirs = [ONE, I, -ONE, -I];
        std::array::from_fn(|k| {
            let mut acc = ZERO;
            for d in dirs {
                let mut y = *x;
                y[k] += d * h;
                acc += f(&y) / d;
            }
            acc / (4.0 * h)
        })
    }

    #[test]
    fn vector_fields_are_tangent() {
        let mut s = Sampler::new(44);
        for _ in 0..100 {
            let pt = random_product(&mut s, 1.0);
            for v in [hamiltonian_vector_field(&Energy, &pt), hamiltonian_vector_field(&random_quadratic(&mut s), &pt)] {
                for k in 0..2 {
                    let o = 3 * k;
                    let d = pt.x[o] * v[o] + pt.x[o + 1] * v[o + 1] + pt.x[o + 2] * v[o + 2];
                    assert!(d.norm() < 1e-10 * (1.0 + v.iter().map(|z| z.norm()).sum::<f64>()));
                }
            }
            let z = hamiltonian_vector_field(&Casimir(0), &pt);
            assert!(z.iter().all(|w| w.norm() < 1e-12));
        }
    }

    #[test]
    fn rotation_generator_field() {
        let pt = ProductPoint::real([0.6, 0.0, 0.8], [0.0, 1.0, 0.0]).unwrap();
        let v = hamiltonian_vector_field(&Coordinate(2), &pt);
        // c·e_z × x = −2·(−y, x, 0)
        assert!((v[0] - C::new(0.0, 0.0)).norm() < 1e-15);
        assert!((v[1] - C::new(-1.2, 0.0)).norm() < 1e-15);
        assert_eq!(v[2], ZERO);
        assert!(v[3..].iter().all(|w| w.norm() == 0.0));
    }

    #[test]
    fn compatible_fields_are_real_on_the_real_form() {
        let mut s = Sampler::new(45);
        for _ in 0..100 {
            let a = s.s2_point();
            let b = s.s2_point();
            let pt = ProductPoint::from_factors(&a, &b).unwrap();
            if radicand(&pt.x).norm() < 1e-3 {
                continue;
            }
            let v = hamiltonian_vector_field(&Energy, &pt);
            assert!(v.iter().all(|w| w.im.abs() < 1e-12));
        }
    }

    #[test]
    fn two_form_inverts_product_bracket() {
        let mut s = Sampler::new(46);
        for _ in 0..50 {
            let pt = random_product(&mut s, 1.0);
            let (f, g) = (random_quadratic(&mut s), random_quadratic(&mut s));
            let xf = hamiltonian_vector_field(&f, &pt);
            let xg = hamiltonian_vector_field(&g, &pt);
            let b = product_bracket(&f, &g, &pt);
            assert!((product_two_form(&pt, &xf, &xg) - b).norm() < 1e-10 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn singular_set_is_reported() {
        let pt = ProductPoint::real([0.6, 0.0, 0.8], [-0.6, 0.0, 0.8]).unwrap();
        assert!(matches!(hamiltonian_h(&pt), Err(Error::Singularity { .. })));
    }

    #[test]
    fn generator_names_roundtrip() {
        for g in [Generator::H, Generator::J, Generator::IH, Generator::IJ] {
            assert_eq!(Generator::parse(g.name()).unwrap(), g);
        }
        assert!(Generator::parse("K").is_err());
    }

    #[test]
    fn energy_on_conjugate_diagonal_is_real() {
        let mut s = Sampler::new(47);
        for _ in 0..100 {
            let xi = s.cs2_point(1.5);
            let pt = apply_product(RealStructureId::SwapConjugation, &ProductPoint::from_factors(&xi, &xi).unwrap()).unwrap();
            let pt = ProductPoint::from_factors(&xi, &pt.factor(1)).unwrap();
            let h = hamiltonian_h(&pt).unwrap();
            assert!(h.im.abs() < 1e-12);
            assert!(hamiltonian_j(&pt).im.abs() < 1e-12);
        }
    }
}
