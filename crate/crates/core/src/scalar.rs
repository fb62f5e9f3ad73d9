//! Scalar types shared by the holomorphic observables.
//!
//! Observables are written once, generically over [`Scalar`], and evaluated
//! either on plain complex numbers or on [`Bicomplex`] numbers. The second
//! imaginary unit of a bicomplex number carries the complex-step derivative:
//! for holomorphic `f`, `f(z + j·h)` has `j`-part `h·f'(z)` with no
//! subtractive cancellation, so `h = 1e-30` gives first derivatives to
//! machine precision.

use num_complex::Complex64;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub type C = Complex64;

pub const ZERO: C = C::new(0.0, 0.0);
pub const ONE: C = C::new(1.0, 0.0);
pub const I: C = C::new(0.0, 1.0);

pub const COMPLEX_STEP: f64 = 1e-30;

pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_c(z: C) -> Self;
    fn sqrt(self) -> Self;
    /// The ordinary complex value, dropping any derivative part.
    fn primal(self) -> C;

    fn from_f(x: f64) -> Self {
        Self::from_c(C::new(x, 0.0))
    }
    fn zero() -> Self {
        Self::from_c(ZERO)
    }
    fn scale(self, k: C) -> Self {
        self * Self::from_c(k)
    }
}

impl Scalar for C {
    fn from_c(z: C) -> Self {
        z
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
    fn primal(self) -> C {
        self
    }
}

/// `a + j·b` with `j² = −1` commuting with `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bicomplex {
    pub a: C,
    pub b: C,
}

impl Bicomplex {
    pub fn new(a: C, b: C) -> Self {
        Self { a, b }
    }
}

impl Add for Bicomplex {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b)
    }
}

impl Sub for Bicomplex {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b)
    }
}

impl Mul for Bicomplex {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.a * o.a - self.b * o.b, self.a * o.b + self.b * o.a)
    }
}

impl Div for Bicomplex {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let d = o.a * o.a + o.b * o.b;
        let n = self * Self::new(o.a, -o.b);
        Self::new(n.a / d, n.b / d)
    }
}

impl Neg for Bicomplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a, -self.b)
    }
}

impl Scalar for Bicomplex {
    fn from_c(z: C) -> Self {
        Self::new(z, ZERO)
    }
    // Fixed-point refinement of (s + j·t)² = a + j·b, exact once |b| ≪ |a|,
    // which is the only regime complex-step evaluation uses.
    fn sqrt(self) -> Self {
        let mut s = self.a.sqrt();
        let mut t = self.b / (s * 2.0);
        for _ in 0..2 {
            s = (self.a + t * t).sqrt();
            t = self.b / (s * 2.0);
        }
        Self::new(s, t)
    }
    fn primal(self) -> C {
        self.a
    }
}

/// Gradient of a holomorphic function of `N` complex variables by complex step.
pub fn complex_step_gradient<const N: usize>(
    f: impl Fn(&[Bicomplex; N]) -> Bicomplex,
    z: &[C; N],
) -> [C; N] {
    let base: [Bicomplex; N] = z.map(Bicomplex::from_c);
    let mut grad = [ZERO; N];
    for k in 0..N {
        let mut x = base;
        x[k].b = C::new(COMPLEX_STEP, 0.0);
        grad[k] = f(&x).b / COMPLEX_STEP;
    }
    grad
}
