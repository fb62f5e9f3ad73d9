//! The involution catalogue: the twelve brane involutions of the
//! biquaternions (four columns R, S, T, U in each of the three
//! identifications), their descended maps on the reduced spaces, the two
//! involutions of CS²×CS² and the real forms of GL(1,C) they are paired with.
//!
//! Every involution here is real-linear in its ambient coordinates. Each
//! column is conjugate-linear in two rows and complex-linear in one; the
//! complex-linear cells are the branes.

use crate::algebra::{conjugate_adjoint, covector_to_matrix, pauli_basis, trace_covector, Biquaternion, Mat2C};
use crate::dynamics::{product_tangent, product_two_form, project_to_product, ProductFn, ProductPoint};
use crate::error::{Error, Result};
use crate::orbit::{self, kks_pairing, kks_two_form, tangent_projection, CotangentPoint, OrbitPoint, ZETA_CS2, ZETA_ICS2};
use crate::phase::{self, biquat_to_phase, gl1_action, momentum_p, omega, phase_to_biquat, Axis, PhasePoint};
use crate::report::{max_residual, CheckReport};
use crate::sample::Sampler;
use crate::scalar::{C, I, ONE, ZERO};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Tolerance used to decide a classification from sampled residuals.
pub const CLASSIFY_TOL: f64 = 1e-9;
const FD_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Column {
    R,
    S,
    T,
    U,
}

impl Column {
    pub const ALL: [Column; 4] = [Column::R, Column::S, Column::T, Column::U];
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RealStructureId {
    /// A table cell acting on C²⊕C² in the given identification.
    Phase { column: Column, axis: Axis },
    /// The descended map on the reduced space of that identification:
    /// T*CP¹ (I), iCS² (J) or CS² (K).
    Reduced { column: Column, axis: Axis },
    /// A table column acting on the biquaternions themselves.
    Biquaternion(Column),
    /// Coordinate conjugation on CS²×CS²; fixed set S²×S².
    ProductConjugation,
    /// (ξ1, ξ2) ↦ (Ũξ2, Ũξ1) with Ũ the K-row U map; fixed set a
    /// conjugate-diagonal copy of CS².
    SwapConjugation,
    /// The real form of GL(1,C) paired with a column: z̄ for R, 1/z̄ for S, T.
    GroupPartner(Column),
}

impl RealStructureId {
    /// The conjugation (q, p) ↦ (q̄, p̄) and its partners in the standard triple.
    pub const CONJUGATION: Self = Self::Phase { column: Column::R, axis: Axis::J };
    pub const SWAP: Self = Self::Phase { column: Column::S, axis: Axis::K };
    pub const TWISTED_SWAP: Self = Self::Phase { column: Column::T, axis: Axis::K };

    /// The three real structures on C²⊕C² with their reduced maps and the
    /// real forms of GL(1,C) they are equivariant for.
    pub const STANDARD_TRIPLE: [(Self, Self, Self); 3] = [
        (Self::CONJUGATION, Self::Reduced { column: Column::R, axis: Axis::J }, Self::GroupPartner(Column::R)),
        (Self::SWAP, Self::Reduced { column: Column::S, axis: Axis::K }, Self::GroupPartner(Column::S)),
        (Self::TWISTED_SWAP, Self::Reduced { column: Column::T, axis: Axis::K }, Self::GroupPartner(Column::T)),
    ];

    /// Every id in the catalogue.
    pub fn all() -> Vec<Self> {
        let mut v = Vec::new();
        for axis in Axis::ALL {
            for column in Column::ALL {
                v.push(Self::Phase { column, axis });
                v.push(Self::Reduced { column, axis });
            }
        }
        for column in Column::ALL {
            v.push(Self::Biquaternion(column));
        }
        v.push(Self::ProductConjugation);
        v.push(Self::SwapConjugation);
        for column in [Column::R, Column::S, Column::T] {
            v.push(Self::GroupPartner(column));
        }
        v
    }

    pub fn name(&self) -> String {
        match self {
            Self::Phase { column, axis } => format!("{column}@C2_{axis}"),
            Self::Reduced { column, axis } => format!("{column}~@{}", reduced_space_name(*axis)),
            Self::Biquaternion(c) => format!("{c}@H_C"),
            Self::ProductConjugation => "Sigma".into(),
            Self::SwapConjugation => "Upsilon".into(),
            Self::GroupPartner(Column::R) => "rho".into(),
            Self::GroupPartner(Column::S) => "sigma".into(),
            Self::GroupPartner(Column::T) => "tau".into(),
            Self::GroupPartner(Column::U) => "group-U".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::all()
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown real structure {s:?}")))
    }

    pub fn domain(&self) -> &'static str {
        match self {
            Self::Phase { axis: Axis::I, .. } => "C²_I⊕C²_I",
            Self::Phase { axis: Axis::J, .. } => "C²_J⊕C²_J",
            Self::Phase { axis: Axis::K, .. } => "C²_K⊕C²_K",
            Self::Reduced { axis, .. } => reduced_space_name(*axis),
            Self::Biquaternion(_) => "H⊗C",
            Self::ProductConjugation | Self::SwapConjugation => "CS²×CS²",
            Self::GroupPartner(_) => "GL(1,C)",
        }
    }

    /// The classification the catalogue claims for this id.
    pub fn claimed(&self) -> Classification {
        match self {
            Self::Phase { column, axis } | Self::Reduced { column, axis } => cell_classification(*column, *axis),
            Self::Biquaternion(c) => cell_classification(*c, Axis::I),
            Self::ProductConjugation => Classification::RealSymplectic,
            Self::SwapConjugation => Classification::ImaginarySymplectic,
            Self::GroupPartner(_) => Classification::NotApplicable,
        }
    }

    fn is_valid(&self) -> bool {
        !matches!(self, Self::GroupPartner(Column::U))
    }
}

impl fmt::Display for RealStructureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

pub fn reduced_space_name(axis: Axis) -> &'static str {
    match axis {
        Axis::I => "T*CP1",
        Axis::J => "iCS2",
        Axis::K => "CS2",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Conjugate-linear with A*Ω = Ω̄.
    RealSymplectic,
    /// Conjugate-linear with A*Ω = −Ω̄.
    ImaginarySymplectic,
    /// Complex-linear with A*Ω = Ω.
    ComplexSymplectic,
    /// Complex-linear with A*Ω = −Ω.
    ComplexAntiSymplectic,
    Neither,
    NotApplicable,
}

impl Classification {
    pub fn is_conjugate_linear(&self) -> bool {
        matches!(self, Self::RealSymplectic | Self::ImaginarySymplectic)
    }
    pub fn is_complex_linear(&self) -> bool {
        matches!(self, Self::ComplexSymplectic | Self::ComplexAntiSymplectic)
    }
}

fn cell_classification(column: Column, axis: Axis) -> Classification {
    use Classification::*;
    match (axis, column) {
        (Axis::I, Column::U) | (Axis::J, Column::R) | (Axis::K, Column::S) | (Axis::K, Column::T) => RealSymplectic,
        (Axis::I, Column::R) | (Axis::J, Column::S) | (Axis::J, Column::T) | (Axis::K, Column::U) => ImaginarySymplectic,
        _ => ComplexAntiSymplectic,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedSetLabel {
    /// S² ⊂ CS²: real coordinates.
    Sphere,
    /// H²⊔H² ⊂ CS²: x real, y and z imaginary.
    Hyperboloids,
    /// S¹×R ⊂ iCS²: x and z imaginary, y real.
    CylinderS1R,
    /// CS¹ ⊂ CS²: x = 0.
    ComplexCircle,
    /// iCS¹ ⊂ iCS²: x = 0.
    ImaginaryComplexCircle,
    /// T*RP¹ ⊂ T*CP¹.
    CotangentRP1,
    /// The zero section CP¹ ⊂ T*CP¹.
    ZeroSection,
    /// The two cotangent fibres over [1 : ±1].
    FibrePair,
    /// S²×S² ⊂ CS²×CS².
    SphereProduct,
    /// {(ξ, Ũξ)} ⊂ CS²×CS².
    ConjugateDiagonal,
}

impl FixedSetLabel {
    pub const ALL: [FixedSetLabel; 10] = [
        Self::Sphere,
        Self::Hyperboloids,
        Self::CylinderS1R,
        Self::ComplexCircle,
        Self::ImaginaryComplexCircle,
        Self::CotangentRP1,
        Self::ZeroSection,
        Self::FibrePair,
        Self::SphereProduct,
        Self::ConjugateDiagonal,
    ];

    pub fn symbol(&self) -> &'static str {
        match self {
            Self::Sphere => "S²",
            Self::Hyperboloids => "H²⊔H²",
            Self::CylinderS1R => "S¹×R",
            Self::ComplexCircle => "CS¹",
            Self::ImaginaryComplexCircle => "iCS¹",
            Self::CotangentRP1 => "T*RP¹",
            Self::ZeroSection => "CP¹",
            Self::FibrePair => "C⊔C",
            Self::SphereProduct => "S²×S²",
            Self::ConjugateDiagonal => "conj-diagonal CS²",
        }
    }

    /// The involution whose fixed set this is.
    pub fn id(&self) -> RealStructureId {
        use RealStructureId::*;
        match self {
            Self::Sphere => Reduced { column: Column::S, axis: Axis::K },
            Self::Hyperboloids => Reduced { column: Column::T, axis: Axis::K },
            Self::CylinderS1R => Reduced { column: Column::R, axis: Axis::J },
            Self::ComplexCircle => Reduced { column: Column::R, axis: Axis::K },
            Self::ImaginaryComplexCircle => Reduced { column: Column::U, axis: Axis::J },
            Self::CotangentRP1 => Reduced { column: Column::U, axis: Axis::I },
            Self::ZeroSection => Reduced { column: Column::S, axis: Axis::I },
            Self::FibrePair => Reduced { column: Column::T, axis: Axis::I },
            Self::SphereProduct => ProductConjugation,
            Self::ConjugateDiagonal => SwapConjugation,
        }
    }

    pub fn ambient(&self) -> &'static str {
        self.id().domain()
    }

    /// Residual of the defining real-variety equations, independent of the
    /// involution.
    pub fn residual(&self, pt: &Point) -> Result<f64> {
        let bad = || Error::DomainMismatch { id: self.symbol().into(), found: pt.kind() };
        match (self, pt) {
            (Self::Sphere | Self::Hyperboloids | Self::ComplexCircle, Point::Orbit(o)) if o.zeta == ZETA_CS2 => {
                let [x, y, z] = o.coords();
                let eq = match self {
                    Self::Sphere => x.im.abs() + y.im.abs() + z.im.abs(),
                    Self::Hyperboloids => x.im.abs() + y.re.abs() + z.re.abs(),
                    _ => x.norm(),
                };
                Ok(eq + o.membership_residual())
            }
            (Self::CylinderS1R | Self::ImaginaryComplexCircle, Point::Orbit(o)) if o.zeta == ZETA_ICS2 => {
                let [x, y, z] = o.coords();
                let eq = match self {
                    Self::CylinderS1R => x.re.abs() + y.im.abs() + z.re.abs(),
                    _ => x.norm(),
                };
                Ok(eq + o.membership_residual())
            }
            (Self::CotangentRP1 | Self::ZeroSection | Self::FibrePair, Point::Cotangent(c)) => {
                let level = phase::mu_trace(&c.as_phase()).norm();
                let eq = match self {
                    Self::ZeroSection => c.p[0].norm() + c.p[1].norm(),
                    Self::CotangentRP1 => {
                        let qq = Mat2C::outer(&c.q, &c.q.map(|z| z.conj()));
                        let qp = Mat2C::outer(&c.q, &c.p);
                        qq.entries().iter().chain(qp.entries().iter()).map(|z| z.im.abs()).sum()
                    }
                    _ => [ONE, -ONE]
                        .iter()
                        .map(|s| (c.q[0] - s * c.q[1]).norm() + (c.p[0] + s * c.p[1]).norm())
                        .fold(f64::INFINITY, f64::min),
                };
                Ok(eq + level)
            }
            (Self::SphereProduct, Point::Product(p)) => {
                let cas: f64 = p.casimirs().iter().map(|c| (c - 1.0).norm()).sum();
                Ok(p.max_imaginary() + cas)
            }
            (Self::ConjugateDiagonal, Point::Product(p)) => {
                let x = p.x;
                let r = (x[3] - x[0].conj()).norm() + (x[4] - x[1].conj()).norm() + (x[5] + x[2].conj()).norm();
                let cas: f64 = p.casimirs().iter().map(|c| (c - 1.0).norm()).sum();
                Ok(r + cas)
            }
            _ => Err(bad()),
        }
    }

    /// A point of the fixed set built from an explicit parametrization.
    pub fn sample(&self, s: &mut Sampler) -> Point {
        let re = |v: f64| C::new(v, 0.0);
        let im = |v: f64| C::new(0.0, v);
        match self {
            Self::Sphere => Point::Orbit(s.s2_point()),
            Self::Hyperboloids => {
                let (b, c) = (s.normal(), s.normal());
                let sign = if s.uniform(0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
                let x = sign * (1.0 + b * b + c * c).sqrt();
                Point::Orbit(OrbitPoint::unchecked([re(x), im(b), im(c)], ZETA_CS2))
            }
            Self::CylinderS1R => {
                let y = s.normal();
                let phi = s.uniform(0.0, std::f64::consts::TAU);
                let r = (1.0 + y * y).sqrt();
                Point::Orbit(OrbitPoint::unchecked([im(r * phi.cos()), re(y), im(r * phi.sin())], ZETA_ICS2))
            }
            Self::ComplexCircle | Self::ImaginaryComplexCircle => {
                let w = s.complex();
                let k = if *self == Self::ComplexCircle { ONE } else { I };
                let zeta = if *self == Self::ComplexCircle { ZETA_CS2 } else { ZETA_ICS2 };
                Point::Orbit(OrbitPoint::unchecked([ZERO, k * w.cos(), k * w.sin()], zeta))
            }
            Self::ZeroSection => {
                let q = [s.complex(), s.complex()];
                let n = (q[0].norm_sqr() + q[1].norm_sqr()).sqrt();
                Point::Cotangent(CotangentPoint { q: q.map(|z| z / n), p: [ZERO; 2] })
            }
            Self::FibrePair => {
                let sign = if s.uniform(0.0, 1.0) < 0.5 { -ONE } else { ONE };
                let ph = s.unit_complex() * std::f64::consts::FRAC_1_SQRT_2;
                let beta = s.complex();
                Point::Cotangent(CotangentPoint { q: [ph, sign * ph], p: [beta / ph, -sign * beta / ph] })
            }
            Self::CotangentRP1 => {
                let th = s.uniform(0.0, std::f64::consts::TAU);
                let lam = s.normal();
                let a = [th.cos(), th.sin()];
                let ph = s.unit_complex();
                Point::Cotangent(CotangentPoint {
                    q: a.map(|v| ph * v),
                    p: [-a[1], a[0]].map(|v| v * lam / ph),
                })
            }
            Self::SphereProduct => Point::Product(ProductPoint::unchecked({
                let (a, b) = (s.s2_point(), s.s2_point());
                [a.x, a.y, a.z, b.x, b.y, b.z]
            })),
            Self::ConjugateDiagonal => {
                let a = s.cs2_point(1.5);
                Point::Product(ProductPoint::unchecked([a.x, a.y, a.z, a.x.conj(), a.y.conj(), -a.z.conj()]))
            }
        }
    }
}

impl fmt::Display for FixedSetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A point of any catalogue domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    Phase(PhasePoint),
    Matrix(Mat2C),
    Orbit(OrbitPoint),
    Cotangent(CotangentPoint),
    Biquaternion(Biquaternion),
    Product(ProductPoint),
    Group(C),
}

impl Point {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Phase(_) => "phase point",
            Self::Matrix(_) => "matrix",
            Self::Orbit(_) => "orbit point",
            Self::Cotangent(_) => "cotangent point",
            Self::Biquaternion(_) => "biquaternion",
            Self::Product(_) => "product point",
            Self::Group(_) => "group element",
        }
    }

    /// Euclidean distance in ambient coordinates (∞ across point kinds).
    pub fn distance(&self, o: &Point) -> f64 {
        if self.kind() != o.kind() {
            return f64::INFINITY;
        }
        self.to_vec().iter().zip(o.to_vec()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    fn to_vec(self) -> Vec<C> {
        match self {
            Self::Phase(p) => p.as_array().to_vec(),
            Self::Matrix(m) => m.entries().to_vec(),
            Self::Orbit(o) => o.coords().to_vec(),
            Self::Cotangent(c) => c.as_phase().as_array().to_vec(),
            Self::Biquaternion(b) => b.coeffs().to_vec(),
            Self::Product(p) => p.x.to_vec(),
            Self::Group(g) => vec![g],
        }
    }

    fn like(&self, v: &[C]) -> Self {
        match self {
            Self::Phase(_) => Self::Phase(PhasePoint::from_array([v[0], v[1], v[2], v[3]])),
            Self::Matrix(_) => Self::Matrix(Mat2C::from_entries([v[0], v[1], v[2], v[3]])),
            Self::Orbit(o) => Self::Orbit(OrbitPoint::unchecked([v[0], v[1], v[2]], o.zeta)),
            Self::Cotangent(_) => Self::Cotangent(CotangentPoint { q: [v[0], v[1]], p: [v[2], v[3]] }),
            Self::Biquaternion(_) => Self::Biquaternion(Biquaternion::from_coeffs([v[0], v[1], v[2], v[3]])),
            Self::Product(_) => Self::Product(ProductPoint::unchecked([v[0], v[1], v[2], v[3], v[4], v[5]])),
            Self::Group(_) => Self::Group(v[0]),
        }
    }
}

/// q' = a·q* + b·p*, p' = c·q* + d·p*, where * is conjugation when
/// `conjugate` is set.
#[derive(Clone, Copy, Debug)]
struct PhaseMap {
    a: Mat2C,
    b: Mat2C,
    c: Mat2C,
    d: Mat2C,
    conjugate: bool,
}

impl PhaseMap {
    fn apply(&self, pt: &PhasePoint) -> PhasePoint {
        let (q, p) = if self.conjugate { (pt.q.map(|z| z.conj()), pt.p.map(|z| z.conj())) } else { (pt.q, pt.p) };
        let add = |x: [C; 2], y: [C; 2]| [x[0] + y[0], x[1] + y[1]];
        PhasePoint::new(
            add(self.a.mul_vec(&q), self.b.mul_vec(&p)),
            add(self.c.mul_vec(&q), self.d.mul_vec(&p)),
        )
    }
}

#[derive(Clone, Copy, Debug)]
enum MatOp {
    Id,
    Conj,
    Transpose,
    Adjoint,
}

/// ξ ↦ sign·m·op(ξ)·m.
#[derive(Clone, Copy, Debug)]
struct MatMap {
    sign: f64,
    m: Mat2C,
    op: MatOp,
}

impl MatMap {
    fn apply(&self, xi: &Mat2C) -> Mat2C {
        let x = match self.op {
            MatOp::Id => *xi,
            MatOp::Conj => xi.conj(),
            MatOp::Transpose => xi.transpose(),
            MatOp::Adjoint => xi.adjoint(),
        };
        (self.m * x * self.m).scale(C::new(self.sign, 0.0))
    }
}

fn phase_map(column: Column, axis: Axis) -> PhaseMap {
    let (ii, jj, kk) = pauli_basis();
    let one = Mat2C::identity();
    let zero = Mat2C::zero();
    let s = |k: C, m: &Mat2C| m.scale(k);
    let diag = |a: Mat2C, d: Mat2C, conjugate| PhaseMap { a, b: zero, c: zero, d, conjugate };
    let swap = |b: Mat2C, c: Mat2C, conjugate| PhaseMap { a: zero, b, c, d: zero, conjugate };
    match (axis, column) {
        (Axis::I, Column::R) => diag(s(-I, &ii), s(I, &ii), true),
        (Axis::I, Column::S) => diag(one, s(-ONE, &one), false),
        (Axis::I, Column::T) => diag(s(-I, &kk), s(I, &kk), false),
        (Axis::I, Column::U) => diag(one, one, true),
        (Axis::J, Column::R) => diag(one, one, true),
        (Axis::J, Column::S) => swap(s(-ONE, &one), s(-ONE, &one), true),
        (Axis::J, Column::T) => swap(s(-I, &jj), s(I, &jj), true),
        (Axis::J, Column::U) => swap(s(I, &kk), s(I, &kk), false),
        (Axis::K, Column::R) => swap(s(I, &kk), s(I, &kk), false),
        (Axis::K, Column::S) => swap(s(I, &one), s(I, &one), true),
        (Axis::K, Column::T) => swap(ii, ii, true),
        (Axis::K, Column::U) => diag(s(-I, &ii), s(I, &ii), true),
    }
}

fn mat_map(column: Column, axis: Axis) -> MatMap {
    let (ii, jj, kk) = pauli_basis();
    let one = Mat2C::identity();
    let mm = |sign, m, op| MatMap { sign, m, op };
    match (axis, column) {
        (Axis::I, Column::R) => mm(1.0, ii, MatOp::Conj),
        (Axis::I, Column::S) => mm(-1.0, one, MatOp::Id),
        (Axis::I, Column::T) => mm(1.0, kk, MatOp::Id),
        (Axis::I, Column::U) => mm(1.0, one, MatOp::Conj),
        (Axis::J, Column::R) => mm(1.0, one, MatOp::Conj),
        (Axis::J, Column::S) => mm(1.0, one, MatOp::Adjoint),
        (Axis::J, Column::T) => mm(-1.0, jj, MatOp::Adjoint),
        (Axis::J, Column::U) => mm(-1.0, kk, MatOp::Transpose),
        (Axis::K, Column::R) => mm(-1.0, kk, MatOp::Transpose),
        (Axis::K, Column::S) => mm(-1.0, one, MatOp::Adjoint),
        (Axis::K, Column::T) => mm(1.0, ii, MatOp::Adjoint),
        (Axis::K, Column::U) => mm(1.0, ii, MatOp::Conj),
    }
}

fn reduced_zeta(axis: Axis) -> C {
    match axis {
        Axis::I => ZERO,
        Axis::J => ZETA_ICS2,
        Axis::K => ZETA_CS2,
    }
}

fn coords_matrix(zeta: C, c: &[C; 3]) -> Mat2C {
    orbit::coords_to_matrix(&OrbitPoint::unchecked(*c, zeta))
}

fn matrix_coords(m: &Mat2C) -> [C; 3] {
    let (ii, jj, kk) = pauli_basis();
    [-m.pairing(&ii), -m.pairing(&jj), -m.pairing(&kk)]
}

fn ukk_coords(c: [C; 3]) -> [C; 3] {
    [c[0].conj(), c[1].conj(), -c[2].conj()]
}

/// The map on ambient coordinates, without membership checks or gauge
/// normalization.
fn map_vec(id: RealStructureId, v: &[C]) -> Vec<C> {
    use RealStructureId::*;
    match id {
        Phase { column, axis } | Reduced { column, axis: axis @ Axis::I } => {
            let pt = PhasePoint::from_array([v[0], v[1], v[2], v[3]]);
            phase_map(column, axis).apply(&pt).as_array().to_vec()
        }
        Reduced { column, axis } => {
            let zeta = reduced_zeta(axis);
            let m = mat_map(column, axis).apply(&coords_matrix(zeta, &[v[0], v[1], v[2]]));
            matrix_coords(&m).to_vec()
        }
        Biquaternion(column) => {
            let b = crate::algebra::Biquaternion::from_coeffs([v[0], v[1], v[2], v[3]]);
            let out = phase_map(column, Axis::I).apply(&biquat_to_phase(&b, Axis::I));
            phase_to_biquat(&out, Axis::I).coeffs().to_vec()
        }
        ProductConjugation => v.iter().map(|z| z.conj()).collect(),
        SwapConjugation => {
            let a = ukk_coords([v[3], v[4], v[5]]);
            let b = ukk_coords([v[0], v[1], v[2]]);
            vec![a[0], a[1], a[2], b[0], b[1], b[2]]
        }
        GroupPartner(Column::R) => vec![v[0].conj()],
        GroupPartner(_) => vec![1.0 / v[0].conj()],
    }
}

fn check_valid(id: RealStructureId) -> Result<()> {
    if id.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{id} is not in the catalogue")))
    }
}

fn mismatch(id: RealStructureId, pt: &Point) -> Error {
    Error::DomainMismatch { id: id.name(), found: pt.kind() }
}

fn normalize_cotangent(c: &CotangentPoint) -> CotangentPoint {
    let n = (c.q[0].norm_sqr() + c.q[1].norm_sqr()).sqrt();
    if n == 0.0 {
        return *c;
    }
    CotangentPoint { q: c.q.map(|z| z / n), p: c.p.map(|z| z * n) }
}

fn check_domain(id: RealStructureId, pt: &Point) -> Result<()> {
    use RealStructureId::*;
    let ok = match (id, pt) {
        (Phase { .. }, Point::Phase(_)) => true,
        (Reduced { axis: Axis::I, .. }, Point::Cotangent(c)) => {
            let s = c.as_phase().norm().max(1.0);
            let r = phase::mu_trace(&c.as_phase()).norm();
            if r > orbit::MEMBERSHIP_TOL * s * s {
                return Err(Error::NotMember { space: "T*CP1", residual: r });
            }
            true
        }
        (Reduced { axis, .. }, Point::Matrix(m)) => {
            let r = (m.trace() - reduced_zeta(axis)).norm() + m.det().norm();
            if r > orbit::MEMBERSHIP_TOL * m.norm().powi(2).max(1.0) {
                return Err(Error::NotMember { space: reduced_space_name(axis), residual: r });
            }
            true
        }
        (Reduced { axis, .. }, Point::Orbit(o)) if axis != Axis::I => {
            if o.zeta != reduced_zeta(axis) {
                return Err(mismatch(id, pt));
            }
            OrbitPoint::new(o.x, o.y, o.z, o.zeta)?;
            true
        }
        (Biquaternion(_), Point::Biquaternion(_)) => true,
        (ProductConjugation | SwapConjugation, Point::Product(_)) => true,
        (GroupPartner(_), Point::Group(g)) => {
            if g.norm() == 0.0 || !g.is_finite() {
                return Err(Error::InvalidGroupElement(format!("{g} is not invertible")));
            }
            true
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(mismatch(id, pt))
    }
}

fn apply_unchecked(id: RealStructureId, pt: &Point) -> Point {
    match (id, pt) {
        (RealStructureId::Reduced { column, axis }, Point::Matrix(m)) => Point::Matrix(mat_map(column, axis).apply(m)),
        (RealStructureId::Reduced { .. }, Point::Cotangent(_)) => {
            let out = pt.like(&map_vec(id, &pt.to_vec()));
            match out {
                Point::Cotangent(o) => Point::Cotangent(normalize_cotangent(&o)),
                _ => unreachable!(),
            }
        }
        _ => pt.like(&map_vec(id, &pt.to_vec())),
    }
}

pub fn apply(id: RealStructureId, pt: &Point) -> Result<Point> {
    check_valid(id)?;
    check_domain(id, pt)?;
    Ok(apply_unchecked(id, pt))
}

pub fn apply_product(id: RealStructureId, pt: &ProductPoint) -> Result<ProductPoint> {
    match apply(id, &Point::Product(*pt))? {
        Point::Product(p) => Ok(p),
        other => Err(mismatch(id, &other)),
    }
}

fn vec_dist(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn vec_norm(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Distance between pt and its image; zero exactly on the fixed set.
pub fn fixed_residual(id: RealStructureId, pt: &Point) -> Result<f64> {
    let img = apply(id, pt)?;
    Ok(match (pt, &img) {
        (Point::Cotangent(a), Point::Cotangent(b)) => a.phase_distance(b),
        _ => vec_dist(&pt.to_vec(), &img.to_vec()),
    })
}

pub fn is_fixed(id: RealStructureId, pt: &Point, tol: f64) -> Result<bool> {
    Ok(fixed_residual(id, pt)? <= tol)
}

const PROJECTION_ITERS: usize = 50;
const PROJECTION_TOL: f64 = 1e-12;

/// Newton step towards x·x = target along the minimal-norm direction.
fn quadric_step(c: &mut [C], target: C) -> f64 {
    let g = c[0] * c[0] + c[1] * c[1] + c[2] * c[2] - target;
    let n2: f64 = c.iter().map(|z| 4.0 * z.norm_sqr()).sum();
    if n2 > 0.0 {
        let k = g / n2;
        for z in c.iter_mut() {
            *z -= k * (*z * 2.0).conj();
        }
    }
    g.norm()
}

/// (pt + apply(pt))/2 followed by re-imposition of the variety, repeated
/// until the result is fixed.
pub fn project_to_fixed(id: RealStructureId, pt: &Point) -> Result<Point> {
    check_valid(id)?;
    check_domain(id, pt)?;
    let mut cur = *pt;
    let mut res = f64::INFINITY;
    for _ in 0..PROJECTION_ITERS {
        res = fixed_residual_unchecked(id, &cur);
        if res <= PROJECTION_TOL * vec_norm(&cur.to_vec()).max(1.0) {
            return Ok(cur);
        }
        let img = apply_unchecked(id, &cur);
        cur = match (cur, img) {
            (Point::Cotangent(a), Point::Cotangent(b)) => Point::Cotangent(average_cotangent(&a, &b)),
            _ => {
                let avg: Vec<C> = cur.to_vec().iter().zip(img.to_vec()).map(|(a, b)| (a + b) * 0.5).collect();
                reimpose(&cur.like(&avg))
            }
        };
    }
    if res.is_finite() && res <= PROJECTION_TOL * vec_norm(&cur.to_vec()).max(1.0) {
        return Ok(cur);
    }
    Err(Error::ProjectionFailed(res))
}

fn fixed_residual_unchecked(id: RealStructureId, pt: &Point) -> f64 {
    let img = apply_unchecked(id, pt);
    match (pt, &img) {
        (Point::Cotangent(a), Point::Cotangent(b)) => a.phase_distance(b),
        _ => vec_dist(&pt.to_vec(), &img.to_vec()),
    }
}

fn reimpose(pt: &Point) -> Point {
    match pt {
        Point::Orbit(o) => {
            let mut c = o.coords();
            let target = -(o.zeta * o.zeta);
            for _ in 0..PROJECTION_ITERS {
                if quadric_step(&mut c, target) < 1e-15 {
                    break;
                }
            }
            Point::Orbit(OrbitPoint::unchecked(c, o.zeta))
        }
        Point::Matrix(m) => {
            let t = m.trace();
            let mut c = matrix_coords(m);
            for _ in 0..PROJECTION_ITERS {
                if quadric_step(&mut c, -(t * t)) < 1e-15 {
                    break;
                }
            }
            Point::Matrix(coords_matrix(t, &c))
        }
        Point::Product(p) => {
            let mut x = p.x;
            for _ in 0..PROJECTION_ITERS {
                x = project_to_product(&x);
                if ProductPoint::unchecked(x).casimirs().iter().all(|c| (c - 1.0).norm() < 1e-15) {
                    break;
                }
            }
            Point::Product(ProductPoint::unchecked(x))
        }
        _ => *pt,
    }
}

/// Average of two circle-orbit representatives after aligning their phases,
/// projected back to pᵀq = 0 and |q| = 1.
fn average_cotangent(a: &CotangentPoint, b: &CotangentPoint) -> CotangentPoint {
    let ip = |x: &[C; 2], y: &[C; 2]| x[0].conj() * y[0] + x[1].conj() * y[1];
    // align on q alone: the involutions fix q up to phase on their fixed sets
    let s = ip(&a.q, &b.q);
    let ph = if s.norm() > 0.0 { s.conj() / s.norm() } else { ONE };
    let q = [(a.q[0] + ph * b.q[0]) * 0.5, (a.q[1] + ph * b.q[1]) * 0.5];
    let mut p = [(a.p[0] + b.p[0] / ph) * 0.5, (a.p[1] + b.p[1] / ph) * 0.5];
    let nq = q[0].norm_sqr() + q[1].norm_sqr();
    let g = p[0] * q[0] + p[1] * q[1];
    p[0] -= g * q[0].conj() / nq;
    p[1] -= g * q[1].conj() / nq;
    normalize_cotangent(&CotangentPoint { q, p })
}

/// A random point of the domain of `id`.
pub fn sample_point(id: RealStructureId, s: &mut Sampler) -> Point {
    use RealStructureId::*;
    match id {
        Phase { .. } => Point::Phase(s.phase_point()),
        Reduced { axis: Axis::I, .. } => {
            let pt = s.cotangent_level_point();
            Point::Cotangent(normalize_cotangent(&CotangentPoint { q: pt.q, p: pt.p }))
        }
        Reduced { axis: Axis::J, .. } => Point::Orbit(s.ics2_point(1.5)),
        Reduced { axis: Axis::K, .. } => Point::Orbit(s.cs2_point(1.5)),
        Biquaternion(_) => Point::Biquaternion(s.biquaternion()),
        ProductConjugation | SwapConjugation => {
            let (a, b) = (s.cs2_point(1.5), s.cs2_point(1.5));
            Point::Product(ProductPoint::unchecked([a.x, a.y, a.z, b.x, b.y, b.z]))
        }
        GroupPartner(_) => Point::Group(s.nonzero_complex()),
    }
}

/// A random tangent vector to the domain at `pt`, of unit norm.
fn sample_tangent(id: RealStructureId, pt: &Point, s: &mut Sampler) -> Vec<C> {
    let raw: Vec<C> = (0..pt.to_vec().len()).map(|_| s.complex()).collect();
    let v = match (id, pt) {
        (RealStructureId::Reduced { axis: Axis::I, .. }, Point::Cotangent(c)) => {
            // tangent to pᵀq = 0
            let g = [c.p[0], c.p[1], c.q[0], c.q[1]];
            let dot: C = g.iter().zip(&raw).map(|(a, b)| a * b).sum();
            let n2: f64 = g.iter().map(|z| z.norm_sqr()).sum();
            raw.iter().zip(&g).map(|(r, gi)| r - dot * gi.conj() / n2).collect()
        }
        (_, Point::Orbit(o)) => tangent_projection(o, &[raw[0], raw[1], raw[2]]).to_vec(),
        (_, Point::Product(p)) => product_tangent(p, &[raw[0], raw[1], raw[2], raw[3], raw[4], raw[5]]).to_vec(),
        _ => raw,
    };
    let n = vec_norm(&v);
    v.iter().map(|z| z / n).collect()
}

/// Derivative of the ambient map at `x` along `v`.
fn differential(id: RealStructureId, x: &[C], v: &[C]) -> Vec<C> {
    if let RealStructureId::GroupPartner(c) = id {
        return match c {
            Column::R => vec![v[0].conj()],
            _ => vec![-v[0].conj() / (x[0].conj() * x[0].conj())],
        };
    }
    let plus: Vec<C> = x.iter().zip(v).map(|(a, b)| a + b * FD_STEP).collect();
    let minus: Vec<C> = x.iter().zip(v).map(|(a, b)| a - b * FD_STEP).collect();
    map_vec(id, &plus).iter().zip(map_vec(id, &minus)).map(|(a, b)| (a - b) / (2.0 * FD_STEP)).collect()
}

/// The holomorphic symplectic form of the domain, evaluated at `x`.
fn two_form(id: RealStructureId, x: &[C], v: &[C], w: &[C]) -> Option<C> {
    use RealStructureId::*;
    let ph = |a: &[C]| PhasePoint::from_array([a[0], a[1], a[2], a[3]]);
    match id {
        Phase { .. } | Reduced { axis: Axis::I, .. } => Some(omega(&ph(v), &ph(w))),
        Biquaternion(_) => {
            let bq = |a: &[C]| biquat_to_phase(&crate::algebra::Biquaternion::from_coeffs([a[0], a[1], a[2], a[3]]), Axis::I);
            Some(omega(&bq(v), &bq(w)))
        }
        Reduced { axis, .. } => {
            let o = OrbitPoint::unchecked([x[0], x[1], x[2]], reduced_zeta(axis));
            Some(kks_two_form(&o, &[v[0], v[1], v[2]], &[w[0], w[1], w[2]]))
        }
        ProductConjugation | SwapConjugation => {
            let a = |u: &[C]| [u[0], u[1], u[2], u[3], u[4], u[5]];
            Some(product_two_form(&ProductPoint::unchecked(a(x)), &a(v), &a(w)))
        }
        GroupPartner(_) => None,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymplecticReport {
    pub report: CheckReport,
    pub classification: Classification,
    /// Residuals of A*Ω against Ω̄, −Ω̄, Ω, −Ω.
    pub residuals: [f64; 4],
    /// Residuals of dA(iV) against −i·dA(V) and i·dA(V).
    pub linearity: [f64; 2],
}

/// Classifies `id` from sampled differentials. The report passes when the
/// classification matches the catalogue's claim.
pub fn check_real_symplectic(id: RealStructureId, samples: usize, seed: u64) -> SymplecticReport {
    let mut s = Sampler::new(seed);
    let mut res = [0.0f64; 4];
    let mut lin = [0.0f64; 2];
    let mut applicable = true;
    for _ in 0..samples {
        let pt = sample_point(id, &mut s);
        let x = pt.to_vec();
        let y = map_vec(id, &x);
        let v = sample_tangent(id, &pt, &mut s);
        let w = sample_tangent(id, &pt, &mut s);
        let dv = differential(id, &x, &v);
        let dw = differential(id, &x, &w);
        let iv: Vec<C> = v.iter().map(|z| z * I).collect();
        let div = differential(id, &x, &iv);
        let conj_lin = vec_dist(&div, &dv.iter().map(|z| -z * I).collect::<Vec<_>>());
        let hol_lin = vec_dist(&div, &dv.iter().map(|z| z * I).collect::<Vec<_>>());
        lin[0] = max_residual(lin[0], conj_lin);
        lin[1] = max_residual(lin[1], hol_lin);
        let (Some(before), Some(after)) = (two_form(id, &x, &v, &w), two_form(id, &y, &dv, &dw)) else {
            applicable = false;
            continue;
        };
        for (k, target) in [before.conj(), -before.conj(), before, -before].iter().enumerate() {
            res[k] = max_residual(res[k], (after - target).norm());
        }
    }
    let classification = if !applicable {
        Classification::NotApplicable
    } else if lin[0] <= CLASSIFY_TOL {
        if res[0] <= CLASSIFY_TOL {
            Classification::RealSymplectic
        } else if res[1] <= CLASSIFY_TOL {
            Classification::ImaginarySymplectic
        } else {
            Classification::Neither
        }
    } else if lin[1] <= CLASSIFY_TOL {
        if res[2] <= CLASSIFY_TOL {
            Classification::ComplexSymplectic
        } else if res[3] <= CLASSIFY_TOL {
            Classification::ComplexAntiSymplectic
        } else {
            Classification::Neither
        }
    } else {
        Classification::Neither
    };
    let claimed = id.claimed();
    let residual = match claimed {
        Classification::RealSymplectic => res[0].max(lin[0]),
        Classification::ImaginarySymplectic => res[1].max(lin[0]),
        Classification::ComplexSymplectic => res[2].max(lin[1]),
        Classification::ComplexAntiSymplectic => res[3].max(lin[1]),
        _ => 0.0,
    };
    let mut report = CheckReport::new(id.name(), "symplectic-classification", samples, residual, CLASSIFY_TOL)
        .with_detail(format!("found {classification:?}, claimed {claimed:?}"));
    report.pass = classification == claimed;
    SymplecticReport { report, classification, residuals: res, linearity: lin }
}

/// apply∘apply = identity, relative to the point's size.
pub fn check_involution(id: RealStructureId, samples: usize, seed: u64, tol: f64) -> CheckReport {
    let mut s = Sampler::new(seed);
    let mut worst = 0.0;
    for _ in 0..samples {
        let pt = sample_point(id, &mut s);
        let twice = apply_unchecked(id, &apply_unchecked(id, &pt));
        let r = match (&pt, &twice) {
            (Point::Cotangent(a), Point::Cotangent(b)) => a.phase_distance(b),
            _ => vec_dist(&pt.to_vec(), &twice.to_vec()),
        };
        worst = max_residual(worst, r / vec_norm(&pt.to_vec()).max(1.0));
    }
    CheckReport::new(id.name(), "involution", samples, worst, tol)
}

/// dA(iV) = −i·dA(V) for conjugate-linear ids and +i·dA(V) for the
/// complex-linear (brane) cells.
pub fn check_linearity(id: RealStructureId, samples: usize, seed: u64, tol: f64) -> CheckReport {
    let mut s = Sampler::new(seed);
    let expect_conj = !id.claimed().is_complex_linear();
    let mut worst = 0.0;
    for _ in 0..samples {
        let pt = sample_point(id, &mut s);
        let x = pt.to_vec();
        let v: Vec<C> = (0..x.len()).map(|_| s.complex()).collect();
        let iv: Vec<C> = v.iter().map(|z| z * I).collect();
        let dv = differential(id, &x, &v);
        let div = differential(id, &x, &iv);
        let k = if expect_conj { -I } else { I };
        let r = vec_dist(&div, &dv.iter().map(|z| z * k).collect::<Vec<_>>()) / vec_norm(&dv).max(1.0);
        worst = max_residual(worst, r);
    }
    let property = if expect_conj { "conjugate-linear" } else { "complex-linear" };
    CheckReport::new(id.name(), property, samples, worst, tol)
}

/// P(A(q, p)) = Ã(P(q, p)) with P(q, p) = qpᵀ.
pub fn check_descent(column: Column, axis: Axis, samples: usize, seed: u64, tol: f64) -> CheckReport {
    let mut s = Sampler::new(seed);
    let pm = phase_map(column, axis);
    let mm = mat_map(column, axis);
    let mut worst = 0.0;
    for _ in 0..samples {
        let pt = s.phase_point();
        let lhs = momentum_p(&pm.apply(&pt));
        let rhs = mm.apply(&momentum_p(&pt));
        worst = max_residual(worst, (lhs - rhs).norm() / momentum_p(&pt).norm().max(1.0));
    }
    CheckReport::new(format!("{column}@{axis}"), "descent", samples, worst, tol)
}

/// The column acts on the biquaternions by the same map in every
/// identification.
pub fn check_cross_row(column: Column, samples: usize, seed: u64, tol: f64) -> CheckReport {
    let mut s = Sampler::new(seed);
    let mut worst = 0.0;
    for _ in 0..samples {
        let b = s.biquaternion();
        let imgs: Vec<_> = Axis::ALL
            .iter()
            .map(|&a| phase_to_biquat(&phase_map(column, a).apply(&biquat_to_phase(&b, a)), a))
            .collect();
        worst = max_residual(worst, imgs[0].distance(&imgs[1]).max(imgs[0].distance(&imgs[2])));
    }
    CheckReport::new(format!("{column}@H_C"), "cross-row", samples, worst, tol)
}

fn matrix_map_of(id: RealStructureId) -> Result<MatMap> {
    match id {
        RealStructureId::Reduced { column, axis } => Ok(mat_map(column, axis)),
        _ => Err(Error::InvalidArgument(format!("{id} does not act on gl(2,C)"))),
    }
}

/// π_{A(ξ)}(D_f, D_g) = conj π_ξ(df, dg) for the KKS bracket, where the
/// conjugate adjoint D is defined by ⟨D, X⟩ = conj⟨df, A_*X⟩.
pub fn check_real_poisson_map(name: &str, map: &dyn Fn(&Mat2C) -> Mat2C, samples: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let mut s = Sampler::new(seed);
    let lin = |x: &[C]| map(&Mat2C::from_entries([x[0], x[1], x[2], x[3]])).entries().to_vec();
    let mut worst = 0.0;
    for _ in 0..samples {
        let xi = s.matrix();
        let df = s.matrix();
        let dg = s.matrix();
        let cf = covector_to_matrix(&conjugate_adjoint(&lin, &trace_covector(&df))?);
        let cg = covector_to_matrix(&conjugate_adjoint(&lin, &trace_covector(&dg))?);
        let lhs = kks_pairing(&map(&xi), &cf, &cg);
        let rhs = kks_pairing(&xi, &df, &dg).conj();
        worst = max_residual(worst, (lhs - rhs).norm() / rhs.norm().max(1.0));
    }
    Ok(CheckReport::new(name, "real-poisson", samples, worst, tol))
}

pub fn check_real_poisson(id: RealStructureId, samples: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let mm = matrix_map_of(id)?;
    check_real_poisson_map(&id.name(), &|x| mm.apply(x), samples, seed, tol)
}

/// ξ ↦ ξ̄ᵀ𝕁: conjugate-linear but not a real-Poisson structure.
pub fn wrong_involution(xi: &Mat2C) -> Mat2C {
    xi.conj().transpose() * pauli_basis().1
}

/// A(g·m) = ρ(g)·A(m) for the scalar action (gq, g⁻¹p).
pub fn check_equivariance(map: RealStructureId, group: RealStructureId, samples: usize, seed: u64) -> Result<f64> {
    if !matches!(map, RealStructureId::Phase { .. }) || !matches!(group, RealStructureId::GroupPartner(_)) {
        return Err(Error::InvalidArgument(format!("{map} and {group} are not a phase map and a group real form")));
    }
    check_valid(group)?;
    let mut s = Sampler::new(seed);
    let mut worst = 0.0;
    for _ in 0..samples {
        let m = s.phase_point();
        let g = s.nonzero_complex();
        let lhs = apply_unchecked(map, &Point::Phase(gl1_action(g, &m)?));
        let rg = match apply_unchecked(group, &Point::Group(g)) {
            Point::Group(h) => h,
            _ => unreachable!(),
        };
        let rhs = match apply_unchecked(map, &Point::Phase(m)) {
            Point::Phase(a) => gl1_action(rg, &a)?,
            _ => unreachable!(),
        };
        worst = max_residual(worst, vec_dist(&lhs.to_vec(), &rhs.as_array()) / m.norm().max(1.0));
    }
    Ok(worst)
}

pub fn check_equivariance_report(map: RealStructureId, group: RealStructureId, samples: usize, seed: u64, tol: f64, expect_pass: bool) -> Result<CheckReport> {
    let r = check_equivariance(map, group, samples, seed)?;
    let id = format!("({map},{group})");
    Ok(if expect_pass {
        CheckReport::new(id, "equivariance", samples, r, tol)
    } else {
        CheckReport::negative(id, "equivariance (negative control)", samples, r, tol)
    })
}

/// Samples a product point away from the singular set of H.
pub fn sample_regular_product(s: &mut Sampler, scale: f64) -> ProductPoint {
    loop {
        let (a, b) = (s.cs2_point(scale), s.cs2_point(scale));
        let pt = ProductPoint::unchecked([a.x, a.y, a.z, b.x, b.y, b.z]);
        if crate::dynamics::radicand(&pt.x).norm() > 1e-3 {
            return pt;
        }
    }
}

/// μ∘A = ρ*∘μ on random product points.
pub fn check_momentum_compat(
    id: RealStructureId,
    mu: &dyn Fn(&ProductPoint) -> Result<[C; 2]>,
    rho_star: &dyn Fn([C; 2]) -> [C; 2],
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    let mut s = Sampler::new(seed);
    let mut worst = 0.0;
    for _ in 0..samples {
        let pt = sample_regular_product(&mut s, 1.0);
        let lhs = mu(&apply_product(id, &pt)?)?;
        let rhs = rho_star(mu(&pt)?);
        let scale = lhs.iter().map(|z| z.norm()).fold(1.0, f64::max);
        worst = max_residual(worst, ((lhs[0] - rhs[0]).norm() + (lhs[1] - rhs[1]).norm()) / scale);
    }
    Ok(CheckReport::new(id.name(), "momentum-compatibility", samples, worst, tol))
}

/// g = f + conj(f∘A), real-valued on the fixed set of A.
#[derive(Clone, Copy, Debug)]
pub struct Realified<F> {
    pub f: F,
    pub id: RealStructureId,
}

pub fn realify_integrals<F: ProductFn>(f: F, id: RealStructureId) -> Result<Realified<F>> {
    match id {
        RealStructureId::ProductConjugation | RealStructureId::SwapConjugation => Ok(Realified { f, id }),
        _ => Err(Error::InvalidArgument(format!("{id} does not act on CS²×CS²"))),
    }
}

impl<F: ProductFn> Realified<F> {
    pub fn value(&self, pt: &ProductPoint) -> C {
        let img = map_vec(self.id, &pt.x);
        let img: [C; 6] = std::array::from_fn(|k| img[k]);
        self.f.value(&pt.x) + self.f.value(&img).conj()
    }
}

/// Largest imaginary part of the realified f on sampled fixed points.
pub fn check_realified<F: ProductFn>(f: F, id: RealStructureId, samples: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let g = realify_integrals(f, id)?;
    let label = match id {
        RealStructureId::ProductConjugation => FixedSetLabel::SphereProduct,
        _ => FixedSetLabel::ConjugateDiagonal,
    };
    let mut s = Sampler::new(seed);
    let mut worst = 0.0;
    let mut n = 0;
    while n < samples {
        let Point::Product(pt) = label.sample(&mut s) else { unreachable!() };
        if crate::dynamics::radicand(&pt.x).norm() < 1e-3 {
            continue;
        }
        worst = max_residual(worst, g.value(&pt).im.abs());
        n += 1;
    }
    Ok(CheckReport::new(id.name(), "realified-integral", samples, worst, tol))
}

/// Both directions of a fixed-set label: parametrized label points are
/// fixed by the involution, and projected random points satisfy the label's
/// equations.
pub fn check_fixed_set(label: FixedSetLabel, samples: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let id = label.id();
    let mut s = Sampler::new(seed);
    let mut worst = 0.0;
    for _ in 0..samples {
        let pt = label.sample(&mut s);
        let scale = vec_norm(&pt.to_vec()).max(1.0);
        worst = max_residual(worst, fixed_residual(id, &pt)? / scale);
        worst = max_residual(worst, label.residual(&pt)? / scale);
        let start = sample_point(id, &mut s);
        let proj = project_to_fixed(id, &start)?;
        worst = max_residual(worst, label.residual(&proj)? / vec_norm(&proj.to_vec()).max(1.0));
    }
    Ok(CheckReport::new(id.name(), format!("fixed set {label}"), samples, worst, tol))
}

/// One catalogue cell as printed and as implemented.
#[derive(Clone, Debug, Serialize)]
pub struct CellInfo {
    pub column: Column,
    pub axis: Axis,
    pub row: &'static str,
    pub phase_map: &'static str,
    pub printed_phase_map: &'static str,
    pub reduced_map: &'static str,
    pub printed_reduced_map: Option<&'static str>,
    pub fixed_set: Option<FixedSetLabel>,
    pub claimed: Classification,
    pub note: Option<&'static str>,
}

pub fn cell(column: Column, axis: Axis) -> CellInfo {
    use Column::*;
    let (phase_map, printed, reduced, printed_reduced, fixed): (&str, &str, &str, Option<&str>, Option<FixedSetLabel>) = match (axis, column) {
        (Axis::I, R) => ("(−i𝕀q̄, i𝕀p̄)", "(−i𝕂q̄, i𝕂p̄)", "𝕀ξ̄𝕀", None, None),
        (Axis::I, S) => ("(q, −p)", "(q, −p)", "−ξ", None, Some(FixedSetLabel::ZeroSection)),
        (Axis::I, T) => ("(−i𝕂q, i𝕂p)", "(−i𝕂q, i𝕂p)", "𝕂ξ𝕂", None, Some(FixedSetLabel::FibrePair)),
        (Axis::I, U) => ("(q̄, p̄)", "(q̄, p̄)", "ξ̄", None, Some(FixedSetLabel::CotangentRP1)),
        (Axis::J, R) => ("(q̄, p̄)", "(q̄, p̄)", "ξ̄", Some("ξ̄"), Some(FixedSetLabel::CylinderS1R)),
        (Axis::J, S) => ("(−p̄, −q̄)", "(−p̄, −q̄)", "ξ†", Some("ξ†"), None),
        (Axis::J, T) => ("(−i𝕁p̄, i𝕁q̄)", "(−i𝕁p̄, i𝕁q̄)", "−𝕁ξ†𝕁", Some("−𝕁ξ†𝕁"), None),
        (Axis::J, U) => ("(i𝕂p, i𝕂q)", "(−i𝕂p, −i𝕂q)", "−𝕂ξᵀ𝕂", Some("−𝕂ξᵀ𝕂"), Some(FixedSetLabel::ImaginaryComplexCircle)),
        (Axis::K, R) => ("(i𝕂p, i𝕂q)", "(i𝕂p, i𝕂q)", "−𝕂ξᵀ𝕂", Some("−𝕂ξᵀ𝕂"), Some(FixedSetLabel::ComplexCircle)),
        (Axis::K, S) => ("(ip̄, iq̄)", "(ip̄, iq̄)", "−ξ†", Some("−ξ†"), Some(FixedSetLabel::Sphere)),
        (Axis::K, T) => ("(𝕀p̄, 𝕀q̄)", "(𝕀p̄, 𝕀q̄)", "𝕀ξ†𝕀", Some("𝕀ξ†𝕀"), Some(FixedSetLabel::Hyperboloids)),
        (Axis::K, U) => ("(−i𝕀q̄, i𝕀p̄)", "(−i𝕀q̄, i𝕀p̄)", "𝕀ξ̄𝕀", Some("𝕀ξ̄𝕀"), None),
    };
    let claimed = cell_classification(column, axis);
    let note = if fixed.is_none() {
        Some("no descended real form listed: imaginary-symplectic")
    } else if phase_map != printed {
        Some("printed map is inconsistent with the rest of its column; the consistent map is used")
    } else if claimed.is_complex_linear() {
        Some("complex-linear (brane)")
    } else {
        None
    };
    CellInfo {
        column,
        axis,
        row: reduced_space_name(axis),
        phase_map,
        printed_phase_map: printed,
        reduced_map: reduced,
        printed_reduced_map: printed_reduced,
        fixed_set: fixed,
        claimed,
        note,
    }
}

/// v + dA(v): a tangent vector to the fixed set of a product involution.
pub fn fixed_tangent(id: RealStructureId, v: &[C; 6]) -> Result<[C; 6]> {
    if !matches!(id, RealStructureId::ProductConjugation | RealStructureId::SwapConjugation) {
        return Err(Error::InvalidArgument(format!("{id} does not act on CS²×CS²")));
    }
    let a = map_vec(id, v);
    Ok(std::array::from_fn(|k| v[k] + a[k]))
}

pub fn catalogue() -> Vec<CellInfo> {
    Axis::ALL.iter().flat_map(|&a| Column::ALL.iter().map(move |&c| cell(c, a))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Energy, Momentum};

    fn orbit(c: [f64; 3]) -> Point {
        Point::Orbit(OrbitPoint::real(c).unwrap())
    }

    #[test]
    fn sphere_is_fixed_by_adjoint_negation() {
        let id = RealStructureId::Reduced { column: Column::S, axis: Axis::K };
        let xi = Mat2C::new(I, ZERO, ZERO, ZERO);
        match apply(id, &Point::Matrix(xi)).unwrap() {
            Point::Matrix(m) => assert_eq!(m, xi),
            _ => panic!(),
        }
        assert!(is_fixed(id, &orbit([1.0, 0.0, 0.0]), 1e-14).unwrap());
        assert!(is_fixed(id, &orbit([0.6, 0.0, 0.8]), 1e-14).unwrap());
    }

    #[test]
    fn reduced_u_on_coordinates() {
        let id = RealStructureId::Reduced { column: Column::U, axis: Axis::K };
        let mut s = Sampler::new(1);
        for _ in 0..100 {
            let o = s.cs2_point(1.0);
            let Point::Orbit(img) = apply(id, &Point::Orbit(o)).unwrap() else { panic!() };
            let want = [o.x.conj(), o.y.conj(), -o.z.conj()];
            for (a, b) in img.coords().iter().zip(want) {
                assert!((a - b).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn every_id_is_an_involution() {
        for id in RealStructureId::all() {
            let r = check_involution(id, 1000, 2, 1e-14);
            assert!(r.pass, "{id}: {}", r.max_residual);
        }
    }

    #[test]
    fn linearity_matches_claims() {
        for id in RealStructureId::all() {
            let r = check_linearity(id, 200, 3, 1e-10);
            assert!(r.pass, "{id}: {} {}", r.property, r.max_residual);
        }
    }

    #[test]
    fn brane_cells_are_complex_linear_in_exactly_one_row() {
        for c in Column::ALL {
            let n = Axis::ALL.iter().filter(|&&a| cell_classification(c, a).is_complex_linear()).count();
            assert_eq!(n, 1, "{c}");
        }
    }

    #[test]
    fn descent_holds_for_every_cell() {
        for a in Axis::ALL {
            for c in Column::ALL {
                let r = check_descent(c, a, 300, 4, 1e-12);
                assert!(r.pass, "{c}@{a}: {}", r.max_residual);
            }
        }
    }

    #[test]
    fn columns_agree_across_rows() {
        for c in Column::ALL {
            let r = check_cross_row(c, 300, 5, 1e-14);
            assert!(r.pass, "{c}: {}", r.max_residual);
        }
    }

    #[test]
    fn printed_cells_break_column_consistency() {
        let mut s = Sampler::new(6);
        let (_, _, kk) = pauli_basis();
        let printed_ir = PhaseMap { a: kk.scale(-I), b: Mat2C::zero(), c: Mat2C::zero(), d: kk.scale(I), conjugate: true };
        let b = s.biquaternion();
        let via_i = phase_to_biquat(&printed_ir.apply(&biquat_to_phase(&b, Axis::I)), Axis::I);
        let via_j = phase_to_biquat(&phase_map(Column::R, Axis::J).apply(&biquat_to_phase(&b, Axis::J)), Axis::J);
        assert!(via_i.distance(&via_j) > 1e-3);
    }

    #[test]
    fn classifications_match_claims() {
        for id in RealStructureId::all() {
            let r = check_real_symplectic(id, 100, 7);
            assert!(r.report.pass, "{id}: {:?} residuals {:?} linearity {:?}", r.classification, r.residuals, r.linearity);
        }
    }

    #[test]
    fn named_classifications() {
        use Classification::*;
        assert_eq!(check_real_symplectic(RealStructureId::CONJUGATION, 50, 8).classification, RealSymplectic);
        let u = RealStructureId::Reduced { column: Column::U, axis: Axis::K };
        assert_eq!(check_real_symplectic(u, 50, 8).classification, ImaginarySymplectic);
        assert_eq!(check_real_symplectic(RealStructureId::SwapConjugation, 50, 8).classification, ImaginarySymplectic);
        assert_eq!(check_real_symplectic(RealStructureId::ProductConjugation, 50, 8).classification, RealSymplectic);
    }

    #[test]
    fn real_poisson_identity() {
        for (_, reduced, _) in RealStructureId::STANDARD_TRIPLE {
            let r = check_real_poisson(reduced, 300, 9, 1e-12).unwrap();
            assert!(r.pass, "{reduced}: {}", r.max_residual);
        }
        let bad = check_real_poisson_map("wrong", &wrong_involution, 300, 9, 1e-12).unwrap();
        assert!(!bad.pass);
        assert!(bad.max_residual > 1e-3);
    }

    #[test]
    fn equivariance_pairs() {
        for (m, _, g) in RealStructureId::STANDARD_TRIPLE {
            assert!(check_equivariance(m, g, 500, 10).unwrap() < 1e-12, "{m}/{g}");
        }
        let wrong = check_equivariance(RealStructureId::SWAP, RealStructureId::GroupPartner(Column::R), 100, 10).unwrap();
        assert!(wrong > 1e-3);
    }

    #[test]
    fn pendulum_integrals_are_compatible() {
        let mu = |pt: &ProductPoint| Ok([Energy.value(&pt.x), Momentum.value(&pt.x)]);
        let sigma = check_momentum_compat(RealStructureId::ProductConjugation, &mu, &|[h, j]| [h.conj(), -j.conj()], 500, 11, 1e-10).unwrap();
        assert!(sigma.pass, "{}", sigma.max_residual);
        let ups = check_momentum_compat(RealStructureId::SwapConjugation, &mu, &|[h, j]| [h.conj(), j.conj()], 500, 11, 1e-10).unwrap();
        assert!(ups.pass, "{}", ups.max_residual);
        let wrong = check_momentum_compat(RealStructureId::SwapConjugation, &mu, &|[h, j]| [h.conj(), -j.conj()], 100, 11, 1e-10).unwrap();
        assert!(!wrong.pass);
    }

    #[test]
    fn realified_integrals_are_real() {
        for id in [RealStructureId::ProductConjugation, RealStructureId::SwapConjugation] {
            assert!(check_realified(Energy, id, 300, 12, 1e-12).unwrap().pass);
            assert!(check_realified(Momentum, id, 300, 12, 1e-12).unwrap().pass);
        }
        let mut s = Sampler::new(13);
        let g = realify_integrals(Energy, RealStructureId::SwapConjugation).unwrap();
        for _ in 0..100 {
            let Point::Product(pt) = FixedSetLabel::ConjugateDiagonal.sample(&mut s) else { panic!() };
            let h = Energy.value(&pt.x);
            assert!((g.value(&pt) - h * 2.0).norm() < 1e-12 * (1.0 + h.norm()));
        }
        let j = realify_integrals(Momentum, RealStructureId::ProductConjugation).unwrap();
        let Point::Product(pt) = FixedSetLabel::SphereProduct.sample(&mut s) else { panic!() };
        assert!(j.value(&pt).norm() < 1e-15);
    }

    #[test]
    fn fixed_sets_match_labels() {
        for label in FixedSetLabel::ALL {
            let r = check_fixed_set(label, 200, 14, 1e-10).unwrap_or_else(|e| panic!("{label}: {e}"));
            assert!(r.pass, "{label}: {}", r.max_residual);
        }
    }

    #[test]
    fn hyperboloid_points_are_fixed() {
        let id = RealStructureId::Reduced { column: Column::T, axis: Axis::K };
        for s in [0.0, 0.5, 1.0, 3.0] {
            for sign in [1.0, -1.0] {
                let pt = Point::Orbit(OrbitPoint::cs2(C::new(sign * (1.0f64 + s * s).sqrt(), 0.0), C::new(0.0, s), ZERO).unwrap());
                assert!(is_fixed(id, &pt, 1e-14).unwrap());
            }
        }
    }

    #[test]
    fn projection_keeps_fixed_points() {
        let mut s = Sampler::new(15);
        for label in FixedSetLabel::ALL {
            let id = label.id();
            for _ in 0..20 {
                let pt = label.sample(&mut s);
                let proj = project_to_fixed(id, &pt).unwrap();
                let d = match (pt, proj) {
                    (Point::Cotangent(a), Point::Cotangent(b)) => a.phase_distance(&b),
                    (a, b) => vec_dist(&a.to_vec(), &b.to_vec()),
                };
                assert!(d < 1e-10, "{label}: {d}");
            }
        }
    }

    #[test]
    fn domain_mismatch_is_rejected() {
        let id = RealStructureId::ProductConjugation;
        assert!(matches!(apply(id, &Point::Group(ONE)), Err(Error::DomainMismatch { .. })));
        let k = RealStructureId::Reduced { column: Column::S, axis: Axis::K };
        assert!(apply(k, &Point::Orbit(OrbitPoint::ics2(ZERO, ZERO, I).unwrap())).is_err());
        assert!(apply(RealStructureId::GroupPartner(Column::S), &Point::Group(ZERO)).is_err());
        assert!(apply(RealStructureId::GroupPartner(Column::U), &Point::Group(ONE)).is_err());
    }

    #[test]
    fn names_roundtrip() {
        for id in RealStructureId::all() {
            assert_eq!(RealStructureId::parse(&id.name()).unwrap(), id);
        }
    }

    #[test]
    fn catalogue_cells() {
        let c = cell(Column::S, Axis::K);
        assert_eq!(c.fixed_set, Some(FixedSetLabel::Sphere));
        assert_eq!(c.claimed, Classification::RealSymplectic);
        assert_eq!(cell(Column::U, Axis::I).fixed_set, Some(FixedSetLabel::CotangentRP1));
        let dots: Vec<_> = catalogue().into_iter().filter(|c| c.fixed_set.is_none()).collect();
        assert_eq!(dots.len(), 4);
        assert!(dots.iter().all(|c| c.claimed == Classification::ImaginarySymplectic));
        for l in FixedSetLabel::ALL {
            let owners = RealStructureId::all().into_iter().filter(|id| *id == l.id()).count();
            assert_eq!(owners, 1);
        }
    }
}
