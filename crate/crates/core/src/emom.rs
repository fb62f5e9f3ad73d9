//! Energy-momentum maps of the two real forms of the complexified pendulum:
//! the conjugate diagonal of CS²×CS² (≅ T*S², the spherical pendulum) and the
//! compact form S²×S². Rank computation, rank-0 search, continuation of the
//! rank-1 critical values and image sampling.
//!
//! Points of either form are stored as six real numbers w:
//! * T*S²: w = (a, b) with ξ = a + ib ∈ CS², so a·a − b·b = 1 and a·b = 0.
//! * S²×S²: w = (u1, u2), two unit vectors.

use crate::dynamics::{energy_gradient, radicand, Energy, ProductFn, ProductPoint};
use crate::error::{Error, Result};
use crate::orbit::{bundle_map, calibration, OrbitPoint, ZETA_CS2};
use crate::realstruct::{apply_product, FixedSetLabel, RealStructureId};
use crate::sample::{halton, Sampler};
use crate::scalar::C;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub type W = [f64; 6];

/// Singular values above RANK_TOL·max(1, σ_max) count towards the rank.
pub const RANK_TOL: f64 = 1e-8;
pub const DEDUP_DIST: f64 = 1e-4;
pub const DEFAULT_STARTS: usize = 512;
const SEARCH_ROUNDS: usize = 4;
const ON_FORM_TOL: f64 = 1e-10;
/// Distance to the singular sphere below which the singular-set rule applies.
const SINGULAR_DIST: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmomForm {
    #[serde(rename = "tstar-s2")]
    TStarS2,
    #[serde(rename = "s2xs2")]
    S2xS2,
}

impl EmomForm {
    pub const ALL: [EmomForm; 2] = [EmomForm::TStarS2, EmomForm::S2xS2];

    pub fn name(&self) -> &'static str {
        match self {
            Self::TStarS2 => "tstar-s2",
            Self::S2xS2 => "s2xs2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tstar-s2" => Ok(Self::TStarS2),
            "s2xs2" => Ok(Self::S2xS2),
            _ => Err(Error::InvalidArgument(format!("unknown form {s:?} (expected tstar-s2 or s2xs2)"))),
        }
    }

    pub fn label(&self) -> FixedSetLabel {
        match self {
            Self::TStarS2 => FixedSetLabel::ConjugateDiagonal,
            Self::S2xS2 => FixedSetLabel::SphereProduct,
        }
    }

    pub fn from_label(label: FixedSetLabel) -> Result<Self> {
        match label {
            FixedSetLabel::ConjugateDiagonal => Ok(Self::TStarS2),
            FixedSetLabel::SphereProduct => Ok(Self::S2xS2),
            _ => Err(Error::InvalidArgument(format!("{label} carries no energy-momentum map"))),
        }
    }

    fn involution(&self) -> RealStructureId {
        self.label().id()
    }

    fn constraints(&self, w: &W) -> [f64; 2] {
        match self {
            Self::TStarS2 => [dot(&w[..3], &w[..3]) - dot(&w[3..], &w[3..]) - 1.0, dot(&w[..3], &w[3..])],
            Self::S2xS2 => [dot(&w[..3], &w[..3]) - 1.0, dot(&w[3..], &w[3..]) - 1.0],
        }
    }

    fn constraint_gradients(&self, w: &W) -> [W; 2] {
        match self {
            Self::TStarS2 => [
                [2.0 * w[0], 2.0 * w[1], 2.0 * w[2], -2.0 * w[3], -2.0 * w[4], -2.0 * w[5]],
                [w[3], w[4], w[5], w[0], w[1], w[2]],
            ],
            Self::S2xS2 => [
                [2.0 * w[0], 2.0 * w[1], 2.0 * w[2], 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 2.0 * w[3], 2.0 * w[4], 2.0 * w[5]],
            ],
        }
    }

    /// The real second integral: Im z (angular momentum) on T*S², and
    /// (z1 + z2)/2 = i·J on S²×S².
    pub fn j(&self, w: &W) -> f64 {
        match self {
            Self::TStarS2 => w[5],
            Self::S2xS2 => 0.5 * (w[2] + w[5]),
        }
    }

    fn grad_j(&self, w: &W) -> W {
        let _ = w;
        match self {
            Self::TStarS2 => [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            Self::S2xS2 => [0.0, 0.0, 0.5, 0.0, 0.0, 0.5],
        }
    }

    /// Distance-like measure to the singular sphere of H (infinite on T*S²,
    /// where the radicand is 4|a|² ≥ 4).
    pub fn singular_distance(&self, w: &W) -> f64 {
        match self {
            Self::TStarS2 => f64::INFINITY,
            Self::S2xS2 => radicand(&self.complex(w)).re.max(0.0).sqrt(),
        }
    }

    fn complex(&self, w: &W) -> [C; 6] {
        w.map(|v| C::new(v, 0.0))
    }

    /// The real energy: the calibrated pendulum energy ½|b|² + n_z on T*S²;
    /// the holomorphic H on S²×S², set to −½ on the singular sphere.
    pub fn h(&self, w: &W) -> f64 {
        match self {
            Self::TStarS2 => {
                let cal = calibration();
                let x = dot(w, w);
                let nb = 1.0 + dot(&w[3..], &w[3..]);
                (cal.slope * x + cal.intercept) / 8.0 + w[2] / nb.sqrt()
            }
            Self::S2xS2 => {
                if self.singular_distance(w) < SINGULAR_DIST {
                    return singular_energy(w);
                }
                Energy.value(&self.complex(w)).re
            }
        }
    }

    fn grad_h(&self, w: &W) -> W {
        match self {
            Self::TStarS2 => {
                let k = calibration().slope / 4.0;
                let nb = 1.0 + dot(&w[3..], &w[3..]);
                let s = nb.sqrt();
                let c = -w[2] / (nb * s);
                [k * w[0], k * w[1], k * w[2] + 1.0 / s, k * w[3] + c * w[3], k * w[4] + c * w[4], k * w[5] + c * w[5]]
            }
            Self::S2xS2 => energy_gradient(&self.complex(w)).map(|g| g.re),
        }
    }

    pub fn to_product(&self, w: &W) -> ProductPoint {
        match self {
            Self::TStarS2 => ProductPoint::unchecked([
                C::new(w[0], w[3]),
                C::new(w[1], w[4]),
                C::new(w[2], w[5]),
                C::new(w[0], -w[3]),
                C::new(w[1], -w[4]),
                C::new(-w[2], w[5]),
            ]),
            Self::S2xS2 => ProductPoint::unchecked(self.complex(w)),
        }
    }

    /// The real coordinates of a point of the form; off-form points are
    /// rejected.
    pub fn from_product(&self, pt: &ProductPoint) -> Result<W> {
        let img = apply_product(self.involution(), pt)?;
        let scale = pt.x.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let off = img.distance(pt) + pt.casimirs().iter().map(|c| (c - 1.0).norm()).sum::<f64>();
        if off > ON_FORM_TOL * scale {
            return Err(Error::NotMember { space: self.label().symbol(), residual: off });
        }
        let x = pt.x;
        Ok(match self {
            Self::TStarS2 => [x[0].re, x[1].re, x[2].re, x[0].im, x[1].im, x[2].im],
            Self::S2xS2 => x.map(|z| z.re),
        })
    }

    /// Newton projection onto the constraints along minimal-norm directions.
    fn retract(&self, w: &W) -> W {
        let mut w = *w;
        for _ in 0..20 {
            let g = self.constraints(&w);
            if g[0].abs() + g[1].abs() < 1e-15 {
                break;
            }
            let gr = self.constraint_gradients(&w);
            let a = DMatrix::from_fn(2, 6, |i, j| gr[i][j]);
            let Some(inv) = (&a * a.transpose()).try_inverse() else { break };
            let step = a.transpose() * (inv * DVector::from_column_slice(&g));
            for k in 0..6 {
                w[k] -= step[k];
            }
        }
        w
    }

    /// Orthogonal projector onto the tangent space.
    fn tangent_projector(&self, w: &W) -> DMatrix<f64> {
        let gr = self.constraint_gradients(w);
        let a = DMatrix::from_fn(2, 6, |i, j| gr[i][j]);
        DMatrix::<f64>::identity(6, 6) - a.transpose() * (&a * a.transpose()).try_inverse().unwrap_or_else(|| DMatrix::zeros(2, 2)) * &a
    }

    /// Orthonormal basis of the tangent space, as columns.
    fn tangent_basis(&self, w: &W) -> DMatrix<f64> {
        let svd = self.tangent_projector(w).svd(true, false);
        let u = svd.u.expect("u requested");
        let cols: Vec<DVector<f64>> = (0..6).filter(|&k| svd.singular_values[k] > 0.5).map(|k| u.column(k).into_owned()).collect();
        DMatrix::from_columns(&cols)
    }

    /// A point of the form from a point of the unit 4-cube; `radius` bounds
    /// |b| on T*S².
    fn from_cube(&self, u: &[f64; 4], radius: f64) -> W {
        let n1 = sphere(u[0], u[1]);
        match self {
            Self::TStarS2 => {
                let (e1, e2) = tangent_frame(&n1);
                let r = radius * u[2].sqrt();
                let th = std::f64::consts::TAU * u[3];
                let b: Vec<f64> = (0..3).map(|k| r * (th.cos() * e1[k] + th.sin() * e2[k])).collect();
                let s = (1.0 + r * r).sqrt();
                [s * n1[0], s * n1[1], s * n1[2], b[0], b[1], b[2]]
            }
            Self::S2xS2 => {
                let n2 = sphere(u[2], u[3]);
                [n1[0], n1[1], n1[2], n2[0], n2[1], n2[2]]
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sphere(u: f64, v: f64) -> [f64; 3] {
    let z = 2.0 * u - 1.0;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let th = std::f64::consts::TAU * v;
    [r * th.cos(), r * th.sin(), z]
}

fn tangent_frame(n: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let h = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot(&h, n);
    let mut e1 = [h[0] - d * n[0], h[1] - d * n[1], h[2] - d * n[2]];
    let l = dot(&e1, &e1).sqrt();
    e1.iter_mut().for_each(|v| *v /= l);
    let e2 = [n[1] * e1[2] - n[2] * e1[1], n[2] * e1[0] - n[0] * e1[2], n[0] * e1[1] - n[1] * e1[0]];
    (e1, e2)
}

/// On the singular sphere (u2 = (−x1, −y1, z1)) H has no limit; its limit
/// values at a point fill −½ ± √(1 − z1²). The midpoint −½ is the
/// polynomial part and is used as the value there.
fn singular_energy(w: &W) -> f64 {
    0.5 * (w[0] * w[3] + w[1] * w[4] - w[2] * w[5])
}

/// The energy-momentum map (J, H) of a point of the form.
pub fn emom_map(form: EmomForm, pt: &ProductPoint) -> Result<(f64, f64)> {
    let w = form.from_product(pt)?;
    Ok((form.j(&w), form.h(&w)))
}

/// The same map from real coordinates.
pub fn emom_w(form: EmomForm, w: &W) -> (f64, f64) {
    (form.j(w), form.h(w))
}

/// The pendulum state of a T*S² point: position on S² (via the bundle map)
/// and angular momentum.
pub fn pendulum_state(w: &W) -> Result<([f64; 3], [f64; 3])> {
    let o = OrbitPoint::cs2(C::new(w[0], w[3]), C::new(w[1], w[4]), C::new(w[2], w[5]))?;
    let _ = ZETA_CS2;
    Ok((bundle_map(&o)?, [w[3], w[4], w[5]]))
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

fn count_rank(sv: &[f64]) -> usize {
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > RANK_TOL * smax.max(1.0)).count()
}

/// Rank of d(J, H) restricted to the tangent space of the form. On the
/// singular sphere the rank is taken tangentially to that sphere, where H is
/// constant and J = z1.
pub fn rank_at(form: EmomForm, w: &W) -> usize {
    if form == EmomForm::S2xS2 && form.singular_distance(w) < SINGULAR_DIST {
        let s = (1.0 - w[2] * w[2]).max(0.0).sqrt();
        return count_rank(&[s]);
    }
    let p = form.tangent_projector(w);
    let gj = &p * DVector::from_column_slice(&form.grad_j(w));
    let gh = &p * DVector::from_column_slice(&form.grad_h(w));
    let m = DMatrix::from_rows(&[gj.transpose(), gh.transpose()]);
    count_rank(&singular_values(&m))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EMomSample {
    pub j: f64,
    pub h: f64,
    pub rank: usize,
    pub location: W,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Rank0Search {
    pub points: Vec<EMomSample>,
    pub starts: usize,
    /// Set when the final round of starts still found new points.
    pub warning: Option<String>,
}

/// Damped Gauss–Newton (Levenberg–Marquardt) in tangent coordinates, with a
/// retraction back onto the constraint set after each step.
fn levenberg_marquardt(
    w0: W,
    residual: &dyn Fn(&W) -> Option<DVector<f64>>,
    basis: &dyn Fn(&W) -> DMatrix<f64>,
    retract: &dyn Fn(&W) -> W,
    tol: f64,
) -> Option<(W, f64)> {
    let mut w = retract(&w0);
    let mut r = residual(&w)?;
    let mut mu = 1e-3;
    let fd = 1e-7;
    for _ in 0..200 {
        let rn = r.norm();
        if rn < tol {
            return Some((w, rn));
        }
        let b = basis(&w);
        let d = b.ncols();
        let mut jac = DMatrix::zeros(r.len(), d);
        for k in 0..d {
            let step = |s: f64| {
                let mut x = w;
                for i in 0..6 {
                    x[i] += s * b[(i, k)];
                }
                retract(&x)
            };
            let (rp, rm) = (residual(&step(fd))?, residual(&step(-fd))?);
            jac.set_column(k, &((rp - rm) / (2.0 * fd)));
        }
        let jt = jac.transpose();
        let g = &jt * &r;
        let mut accepted = false;
        for _ in 0..12 {
            let a = &jt * &jac + DMatrix::identity(d, d) * (mu * (1.0 + (&jt * &jac).diagonal().max()));
            let Some(delta) = a.lu().solve(&(-&g)) else { return None };
            let mut x = w;
            let dw = &b * delta;
            for i in 0..6 {
                x[i] += dw[i];
            }
            let x = retract(&x);
            if let Some(rx) = residual(&x) {
                if rx.norm() < rn {
                    w = x;
                    r = rx;
                    mu = (mu / 3.0).max(1e-15);
                    accepted = true;
                    break;
                }
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    let rn = r.norm();
    (rn < tol).then_some((w, rn))
}

fn rank0_residual(form: EmomForm, w: &W) -> Option<DVector<f64>> {
    if form.singular_distance(w) < 1e-4 {
        return None;
    }
    // ambient components, so the residual does not depend on a basis choice
    let p = form.tangent_projector(w);
    let gj = &p * DVector::from_column_slice(&form.grad_j(w));
    let gh = &p * DVector::from_column_slice(&form.grad_h(w));
    Some(DVector::from_iterator(12, gj.iter().chain(gh.iter()).copied()))
}

const HALTON_OFFSET: u64 = 1;
const START_RADIUS: f64 = 2.0;

/// Rank-0 points by multistart from `starts` quasi-random points, run in
/// rounds; on S²×S² the singular sphere is searched separately under its own
/// rule.
pub fn find_rank0_with(form: EmomForm, starts: usize) -> Rank0Search {
    let per_round = starts.div_ceil(SEARCH_ROUNDS).max(1);
    let mut found: Vec<EMomSample> = Vec::new();
    let mut new_in_last = false;
    for round in 0..SEARCH_ROUNDS {
        let lo = round * per_round;
        let hi = ((round + 1) * per_round).min(starts);
        if lo >= hi {
            continue;
        }
        let results: Vec<Option<W>> = (lo..hi)
            .into_par_iter()
            .map(|i| {
                let u = halton::<4>(HALTON_OFFSET + i as u64);
                let w0 = form.from_cube(&u, START_RADIUS);
                levenberg_marquardt(w0, &|w| rank0_residual(form, w), &|w| form.tangent_basis(w), &|w| form.retract(w), 1e-11)
                    .map(|(w, _)| w)
            })
            .collect();
        let before = found.len();
        for w in results.into_iter().flatten() {
            merge(&mut found, form, w);
        }
        if form == EmomForm::S2xS2 {
            let singular: Vec<Option<W>> = (lo..hi).into_par_iter().map(|i| singular_sphere_start(i as u64)).collect();
            for w in singular.into_iter().flatten() {
                merge(&mut found, form, w);
            }
        }
        new_in_last = round + 1 == SEARCH_ROUNDS && found.len() > before;
    }
    found.retain(|s| s.rank == 0);
    found.sort_by(|a, b| a.j.total_cmp(&b.j).then(a.h.total_cmp(&b.h)));
    let warning = new_in_last.then(|| format!("new rank-0 points appeared in the final round of {starts} starts; the search budget may be insufficient"));
    Rank0Search { points: found, starts, warning }
}

pub fn find_rank0(form: EmomForm) -> Rank0Search {
    find_rank0_with(form, DEFAULT_STARTS)
}

fn merge(found: &mut Vec<EMomSample>, form: EmomForm, w: W) {
    if found.iter().any(|s| dist(&s.location, &w) < DEDUP_DIST) {
        return;
    }
    let (j, h) = emom_w(form, &w);
    found.push(EMomSample { j, h, rank: rank_at(form, &w), location: w });
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Critical points of J = z1 on the singular sphere, parametrized by u1.
fn singular_sphere_start(i: u64) -> Option<W> {
    let u = halton::<2>(HALTON_OFFSET + i);
    let u1 = sphere(u[0], u[1]);
    let embed = |v: &W| [v[0], v[1], v[2], -v[0], -v[1], v[2]];
    let residual = |v: &W| {
        let z = v[2];
        Some(DVector::from_vec(vec![-z * v[0], -z * v[1], 1.0 - z * v[2]]))
    };
    let basis = |v: &W| {
        let (e1, e2) = tangent_frame(&[v[0], v[1], v[2]]);
        DMatrix::from_fn(6, 2, |r, c| if r < 3 { if c == 0 { e1[r] } else { e2[r] } } else { 0.0 })
    };
    let retract = |v: &W| {
        let n = dot(&v[..3], &v[..3]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n, 0.0, 0.0, 0.0]
    };
    let w0 = [u1[0], u1[1], u1[2], 0.0, 0.0, 0.0];
    levenberg_marquardt(w0, &residual, &basis, &retract, 1e-12).map(|(v, _)| embed(&v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    /// Critical values of rank-1 points.
    RankOne,
    /// Closure of the limit values of H on the singular sphere.
    SingularLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub kind: CurveKind,
    /// (J, H) vertices.
    pub points: Vec<[f64; 2]>,
    /// Form coordinates of each vertex (rank-1 curves only).
    pub locations: Vec<W>,
}

#[derive(Debug)]
pub struct TraceError {
    pub partial: Vec<Curve>,
    pub error: Error,
}

impl std::fmt::Display for TraceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({} partial curves)", self.error, self.partial.len())
    }
}

impl std::error::Error for TraceError {}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationControls {
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub tol: f64,
    pub max_steps: usize,
    /// Stop the T*S² branches once |J| exceeds this.
    pub j_limit: f64,
    /// Stop the S²×S² branches this close to the singular sphere, or once
    /// their values are this close to the singular-limit circle.
    pub singular_stop: f64,
    pub circle_stop: f64,
    pub seed_offset: f64,
}

impl Default for ContinuationControls {
    fn default() -> Self {
        Self { h_init: 1e-3, h_max: 2e-3, h_min: 1e-9, tol: 1e-12, max_steps: 200_000, j_limit: 3.0, singular_stop: 1e-3, circle_stop: 1e-9, seed_offset: 1e-3 }
    }
}

const NX: usize = 9;

/// Lagrange system for rank-1 points with a rotation slice:
/// ∇H − λ∇J − ν·∇g = 0, g = 0, w_y = 0. Unknowns (w, λ, ν).
fn lagrange(form: EmomForm, x: &DVector<f64>) -> DVector<f64> {
    let w: W = std::array::from_fn(|k| x[k]);
    let (lam, nu) = (x[6], [x[7], x[8]]);
    let gh = form.grad_h(&w);
    let gj = form.grad_j(&w);
    let gg = form.constraint_gradients(&w);
    let g = form.constraints(&w);
    let mut f = DVector::zeros(NX);
    for k in 0..6 {
        f[k] = gh[k] - lam * gj[k] - nu[0] * gg[0][k] - nu[1] * gg[1][k];
    }
    f[6] = g[0];
    f[7] = g[1];
    f[8] = w[1];
    f
}

fn lagrange_jacobian(form: EmomForm, x: &DVector<f64>) -> DMatrix<f64> {
    let h = 1e-6;
    let mut j = DMatrix::zeros(NX, NX);
    for k in 0..NX {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        j.set_column(k, &((lagrange(form, &xp) - lagrange(form, &xm)) / (2.0 * h)));
    }
    j
}

fn null_vector(m: &DMatrix<f64>) -> DVector<f64> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let (k, _) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    vt.row(k).transpose()
}

/// Gauss–Newton on F(x) = 0 together with extra rows; minimal-norm steps.
fn gauss_newton(form: EmomForm, x0: &DVector<f64>, extra: &dyn Fn(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>), tol: f64, iters: usize) -> Option<(DVector<f64>, usize)> {
    let mut x = x0.clone();
    for it in 0..iters {
        if form.singular_distance(&std::array::from_fn(|k| x[k])) < 1e-7 {
            return None;
        }
        let f = lagrange(form, &x);
        let (e, de) = extra(&x);
        let mut r = DVector::zeros(NX + e.len());
        r.rows_mut(0, NX).copy_from(&f);
        r.rows_mut(NX, e.len()).copy_from(&e);
        if !r.iter().all(|v| v.is_finite()) {
            return None;
        }
        if r.norm() < tol {
            return Some((x, it));
        }
        let jf = lagrange_jacobian(form, &x);
        let mut a = DMatrix::zeros(NX + e.len(), NX);
        a.rows_mut(0, NX).copy_from(&jf);
        a.rows_mut(NX, e.len()).copy_from(&de);
        let svd = a.svd(true, true);
        let dx = svd.solve(&(-&r), 1e-13).ok()?;
        x += dx;
    }
    let f = lagrange(form, &x);
    let (e, _) = extra(&x);
    (f.norm() + e.norm() < tol).then_some((x, iters))
}

/// A rank-1 point near a rank-0 point with J = target, found by Gauss–Newton
/// from a grid of initial multipliers.
fn seed_branch(form: EmomForm, r0: &EMomSample, target: f64, c: &ContinuationControls) -> Option<DVector<f64>> {
    let w0 = r0.location;
    let b = form.tangent_basis(&w0);
    let gj = form.grad_j(&w0);
    let mut cands: Vec<DVector<f64>> = Vec::new();
    for col in 0..b.ncols() {
        for sgn in [1.0, -1.0] {
            let mut w = w0;
            for i in 0..6 {
                w[i] += sgn * 10.0 * c.seed_offset * b[(i, col)];
            }
            w[1] = 0.0;
            let w = form.retract(&w);
            for lam in (-16..=16).map(|k| k as f64 * 0.25) {
                let mut x = DVector::zeros(NX);
                for i in 0..6 {
                    x[i] = w[i];
                }
                x[6] = lam;
                let extra = |x: &DVector<f64>| {
                    let wx: W = std::array::from_fn(|k| x[k]);
                    let e = DVector::from_vec(vec![form.j(&wx) - target]);
                    let mut d = DMatrix::zeros(1, NX);
                    for k in 0..6 {
                        d[(0, k)] = gj[k];
                    }
                    (e, d)
                };
                if let Some((sol, _)) = gauss_newton(form, &x, &extra, c.tol, 30) {
                    let ws: W = std::array::from_fn(|k| sol[k]);
                    // J may be quadratic in the distance from the rank-0 point
                    if dist(&ws, &w0) < 10.0 * c.seed_offset.sqrt() && rank_at(form, &ws) == 1 {
                        cands.push(sol);
                    }
                }
            }
        }
    }
    // the branch leaving the rank-0 point most steeply in H
    cands.sort_by(|a, b| {
        let ha = emom_w(form, &std::array::from_fn(|k| a[k])).1;
        let hb = emom_w(form, &std::array::from_fn(|k| b[k])).1;
        ha.total_cmp(&hb)
    });
    cands.dedup_by(|a, b| (&*a - &*b).norm() < 1e-8);
    match form {
        EmomForm::TStarS2 => cands.into_iter().next(),
        EmomForm::S2xS2 => cands.into_iter().last(),
    }
}

fn stop_reached(form: EmomForm, w: &W, c: &ContinuationControls) -> bool {
    match form {
        EmomForm::TStarS2 => form.j(w).abs() > c.j_limit,
        EmomForm::S2xS2 => {
            let (j, h) = emom_w(form, w);
            form.singular_distance(w) < c.singular_stop || circle_gap(&[j, h]).abs() < c.circle_stop
        }
    }
}

/// Pseudo-arclength continuation of a rank-1 branch from `seed`, moving away
/// from J = 0.
fn continue_branch(form: EmomForm, start: &EMomSample, seed: DVector<f64>, c: &ContinuationControls) -> std::result::Result<Curve, (Curve, Error)> {
    let mut curve = Curve { kind: CurveKind::RankOne, points: vec![[start.j, start.h]], locations: vec![start.location] };
    let push = |curve: &mut Curve, x: &DVector<f64>| {
        let w: W = std::array::from_fn(|k| x[k]);
        let (j, h) = emom_w(form, &w);
        curve.points.push([j, h]);
        curve.locations.push(w);
    };
    let mut x = seed;
    push(&mut curve, &x);
    let gj = form.grad_j(&std::array::from_fn(|k| x[k]));
    let mut t = null_vector(&lagrange_jacobian(form, &x));
    let dj: f64 = (0..6).map(|k| gj[k] * t[k]).sum();
    if dj * form.j(&std::array::from_fn(|k| x[k])) < 0.0 {
        t = -t;
    }
    let mut h = c.h_init;
    for step in 0..c.max_steps {
        let w: W = std::array::from_fn(|k| x[k]);
        if stop_reached(form, &w, c) {
            return Ok(curve);
        }
        let pred = &x + &t * h;
        let tt = t.clone();
        let pp = pred.clone();
        let extra = move |y: &DVector<f64>| (DVector::from_vec(vec![tt.dot(&(y - &pp))]), DMatrix::from_row_slice(1, NX, tt.as_slice()));
        match gauss_newton(form, &pred, &extra, c.tol, 8) {
            Some((y, iters)) => {
                let mut tn = null_vector(&lagrange_jacobian(form, &y));
                if tn.dot(&t) < 0.0 {
                    tn = -tn;
                }
                x = y;
                t = tn;
                push(&mut curve, &x);
                if iters <= 3 {
                    h = (h * 1.5).min(c.h_max);
                }
            }
            None => {
                h *= 0.5;
                if h < c.h_min {
                    let (j, hh) = emom_w(form, &w);
                    return Err((curve, Error::ContinuationStall { steps: step, j, h: hh }));
                }
            }
        }
    }
    let w: W = std::array::from_fn(|k| x[k]);
    let (j, hh) = emom_w(form, &w);
    Err((curve, Error::ContinuationStall { steps: c.max_steps, j, h: hh }))
}

/// Centre and radius of the circle J² + (H + ½)² = 1 bounding the limit
/// values of H on the singular sphere.
pub const SINGULAR_CENTER: [f64; 2] = [0.0, -0.5];
pub const SINGULAR_RADIUS: f64 = 1.0;
const ARC_STEP: f64 = 1e-3;

/// Signed distance of a value from the singular-limit circle.
pub fn circle_gap(p: &[f64; 2]) -> f64 {
    (p[0] - SINGULAR_CENTER[0]).hypot(p[1] - SINGULAR_CENTER[1]) - SINGULAR_RADIUS
}

/// A random point of S²×S² whose energy-momentum value lies outside the
/// singular circle (with a 5% margin). Energy and momentum are conserved, so
/// flows started here never reach the singular sphere.
pub fn regular_compact_point(s: &mut Sampler) -> ProductPoint {
    loop {
        let pt = ProductPoint::real(s.unit3(), s.unit3()).expect("unit vectors");
        if let Ok((j, h)) = emom_map(EmomForm::S2xS2, &pt) {
            if circle_gap(&[j, h]) > 0.05 {
                return pt;
            }
        }
    }
}

fn circle_angle(p: &[f64; 2]) -> f64 {
    // angle from the top of the circle, clockwise towards J > 0
    p[0].atan2(p[1] - SINGULAR_CENTER[1])
}

fn circle_point(phi: f64) -> [f64; 2] {
    [SINGULAR_RADIUS * phi.sin(), SINGULAR_CENTER[1] + SINGULAR_RADIUS * phi.cos()]
}

/// Rank-1 boundary branches seeded at the rank-0 points; on S²×S² the
/// branches end on the singular circle and are joined by its lower arc.
pub fn trace_boundary(form: EmomForm, rank0: &[EMomSample], c: &ContinuationControls) -> std::result::Result<Vec<Curve>, TraceError> {
    let mut curves = Vec::new();
    for r0 in rank0 {
        if form.singular_distance(&r0.location) < SINGULAR_DIST {
            continue;
        }
        for sign in [1.0, -1.0] {
            let Some(seed) = seed_branch(form, r0, sign * c.seed_offset, c) else { continue };
            match continue_branch(form, r0, seed, c) {
                Ok(curve) => curves.push(curve),
                Err((partial, error)) => {
                    curves.push(partial);
                    return Err(TraceError { partial: curves, error });
                }
            }
        }
    }
    if form == EmomForm::S2xS2 {
        for curve in curves.iter_mut() {
            let last = *curve.points.last().expect("curves are non-empty");
            curve.points.push(circle_point(circle_angle(&last)));
            let loc = *curve.locations.last().expect("curves are non-empty");
            curve.locations.push(loc);
        }
        let ends: Vec<f64> = curves.iter().map(|cv| circle_angle(cv.points.last().expect("non-empty"))).collect();
        if ends.len() == 2 {
            let a = ends.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let b = ends.iter().copied().fold(f64::INFINITY, f64::min) + std::f64::consts::TAU;
            let n = ((b - a) / ARC_STEP).ceil() as usize;
            let points = (0..=n).map(|k| circle_point(a + (b - a) * k as f64 / n as f64)).collect();
            curves.push(Curve { kind: CurveKind::SingularLimit, points, locations: Vec::new() });
        }
    }
    Ok(curves)
}

/// `n` quasi-random points of the form mapped through (J, H).
pub fn sample_image(form: EmomForm, n: usize, radius: f64) -> Vec<[f64; 2]> {
    const IMAGE_OFFSET: u64 = 100_003;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let w = form.from_cube(&halton::<4>(IMAGE_OFFSET + i as u64), radius);
            let w = form.retract(&w);
            let (j, h) = emom_w(form, &w);
            [j, h]
        })
        .collect()
}

fn segment_distance(p: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) };
    ((p[0] - a[0] - t * d[0]).powi(2) + (p[1] - a[1] - t * d[1]).powi(2)).sqrt()
}

pub fn polyline_distance(p: &[f64; 2], poly: &[[f64; 2]]) -> f64 {
    if poly.len() == 1 {
        return ((p[0] - poly[0][0]).powi(2) + (p[1] - poly[0][1]).powi(2)).sqrt();
    }
    poly.windows(2).map(|s| segment_distance(p, &s[0], &s[1])).fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance between two polylines, measured from the
/// vertices of each to the segments of the other.
pub fn hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let one = |x: &[[f64; 2]], y: &[[f64; 2]]| x.iter().map(|p| polyline_distance(p, y)).fold(0.0, f64::max);
    one(a, b).max(one(b, a))
}

/// The closed boundary polygon: branch with J > 0, the arc, the branch with
/// J < 0 reversed. Only meaningful for S²×S².
pub fn closed_boundary(curves: &[Curve]) -> Option<Vec<[f64; 2]>> {
    let branches: Vec<&Curve> = curves.iter().filter(|c| c.kind == CurveKind::RankOne).collect();
    let arc = curves.iter().find(|c| c.kind == CurveKind::SingularLimit)?;
    let pos = branches.iter().find(|c| c.points.last().is_some_and(|p| p[0] > 0.0))?;
    let neg = branches.iter().find(|c| c.points.last().is_some_and(|p| p[0] < 0.0))?;
    let mut poly = pos.points.clone();
    poly.extend(arc.points.iter().copied());
    poly.extend(neg.points.iter().rev().copied());
    Some(poly)
}

/// Gap between consecutive pieces of the closed boundary.
pub fn closure_gap(curves: &[Curve]) -> f64 {
    let Some(poly) = closed_boundary(curves) else { return f64::INFINITY };
    let first = poly[0];
    let last = *poly.last().expect("non-empty");
    let mut gap = ((first[0] - last[0]).powi(2) + (first[1] - last[1]).powi(2)).sqrt();
    for w in poly.windows(2) {
        let d = ((w[0][0] - w[1][0]).powi(2) + (w[0][1] - w[1][1]).powi(2)).sqrt();
        gap = gap.max(if d > 0.05 { d } else { 0.0 });
    }
    gap
}

fn point_in_polygon(p: &[f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Lower envelope of the T*S² branches at J, by linear interpolation.
fn lower_envelope(curves: &[Curve], j: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for c in curves.iter().filter(|c| c.kind == CurveKind::RankOne) {
        for s in c.points.windows(2) {
            let (a, b) = (s[0], s[1]);
            if (a[0] - j) * (b[0] - j) <= 0.0 && a[0] != b[0] {
                let h = a[1] + (j - a[0]) * (b[1] - a[1]) / (b[0] - a[0]);
                best = Some(best.map_or(h, |v: f64| v.min(h)));
            }
        }
    }
    best
}

/// Whether a (J, H) value lies in the region enclosed by the boundary, or
/// within `margin` of it.
pub fn contains(form: EmomForm, curves: &[Curve], p: &[f64; 2], margin: f64) -> bool {
    match form {
        EmomForm::TStarS2 => lower_envelope(curves, p[0]).is_some_and(|h| p[1] >= h - margin),
        EmomForm::S2xS2 => {
            let Some(poly) = closed_boundary(curves) else { return false };
            point_in_polygon(p, &poly) || polyline_distance(p, &poly) <= margin
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BifurcationData {
    pub form: EmomForm,
    pub rank0: Vec<EMomSample>,
    pub boundary: Vec<Curve>,
    pub image: Vec<[f64; 2]>,
    pub starts: usize,
    pub warning: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationConfig {
    pub starts: usize,
    pub image_samples: usize,
    pub image_radius: f64,
    pub continuation: ContinuationControls,
}

impl Default for BifurcationConfig {
    fn default() -> Self {
        Self { starts: DEFAULT_STARTS, image_samples: 4000, image_radius: 2.5, continuation: ContinuationControls::default() }
    }
}

#[derive(Debug)]
pub struct BifurcationError {
    pub partial: BifurcationData,
    pub error: Error,
}

impl std::fmt::Display for BifurcationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.error)
    }
}

impl std::error::Error for BifurcationError {}

/// Rank-0 search, boundary continuation and image sampling for one form.
pub fn bifurcation(form: EmomForm, cfg: &BifurcationConfig) -> std::result::Result<BifurcationData, BifurcationError> {
    let search = find_rank0_with(form, cfg.starts);
    let image = sample_image(form, cfg.image_samples, cfg.image_radius);
    let mut data = BifurcationData { form, rank0: search.points, boundary: Vec::new(), image, starts: cfg.starts, warning: search.warning };
    match trace_boundary(form, &data.rank0, &cfg.continuation) {
        Ok(curves) => {
            data.boundary = curves;
            Ok(data)
        }
        Err(e) => {
            data.boundary = e.partial;
            Err(BifurcationError { partial: data, error: e.error })
        }
    }
}

/// J(s) = s − s⁻³, H(s) = (s⁴ − 3)/(2s²): the relative equilibria of the
/// spherical pendulum (conical motions) with J ≥ 0.
pub fn relative_equilibrium(s: f64) -> [f64; 2] {
    [s - s.powi(-3), (s.powi(4) - 3.0) / (2.0 * s * s)]
}

/// Distance from p to the relative-equilibrium curve over s ∈ [s0, s1].
pub fn relative_equilibrium_distance(p: &[f64; 2], s0: f64, s1: f64) -> f64 {
    let n = 2000;
    let d = |s: f64| {
        let q = relative_equilibrium(s);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    };
    let mut best = (s0, d(s0));
    for k in 1..=n {
        let s = s0 + (s1 - s0) * k as f64 / n as f64;
        let v = d(s);
        if v < best.1 {
            best = (s, v);
        }
    }
    // golden-section refinement around the best grid point
    let h = (s1 - s0) / n as f64;
    let (mut a, mut b) = ((best.0 - h).max(s0), (best.0 + h).min(s1));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let e = a + g * (b - a);
        if d(c) < d(e) {
            b = e;
        } else {
            a = c;
        }
    }
    d(0.5 * (a + b)).min(best.1)
}
