//! Dormand–Prince 5(4) on the twelve real coordinates with a quadric
//! projection after every accepted step.

use super::{Energy, Momentum, ProductFn, ProductPoint, field_from_gradient, project_to_product, SINGULAR_TOL};
use crate::error::Error;
use crate::scalar::C;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowControls {
    pub atol: f64,
    pub rtol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub project: bool,
    pub singular_tol: f64,
    pub max_steps: usize,
}

impl Default for FlowControls {
    fn default() -> Self {
        Self { atol: 1e-10, rtol: 1e-10, h_max: 0.01, h_min: 1e-12, project: true, singular_tol: SINGULAR_TOL, max_steps: 10_000_000 }
    }
}

/// Conserved quantities at one sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub h: C,
    pub j: C,
    pub casimirs: [C; 2],
}

impl StateRecord {
    pub fn at(x: &[C; 6]) -> Self {
        let pt = ProductPoint::unchecked(*x);
        Self { h: Energy.value(x), j: Momentum.value(x), casimirs: pt.casimirs() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ProductPoint>,
    pub drift: Vec<StateRecord>,
}

impl Trajectory {
    fn push(&mut self, t: f64, x: [C; 6]) {
        self.times.push(t);
        self.states.push(ProductPoint::unchecked(x));
        self.drift.push(StateRecord::at(&x));
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn last(&self) -> Option<&ProductPoint> {
        self.states.last()
    }
    /// max_t |f(t) − f(0)| / max(1, |f(0)|) for H, J and the two Casimirs.
    pub fn relative_drift(&self) -> [f64; 4] {
        let Some(first) = self.drift.first() else { return [0.0; 4] };
        let pick = |r: &StateRecord| [r.h, r.j, r.casimirs[0], r.casimirs[1]];
        let f0 = pick(first);
        let mut out = [0.0f64; 4];
        for r in &self.drift {
            for (k, v) in pick(r).iter().enumerate() {
                let d = (v - f0[k]).norm() / f0[k].norm().max(1.0);
                out[k] = if d.is_nan() { f64::INFINITY } else { out[k].max(d) };
            }
        }
        out
    }
    /// max_t |x_k·x_k − 1| over both factors.
    pub fn casimir_residual(&self) -> f64 {
        self.drift.iter().flat_map(|r| r.casimirs).map(|c| (c - 1.0).norm()).fold(0.0, f64::max)
    }
    pub fn max_imaginary(&self) -> f64 {
        self.states.iter().map(|s| s.max_imaginary()).fold(0.0, f64::max)
    }
}

/// A flow that stopped early, with everything computed up to that point.
#[derive(Debug)]
pub struct FlowError {
    pub partial: Trajectory,
    pub error: Error,
}

impl std::fmt::Display for FlowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let t = self.partial.times.last().copied().unwrap_or(0.0);
        write!(f, "{} (trajectory stopped at t = {t})", self.error)
    }
}

impl std::error::Error for FlowError {}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn rhs<F: ProductFn + ?Sized>(f: &F, x: &[C; 6]) -> [C; 6] {
    field_from_gradient(x, &f.gradient(x))
}

fn combine(x: &[C; 6], h: f64, ks: &[[C; 6]], w: &[f64]) -> [C; 6] {
    std::array::from_fn(|i| x[i] + ks.iter().zip(w).map(|(k, c)| k[i] * (c * h)).sum::<C>())
}

/// One trial step: the fifth-order solution and the scaled error norm.
fn trial<F: ProductFn + ?Sized>(f: &F, x: &[C; 6], h: f64, c: &FlowControls) -> ([C; 6], f64) {
    let mut ks: Vec<[C; 6]> = Vec::with_capacity(7);
    ks.push(rhs(f, x));
    for row in A.iter() {
        let y = combine(x, h, &ks, &row[..ks.len()]);
        ks.push(rhs(f, &y));
    }
    let _ = (C2, C3, C4, C5);
    let y = combine(x, h, &ks[..6], &A[5]);
    let mut acc = 0.0;
    for i in 0..6 {
        let e: C = ks.iter().zip(E.iter()).map(|(k, w)| k[i] * (w * h)).sum();
        let sc_re = c.atol + c.rtol * x[i].re.abs().max(y[i].re.abs());
        let sc_im = c.atol + c.rtol * x[i].im.abs().max(y[i].im.abs());
        acc += (e.re / sc_re).powi(2) + (e.im / sc_im).powi(2);
    }
    let err = (acc / 12.0).sqrt();
    let ok = y.iter().all(|z| z.is_finite());
    (y, if ok && err.is_finite() { err } else { f64::INFINITY })
}

fn singular_error<F: ProductFn + ?Sized>(f: &F, x: &[C; 6], tol: f64) -> Option<Error> {
    match f.singularity(x) {
        Some(r) if r < tol => Some(Error::Singularity { radicand: r, location: *x }),
        _ => None,
    }
}

/// Integrates ẋ_k = c·∇_k f × x_k from `start` over [0, t_final].
pub fn flow<F: ProductFn + ?Sized>(start: &ProductPoint, f: &F, t_final: f64, controls: &FlowControls) -> Result<Trajectory, FlowError> {
    let mut traj = Trajectory::default();
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(FlowError { partial: traj, error: Error::InvalidArgument(format!("t_final must be finite and non-negative, got {t_final}")) });
    }
    let mut x = start.x;
    let mut t = 0.0;
    traj.push(t, x);
    let mut h = controls.h_max;
    let mut steps = 0usize;
    while t < t_final {
        if let Some(e) = singular_error(f, &x, controls.singular_tol) {
            return Err(FlowError { partial: traj, error: e });
        }
        if steps >= controls.max_steps {
            return Err(FlowError { partial: traj, error: Error::StepUnderflow { t } });
        }
        let last = t_final - t <= h * (1.0 + 1e-12);
        let step = if last { t_final - t } else { h };
        let (y, err) = trial(f, &x, step, controls);
        steps += 1;
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err <= 1.0 {
            x = if controls.project { project_to_product(&y) } else { y };
            t = if last { t_final } else { t + step };
            traj.push(t, x);
            if !last {
                h = (step * factor).min(controls.h_max);
            }
        } else {
            h = step * factor.min(1.0);
            if h < controls.h_min {
                let error = singular_error(f, &x, 1e-3).unwrap_or(Error::StepUnderflow { t });
                return Err(FlowError { partial: traj, error });
            }
        }
    }
    Ok(traj)
}
