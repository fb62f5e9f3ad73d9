//! Invariance of a fixed set under a holomorphic flow: the flow of f leaves a
//! real-symplectic fixed set invariant iff Im f is locally constant on it.
//! On an imaginary-symplectic fixed set the real-form flow is that of i·f.

use super::{flow, FlowControls, ProductFn, Scaled};
use crate::realstruct::{apply_product, fixed_tangent, sample_regular_product, Classification, FixedSetLabel, Point, RealStructureId};
use crate::report::{max_residual, CheckReport};
use crate::sample::Sampler;
use crate::scalar::{C, I};
use serde::Serialize;

pub const INVARIANCE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub report: CheckReport,
    /// max |d(Im f)(T)| over unit tangents T of the fixed set.
    pub tangential: f64,
    /// max distance from the fixed set along the short flows.
    pub flow_residual: f64,
    pub invariant: bool,
}

fn label_of(id: RealStructureId) -> Option<FixedSetLabel> {
    match id {
        RealStructureId::ProductConjugation => Some(FixedSetLabel::SphereProduct),
        RealStructureId::SwapConjugation => Some(FixedSetLabel::ConjugateDiagonal),
        _ => None,
    }
}

pub fn check_invariance<F: ProductFn>(id: RealStructureId, f: &F, samples: usize, t_short: f64, seed: u64) -> crate::Result<InvarianceReport> {
    let label = label_of(id).ok_or_else(|| crate::Error::InvalidArgument(format!("{id} has no fixed set in CS²×CS²")))?;
    let scale = if id.claimed() == Classification::ImaginarySymplectic { I } else { C::new(1.0, 0.0) };
    let generator = Scaled(scale, f);
    let mut s = Sampler::new(seed);
    let mut tangential = 0.0;
    let mut flow_residual = 0.0;
    let mut n = 0;
    while n < samples {
        let Point::Product(pt) = label.sample(&mut s) else { unreachable!() };
        if crate::dynamics::radicand(&pt.x).norm() < 0.1 {
            continue;
        }
        n += 1;
        let grad = f.gradient(&pt.x);
        let raw = sample_regular_product(&mut s, 1.0).x;
        let v = crate::dynamics::product_tangent(&pt, &raw);
        let t = fixed_tangent(id, &v)?;
        let tn = t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if tn > 1e-8 {
            let d: C = grad.iter().zip(&t).map(|(g, w)| g * w).sum();
            tangential = max_residual(tangential, d.im.abs() / tn);
        }
        let traj = match flow(&pt, &generator, t_short, &FlowControls::default()) {
            Ok(tr) => tr,
            Err(e) => e.partial,
        };
        for st in &traj.states {
            flow_residual = max_residual(flow_residual, apply_product(id, st)?.distance(st));
        }
    }
    let invariant = tangential <= INVARIANCE_TOL && flow_residual <= INVARIANCE_TOL;
    let report = CheckReport::new(id.name(), "flow-invariance", samples, tangential.max(flow_residual), INVARIANCE_TOL)
        .with_detail(format!("tangential {tangential:e}, flow {flow_residual:e}"));
    Ok(InvarianceReport { report, tangential, flow_residual, invariant })
}

/// Lets `&F` be wrapped by [`Scaled`].
impl<F: ProductFn + ?Sized> ProductFn for &F {
    fn eval<S: crate::scalar::Scalar>(&self, x: &[S; 6]) -> S {
        (**self).eval(x)
    }
    fn gradient(&self, x: &[C; 6]) -> [C; 6] {
        (**self).gradient(x)
    }
    fn singularity(&self, x: &[C; 6]) -> Option<f64> {
        (**self).singularity(x)
    }
}
