//! The full invariant suite behind `holoform verify`, organised in named
//! groups. Every check is seeded from the run seed and its own name, so
//! filtering with `only` does not change the samples of the checks that run.

use crate::algebra::{pauli_basis, Mat2C};
use crate::dynamics::{
    bracket_from_gradients, check_invariance, complex_step_product_gradient, energy_gradient, Energy, Momentum, ProductFn, ProductPoint, Scaled,
};
use crate::error::{Error, Result};
use crate::orbit::{
    adjoint_action, calibration, fit_calibration, kks_bracket, phi, phi_symplectic_defect, phi_transfer, su2_cotangent, tangent_projection,
    Pullback, Su2Invariant,
};
use crate::phase::{canonical_bracket, momentum_p, mu123_via, Axis};
use crate::realstruct::{
    check_cross_row, check_descent, check_equivariance_report, check_fixed_set, check_involution, check_linearity, check_momentum_compat,
    check_real_poisson, check_real_poisson_map, check_real_symplectic, check_realified, sample_regular_product, wrong_involution, Column,
    FixedSetLabel, RealStructureId,
};
use crate::report::{max_residual, CheckReport};
use crate::sample::Sampler;
use crate::scalar::{C, I};
use serde::Serialize;
use std::collections::BTreeMap;

/// Check groups in run order.
pub const GROUPS: [&str; 11] = [
    "algebra",
    "involutions",
    "fixed-sets",
    "classification",
    "real-poisson",
    "equivariance",
    "compatibility",
    "commutation",
    "invariance",
    "poisson",
    "phi",
];

/// Named tolerances and their defaults; `--tol.<name>` overrides these.
pub const TOLERANCES: [(&str, f64); 17] = [
    ("quaternion", 1e-14),
    ("basis", 1e-12),
    ("involution", 1e-14),
    ("linearity", 1e-10),
    ("descent", 1e-12),
    ("cross_row", 1e-14),
    ("fixed_set", 1e-10),
    ("real_poisson", 1e-12),
    ("equivariance", 1e-12),
    ("compat", 1e-10),
    ("commutation", 1e-10),
    ("gradient", 1e-8),
    ("invariance", 1e-8),
    ("poisson", 1e-9),
    ("phi_equivariance", 1e-9),
    ("phi_symplectic", 1e-6),
    ("calibration", 1e-9),
];

#[derive(Clone, Debug, Default)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Overrides every per-check sample count.
    pub samples: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
    /// Group names to run; empty runs everything.
    pub only: Vec<String>,
}

impl VerifyConfig {
    pub fn new(seed: u64) -> Self {
        Self { seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for name in self.tolerances.keys() {
            if !TOLERANCES.iter().any(|(n, _)| n == name) {
                let known: Vec<&str> = TOLERANCES.iter().map(|(n, _)| *n).collect();
                return Err(Error::InvalidArgument(format!("unknown tolerance {name:?} (known: {})", known.join(", "))));
            }
        }
        for g in &self.only {
            if !GROUPS.contains(&g.as_str()) {
                return Err(Error::InvalidArgument(format!("unknown check group {g:?} (known: {})", GROUPS.join(", "))));
            }
        }
        if self.samples == Some(0) {
            return Err(Error::InvalidArgument("sample count must be positive".into()));
        }
        Ok(())
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances.get(name).copied().unwrap_or_else(|| TOLERANCES.iter().find(|(n, _)| *n == name).map(|(_, v)| *v).expect("known tolerance name"))
    }

    fn n(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    fn seed_for(&self, name: &str) -> u64 {
        // FNV-1a, so each check's stream depends only on the run seed and its name
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in name.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h ^ self.seed
    }

    fn selected(&self, group: &str) -> bool {
        self.only.is_empty() || self.only.iter().any(|g| g == group)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub group: &'static str,
    #[serde(flatten)]
    pub report: CheckReport,
    pub tolerance_induced: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub checks: usize,
    pub failures: usize,
    pub tolerance_induced: usize,
    pub groups: Vec<&'static str>,
    pub results: Vec<CheckEntry>,
}

impl VerifyReport {
    pub fn failed(&self) -> impl Iterator<Item = &CheckEntry> {
        self.results.iter().filter(|e| !e.report.pass)
    }
}

fn err_report(id: &str, property: &str, e: Error) -> CheckReport {
    let mut r = CheckReport::new(id, property, 0, f64::INFINITY, 0.0);
    r.pass = false;
    r.detail = Some(e.to_string());
    r
}

fn or_err(id: &str, property: &str, r: Result<CheckReport>) -> CheckReport {
    r.unwrap_or_else(|e| err_report(id, property, e))
}

fn algebra(cfg: &VerifyConfig) -> Vec<CheckReport> {
    let (ii, jj, kk) = pauli_basis();
    let minus = -Mat2C::identity();
    let pairs = [(ii * ii, minus), (jj * jj, minus), (kk * kk, minus), (ii * jj, kk), (jj * kk, ii), (kk * ii, jj)];
    let table = pairs.iter().map(|(a, b)| (*a - *b).norm()).fold(0.0, max_residual);
    let n = cfg.n(1000);
    let mut s = Sampler::new(cfg.seed_for("basis"));
    let mut basis = 0.0;
    for _ in 0..n {
        let b = s.biquaternion();
        let a = mu123_via(&b, Axis::I);
        for axis in [Axis::J, Axis::K] {
            let c = mu123_via(&b, axis);
            for k in 0..3 {
                basis = max_residual(basis, (a[k] - c[k]).norm());
            }
        }
    }
    vec![
        CheckReport::new("I,J,K", "quaternion table", 6, table, cfg.tol("quaternion")),
        CheckReport::new("mu123", "basis independence", n, basis, cfg.tol("basis")),
    ]
}

fn involutions(cfg: &VerifyConfig) -> Vec<CheckReport> {
    let n = cfg.n(200);
    let mut out = Vec::new();
    for id in RealStructureId::all() {
        let name = id.name();
        out.push(check_involution(id, n, cfg.seed_for(&format!("involution {name}")), cfg.tol("involution")));
        out.push(check_linearity(id, n, cfg.seed_for(&format!("linearity {name}")), cfg.tol("linearity")));
    }
    for axis in Axis::ALL {
        for column in Column::ALL {
            out.push(check_descent(column, axis, n, cfg.seed_for(&format!("descent {column}{axis}")), cfg.tol("descent")));
        }
    }
    for column in Column::ALL {
        out.push(check_cross_row(column, n, cfg.seed_for(&format!("cross-row {column}")), cfg.tol("cross_row")));
    }
    out
}

fn fixed_sets(cfg: &VerifyConfig) -> Vec<CheckReport> {
    FixedSetLabel::ALL
        .iter()
        .map(|&label| {
            let r = check_fixed_set(label, cfg.n(100), cfg.seed_for(&format!("fixed {label}")), cfg.tol("fixed_set"));
            or_err(&label.to_string(), "fixed set", r)
        })
        .collect()
}

fn classification(cfg: &VerifyConfig) -> Vec<CheckReport> {
    RealStructureId::all()
        .into_iter()
        .map(|id| check_real_symplectic(id, cfg.n(100), cfg.seed_for(&format!("classify {}", id.name()))).report)
        .collect()
}

fn real_poisson(cfg: &VerifyConfig) -> Vec<CheckReport> {
    let n = cfg.n(300);
    let tol = cfg.tol("real_poisson");
    let mut out: Vec<CheckReport> = RealStructureId::STANDARD_TRIPLE
        .iter()
        .map(|(_, reduced, _)| or_err(&reduced.name(), "real-poisson", check_real_poisson(*reduced, n, cfg.seed_for(&format!("rp {}", reduced.name())), tol)))
        .collect();
    let bad = check_real_poisson_map("xi^T-bar J", &wrong_involution, n, cfg.seed_for("rp wrong"), tol).map(|r| {
        let mut neg = CheckReport::negative(r.id, "real-poisson (negative control)", r.samples, r.max_residual, tol);
        neg.detail = Some("a conjugate-linear map that is not real-Poisson must fail".into());
        neg
    });
    out.push(or_err("xi^T-bar J", "real-poisson (negative control)", bad));
    out
}

fn equivariance(cfg: &VerifyConfig) -> Vec<CheckReport> {
    let n = cfg.n(500);
    let tol = cfg.tol("equivariance");
    let mut out = Vec::new();
    for (m, _, g) in RealStructureId::STANDARD_TRIPLE {
        let r = check_equivariance_report(m, g, n, cfg.seed_for(&format!("eq {m} {g}")), tol, true);
        out.push(or_err(&format!("({m},{g})"), "equivariance", r));
    }
    let rho = RealStructureId::GroupPartner(Column::R);
    let sigma = RealStructureId::GroupPartner(Column::S);
    let tau = RealStructureId::GroupPartner(Column::T);
    for (m, g) in [
        (RealStructureId::SWAP, rho),
        (RealStructureId::TWISTED_SWAP, rho),
        (RealStructureId::CONJUGATION, sigma),
        (RealStructureId::CONJUGATION, tau),
    ] {
        let r = check_equivariance_report(m, g, n.min(100), cfg.seed_for(&format!("eq- {m} {g}")), tol, false);
        out.push(or_err(&format!("({m},{g})"), "equivariance (negative control)", r));
    }
    out
}

fn pendulum_pair(pt: &ProductPoint) -> Result<[C; 2]> {
    Ok([Energy.value(&pt.x), Momentum.value(&pt.x)])
}

fn compatibility(cfg: &VerifyConfig) -> Vec<CheckReport> {
    let n = cfg.n(500);
    let tol = cfg.tol("compat");
    let sigma = RealStructureId::ProductConjugation;
    let ups = RealStructureId::SwapConjugation;
    let mut out = vec![
        or_err("Sigma", "momentum-compatibility", check_momentum_compat(sigma, &pendulum_pair, &|[h, j]| [h.conj(), -j.conj()], n, cfg.seed_for("compat sigma"), tol)),
        or_err("Upsilon", "momentum-compatibility", check_momentum_compat(ups, &pendulum_pair, &|[h, j]| [h.conj(), j.conj()], n, cfg.seed_for("compat upsilon"), tol)),
    ];
    let wrong = check_momentum_compat(ups, &pendulum_pair, &|[h, j]| [h.conj(), -j.conj()], n.min(100), cfg.seed_for("compat wrong"), tol)
        .map(|r| CheckReport::negative(r.id, "momentum-compatibility (negative control, Sigma's sign on Upsilon)", r.samples, r.max_residual, tol));
    out.push(or_err("Upsilon", "momentum-compatibility (negative control)", wrong));
    for id in [sigma, ups] {
        for (name, r) in [
            ("H", check_realified(Energy, id, n.min(300), cfg.seed_for(&format!("real H {id}")), tol)),
            ("J", check_realified(Momentum, id, n.min(300), cfg.seed_for(&format!("real J {id}")), tol)),
        ] {
            out.push(or_err(&format!("{id}/{name}"), "realified-integral", r.map(|mut r| {
                r.id = format!("{}/{name}", r.id);
                r
            })));
        }
    }
    out
}

fn commutation(cfg: &VerifyConfig) -> Vec<CheckReport> {
    let n = cfg.n(1000);
    let mut s = Sampler::new(cfg.seed_for("commutation"));
    let (mut bracket, mut grad) = (0.0, 0.0);
    for _ in 0..n {
        let pt = sample_regular_product(&mut s, 1.0);
        let a = energy_gradient(&pt.x);
        let b = complex_step_product_gradient(&Energy, &pt.x);
        for k in 0..6 {
            grad = max_residual(grad, (a[k] - b[k]).norm() / (1.0 + a[k].norm()));
        }
        bracket = max_residual(bracket, bracket_from_gradients(&pt.x, &a, &Momentum.gradient(&pt.x)).norm());
    }
    vec![
        CheckReport::new("{H,J}", "commutation", n, bracket, cfg.tol("commutation")),
        CheckReport::new("grad H", "analytic vs complex-step gradient", n, grad, cfg.tol("gradient")),
    ]
}

fn invariance(cfg: &VerifyConfig) -> Vec<CheckReport> {
    let n = cfg.n(20).min(50);
    let mut out = Vec::new();
    for id in [RealStructureId::ProductConjugation, RealStructureId::SwapConjugation] {
        let r = check_invariance(id, &Energy, n, 1.0, cfg.seed_for(&format!("inv {id}"))).map(|r| {
            let mut rep = r.report;
            rep.tolerance = cfg.tol("invariance");
            rep.pass = r.invariant && rep.max_residual <= rep.tolerance;
            rep
        });
        out.push(or_err(&id.name(), "flow invariance", r));
    }
    // the holomorphic iH flow must leave S²×S²
    let r = check_invariance(RealStructureId::ProductConjugation, &Scaled(I, Energy), n.min(10), 1.0, cfg.seed_for("inv negative")).map(|r| {
        let mut rep = CheckReport::negative("Sigma/iH", "flow invariance (negative control)", r.report.samples, r.report.max_residual, cfg.tol("invariance"));
        rep.pass = !r.invariant;
        rep
    });
    out.push(or_err("Sigma/iH", "flow invariance (negative control)", r));
    out
}

fn poisson(cfg: &VerifyConfig) -> Vec<CheckReport> {
    let n = cfg.n(500);
    let mut s = Sampler::new(cfg.seed_for("poisson"));
    let mut worst = 0.0;
    for _ in 0..n {
        let pt = s.phase_point();
        let (f, g) = (s.quadratic_fn(), s.quadratic_fn());
        let lhs = canonical_bracket(&Pullback(&f), &Pullback(&g), &pt);
        let rhs = kks_bracket(&f, &g, &momentum_p(&pt));
        worst = max_residual(worst, (lhs - rhs).norm() / (1.0 + rhs.norm()));
    }
    vec![CheckReport::new("P(q,p)=qp^T", "momentum map is Poisson", n, worst, cfg.tol("poisson"))]
}

fn phi_checks(cfg: &VerifyConfig) -> Vec<CheckReport> {
    let n = cfg.n(200);
    let mut s = Sampler::new(cfg.seed_for("phi equivariance"));
    let mut eq = 0.0;
    for _ in 0..n {
        let pt = s.cs2_point(1.5);
        let g = s.su2();
        let r = (|| -> Result<f64> {
            let lhs = phi(&adjoint_action(&g, &pt)?)?;
            let rhs = su2_cotangent(&phi_transfer(&g), &phi(&pt)?)?;
            Ok(lhs.phase_distance(&rhs))
        })();
        eq = max_residual(eq, r.unwrap_or(f64::NAN));
    }
    let mut s = Sampler::new(cfg.seed_for("phi symplectic"));
    let mut sym = 0.0;
    for _ in 0..n.min(100) {
        let pt = s.cs2_point(1.5);
        let v = tangent_projection(&pt, &s.complex3());
        let w = tangent_projection(&pt, &s.complex3());
        sym = max_residual(sym, phi_symplectic_defect(&pt, &v, &w, 1e-5).unwrap_or(f64::NAN));
    }
    let cal = match cfg.samples {
        Some(k) => {
            let mut s = Sampler::new(cfg.seed_for("calibration"));
            let pts: Vec<_> = (0..k.max(2)).map(|_| s.cs2_point(2.0)).collect();
            fit_calibration(&pts)
        }
        None => Ok(*calibration()),
    };
    let cal_report = match cal {
        Ok(c) => CheckReport::new("|eta|^2 ~ X", "affine calibration fit", c.samples, c.max_residual, cfg.tol("calibration")).with_detail(format!(
            "slope {:.12}, intercept {:.12}; claimed slope 1, intercept 0 (mismatch {:.3e}, {:.3e})",
            c.slope,
            c.intercept,
            c.slope - 1.0,
            c.intercept
        )),
        Err(e) => err_report("|eta|^2 ~ X", "affine calibration fit", e),
    };
    let zero = phi(&crate::orbit::OrbitPoint::real([0.0, 0.0, 1.0]).expect("pole")).map(|r| r.su2_invariant());
    vec![
        CheckReport::new("Phi", "SU(2)-equivariance", n, eq, cfg.tol("phi_equivariance")),
        CheckReport::new("Phi", "pullback of Re(canonical) = Im(KKS)", n.min(100), sym, cfg.tol("phi_symplectic")),
        cal_report,
        or_err("Phi(0,0,1)", "real sphere to zero section", zero.map(|v| CheckReport::new("Phi(0,0,1)", "real sphere to zero section", 1, v, cfg.tol("calibration")))),
    ]
}

/// Runs the selected groups. The report passes iff every check passes.
pub fn run(cfg: &VerifyConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let mut results = Vec::new();
    let mut groups = Vec::new();
    for group in GROUPS {
        if !cfg.selected(group) {
            continue;
        }
        groups.push(group);
        let reports = match group {
            "algebra" => algebra(cfg),
            "involutions" => involutions(cfg),
            "fixed-sets" => fixed_sets(cfg),
            "classification" => classification(cfg),
            "real-poisson" => real_poisson(cfg),
            "equivariance" => equivariance(cfg),
            "compatibility" => compatibility(cfg),
            "commutation" => commutation(cfg),
            "invariance" => invariance(cfg),
            "poisson" => poisson(cfg),
            "phi" => phi_checks(cfg),
            _ => unreachable!("group list is closed"),
        };
        results.extend(reports.into_iter().map(|report| CheckEntry { group, tolerance_induced: report.tolerance_induced(), report }));
    }
    let failures = results.iter().filter(|e| !e.report.pass).count();
    Ok(VerifyReport {
        pass: failures == 0,
        checks: results.len(),
        failures,
        tolerance_induced: results.iter().filter(|e| e.tolerance_induced).count(),
        groups,
        results,
    })
}
