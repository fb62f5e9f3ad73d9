use holoform::dynamics::{radicand, Energy, ProductFn};
use holoform::emom::{
    bifurcation, contains, polyline_distance, sample_image, BifurcationConfig, BifurcationData, Curve, CurveKind, EmomForm, SINGULAR_CENTER,
    SINGULAR_RADIUS,
};
use holoform::C;
use std::f64::consts::TAU;
use std::sync::OnceLock;

fn data(form: EmomForm) -> &'static BifurcationData {
    static T: OnceLock<BifurcationData> = OnceLock::new();
    static S: OnceLock<BifurcationData> = OnceLock::new();
    let cell = match form {
        EmomForm::TStarS2 => &T,
        EmomForm::S2xS2 => &S,
    };
    cell.get_or_init(|| {
        let cfg = BifurcationConfig { image_samples: 1000, ..Default::default() };
        bifurcation(form, &cfg).expect("boundary traced")
    })
}

/// Raw energy on S²×S² at heights z1, z2 (z1 + z2 = 2J) with relative azimuth
/// `dphi`; both factors can be rotated together without changing it.
fn compact_energy(z1: f64, z2: f64, dphi: f64) -> Option<f64> {
    let (r1, r2) = ((1.0 - z1 * z1).max(0.0).sqrt(), (1.0 - z2 * z2).max(0.0).sqrt());
    let x = [r1, 0.0, z1, r2 * dphi.cos(), r2 * dphi.sin(), z2].map(|v| C::new(v, 0.0));
    (radicand(&x).norm() > 1e-12).then(|| Energy.value(&x).re)
}

/// Brute-force extremes of H on the level set J = j, over a grid in
/// (z1, relative azimuth).
fn level_extremes(j: f64, n: usize) -> (f64, f64) {
    let (lo, hi) = ((2.0 * j - 1.0).max(-1.0), (2.0 * j + 1.0).min(1.0));
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for a in 0..=n {
        let z1 = lo + (hi - lo) * a as f64 / n as f64;
        for b in 0..n {
            if let Some(h) = compact_energy(z1, 2.0 * j - z1, TAU * b as f64 / n as f64) {
                min = min.min(h);
                max = max.max(h);
            }
        }
    }
    (min, max)
}

fn branch_height(curves: &[Curve], j: f64) -> Vec<f64> {
    let mut hs = Vec::new();
    for c in curves.iter().filter(|c| c.kind == CurveKind::RankOne) {
        for s in c.points.windows(2) {
            let (a, b) = (s[0], s[1]);
            if (a[0] - j) * (b[0] - j) <= 0.0 && a[0] != b[0] {
                hs.push(a[1] + (j - a[0]) * (b[1] - a[1]) / (b[0] - a[0]));
            }
        }
    }
    hs
}

#[test]
fn compact_upper_branches_are_the_constrained_maximum() {
    let d = data(EmomForm::S2xS2);
    for j in [-0.8, -0.5, -0.2, 0.1, 0.4, 0.75] {
        let (_, max) = level_extremes(j, 1500);
        let hs = branch_height(&d.boundary, j);
        assert_eq!(hs.len(), 1, "J = {j}: {hs:?}");
        assert!(max <= hs[0] + 1e-7, "J = {j}: grid max {max} above the branch {}", hs[0]);
        assert!(hs[0] - max < 1e-4, "J = {j}: grid max {max} far below the branch {}", hs[0]);
    }
}

#[test]
fn compact_lower_boundary_is_only_approached() {
    for j in [-0.7, -0.3, 0.0, 0.5] {
        let (min, _) = level_extremes(j, 1500);
        let arc = SINGULAR_CENTER[1] - (SINGULAR_RADIUS * SINGULAR_RADIUS - j * j).sqrt();
        assert!(min > arc, "J = {j}: {min} reaches the circle {arc}");
        assert!(min - arc < 2e-2, "J = {j}: {min} stays away from the circle {arc}");
    }
}

#[test]
fn cotangent_image_is_unbounded_above() {
    let top = |r: f64| sample_image(EmomForm::TStarS2, 2000, r).iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
    let (a, b, c) = (top(1.0), top(3.0), top(9.0));
    assert!(a < b && b < c && c > 10.0 * a.abs().max(1.0), "{a} {b} {c}");
}

#[test]
fn boundaries_are_symmetric_in_momentum() {
    for form in EmomForm::ALL {
        let d = data(form);
        let all: Vec<[f64; 2]> = d.boundary.iter().flat_map(|c| c.points.iter().copied()).collect();
        for c in &d.boundary {
            for p in c.points.iter().step_by(25) {
                let m = [-p[0], p[1]];
                let dist = d.boundary.iter().map(|o| polyline_distance(&m, &o.points)).fold(f64::INFINITY, f64::min);
                assert!(dist < 1e-5, "{}: mirror of {p:?} is {dist:e} from the boundary", form.name());
            }
        }
        assert!(!all.is_empty());
    }
}

#[test]
fn rank0_values_and_samples_lie_in_the_enclosed_region() {
    for form in EmomForm::ALL {
        let d = data(form);
        for r in &d.rank0 {
            assert!(contains(form, &d.boundary, &[r.j, r.h], 1e-6), "{}: rank-0 value ({}, {})", form.name(), r.j, r.h);
        }
        let outside = d.image.iter().filter(|p| !contains(form, &d.boundary, p, 1e-6)).count();
        assert_eq!(outside, 0, "{}", form.name());
    }
}
