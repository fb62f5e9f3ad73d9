//! Fixtures shared by the criterion benchmarks in `benches/`.

use holoform::emom::regular_compact_point;
use holoform::realstruct::sample_regular_product;
use holoform::sample::Sampler;
use holoform::ProductPoint;

/// Seeded generic points of CS²×CS² away from the singular set.
pub fn product_points(n: usize, seed: u64) -> Vec<ProductPoint> {
    let mut s = Sampler::new(seed);
    (0..n).map(|_| sample_regular_product(&mut s, 1.0)).collect()
}

/// Seeded real points of S²×S² whose flows stay regular.
pub fn compact_points(n: usize, seed: u64) -> Vec<ProductPoint> {
    let mut s = Sampler::new(seed);
    (0..n).map(|_| regular_compact_point(&mut s)).collect()
}
