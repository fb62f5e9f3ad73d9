use criterion::{black_box, criterion_group, criterion_main, Criterion};
use holoform::dynamics::{energy_gradient, flow, hamiltonian_vector_field, Energy, FlowControls, Momentum};
use holoform::emom::{find_rank0_with, rank_at, EmomForm};
use holoform::realstruct::apply_product;
use holoform::RealStructureId;
use holoform_bench::{compact_points, product_points};

fn gradients(c: &mut Criterion) {
    let pts = product_points(64, 1);
    c.bench_function("energy_gradient", |b| {
        b.iter(|| {
            for p in &pts {
                black_box(energy_gradient(black_box(&p.x)));
            }
        })
    });
    c.bench_function("vector_field", |b| {
        b.iter(|| {
            for p in &pts {
                black_box(hamiltonian_vector_field(&Energy, black_box(p)));
            }
        })
    });
}

fn involutions(c: &mut Criterion) {
    let pts = product_points(64, 2);
    let ids = [RealStructureId::ProductConjugation, RealStructureId::SwapConjugation];
    c.bench_function("product_involutions", |b| {
        b.iter(|| {
            for p in &pts {
                for id in ids {
                    black_box(apply_product(id, black_box(p)).unwrap());
                }
            }
        })
    });
}

fn flows(c: &mut Criterion) {
    let start = compact_points(1, 3).remove(0);
    let controls = FlowControls::default();
    c.bench_function("flow_energy_t1", |b| b.iter(|| black_box(flow(black_box(&start), &Energy, 1.0, &controls).unwrap())));
    c.bench_function("flow_momentum_t1", |b| b.iter(|| black_box(flow(black_box(&start), &Momentum, 1.0, &controls).unwrap())));
}

fn energy_momentum(c: &mut Criterion) {
    let ws: Vec<_> = compact_points(64, 4).iter().map(|p| EmomForm::S2xS2.from_product(p).unwrap()).collect();
    c.bench_function("rank_at_s2xs2", |b| {
        b.iter(|| {
            for w in &ws {
                black_box(rank_at(EmomForm::S2xS2, black_box(w)));
            }
        })
    });
    let mut g = c.benchmark_group("rank0_search");
    g.sample_size(10);
    g.bench_function("tstar_s2_64_starts", |b| b.iter(|| black_box(find_rank0_with(EmomForm::TStarS2, 64))));
    g.finish();
}

criterion_group!(benches, gradients, involutions, flows, energy_momentum);
criterion_main!(benches);
