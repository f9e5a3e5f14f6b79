use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spdc_bench::{bilayer, pump, setup};
use spdc_core::*;

fn emission(c: &mut Criterion) {
    let s = bilayer(10);
    let p = pump();
    let mut group = c.benchmark_group("total_emission_g");
    group.sample_size(10);
    for k in [16, 32, 64] {
        let setup = setup(k);
        let field = propagate_pump(&s, &p, setup.pairs.omegas()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| {
                let ctx = MatrixContext::new(&s, &setup, &field).unwrap();
                ctx.total_emission_g(&EmissionOptions::default()).unwrap()
            })
        });
    }
    group.finish();
}

fn temporal(c: &mut Criterion) {
    let s = bilayer(10);
    let setup = setup(64);
    let mut sim = Simulation::new(s, pump(), setup.clone());
    let ch = Channel::new(Mode::new(Dir::F, Pol::X), Mode::new(Dir::F, Pol::Y));
    sim.channels = vec![ch];
    let out = sim.run().unwrap();
    let phi = out.channels[&ch].total.values.clone();
    let grid = TimeGrid::alias_period(&setup.signal, &setup.idler, 1024);
    c.bench_function("temporal_profiles K=64 1024 points", |b| {
        b.iter(|| temporal_profiles(&phi, &setup.signal, &setup.idler, &grid).unwrap())
    });
}

fn transmission(c: &mut Criterion) {
    let s = bilayer(10);
    let w = pump().omega0;
    c.bench_function("linear_transmission 20 layers", |b| {
        b.iter(|| linear_transmission(&s, w, Dir::F).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let s = bilayer(2);
    let p = pump();
    let setup = setup(8);
    let field = propagate_pump(&s, &p, setup.pairs.omegas()).unwrap();
    let mut group = c.benchmark_group("reference_kernels");
    group.sample_size(10);
    group.bench_function("4 layers K=8", |b| {
        b.iter(|| reference_kernels(&s, &field, &setup, &OracleOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, emission, temporal, transmission, oracle);
criterion_main!(benches);
