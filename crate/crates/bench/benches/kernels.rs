use criterion::{black_box, criterion_group, criterion_main, Criterion};
use hhlab_core::{integrate, linearize, poisson_solve_radial, IntegrateOptions, Model, OdeState, RadialField, RadialGrid};

fn integration(c: &mut Criterion) {
    let model = Model::from_triple(6, 0.0, 4.0).unwrap();
    let ws = model.w_star().unwrap();
    let start = OdeState([ws + 1e-4, 0.0, 0.0, 0.0]);
    let opts = IntegrateOptions::default();
    c.bench_function("integrate 10 time units", |b| {
        b.iter(|| integrate(black_box(&start), 0.0, -10.0, &model, &opts).unwrap())
    });
}

fn poisson(c: &mut Criterion) {
    let grid = RadialGrid::default();
    let f = RadialField::from_fn(&grid, |r| r.powf(-2.0)).unwrap();
    c.bench_function("poisson solve 2048 nodes", |b| b.iter(|| poisson_solve_radial(black_box(&f), 6).unwrap()));
}

fn linearization(c: &mut Criterion) {
    let model = Model::from_triple(6, 0.0, 4.0).unwrap();
    let ws = model.w_star().unwrap();
    c.bench_function("linearize at w*", |b| b.iter(|| linearize(black_box(ws), &model.coeffs, model.p()).unwrap()));
}

criterion_group!(kernels, integration, poisson, linearization);
criterion_main!(kernels);
