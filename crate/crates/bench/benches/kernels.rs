use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use sampdisc::design::kw_design;
use sampdisc::discretize::{disc_constants, DiscOptions, PointSet};
use sampdisc::fnspace::{DomainSpec, FunctionSystem, Point, Space};
use sampdisc::harness::{run_experiment, ExperimentConfig};
use sampdisc::linalg::CMat;
use sampdisc::matrixtools::{exhaustive_rdi_rows, opnorm_rp, orthonormal_columns, select_rdi_rows};
use sampdisc::optim::RatioOptions;
use sampdisc::{Exponent, C64};

fn test_matrix(m: usize, n: usize) -> CMat {
    CMat::from_fn(m, n, |i, j| C64::new(((i * 31 + j * 17) % 11) as f64 - 5.0 + 0.1 * (i * j) as f64, 0.0))
}

fn disc(c: &mut Criterion) {
    let space = Space::new(FunctionSystem::trig_degree(8), DomainSpec::torus(1, 64)).unwrap();
    let ps = PointSet::new(space.domain().equispaced(17));
    c.bench_function("disc_constants trig N=17 p=q=2", |b| {
        b.iter(|| disc_constants(&space, black_box(&ps), Exponent::TWO, Exponent::TWO, &DiscOptions::default()))
    });
    let lac = Space::new(FunctionSystem::dyadic_lacunary(4), DomainSpec::torus(1, 128)).unwrap();
    let ps = PointSet::new(lac.domain().equispaced(8));
    let opts = DiscOptions {
        ratio: RatioOptions { restarts: 4, ..RatioOptions::default() },
        ..Default::default()
    };
    let p4 = Exponent::new(4.0).unwrap();
    c.bench_function("disc_constants lacunary N=4 p=q=4", |b| {
        b.iter(|| disc_constants(&lac, black_box(&ps), p4, p4, &opts))
    });
}

fn matrices(c: &mut Criterion) {
    let a = test_matrix(12, 3);
    c.bench_function("opnorm (3,4) 12x3", |b| {
        b.iter(|| opnorm_rp(black_box(&a), Exponent::new(3.0).unwrap(), Exponent::new(4.0).unwrap()))
    });
    let u = orthonormal_columns(&a).unwrap();
    c.bench_function("select_rdi_rows greedy 12x3", |b| b.iter(|| select_rdi_rows(black_box(&u), 3)));
    c.bench_function("select_rdi_rows exhaustive 12x3", |b| {
        b.iter(|| exhaustive_rdi_rows(black_box(&u), 3, 1_000_000))
    });
}

fn design(c: &mut Criterion) {
    let sys = FunctionSystem::real_trig(&[0, 1, 2], &[1, 2]).unwrap();
    let space = Space::new(sys, DomainSpec::torus(1, 64)).unwrap();
    let grid: Vec<Point> = (0..256).map(|k| Point::scalar(std::f64::consts::TAU * (k as f64 + 0.3) / 256.0)).collect();
    c.bench_function("kw_design N=5 grid 256", |b| b.iter(|| kw_design(&space, black_box(&grid), 1e-3, 50_000)));
}

fn experiments(c: &mut Criterion) {
    let cfg = ExperimentConfig::new("lunin_bench").param("instances", 20.into());
    c.bench_function("experiment lunin_bench x20", |b| b.iter(|| run_experiment("lunin_bench", black_box(&cfg))));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = disc, matrices, design, experiments
}
criterion_main!(benches);
