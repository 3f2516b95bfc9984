use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hypoflow::interp::{Defect, DEFAULT_GH_NODES, DEFAULT_INTERP_POINTS};
use hypoflow::kfp::{exact_kfp_oracle, kinetic_diagnostics, KfpSolver, SplittingScheme};
use hypoflow::suite::{run_suite, Check, SuiteConfig};
use hypoflow::{Execution, PhiFamily, QuadratureGrid};

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn kinetic_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("kfp_step");
    group.sample_size(20);
    for n in [97, 129] {
        let grid = Arc::new(QuadratureGrid::build(2, 8.0, n, 8).unwrap());
        let g0 = exact_kfp_oracle(1.0, 0.5, 0.0, grid.clone()).unwrap();
        for (name, exec) in POLICIES {
            let solver =
                KfpSolver::new(grid.clone(), 2e-3, SplittingScheme::Strang, DEFAULT_INTERP_POINTS, DEFAULT_GH_NODES, exec)
                    .unwrap();
            group.bench_with_input(BenchmarkId::new(name, n), &g0, |b, g| {
                b.iter(|| {
                    let mut defect = Defect::default();
                    black_box(solver.step(black_box(g), &mut defect))
                })
            });
        }
    }
    group.finish();
}

fn diagnostics(c: &mut Criterion) {
    let grid = Arc::new(QuadratureGrid::build(2, 8.0, 129, 8).unwrap());
    let g = exact_kfp_oracle(1.0, 0.5, 0.3, grid).unwrap();
    let fams: Vec<PhiFamily> = [1.25, 1.5, 1.75, 2.0].iter().map(|&p| PhiFamily::new(p).unwrap()).collect();
    let mut group = c.benchmark_group("kinetic_diagnostics");
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| b.iter(|| exec.map(fams.len(), |j| kinetic_diagnostics(&g, &fams[j]))));
    }
    group.finish();
}

fn suite(c: &mut Criterion) {
    let cfg = SuiteConfig { checks: vec![Check::CsiszarKullback, Check::Jensen, Check::Gap], seeds: 16, ..Default::default() };
    let mut group = c.benchmark_group("suite");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| b.iter(|| run_suite(black_box(&cfg), exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, kinetic_step, diagnostics, suite);
criterion_main!(benches);
