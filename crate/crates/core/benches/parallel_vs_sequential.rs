use std::hint::black_box;

use apaths_core::algebroid::{check_poisson_jacobi, cotangent_algebroid, Chart, PoissonBivector, Sampling};
use apaths_core::expr::parse_expr;
use apaths_core::oracle::{log_derivative_oracle, LinearFamily, MatrixRepresentation, RotationFamily};
use apaths_core::path::{solve_homotopy_equation, EpsilonGrid, TimeGrid};
use apaths_core::sampling::stream;
use apaths_core::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::Vector3;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn so3_dual() -> PoissonBivector {
    let e = |s| parse_expr(s, 3).unwrap();
    PoissonBivector::new(Chart::cube(3, 2.0), vec![(1, 2, e("x3")), (2, 3, e("x1")), (3, 1, e("x2"))]).unwrap()
}

fn homotopy_solver(c: &mut Criterion) {
    let alg = cotangent_algebroid(&so3_dual());
    let mut group = c.benchmark_group("homotopy_solver");
    group.sample_size(20);
    for n in [65, 129] {
        let (time, eps) = (TimeGrid::new(n).unwrap(), EpsilonGrid::new(n).unwrap());
        let x0 = Vector3::new(0.5, -0.4, 0.6);
        let fam = RotationFamily::random(&mut stream(1, 0), x0, 0.7, 1.0)
            .family(&alg, x0.as_slice(), time, eps, Execution::Parallel)
            .unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &fam, |b, fam| {
                b.iter(|| solve_homotopy_equation(&alg, black_box(fam), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn development_oracle(c: &mut Criterion) {
    let rep = MatrixRepresentation::so3();
    let fam = LinearFamily::random(&mut stream(2, 0), 3, 1.0);
    let eps = EpsilonGrid::new(65).unwrap();
    let mut group = c.benchmark_group("development_oracle");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| log_derivative_oracle(&rep, |e, t| fam.eval(e, t), black_box(&eps), 256, exec))
        });
    }
    group.finish();
}

fn jacobi_sampling(c: &mut Criterion) {
    let pi = so3_dual();
    let mut group = c.benchmark_group("poisson_jacobi");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| check_poisson_jacobi(black_box(&pi), Sampling::new(2000).with_exec(exec), 1e-9))
        });
    }
    group.finish();
}

criterion_group!(benches, homotopy_solver, development_oracle, jacobi_sampling);
criterion_main!(benches);
