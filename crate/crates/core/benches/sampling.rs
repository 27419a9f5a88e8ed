use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use staticgeo::causal::energy_report;
use staticgeo::expr::ScalarExpr;
use staticgeo::fibers;
use staticgeo::geometry::VectorFieldExpr;
use staticgeo::killing::check_killing;
use staticgeo::par::Execution;
use staticgeo::sampling::Options;
use staticgeo::warped::{identity_gaps, StaticSpacetime};

fn s3() -> StaticSpacetime {
    let fiber = fibers::stereographic_s3(2.0, 1.5).unwrap();
    let warp = ScalarExpr::parse("1 + 0.2*x*y + 0.1*z^2", fiber.chart().names()).unwrap();
    StaticSpacetime::new(fiber, warp, f64::NEG_INFINITY, f64::INFINITY).unwrap()
}

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn bench_identities(c: &mut Criterion) {
    let s = s3();
    let mut g = c.benchmark_group("identity_gaps");
    for (name, exec) in modes() {
        let opts = Options::default().with_samples(256).with_exec(exec);
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, o| {
            b.iter(|| black_box(identity_gaps(&s, o).unwrap()))
        });
    }
    g.finish();
}

fn bench_energy(c: &mut Criterion) {
    let s = s3();
    let mut g = c.benchmark_group("energy_report");
    for (name, exec) in modes() {
        let opts = Options::default().with_samples(128).with_exec(exec);
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, o| {
            b.iter(|| black_box(energy_report(&s, o, 10_000).unwrap()))
        });
    }
    g.finish();
}

fn bench_killing(c: &mut Criterion) {
    let s = s3();
    let k = VectorFieldExpr::parse(&["(1 - x^2 - y^2 - z^2)/2 + x*x", "x*y", "x*z"], s.fiber().chart().names()).unwrap();
    let mut g = c.benchmark_group("check_killing");
    for (name, exec) in modes() {
        let opts = Options::default().with_samples(512).with_exec(exec);
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, o| {
            b.iter(|| black_box(check_killing(s.fiber(), &k, o).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_identities, bench_energy, bench_killing);
criterion_main!(benches);
