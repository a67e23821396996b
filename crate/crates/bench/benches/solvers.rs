use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use normground::mass_min::{minimize_on_sphere, MinimizeOptions};
use normground::solve::{branch_tangent, continue_branch, seed_solution, NewtonOptions, StepControl};
use normground::spectrum::morse_index;
use normground_bench::{ball, cubic, fractional};

fn newton(c: &mut Criterion) {
    let mut g = c.benchmark_group("seed_solution");
    g.sample_size(10);
    for n in [1024usize, 4096, 16384] {
        let m = cubic(n, 30.0);
        g.bench_with_input(BenchmarkId::new("cubic", n), &m, |b, m| {
            b.iter(|| seed_solution(m, -1.0, &NewtonOptions::default()).unwrap())
        });
    }
    let m = ball(4096);
    g.bench_function("ball/4096", |b| b.iter(|| seed_solution(&m, -10.0, &NewtonOptions::default()).unwrap()));
    g.finish();
}

fn fractional_operator(c: &mut Criterion) {
    let mut g = c.benchmark_group("fractional");
    g.sample_size(10);
    for n in [512usize, 4096] {
        let m = fractional(0.6, n, 40.0);
        let sol = seed_solution(&m, -1.0, &NewtonOptions::default()).unwrap();
        g.bench_with_input(BenchmarkId::new("seed_solution", n), &m, |b, m| {
            b.iter(|| seed_solution(m, -1.0, &NewtonOptions::default()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("tangent", n), &(&m, &sol), |b, (m, sol)| {
            b.iter(|| branch_tangent(m, sol).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("morse_index", n), &(&m, &sol), |b, (m, sol)| {
            b.iter(|| morse_index(m, sol).unwrap())
        });
    }
    g.finish();
}

fn branch(c: &mut Criterion) {
    let mut g = c.benchmark_group("continue_branch");
    g.sample_size(10);
    let m = cubic(2048, 40.0);
    g.bench_function("cubic/2048", |b| {
        b.iter(|| continue_branch(&m, -2.0, -0.5, &StepControl::default(), &NewtonOptions::default()).unwrap())
    });
    g.finish();
}

fn minimizer(c: &mut Criterion) {
    let mut g = c.benchmark_group("minimize_on_sphere");
    g.sample_size(10);
    let m = cubic(2048, 40.0);
    let opts = MinimizeOptions { compute_morse: false, ..Default::default() };
    g.bench_function("cubic/2048", |b| b.iter(|| minimize_on_sphere(&m, 2.0, &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, newton, fractional_operator, branch, minimizer);
criterion_main!(benches);
