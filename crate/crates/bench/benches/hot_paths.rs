use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use refaas_bench::{llm_response, nudged, package, records};
use refaas_core::energy::{amortization, wh_to_joules};
use refaas_core::llm::extract_code;
use refaas_core::runner::{compare_json, LanguageRegistry, DEFAULT_TOLERANCE};
use refaas_core::{parse_package, serialize_package, LanguageId};
use std::hint::black_box;

fn compare(c: &mut Criterion) {
    let mut g = c.benchmark_group("compare_json");
    for n in [10, 300, 3000] {
        let expected = records(n);
        let equal = nudged(n, 1e-12);
        let unequal = nudged(n, 1e-3);
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::new("equal", n), &n, |b, _| {
            b.iter(|| {
                compare_json(
                    black_box(&expected),
                    black_box(&equal),
                    &[],
                    DEFAULT_TOLERANCE,
                )
            })
        });
        g.bench_with_input(BenchmarkId::new("all_scores_differ", n), &n, |b, _| {
            b.iter(|| {
                compare_json(
                    black_box(&expected),
                    black_box(&unequal),
                    &[],
                    DEFAULT_TOLERANCE,
                )
            })
        });
    }
    g.finish();
}

fn extract(c: &mut Criterion) {
    let languages = LanguageRegistry::builtin();
    let syntax = languages.get(&LanguageId::go()).unwrap().syntax.clone();
    let mut g = c.benchmark_group("extract_code");
    for blocks in [1, 16, 256] {
        let text = llm_response(blocks);
        g.throughput(Throughput::Bytes(text.len() as u64));
        g.bench_with_input(BenchmarkId::from_parameter(blocks), &text, |b, t| {
            b.iter(|| extract_code(black_box(t), &syntax))
        });
    }
    g.finish();
}

fn package_round_trip(c: &mut Criterion) {
    let mut g = c.benchmark_group("package");
    for (files, size) in [(4, 1 << 10), (64, 16 << 10)] {
        let pkg = package(files, size);
        let bytes = serialize_package(&pkg).unwrap();
        g.throughput(Throughput::Bytes((files * size) as u64));
        g.bench_with_input(BenchmarkId::new("serialize", files), &pkg, |b, p| {
            b.iter(|| serialize_package(p))
        });
        g.bench_with_input(BenchmarkId::new("parse", files), &bytes, |b, z| {
            b.iter(|| parse_package(z))
        });
    }
    g.finish();
}

fn amortization_sweep(c: &mut Criterion) {
    let joules = wh_to_joules(5.0);
    c.bench_function("amortization/sweep_3.6_to_6.0_J", |b| {
        b.iter(|| {
            (36..=60)
                .map(|t| amortization(black_box(joules), t as f64 / 10.0).breakeven_invocations)
                .max()
        })
    });
}

criterion_group!(
    benches,
    compare,
    extract,
    package_round_trip,
    amortization_sweep
);
criterion_main!(benches);
