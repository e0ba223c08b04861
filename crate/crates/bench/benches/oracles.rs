use std::hint::black_box;

use autotos_core::domains::{ref_successors, reference_search, search_algorithm, DomainSpec, DEFAULT_STATE_BUDGET};
use autotos_core::{canonical_eq, DomainId};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn successors(c: &mut Criterion) {
    let mut group = c.benchmark_group("ref_successors");
    for domain in DomainId::ALL {
        let spec = DomainSpec::get(domain);
        let case = &spec.successor_suite[0];
        group.bench_with_input(BenchmarkId::from_parameter(domain), case, |b, case| {
            b.iter(|| ref_successors(domain, black_box(&case.state), case.ctx.as_ref()).unwrap())
        });
    }
    group.finish();
}

fn equality(c: &mut Criterion) {
    let mut group = c.benchmark_group("canonical_eq");
    for domain in DomainId::ALL {
        let spec = DomainSpec::get(domain);
        let case = &spec.successor_suite[0];
        let expected = &case.expected_successors;
        let mut reversed = expected.clone();
        reversed.reverse();
        group.bench_function(BenchmarkId::from_parameter(domain), |b| {
            b.iter(|| {
                expected
                    .iter()
                    .zip(&reversed)
                    .filter(|(x, y)| canonical_eq(domain, black_box(x), black_box(y)))
                    .count()
            })
        });
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("reference_search");
    group.sample_size(10);
    for domain in [DomainId::Game24, DomainId::Blocksworld, DomainId::Prontoqa, DomainId::Sokoban] {
        let instance = &DomainSpec::get(domain).eval_instances[0];
        group.bench_with_input(BenchmarkId::new(domain.as_str(), &instance.id), instance, |b, inst| {
            b.iter(|| reference_search(black_box(inst), search_algorithm(domain), DEFAULT_STATE_BUDGET).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, successors, equality, search);
criterion_main!(benches);
