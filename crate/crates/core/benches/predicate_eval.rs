use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use threepc::engine::{crack, CountingSink};
use threepc::hashers::{Hasher, Ntlm};
use threepc::keyspace::KeyspaceSpec;
use threepc::predicate::{HitMask, PredicateVector};

fn vectors() -> Vec<(&'static str, PredicateVector)> {
    let target = Ntlm.digest(b"bKFQ4Q8C0").unwrap();
    let mut narrow = vec![(0u8, 15u8); 2];
    narrow.extend(target.nibbles()[2..].iter().map(|&n| (n, n)));
    vec![
        ("16^2", PredicateVector::new(narrow).unwrap()),
        ("16^26", PredicateVector::from_hit_mask(&target, &HitMask::from_hex("C001", 16).unwrap()).unwrap()),
    ]
}

fn matcher(c: &mut Criterion) {
    let digests: Vec<Vec<u8>> = (0..4096u32)
        .map(|i| Ntlm.digest(i.to_string().as_bytes()).unwrap().to_bytes().unwrap())
        .collect();
    let mut group = c.benchmark_group("match_digest");
    group.throughput(Throughput::Elements(digests.len() as u64));
    for (name, v) in vectors() {
        let m = v.compile();
        group.bench_with_input(BenchmarkId::from_parameter(name), &m, |b, m| {
            b.iter(|| digests.iter().filter(|d| m.matches(black_box(d))).count())
        });
    }
    group.finish();
}

fn engine(c: &mut Criterion) {
    let spec = KeyspaceSpec::mask("?d?d?d?d?d").unwrap();
    let mut group = c.benchmark_group("crack_ntlm_1e5");
    group.sample_size(20);
    group.throughput(Throughput::Elements(100_000));
    for (name, v) in vectors() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &v, |b, v| {
            b.iter(|| crack(v, &spec, &Ntlm, CountingSink::default()).unwrap().hits)
        });
    }
    group.finish();
}

criterion_group!(benches, matcher, engine);
criterion_main!(benches);
