use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use guwen_bench::near_duplicate_corpus;
use guwen_core::{deduplicate, minhash_signature, Cleaner, DedupConfig};

fn minhash(c: &mut Criterion) {
    let text = near_duplicate_corpus(1, 60, 0).remove(0).source;
    c.bench_function("minhash_signature 60 chars", |b| {
        b.iter(|| minhash_signature(black_box(&text), 128, 4, 0).unwrap())
    });
}

fn dedup(c: &mut Criterion) {
    let mut group = c.benchmark_group("deduplicate");
    group.sample_size(10);
    for n in [500, 2000] {
        let corpus = near_duplicate_corpus(n, 40, 1);
        group.bench_with_input(BenchmarkId::new("all_pairs", n), &corpus, |b, corpus| {
            b.iter(|| deduplicate(corpus, &DedupConfig::default()).unwrap())
        });
        let lsh = DedupConfig { lsh_bands: Some(32), ..DedupConfig::default() };
        group.bench_with_input(BenchmarkId::new("lsh_32_bands", n), &corpus, |b, corpus| {
            b.iter(|| deduplicate(corpus, &lsh).unwrap())
        });
    }
    group.finish();
}

fn clean(c: &mut Criterion) {
    let cleaner = Cleaner::bundled();
    let text = "子曰：學而時習之，不亦說乎？有朋自遠方來，不亦樂乎？(1) abc 123".repeat(20);
    c.bench_function("clean 700 chars", |b| b.iter(|| cleaner.clean(black_box(&text))));
}

criterion_group!(benches, minhash, dedup, clean);
criterion_main!(benches);
