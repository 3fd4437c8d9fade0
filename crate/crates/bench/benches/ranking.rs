use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use sdr_bench::topic;
use sdr_core::evaluation::evaluate;
use sdr_core::experiments::{make_groups, multi_sdr};
use sdr_core::scoring::rank;
use sdr_core::{Method, RankOptions, Representation, ScoringParams};

fn single_seed(c: &mut Criterion) {
    let params = ScoringParams::default();
    let opts = RankOptions::default();
    let mut group = c.benchmark_group("rank_single_seed");
    group.sample_size(20);
    for n in [500, 2000] {
        let t = topic(n, Representation::Bow);
        let seed = t.topic.relevant()[0].to_string();
        for method in [Method::Bm25, Method::Qlm, Method::Sdr] {
            group.bench_with_input(BenchmarkId::new(method.slug(), n), &t, |b, t| {
                b.iter(|| rank(t, &[seed.as_str()], method, &params, &opts, "b").unwrap())
            });
        }
    }
    group.finish();
}

fn multi_seed(c: &mut Criterion) {
    let t = topic(2000, Representation::Bow);
    let pool = t.topic.relevant();
    let groups = make_groups(t.topic_id(), &pool, 0.2).unwrap();
    let params = ScoringParams::default();
    let opts = RankOptions::default();
    let mut group = c.benchmark_group("multi_sdr");
    group.sample_size(10);
    group.bench_function("2000_candidates_4_seeds", |b| {
        b.iter(|| multi_sdr(&t, &groups[0], Method::Sdr, &params, &opts).unwrap())
    });
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let t = topic(2000, Representation::Bow);
    let seed = t.topic.relevant()[0];
    let run = rank(
        &t,
        &[seed],
        Method::Qlm,
        &ScoringParams::default(),
        &RankOptions::default(),
        "b",
    )
    .unwrap();
    let docs: Vec<&str> = run.doc_ids().collect();
    c.bench_function("evaluate_2000", |b| {
        b.iter(|| evaluate(black_box(&docs), &t.topic.judgments, &[10, 100, 1000]).unwrap())
    });
}

criterion_group!(benches, single_seed, multi_seed, evaluation);
criterion_main!(benches);
