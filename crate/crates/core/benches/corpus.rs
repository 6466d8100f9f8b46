//! Sequential against rayon-parallel evaluation: a corpus sweep of full
//! classification, and the asymmetric asynchrony search on a single net
//! with many candidate distributions.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use distnet::classify::{behavioural_async, classify};
use distnet::corpus::{random_corpus, CorpusParams};
use distnet::distribution::{canonical_count, Requirement};
use distnet::limits::par_map;
use distnet::{Execution, LabelledNet, Limits};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn corpus_sweep(c: &mut Criterion) {
    let corpus: Vec<LabelledNet> = random_corpus(7, 200, &CorpusParams::default())
        .into_iter()
        .map(|(_, n)| n)
        .collect();
    let mut group = c.benchmark_group("classify_corpus");
    group.sample_size(10);
    for (name, execution) in MODES {
        let limits = Limits {
            execution,
            ..Limits::default()
        };
        // Inner searches stay sequential; only the sweep is split.
        let inner = limits.clone().sequential();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par_map(limits.execution, &corpus, |net| classify(black_box(net), &inner).unwrap()))
        });
    }
    group.finish();
}

fn candidate_search(c: &mut Criterion) {
    let params = CorpusParams {
        max_places: 8,
        max_transitions: 8,
        max_arcs: 20,
        tau_percent: 0,
    };
    // The net with the most AD candidates among a few seeds.
    let net = random_corpus(11, 60, &params)
        .into_iter()
        .map(|(_, n)| n)
        .filter(|n| canonical_count(n, Requirement::Ad) <= Limits::default().candidate_cap as u128)
        .max_by_key(|n| canonical_count(n, Requirement::Ad))
        .expect("corpus is nonempty");
    let mut group = c.benchmark_group("ad_candidates");
    group.sample_size(10);
    for (name, execution) in MODES {
        let limits = Limits {
            execution,
            ..Limits::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| behavioural_async(black_box(&net), Requirement::Ad, &limits).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, corpus_sweep, candidate_search);
criterion_main!(benches);
