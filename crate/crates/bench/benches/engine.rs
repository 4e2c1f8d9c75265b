use criterion::{black_box, criterion_group, criterion_main, Criterion};
use negare_bench::scaled_corpus;
use negare_core::evaluation::cohens_kappa;
use negare_core::predictions::majority_vote;
use negare_core::textseg::tokenize;
use negare_core::{Detector, Label, PredictionSet};

fn bench_tokenize(c: &mut Criterion) {
    let corpus = scaled_corpus(1);
    let text: String = corpus.records.iter().map(|r| r.text.as_str()).collect::<Vec<_>>().join("\n");
    c.bench_function("tokenize_bundled_corpus", |b| b.iter(|| tokenize(black_box(&text))));
}

fn bench_detect(c: &mut Criterion) {
    let corpus = scaled_corpus(20);
    let detector = Detector::bundled();
    let mut group = c.benchmark_group("detect_corpus_2000_records");
    group.bench_function("serial", |b| b.iter(|| detector.detect_corpus(black_box(&corpus), false).unwrap()));
    group.bench_function("parallel", |b| b.iter(|| detector.detect_corpus(black_box(&corpus), true).unwrap()));
    group.finish();
}

fn bench_vote(c: &mut Criterion) {
    let corpus = scaled_corpus(20);
    let gold = PredictionSet::from_labels("gold", corpus.gold()).unwrap();
    let flipped = |m: &str, every: usize| {
        PredictionSet::from_labels(
            m,
            corpus.gold().into_iter().enumerate().map(|(i, (k, l))| (k, if i % every == 0 { l.flipped() } else { l })),
        )
        .unwrap()
    };
    let (a, b2) = (flipped("a", 3), flipped("b", 5));
    c.bench_function("majority_vote", |b| b.iter(|| majority_vote(&gold, &a, &b2).unwrap()));
}

fn bench_kappa(c: &mut Criterion) {
    let a: Vec<Label> = (0..10_000).map(|i| if i % 3 == 0 { Label::Negated } else { Label::NotNegated }).collect();
    let b: Vec<Label> = (0..10_000).map(|i| if i % 4 == 0 { Label::Negated } else { Label::NotNegated }).collect();
    c.bench_function("cohens_kappa_10k", |bch| bch.iter(|| cohens_kappa(black_box(&a), black_box(&b)).unwrap()));
}

criterion_group!(benches, bench_tokenize, bench_detect, bench_vote, bench_kappa);
criterion_main!(benches);
