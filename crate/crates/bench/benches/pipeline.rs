use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use currikit_bench as fx;
use currikit_core::{
    build_curriculum_schedule, build_histogram, build_iid_schedule, quartile_boundaries,
    train_tagger, train_wordpiece, word_tokenize, EncodeOptions, Mode, ScheduleConfig, Scorer,
    TrainOptions, WordPieceConfig,
};

fn tokenize(c: &mut Criterion) {
    let docs = fx::text(2_000);
    let bytes: usize = docs.iter().map(String::len).sum();
    let mut g = c.benchmark_group("word_tokenize");
    g.throughput(Throughput::Bytes(bytes as u64));
    g.bench_function("2000 docs", |b| {
        b.iter(|| docs.iter().map(|d| word_tokenize(black_box(d)).len()).sum::<usize>())
    });
    g.finish();
}

fn tagger(c: &mut Criterion) {
    let corpus = fx::tagged(1_000);
    let mut g = c.benchmark_group("tagger");
    g.sample_size(10);
    g.bench_function("train 1000 sentences x 5 epochs", |b| {
        b.iter(|| train_tagger(black_box(&corpus), TrainOptions::default()).unwrap())
    });
    let model = fx::model(2_000);
    let records = fx::captions(5_000);
    let scorer = Scorer::new(&model);
    g.throughput(Throughput::Elements(records.len() as u64));
    for jobs in [1, 4] {
        g.bench_with_input(BenchmarkId::new("score 5000 records", jobs), &jobs, |b, &jobs| {
            b.iter(|| scorer.score_dataset(black_box(&records), jobs).unwrap())
        });
    }
    g.finish();
}

fn quartiles(c: &mut Criterion) {
    let mut g = c.benchmark_group("quartiles");
    for n in [10_000, 1_000_000] {
        let samples = fx::scored(n, 50);
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &samples, |b, s| {
            b.iter(|| quartile_boundaries(&build_histogram(black_box(s)).unwrap()))
        });
    }
    g.finish();
}

fn schedule(c: &mut Criterion) {
    let samples = fx::scored(100_000, 12);
    let bounds = quartile_boundaries(&build_histogram(&samples).unwrap());
    let ids: Vec<&str> = samples.iter().map(|s| s.sample_id.as_str()).collect();
    let mut g = c.benchmark_group("schedule 100k");
    g.sample_size(10);
    g.bench_function("curriculum", |b| {
        let cfg = ScheduleConfig::captions(Mode::Curriculum);
        b.iter(|| build_curriculum_schedule(black_box(&samples), &bounds, &cfg).unwrap())
    });
    g.bench_function("iid", |b| {
        let cfg = ScheduleConfig::captions(Mode::Iid);
        b.iter(|| build_iid_schedule(black_box(&ids), &cfg).unwrap())
    });
    g.finish();
}

fn wordpiece(c: &mut Criterion) {
    let docs = fx::text(3_000);
    let mut g = c.benchmark_group("wordpiece");
    g.sample_size(10);
    let config = WordPieceConfig { target_size: 2_000, ..Default::default() };
    g.bench_function("train 2000 tokens", |b| {
        b.iter(|| train_wordpiece(black_box(&docs), config).unwrap())
    });
    let vocab = train_wordpiece(&docs, config).unwrap();
    let opts = EncodeOptions::new(50, true).unwrap();
    g.bench_function("encode 3000 docs", |b| {
        b.iter(|| docs.iter().map(|d| vocab.encode(black_box(d), opts).ids.len()).sum::<usize>())
    });
    g.finish();
}

criterion_group!(benches, tokenize, tagger, quartiles, schedule, wordpiece);
criterion_main!(benches);
