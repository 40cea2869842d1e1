use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fsm_core::fusion::{correlate, FusionConfig};
use fsm_core::ingest::{parse_log_line, EventIdGenerator};

fn parse(c: &mut Criterion) {
    let reg = fsm_bench::registry();
    let lines = fsm_bench::corpus(1000);
    let mut g = c.benchmark_group("parse_log_line");
    g.throughput(Throughput::Elements(lines.len() as u64));
    g.bench_function("1000_lines", |b| {
        b.iter(|| {
            let ids = EventIdGenerator::new();
            for l in &lines {
                black_box(parse_log_line(l, &reg, &ids).unwrap());
            }
        })
    });
    g.finish();
}

fn fuse(c: &mut Criterion) {
    let cfg = FusionConfig::default();
    let mut g = c.benchmark_group("correlate");
    for n in [1_000, 10_000] {
        let events = fsm_bench::events(n);
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &events, |b, ev| {
            b.iter(|| black_box(correlate(ev, &cfg).unwrap()))
        });
    }
    g.finish();
}

fn retrieve(c: &mut Criterion) {
    let kb = fsm_bench::knowledge();
    let index = kb.index();
    let mut g = c.benchmark_group("retrieve");
    for q in ["E102 card reader timeout", "how do I keep the shelf from tipping over"] {
        g.bench_with_input(BenchmarkId::from_parameter(q), q, |b, q| b.iter(|| black_box(index.retrieve(q, None, 5))));
    }
    g.finish();
}

criterion_group!(benches, parse, fuse, retrieve);
criterion_main!(benches);
