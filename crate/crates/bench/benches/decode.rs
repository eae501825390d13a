use chronus_bench::{demo_lattices, demo_pipeline, synthetic, SENTENCES};
use chronus_core::decoder::{forward_log_marginal, viterbi_decode, viterbi_decode_lattice};
use chronus_core::dialog::DialogState;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn lattice_decode(c: &mut Criterion) {
    let p = demo_pipeline();
    let lattices = demo_lattices(&p);
    let mut g = c.benchmark_group("viterbi_lattice");
    for l in &lattices {
        g.bench_with_input(BenchmarkId::from_parameter(l.len()), l, |b, l| {
            b.iter(|| viterbi_decode_lattice(&p.model, black_box(l)).unwrap())
        });
    }
    g.finish();
}

fn synthetic_decode(c: &mut Criterion) {
    let (model, sentences) = synthetic(200);
    c.bench_function("viterbi_synthetic_200", |b| {
        b.iter(|| {
            for s in &sentences {
                black_box(viterbi_decode(&model, s).unwrap());
            }
        })
    });
    c.bench_function("forward_synthetic_200", |b| {
        b.iter(|| {
            for s in &sentences {
                black_box(forward_log_marginal(&model, s).unwrap());
            }
        })
    });
}

fn full_turn(c: &mut Criterion) {
    let p = demo_pipeline();
    let mut g = c.benchmark_group("respond");
    for s in SENTENCES {
        g.bench_with_input(BenchmarkId::from_parameter(s.split_whitespace().count()), s, |b, s| {
            b.iter(|| p.respond(&DialogState::new(), black_box(s)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, lattice_decode, synthetic_decode, full_turn);
criterion_main!(benches);
