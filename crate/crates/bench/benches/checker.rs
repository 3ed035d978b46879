use std::collections::BTreeSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use epicheck_bench::{muddy, scene_texts, scenes, CARDS};
use epicheck_core::generate::SceneParams;
use epicheck_core::{check_valid, check_valid_explicit, parse_scene, run_query, Manager, Proposition};

fn bdd(c: &mut Criterion) {
    let mut group = c.benchmark_group("bdd");
    for n in [8u32, 16, 32] {
        let vocab: BTreeSet<Proposition> = (1..=n).filter_map(Proposition::new).collect();
        // pairwise equality of the two halves: linear in the interleaved order
        group.bench_with_input(BenchmarkId::new("halves_equal", n), &vocab, |b, vocab| {
            b.iter(|| {
                let mut m = Manager::new(vocab);
                let mut acc = m.constant(true);
                for i in 1..=n / 2 {
                    let x = m.var(Proposition::new(i).unwrap()).unwrap();
                    let y = m.var(Proposition::new(i + n / 2).unwrap()).unwrap();
                    let e = m.equiv(x, y).unwrap();
                    acc = m.conj(acc, e).unwrap();
                }
                let half: BTreeSet<Proposition> = vocab.iter().copied().take(n as usize / 2).collect();
                black_box(m.exists_set(&half, acc).unwrap())
            })
        });
    }
    group.finish();
}

fn checker(c: &mut Criterion) {
    let mut group = c.benchmark_group("checker");
    group.bench_function("cards", |b| b.iter(|| run_query(black_box(CARDS)).unwrap()));
    for n in [3, 5, 7] {
        let text = muddy(n);
        let scene = parse_scene(&text).unwrap();
        group.bench_with_input(BenchmarkId::new("muddy_symbolic", n), &scene, |b, s| {
            b.iter(|| check_valid(s).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("muddy_explicit", n), &scene, |b, s| {
            b.iter(|| check_valid_explicit(s).unwrap())
        });
    }
    group.finish();
}

fn parser(c: &mut Criterion) {
    let texts = scene_texts(100);
    c.bench_function("parse_100_scenes", |b| {
        b.iter(|| {
            for t in &texts {
                black_box(parse_scene(t).unwrap());
            }
        })
    });
}

fn verify(c: &mut Criterion) {
    let batch = scenes(100, SceneParams::default());
    c.bench_function("verify_100_scenes", |b| {
        b.iter(|| {
            batch
                .iter()
                .filter(|s| check_valid(s).unwrap().verdict == check_valid_explicit(s).unwrap())
                .count()
        })
    });
}

criterion_group!(benches, bdd, checker, parser, verify);
criterion_main!(benches);
