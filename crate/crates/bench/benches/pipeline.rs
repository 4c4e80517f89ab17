use criterion::{black_box, criterion_group, criterion_main, Criterion};

use acr_bench::corpus;
use acr_core::diffkit::{edit_script, token_edit_distance};
use acr_core::harness::generate_variants;
use acr_core::java::{parse_untagged, serialize};
use acr_core::lexer::tokenize;
use acr_core::metrics::score;
use acr_core::stats::simulate::Simulation;
use acr_core::stats::{design_from_rows, fit_glmm, GlmmOptions};
use acr_core::PerturbationType;

fn texts(s: &str) -> Vec<String> {
    tokenize(s).without_tags().tokens.into_iter().map(|t| t.text).collect()
}

fn front_end(c: &mut Criterion) {
    let insts = corpus();
    c.bench_function("tokenize corpus", |b| {
        b.iter(|| insts.iter().map(|i| tokenize(black_box(&i.code)).len()).sum::<usize>())
    });
    c.bench_function("parse and print revisions", |b| {
        b.iter(|| {
            for i in &insts {
                let ast = parse_untagged(black_box(&i.revision)).unwrap();
                black_box(serialize(&ast, None).unwrap());
            }
        })
    });
}

fn perturb(c: &mut Criterion) {
    let insts = corpus();
    c.bench_function("generate all variants", |b| {
        b.iter(|| generate_variants(black_box(&insts), &PerturbationType::ALL, 42).variants.len())
    });
}

fn diff_and_metrics(c: &mut Criterion) {
    let insts = corpus();
    let pairs: Vec<(Vec<String>, Vec<String>)> = insts.iter().map(|i| (texts(&i.code), texts(&i.revision))).collect();
    c.bench_function("edit distance", |b| {
        b.iter(|| pairs.iter().map(|(a, r)| token_edit_distance(a, r)).sum::<usize>())
    });
    c.bench_function("edit script", |b| b.iter(|| pairs.iter().map(|(a, r)| edit_script(a, r).edits()).sum::<usize>()));
    c.bench_function("score revisions", |b| {
        b.iter(|| {
            for i in &insts {
                black_box(score(&i.code, &i.revision, &i.revision).unwrap());
            }
        })
    });
}

fn regression(c: &mut Criterion) {
    let design = design_from_rows(&Simulation::default().rows(1), false).unwrap();
    let mut g = c.benchmark_group("glmm");
    g.sample_size(10);
    g.bench_function("fit 5000 rows", |b| {
        b.iter(|| fit_glmm(black_box(&design.data), &GlmmOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, front_end, perturb, diff_and_metrics, regression);
criterion_main!(benches);
