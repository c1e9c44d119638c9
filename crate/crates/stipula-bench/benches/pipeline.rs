use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use stipula_core::automaton::{build_automaton, enumerate_cycles};
use stipula_core::pipeline::compile;
use stipula_core::syntax::{canonicalize, parse_contract};

fn fixture(name: &str) -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");
    std::fs::read_to_string(format!("{path}/{name}.stipula")).unwrap()
}

fn bench_parse(c: &mut Criterion) {
    let mut group = c.benchmark_group("parse");
    for name in ["License", "Deposit", "Loan", "Betting"] {
        let source = fixture(name);
        group.bench_function(name, |b| b.iter(|| parse_contract(black_box(&source)).unwrap()));
    }
    group.finish();
}

fn bench_cycles(c: &mut Criterion) {
    let source = fixture("Deposit");
    let ast = canonicalize(&parse_contract(&source).unwrap());
    let automaton = build_automaton(&ast);
    c.bench_function("enumerate_cycles/Deposit", |b| {
        b.iter(|| enumerate_cycles(black_box(&automaton)))
    });
}

fn bench_translate(c: &mut Criterion) {
    let mut group = c.benchmark_group("translate");
    for name in ["License", "Deposit"] {
        let source = fixture(name);
        group.bench_function(name, |b| {
            b.iter(|| {
                let compiled = compile(black_box(&source)).unwrap();
                stipula_core::codegen::render(&compiled.unit)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_parse, bench_cycles, bench_translate);
criterion_main!(benches);
