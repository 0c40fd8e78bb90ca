use bpat_core::library::{CORPUS, SPECS};
use bpat_core::*;
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn spec(name: &str) -> SpecFile {
    let text = SPECS.iter().find(|(f, _)| *f == name).unwrap().1;
    parse_spec(text, None).unwrap()
}

fn parse_and_print(c: &mut Criterion) {
    c.bench_function("parse corpus", |b| {
        b.iter(|| {
            for (_, text) in CORPUS {
                black_box(parse_machine_str(text).unwrap());
            }
        })
    });
    let machines: Vec<Machine> = CORPUS.iter().map(|(_, t)| parse_machine_str(t).unwrap()).collect();
    c.bench_function("print corpus", |b| {
        b.iter(|| {
            for m in &machines {
                black_box(pretty_print(m));
            }
        })
    });
}

fn typing(c: &mut Criterion) {
    let lib = Library::embedded();
    let ext = lib.machine("Extension").unwrap().clone();
    c.bench_function("typecheck Extension", |b| b.iter(|| black_box(typecheck(&ext, &lib).unwrap())));
}

fn reuse(c: &mut Criterion) {
    let lib = Library::embedded();
    let unify = spec("comp_by_unif_inst.toml");
    c.bench_function("transform unify+instantiate", |b| b.iter(|| black_box(apply_spec(&unify, &lib).unwrap())));
}

fn obligations(c: &mut Criterion) {
    let lib = Library::embedded();
    let ext = lib.machine("Extension").unwrap().clone();
    c.bench_function("generate Extension", |b| b.iter(|| black_box(generate(&ext, &lib).unwrap())));
    let pos = generate(&ext, &lib).unwrap();
    c.bench_function("classify Extension", |b| b.iter(|| black_box(classify_all(&pos))));
}

fn oracle(c: &mut Criterion) {
    let mut lib = Library::embedded();
    let broken = apply_spec(&spec("links_broken.toml"), &lib).unwrap().remove(0);
    lib.insert(broken.clone());
    let pos = generate(&broken, &lib).unwrap();
    let leftover: Vec<ProofObligation> = pos
        .iter()
        .zip(classify_all(&pos))
        .filter(|(_, v)| v.status == Status::Interactive)
        .map(|(p, _)| p.clone())
        .collect();
    let o = Oracle::with_sizes(vec![1, 2]);
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    group.bench_function("refute broken link", |b| b.iter(|| black_box(discharge(&leftover, Some(&o)))));
    group.finish();
}

criterion_group!(benches, parse_and_print, typing, reuse, obligations, oracle);
criterion_main!(benches);
