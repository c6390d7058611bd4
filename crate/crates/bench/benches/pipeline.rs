use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use grid2x_core::canon::canonical_form;
use grid2x_core::enumeration::enumerate_vertex_transitive;
use grid2x_core::generate::{generate_saturated_with, thin, GroupExtensions};
use grid2x_core::periodic::{ball, growth};
use grid2x_core::realization::{ExtVertex, GroupFrame, Realization};

fn d2_realizations() -> Vec<Realization> {
    let cat = enumerate_vertex_transitive(2).unwrap();
    cat.entries
        .iter()
        .flat_map(|e| {
            let ext = GroupExtensions::new(GroupFrame::new(Arc::new(e.group.clone()), Some(e.id)));
            generate_saturated_with(&ext, false)
        })
        .collect()
}

fn enumeration(c: &mut Criterion) {
    c.bench_function("enumerate_d2", |b| b.iter(|| enumerate_vertex_transitive(black_box(2)).unwrap()));
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("enumerate_d3", |b| b.iter(|| enumerate_vertex_transitive(black_box(3)).unwrap()));
    g.finish();
}

fn realizations(c: &mut Criterion) {
    c.bench_function("generate_d2", |b| b.iter(d2_realizations));
    let all = d2_realizations();
    c.bench_function("thin_d2", |b| b.iter(|| thin(black_box(&all))));
    let r = &thin(&all)[0];
    c.bench_function("growth_radius_10", |b| b.iter(|| growth(black_box(r))));
}

fn canonical(c: &mut Criterion) {
    let all = thin(&d2_realizations());
    let graphs: Vec<_> = all.iter().map(|r| ball(r, 4, ExtVertex::origin()).colored_graph(true)).collect();
    c.bench_function("canonical_form_radius_4_d2", |b| {
        b.iter(|| graphs.iter().map(|g| canonical_form(black_box(g)).form.digest()).fold(0u128, |a, d| a ^ d))
    });
}

criterion_group!(benches, enumeration, realizations, canonical);
criterion_main!(benches);
