use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use crlab::{build_family, fast_oracle_strategy, refine_strategy, refine_worklist, FamilyKind, PolicyKind};

fn worklist_policies(c: &mut Criterion) {
    let mut group = c.benchmark_group("worklist");
    for (kind, k) in [(FamilyKind::StackAdv, 8), (FamilyKind::QueueAdv, 8), (FamilyKind::PqMaxAdv, 8)] {
        let (graph, _) = build_family(kind, k).unwrap();
        let initial = graph.initial_partition();
        for policy in PolicyKind::all() {
            group.bench_with_input(BenchmarkId::new(format!("{kind}/{policy}"), k), &policy, |b, &p| {
                b.iter(|| refine_worklist(black_box(&graph), &initial, p).unwrap().total_cost)
            });
        }
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("fast-oracle");
    for k in [6u32, 8] {
        let (graph, descriptor) = build_family(FamilyKind::Concealer, k).unwrap();
        let initial = graph.initial_partition();
        group.bench_function(BenchmarkId::from_parameter(k), |b| {
            b.iter(|| {
                let mut s = fast_oracle_strategy(&descriptor).unwrap();
                refine_strategy(black_box(&graph), &initial, &mut s).unwrap().total_cost
            })
        });
    }
    group.finish();
}

criterion_group!(benches, worklist_policies, oracle);
criterion_main!(benches);
