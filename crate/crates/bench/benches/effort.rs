use btfsm_bench::{chain_machine, fetch, flat_tree, recharge_branch, recharge_state};
use btfsm_core::harness::{apply_edit, build, EditScript, Repr};
use btfsm_core::metrics::{ged, EditCostModel};
use btfsm_core::synthesis;
use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use std::hint::black_box;

// Insert then detach on one tree, so arena growth is amortized instead of
// paid by a fresh exact-capacity clone on every iteration.
fn bt_insert(c: &mut Criterion) {
    let mut g = c.benchmark_group("bt_insert");
    let branch = recharge_branch();
    for size in [10, 100, 1000] {
        let mut tree = flat_tree(size);
        let root = tree.root();
        g.bench_function(BenchmarkId::from_parameter(size), |b| {
            b.iter(|| {
                let (h, r) = tree.insert_subtree(root, 0, black_box(&branch)).unwrap();
                tree.remove_subtree(h).unwrap();
                r
            })
        });
    }
    g.finish();
}

fn fsm_add_connected(c: &mut Criterion) {
    let mut g = c.benchmark_group("fsm_add_connected_state");
    for states in [3, 5, 10] {
        let (lib, sm) = chain_machine(states);
        let (state, guard) = recharge_state(&lib);
        g.bench_with_input(BenchmarkId::from_parameter(states), &sm, |b, sm| {
            b.iter_batched(
                || sm.clone(),
                |mut m| {
                    let r = m.add_connected_state(state.clone(), guard.clone(), guard.clone()).unwrap();
                    (m, r)
                },
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

fn fetch_pipeline(c: &mut Criterion) {
    let doc = fetch();
    let lib = doc.library();
    c.bench_function("synthesize_bt", |b| b.iter(|| synthesis::backchain(black_box(&doc.goal), &lib).unwrap()));
    c.bench_function("synthesize_fsm", |b| {
        b.iter(|| synthesis::assemble_fault_tolerant_fsm(black_box(&doc.goal), &lib).unwrap())
    });
    for repr in [Repr::Bt, Repr::Fsm] {
        let before = build(&doc, repr).unwrap();
        let mut after = before.clone();
        apply_edit(&mut after, &EditScript::AddRecharge, &doc).unwrap();
        let (g1, g2) = (before.to_graph(), after.to_graph());
        let costs = EditCostModel::default();
        c.bench_function(&format!("ged_add_recharge_{repr}"), |b| {
            b.iter(|| ged(black_box(&g1), black_box(&g2), &costs).unwrap())
        });
    }
}

criterion_group!(benches, bt_insert, fsm_add_connected, fetch_pipeline);
criterion_main!(benches);
