use proptest::prelude::*;

use crlab::experiment::{cells_from_csv, cells_to_csv};
use crlab::{
    is_equitable, naive_stable, refine_strategy, refine_worklist, BenchCell, ColoredGraph, FullRefinement,
    PolicyKind, Replay, Vertex,
};

fn arb_graph(max_n: usize) -> impl Strategy<Value = ColoredGraph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            prop::collection::vec(any::<bool>(), pairs),
            prop::collection::vec(0u32..3, n),
            0.0f64..1.0,
        )
            .prop_map(move |(mask, colors, density)| {
                let mut edges = Vec::new();
                let mut idx = 0;
                for u in 0..n as Vertex {
                    for v in u + 1..n as Vertex {
                        // Thin the edge set so sparse graphs show up too.
                        if mask[idx] && (idx as f64 / pairs.max(1) as f64) < density.max(0.2) {
                            edges.push((u, v));
                        }
                        idx += 1;
                    }
                }
                ColoredGraph::new(n, &edges, &colors).unwrap()
            })
    })
}

fn arb_policy() -> impl Strategy<Value = PolicyKind> {
    prop::sample::select(PolicyKind::all().to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn naive_stable_is_equitable_and_idempotent(g in arb_graph(24)) {
        let initial = g.initial_partition();
        let s = naive_stable(&g, &initial);
        prop_assert!(is_equitable(&g, &s));
        prop_assert!(s.refines(&initial));
        prop_assert!(naive_stable(&g, &s).same_classes(&s));
    }

    #[test]
    fn every_policy_reaches_the_coarsest_stable_partition(g in arb_graph(32), policy in arb_policy()) {
        let initial = g.initial_partition();
        let r = refine_worklist(&g, &initial, policy).unwrap();
        prop_assert!(r.final_partition.same_classes(&naive_stable(&g, &initial)));
        prop_assert_eq!(r.step_count, r.steps.len());
    }

    #[test]
    fn replay_reproduces_costs_exactly(g in arb_graph(32), policy in arb_policy()) {
        let initial = g.initial_partition();
        let r = refine_worklist(&g, &initial, policy).unwrap();
        let mut replay = Replay::new(&g, initial);
        let mut total = 0;
        for step in &r.steps {
            let (cost, _) = replay.apply(step).unwrap();
            prop_assert_eq!(cost, step.edge_cost);
            total += cost;
        }
        prop_assert_eq!(total, r.total_cost);
        prop_assert!(replay.partition().same_classes(&r.final_partition));
    }

    /// With the largest fragment left out of the worklist, a vertex lies in
    /// a splitter at most log2(n) + 1 times.
    #[test]
    fn cost_respects_halving_bound(g in arb_graph(40), policy in arb_policy()) {
        let r = refine_worklist(&g, &g.initial_partition(), policy).unwrap();
        let n = g.vertex_count().max(1);
        let log = usize::BITS - 1 - n.leading_zeros();
        prop_assert!(r.total_cost <= 2 * g.edge_count() as u64 * (log as u64 + 1));
    }

    #[test]
    fn stable_partition_is_invariant_under_relabeling(g in arb_graph(24), seed in any::<u64>()) {
        let n = g.vertex_count();
        let mut perm: Vec<Vertex> = (0..n as Vertex).collect();
        let mut state = seed | 1;
        for i in (1..n).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            perm.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let edges: Vec<(Vertex, Vertex)> = g.edges().map(|(u, v)| (perm[u as usize], perm[v as usize])).collect();
        let colors_src = g.initial_partition();
        let mut colors = vec![0u32; n];
        for v in 0..n {
            colors[perm[v] as usize] = colors_src.class_of(v as Vertex);
        }
        let h = ColoredGraph::new(n, &edges, &colors).unwrap();
        let sg = naive_stable(&g, &g.initial_partition());
        let sh = naive_stable(&h, &h.initial_partition());
        prop_assert_eq!(sg.class_count(), sh.class_count());
        for v in 0..n {
            prop_assert_eq!(sg.class_size(sg.class_of(v as Vertex)), sh.class_size(sh.class_of(perm[v])));
        }
        let rg = refine_worklist(&g, &g.initial_partition(), PolicyKind::Queue).unwrap();
        let rh = refine_worklist(&h, &h.initial_partition(), PolicyKind::Queue).unwrap();
        prop_assert_eq!(rg.final_partition.class_count(), rh.final_partition.class_count());
    }

    #[test]
    fn graph_text_round_trips(g in arb_graph(20)) {
        let back = ColoredGraph::from_text(&g.to_text()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn full_refinement_agrees(g in arb_graph(24)) {
        let initial = g.initial_partition();
        let r = refine_strategy(&g, &initial, &mut FullRefinement).unwrap();
        prop_assert!(r.final_partition.same_classes(&naive_stable(&g, &initial)));
    }

    #[test]
    fn bench_csv_round_trips(
        rows in prop::collection::vec((1u32..12, 1usize..5000, 0usize..9000, 0u64..1_000_000, 0u32..100_000), 0..8)
    ) {
        let cells: Vec<BenchCell> = rows
            .iter()
            .map(|&(k, n, m, cost, wall)| BenchCell {
                family: "stack-adv".to_string(),
                k,
                n,
                m,
                policy: "queue".to_string(),
                total_cost: cost,
                cost_per_edge: if m == 0 { 0.0 } else { cost as f64 / m as f64 },
                wall_ms: wall as f64 / 1000.0,
            })
            .collect();
        let text = cells_to_csv(&cells).unwrap();
        prop_assert!(text.starts_with("family,k,n,m,policy,total_cost,cost_per_edge,wall_ms\n"));
        prop_assert_eq!(cells_from_csv(&text).unwrap(), cells);
    }
}

#[test]
fn refinement_is_deterministic() {
    let (g, _) = crlab::build_family(crlab::FamilyKind::PqMinAdv, 5).unwrap();
    for policy in PolicyKind::all() {
        let a = refine_worklist(&g, &g.initial_partition(), policy).unwrap();
        let b = refine_worklist(&g, &g.initial_partition(), policy).unwrap();
        assert_eq!(a.to_text(&g, &g.initial_partition()), b.to_text(&g, &g.initial_partition()));
    }
}
