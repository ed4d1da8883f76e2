use k4flab_core::greedy::{run_greedy, GreedyConfig};
use k4flab_core::staged::{self, ProcessParams, StageState, StepMode};
use k4flab_core::survival::{self, TreeSpec};
use k4flab_core::{EdgeId, Graph};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn is_subgraph(a: &Graph, b: &Graph) -> bool {
    a.edges().all(|(u, v)| b.has_edge(u, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_ids_round_trip(n in 2usize..400, a in 0usize..400, b in 0usize..400) {
        let (u, v) = (a % n, b % n);
        prop_assume!(u != v);
        let id = EdgeId::encode(n, u.min(v), u.max(v));
        prop_assert!((id.index() as u64) < (n * (n - 1) / 2) as u64);
        prop_assert_eq!(id.decode(n), (u.min(v), u.max(v)));
    }

    #[test]
    fn greedy_result_is_maximal_k4_free(n in 4usize..60, seed in any::<u64>()) {
        let run = run_greedy(&GreedyConfig::new(n, seed)).unwrap();
        let g = &run.graph;
        prop_assert!(run.exhausted);
        prop_assert_eq!(run.steps, (n * (n - 1) / 2) as u64);
        prop_assert!(g.is_k4_free());
        for u in 0..n {
            for v in u + 1..n {
                prop_assert!(g.has_edge(u, v) || g.closes_k4(u, v));
            }
        }
        let again = run_greedy(&GreedyConfig::new(n, seed)).unwrap();
        prop_assert_eq!(again.graph.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }

    #[test]
    fn staged_rounds_keep_m_inside_trav(n in 20usize..120, seed in any::<u64>(), oneshot in any::<bool>()) {
        let params = ProcessParams::desk(n, seed);
        prop_assume!(params.validate().is_ok());
        let mode = if oneshot { StepMode::OneShot } else { StepMode::Staged };
        let mut state = StageState::initial(n);
        for _ in 0..params.rounds {
            let (m0, t0) = (state.m.clone(), state.trav.clone());
            state = staged::step_with(mode, state, &params).unwrap();
            prop_assert!(is_subgraph(&m0, &state.m));
            prop_assert!(is_subgraph(&t0, &state.trav));
            prop_assert!(is_subgraph(&state.m, &state.trav));
            prop_assert!(state.m.is_k4_free());
            prop_assert!(state.birthtimes.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(state.birthtimes.len(), state.bite.len());
            for f in &state.bite {
                let (u, v) = f.decode(n);
                prop_assert!(!t0.has_edge(u, v) && state.trav.has_edge(u, v));
            }
        }
        prop_assert!(staged::step_with(mode, state, &params).is_err());
    }

    #[test]
    fn survival_curves_are_valid(seed in any::<u64>(), depth in 1usize..7) {
        let mut rng = StdRng::seed_from_u64(seed);
        let tree = TreeSpec::random(&mut rng, 40, depth, 3);
        prop_assert!(tree.depth() <= depth);
        let curve = survival::survival_dp(&tree, 1e-2).unwrap();
        curve.check_invariants(1e-9).unwrap();
        prop_assert!(curve.p.iter().all(|p| (0.0..=1.0).contains(p)), "{:?}", curve.p.iter().find(|p| !(0.0..=1.0).contains(*p)));
        prop_assert!(curve.big_p.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }

    #[test]
    fn tree_text_format_round_trips(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let tree = TreeSpec::random(&mut rng, 30, 6, 3);
        let mut buf = Vec::new();
        tree.write(&mut buf).unwrap();
        let back = TreeSpec::parse(&buf[..], std::path::Path::new("mem")).unwrap();
        let mut buf2 = Vec::new();
        back.write(&mut buf2).unwrap();
        prop_assert_eq!(buf, buf2);
    }

    #[test]
    fn edge_list_round_trips(n in 1usize..90, p in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let g = Graph::gnp(n, p, &mut rng);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let back = Graph::read_edge_list(&buf[..], std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back.n(), n);
        prop_assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }
}
