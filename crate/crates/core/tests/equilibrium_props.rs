mod common;

use common::{random_instance, random_values, sup_dist};
use proptest::prelude::*;
use tradenet::equilibrium::{apply_operator, solve, SolveSettings};
use tradenet::rng::{stream, Stream};
use tradenet::Execution;

fn tight() -> SolveSettings {
    SolveSettings::to_tolerance(1e-12, 1_000_000)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operator_is_non_expansive(seed in 0u64..1_000_000) {
        let (graph, state) = random_instance(seed, 20, (2, 2));
        let mut rng = stream(seed, Stream::Custom(1));
        let a = random_values(&state, &mut rng);
        let b = random_values(&state, &mut rng);
        let before = sup_dist(&a, &b);
        let after = sup_dist(&apply_operator(&graph, &state, &a), &apply_operator(&graph, &state, &b));
        prop_assert!(after <= before * (1.0 + 1e-12), "{after} > {before}");
    }

    #[test]
    fn value_bounds(seed in 0u64..1_000_000) {
        let (graph, state) = random_instance(seed, 20, (2, 2));
        let sol = solve(&graph, &state, &tight(), None, Execution::Sequential).unwrap();
        for layer in 0..graph.dims().layers() {
            let nodes = graph.layer_nodes(layer);
            let margin: Vec<f64> = nodes.clone().map(|i| state.u[i] - state.c[i]).collect();
            let mmax = margin.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mmin = margin.iter().copied().fold(f64::INFINITY, f64::min);
            let vmax = sol.v[nodes.clone()].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let vmin = sol.v[nodes].iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert!((vmax - mmax).abs() <= 1e-9);
            prop_assert!(vmin >= mmin - 1e-9);
        }
    }

    #[test]
    fn unique_fixed_point(seed in 0u64..1_000_000) {
        let (graph, state) = random_instance(seed, 20, (2, 2));
        let mut rng = stream(seed, Stream::Custom(2));
        let a = random_values(&state, &mut rng);
        let b = random_values(&state, &mut rng);
        let sa = solve(&graph, &state, &tight(), Some(&a), Execution::Sequential).unwrap();
        let sb = solve(&graph, &state, &tight(), Some(&b), Execution::Sequential).unwrap();
        prop_assert!(sup_dist(&sa.v, &sb.v) <= 1e-8);
    }

    #[test]
    fn prices_lie_between_endpoint_values(seed in 0u64..1_000_000) {
        let (graph, state) = random_instance(seed, 20, (2, 2));
        let sol = solve(&graph, &state, &tight(), None, Execution::Sequential).unwrap();
        for e in 0..graph.num_edges() {
            let (vs, vb) = (sol.v[graph.edge_seller(e)], sol.v[graph.edge_buyer(e)]);
            let slack = 1e-12 * vs.abs().max(vb.abs());
            prop_assert!(sol.p[e] >= vs.min(vb) - slack && sol.p[e] <= vs.max(vb) + slack);
        }
    }

    #[test]
    fn iteration_from_margins_rises_monotonically(seed in 0u64..1_000_000) {
        let (graph, state) = random_instance(seed, 20, (2, 2));
        let mut v: Vec<f64> = state.u.iter().zip(&state.c).map(|(u, c)| u - c).collect();
        let cap = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..30 {
            let next = apply_operator(&graph, &state, &v);
            for (a, b) in v.iter().zip(&next) {
                prop_assert!(*b >= *a && *b <= cap);
            }
            v = next;
        }
    }

    #[test]
    fn layers_solve_independently(seed in 0u64..1_000_000) {
        let (graph, state) = random_instance(seed, 12, (3, 3));
        let joint = solve(&graph, &state, &SolveSettings::default(), None, Execution::Sequential).unwrap();
        let parallel = solve(&graph, &state, &SolveSettings::default(), None, Execution::Parallel).unwrap();
        prop_assert_eq!(&joint, &parallel);

        // Scrambling the start of every other layer leaves a layer untouched.
        let margin: Vec<f64> = state.u.iter().zip(&state.c).map(|(u, c)| u - c).collect();
        let mut rng = stream(seed, Stream::Custom(3));
        let noise = random_values(&state, &mut rng);
        for layer in 0..graph.dims().layers() {
            let nodes = graph.layer_nodes(layer);
            let mut v0 = noise.clone();
            v0[nodes.clone()].copy_from_slice(&margin[nodes.clone()]);
            let alone = solve(&graph, &state, &SolveSettings::default(), Some(&v0), Execution::Sequential).unwrap();
            prop_assert_eq!(&alone.v[nodes.clone()], &joint.v[nodes]);
            let edges = graph.layer_edges(layer);
            prop_assert_eq!(&alone.p[edges.clone()], &joint.p[edges]);
        }
    }

    #[test]
    fn best_price_and_outcome_rule(seed in 0u64..1_000_000) {
        let (graph, state) = random_instance(seed, 20, (2, 2));
        let sol = solve(&graph, &state, &SolveSettings::default(), None, Execution::Sequential).unwrap();
        for i in 0..graph.num_nodes() {
            let best = graph.out_edges(i).map(|e| sol.p[e]).fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.max(p))));
            prop_assert_eq!(sol.best_price[i], best);
            let interdealer = best.is_some_and(|b| b > state.u[i]);
            prop_assert_eq!(sol.outcome[i].is_interdealer(), interdealer);
        }
    }
}
