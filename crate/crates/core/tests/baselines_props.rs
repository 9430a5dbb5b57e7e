use proptest::prelude::*;
use tradenet::baselines::{
    betweenness_centrality, build_design, degree_centrality, eigenvector_centrality, in_degree_centrality, lstsq,
    out_degree_centrality, run_baseline_suite, CentralityTable, LayerGraph, RankPolicy, RegressionSpec,
};
use tradenet::experiment::simulate_market;
use tradenet::market::GenConfig;
use tradenet::Execution;

fn layer_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..15).prop_flat_map(|n| {
        let pairs = prop::collection::vec((0..n, 0..n), 0..n * n);
        (Just(n), pairs.prop_map(|p| p.into_iter().filter(|(a, b)| a != b).collect::<Vec<_>>()))
    })
}

fn design_strategy() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (1usize..6)
        .prop_flat_map(|cols| (Just(cols), cols + 1..cols + 30))
        .prop_flat_map(|(cols, rows)| {
            (
                Just(cols),
                prop::collection::vec(-10.0f64..10.0, rows * cols),
                prop::collection::vec(-100.0f64..100.0, rows),
            )
        })
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

fn sse(a: &[f64], cols: usize, y: &[f64], beta: &[f64]) -> f64 {
    y.iter()
        .enumerate()
        .map(|(i, yi)| {
            let fit: f64 = a[i * cols..(i + 1) * cols].iter().zip(beta).map(|(x, b)| x * b).sum();
            (yi - fit).powi(2)
        })
        .sum()
}

proptest! {
    #[test]
    fn least_squares_is_optimal((cols, a, y) in design_strategy()) {
        let sol = lstsq(&a, cols, &y, &names(cols), RankPolicy::DropAndWarn).unwrap();
        let best = sse(&a, cols, &y, &sol.coefficients);
        for j in 0..cols {
            for d in [-1e-3, 1e-3] {
                let mut b = sol.coefficients.clone();
                b[j] += d;
                prop_assert!(sse(&a, cols, &y, &b) >= best * (1.0 - 1e-12) - 1e-9);
            }
        }
    }

    #[test]
    fn residuals_orthogonal_to_columns((cols, a, y) in design_strategy()) {
        let sol = lstsq(&a, cols, &y, &names(cols), RankPolicy::DropAndWarn).unwrap();
        let rows = y.len();
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..cols {
            let col: Vec<f64> = (0..rows).map(|i| a[i * cols + j]).collect();
            let cnorm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dot: f64 = col.iter().zip(&sol.residuals).map(|(c, r)| c * r).sum();
            prop_assert!(dot.abs() <= 1e-9 * (cnorm * ynorm).max(1.0), "column {j}: {dot}");
        }
    }

    #[test]
    fn centralities_lie_in_unit_interval((n, edges) in layer_strategy()) {
        let g = LayerGraph::new(n, &edges).unwrap();
        let all = [
            degree_centrality(&g).unwrap(),
            in_degree_centrality(&g).unwrap(),
            out_degree_centrality(&g).unwrap(),
            eigenvector_centrality(&g, 1e-10, 10_000).unwrap(),
            betweenness_centrality(&g),
        ];
        for values in all {
            prop_assert_eq!(values.len(), n);
            for v in values {
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v), "{v}");
            }
        }
    }

    #[test]
    fn adding_an_edge_never_lowers_degree((n, edges) in layer_strategy(), s in 0usize..15, b in 0usize..15) {
        let (s, b) = (s % n, b % n);
        prop_assume!(s != b);
        let before = LayerGraph::new(n, &edges).unwrap();
        let mut more = edges.clone();
        more.push((s, b));
        let after = LayerGraph::new(n, &more).unwrap();
        for f in [degree_centrality, in_degree_centrality, out_degree_centrality] {
            let (x, y) = (f(&before).unwrap(), f(&after).unwrap());
            prop_assert!(x.iter().zip(&y).all(|(x, y)| y >= x));
        }
    }

    #[test]
    fn nested_specs_never_lose_fit(seed in 0u64..10_000) {
        let market = simulate_market(&GenConfig::dense(seed), 10, Execution::Sequential).unwrap();
        let table = CentralityTable::compute(&market.graph, Execution::Sequential).unwrap();
        let rows = run_baseline_suite(&market.graph, &market.observed, Execution::Sequential).unwrap();
        let r2 = |spec: RegressionSpec| rows.iter().find(|r| r.spec == spec).unwrap().metrics().map(|m| m.r2);
        let columns = |spec: RegressionSpec| build_design(&market.graph, &market.observed, &table, spec).unwrap().columns;
        use RegressionSpec::*;
        for (small, big) in [
            (Basic, Degree), (Basic, Eigenvector), (Basic, Betweenness),
            (Degree, AllCentrality), (Eigenvector, AllCentrality), (Betweenness, AllCentrality),
            (Eigenvector, EigenvectorInteractions),
            (AllCentrality, CentralityInteractions), (EigenvectorInteractions, CentralityInteractions),
        ] {
            let (cs, cb) = (columns(small), columns(big));
            prop_assert!(cs.iter().all(|c| cb.contains(c)), "{small:?} not inside {big:?}");
            // A saturated bigger spec fits exactly, which is still no worse.
            if let (Some(a), b) = (r2(small), r2(big)) {
                prop_assert!(b.unwrap_or(1.0) >= a - 1e-9, "{small:?} {a} > {big:?} {b:?}");
            }
        }
    }
}

#[test]
fn column_counts_for_unit_dimensions() {
    let counts: Vec<usize> = RegressionSpec::ALL.iter().map(|s| s.n_columns((1, 1, 1))).collect();
    assert_eq!(counts, [5, 9, 7, 7, 13, 15, 45]);
}
