mod common;

use common::random_config;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use tradenet::equilibrium::{latents_from_params, solve, SolveSettings};
use tradenet::estimator::{
    backward, estimate_customer_values, forward, loss, train, CustomerDesign, ForwardTrace, ModelParams,
};
use tradenet::experiment::{simulate_market, ExperimentConfig, Preset};
use tradenet::market::GenConfig;
use tradenet::rng::{stream, Stream};
use tradenet::Execution;

fn same_branches(a: &ForwardTrace, b: &ForwardTrace) -> bool {
    a.argmax_choices == b.argmax_choices && a.best_edge == b.best_edge
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_central_differences(seed in 0u64..1_000_000, lambda in prop_oneof![Just(0.0), 0.0..0.5]) {
        const H: f64 = 1e-5;
        let cfg = random_config(seed, 5, (1, 2));
        let market = simulate_market(&cfg, 10, Execution::Sequential).unwrap();
        prop_assume!(!market.observed.is_empty());
        let mut rng = stream(seed, Stream::Custom(7));
        let theta: Vec<f64> = cfg.true_params.to_vec().iter().map(|t| t + rng.random_range(-0.3..0.3)).collect();
        let dims = cfg.true_params.dims();
        let eval = |flat: &[f64]| {
            let p = ModelParams::from_slice(dims, flat).unwrap();
            let t = forward(&market.graph, &p, 10).unwrap();
            let l = loss(&t, &market.observed, None, &p, lambda).unwrap().total();
            (p, t, l)
        };
        let (p0, t0, _) = eval(&theta);
        let grad = backward(&market.graph, &t0, &market.observed, None, &p0, lambda).unwrap().to_vec();
        for k in 0..theta.len() {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[k] += H;
            down[k] -= H;
            let (_, tu, lu) = eval(&up);
            let (_, td, ld) = eval(&down);
            prop_assume!(same_branches(&tu, &t0) && same_branches(&td, &t0));
            let fd = (lu - ld) / (2.0 * H);
            let scale = grad[k].abs().max(fd.abs());
            prop_assert!(scale < 1e-12 || (grad[k] - fd).abs() <= 1e-4 * scale, "coordinate {k}: {} vs {fd}", grad[k]);
        }
    }

    #[test]
    fn forward_is_deterministic(seed in 0u64..1_000_000, layers in 1usize..30) {
        let cfg = random_config(seed, 10, (2, 2));
        let market = simulate_market(&cfg, 10, Execution::Sequential).unwrap();
        let a = forward(&market.graph, &cfg.true_params, layers).unwrap();
        let b = forward(&market.graph, &cfg.true_params, layers).unwrap();
        prop_assert_eq!(a.v_layers, b.v_layers);
        prop_assert_eq!(a.p_final, b.p_final);
        prop_assert_eq!(a.pred_best, b.pred_best);
    }

    #[test]
    fn deep_forward_approaches_equilibrium(seed in 0u64..1_000_000) {
        let cfg = random_config(seed, 10, (1, 2));
        let market = simulate_market(&cfg, 10, Execution::Sequential).unwrap();
        let state = latents_from_params(&market.graph, &cfg.true_params).unwrap();
        let eq = solve(&market.graph, &state, &SolveSettings::to_tolerance(1e-12, 1_000_000), None, Execution::Sequential).unwrap();
        let gap = |layers: usize| {
            let t = forward(&market.graph, &cfg.true_params, layers).unwrap();
            t.pred_best
                .iter()
                .zip(&eq.best_price)
                .map(|(a, b)| match (a, b) {
                    (Some(a), Some(b)) => (a - b).abs(),
                    (None, None) => 0.0,
                    _ => f64::INFINITY,
                })
                .fold(0.0, f64::max)
        };
        // Sweeps from u - c rise monotonically, so the gap never grows.
        let gaps: Vec<f64> = [1, 2, 5, 10, 20, 50, 100].iter().map(|&l| gap(l)).collect();
        for w in gaps.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{gaps:?}");
        }
        prop_assert!(gap(eq.iterations_used + 1) <= 1e-9);
    }
}

#[test]
fn training_lowers_loss_on_every_preset() {
    for preset in Preset::ALL {
        let cfg = ExperimentConfig::preset(preset, 1);
        let market = simulate_market(&cfg.gen, cfg.data_sweeps, Execution::Parallel).unwrap();
        let fit = train(&market.graph, &market.observed, None, &cfg.train).unwrap();
        let first = fit.loss_trajectory[0];
        let last = *fit.loss_trajectory.last().unwrap();
        assert!(last <= first, "{}: {first} -> {last}", preset.name());
    }
}

#[test]
fn dense_training_plateaus_after_200_epochs() {
    let cfg = ExperimentConfig::preset(Preset::Dense, 1);
    let market = simulate_market(&cfg.gen, cfg.data_sweeps, Execution::Parallel).unwrap();
    let fit = train(&market.graph, &market.observed, None, &cfg.train).unwrap();
    let traj = &fit.loss_trajectory;
    assert_eq!(traj.len(), 300);
    let (at200, at300) = (traj[199], traj[299]);
    assert!((at300 - at200).abs() <= 0.05 * at200, "{at200} -> {at300}");
}

/// `sigma^2 (A'A)^{-1}` diagonal for a three-column design.
fn ols_standard_errors(rows: &[[f64; 3]], residual_var: f64) -> [f64; 3] {
    let mut g = [[0.0; 3]; 3];
    for r in rows {
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += r[i] * r[j];
            }
        }
    }
    let det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    let cof = [
        g[1][1] * g[2][2] - g[1][2] * g[2][1],
        g[0][0] * g[2][2] - g[0][2] * g[2][0],
        g[0][0] * g[1][1] - g[0][1] * g[1][0],
    ];
    cof.map(|c| (residual_var * c / det).sqrt())
}

#[test]
fn noisy_customer_values_recovered_within_three_standard_errors() {
    let gamma = [5.0, 0.3, -0.2];
    let sigma = 0.1;
    let mut inside = 0;
    let mut total = 0;
    for seed in 0..50u64 {
        let mut cfg = GenConfig::dense(seed);
        cfg.noise.sigma_u = 0.0;
        let market = simulate_market(&cfg, 10, Execution::Sequential).unwrap();
        let g = &market.graph;
        let mut rng = stream(seed, Stream::Custom(8));
        let mut rows = Vec::new();
        let mut sales = Vec::new();
        for i in 0..g.num_nodes() {
            let row = [1.0, g.x(i)[0], g.y(i)[0]];
            let eps: f64 = rng.sample(StandardNormal);
            let log_price = gamma[0] + gamma[1] * row[1] + gamma[2] * row[2] + sigma * eps;
            rows.push(row);
            sales.push((i, log_price.exp()));
        }
        let design = CustomerDesign {
            use_x: true,
            use_y: true,
            use_z: false,
        };
        let fit = estimate_customer_values(g, &sales, design).unwrap();
        assert_eq!(fit.names, ["intercept", "X_1", "Y_1"]);
        let rss: f64 = rows
            .iter()
            .zip(&sales)
            .map(|(r, (_, p))| {
                let pred: f64 = r.iter().zip(&fit.gamma).map(|(a, b)| a * b).sum();
                (p.ln() - pred).powi(2)
            })
            .sum();
        let se = ols_standard_errors(&rows, rss / (rows.len() - 3) as f64);
        for k in 0..3 {
            total += 1;
            inside += ((fit.gamma[k] - gamma[k]).abs() <= 3.0 * se[k]) as usize;
        }
    }
    assert!(inside as f64 >= 0.95 * total as f64, "{inside}/{total}");
}
