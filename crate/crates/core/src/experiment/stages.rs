use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::ExperimentConfig;
use super::output::{f, histogram, summary_row, write_csv, write_manifest, OutputLock, TIMINGS_FILE};
use crate::baselines::{run_baseline_suite, BaselineOutcome, BaselineRow};
use crate::equilibrium::{
    generate_latents, latents_from_params, realize_trades, solve, EquilibriumSolution, LatentState, ObservedTrade,
    Outcome, SolveSettings,
};
use crate::estimator::{forward, predict_latents, train, FitResult, FittedModel, ModelParams};
use crate::inference::{bootstrap, BootstrapResult, MetricsReport};
use crate::market::io::{load_observed, save_observed, EDGES_FILE, NODES_FILE, OBSERVED_FILE};
use crate::market::{generate_graph, load_graph_with_truth, save_graph_with_truth, GenConfig, GraphTruth, TradingGraph};
use crate::{Error, Execution, Result};

pub const CONFIG_FILE: &str = "config.toml";
pub const SUMMARY_STATS_FILE: &str = "summary_stats.csv";
pub const EQUILIBRIUM_FILE: &str = "equilibrium.csv";
pub const MODEL_FILE: &str = "model.toml";
pub const LOSS_FILE: &str = "loss_curve.csv";
pub const TRAIN_METRICS_FILE: &str = "train_metrics.csv";
pub const PRICES_FILE: &str = "prices.csv";
pub const NODE_LATENTS_FILE: &str = "latents_nodes.csv";
pub const EDGE_LATENTS_FILE: &str = "latents_edges.csv";
pub const DRAWS_FILE: &str = "bootstrap_draws.csv";
pub const BOOT_SUMMARY_FILE: &str = "bootstrap_summary.csv";
pub const BOOT_SKIPPED_FILE: &str = "bootstrap_skipped.csv";
pub const HISTOGRAM_FILE: &str = "bootstrap_histogram.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const SCATTER_FILE: &str = "comparison_scatter.csv";

const HISTOGRAM_BINS: usize = 20;

/// A generated market with its latent truth and realised trades.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub graph: TradingGraph,
    pub latents: LatentState,
    pub solution: EquilibriumSolution,
    pub observed: Vec<ObservedTrade>,
}

impl SyntheticMarket {
    pub fn truth(&self) -> GraphTruth {
        GraphTruth {
            c: self.latents.c.clone(),
            v: self.solution.v.clone(),
            pi: self.latents.pi.clone(),
            p: self.solution.p.clone(),
        }
    }
}

/// Draws graph and latents, then runs `sweeps` value-iteration sweeps from
/// `u - c`; interdealer sales of the last sweep are the observed prices.
pub fn simulate_market(gen: &GenConfig, sweeps: usize, exec: Execution) -> Result<SyntheticMarket> {
    let graph = generate_graph(gen, exec)?;
    let latents = generate_latents(&graph, gen)?;
    let solution = solve(&graph, &latents, &SolveSettings::fixed(sweeps), None, exec)?;
    let observed = realize_trades(&graph, &solution);
    Ok(SyntheticMarket {
        graph,
        latents,
        solution,
        observed,
    })
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name.into(),
        source: Box::new(e),
    })
}

fn block_names(label: &str, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![label.to_string()]
    } else {
        (1..=dim).map(|k| format!("{label} {k}")).collect()
    }
}

fn summary_stats(market: &SyntheticMarket) -> Vec<Vec<String>> {
    let g = &market.graph;
    let n = g.num_nodes();
    let (dx, dy, de) = g.features().dims();
    let mut rows = Vec::new();
    for (k, name) in block_names("Asset Feature X", dx).iter().enumerate() {
        rows.push(summary_row(name, &(0..n).map(|i| g.x(i)[k]).collect::<Vec<_>>()));
    }
    for (k, name) in block_names("Dealer Feature Y", dy).iter().enumerate() {
        rows.push(summary_row(name, &(0..n).map(|i| g.y(i)[k]).collect::<Vec<_>>()));
    }
    for (k, name) in block_names("Relationship Feature E", de).iter().enumerate() {
        rows.push(summary_row(
            name,
            &(0..g.num_edges()).map(|e| g.e(e)[k]).collect::<Vec<_>>(),
        ));
    }
    rows.push(summary_row("Customer Values", g.customer_values()));
    rows.push(summary_row(
        "Observed Prices",
        &market.observed.iter().map(|t| t.price).collect::<Vec<_>>(),
    ));
    rows.push(summary_row("Dealer Values", &market.solution.v));
    rows.push(summary_row("Bargaining Powers", &market.latents.pi));
    rows.push(summary_row("Potential Transaction Prices", &market.solution.p));
    rows.push(summary_row("Costs", &market.latents.c));
    rows
}

/// Writes the graph with truth columns, observed prices, summary statistics
/// and the resolved config.
pub fn cmd_generate(cfg: &ExperimentConfig, dir: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    stage("generate", generate_inner(cfg, dir, exec))
}

fn generate_inner(cfg: &ExperimentConfig, dir: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let market = simulate_market(&cfg.gen, cfg.data_sweeps, exec)?;
    log::info!(
        "generated {} nodes, {} edges, {} observed prices, bargaining margin {:.4}",
        market.graph.num_nodes(),
        market.graph.num_edges(),
        market.observed.len(),
        market.latents.bargaining_margin()
    );
    save_graph_with_truth(&market.graph, &market.truth(), dir)?;
    save_observed(&market.observed, &dir.join(OBSERVED_FILE))?;
    let stats = dir.join(SUMMARY_STATS_FILE);
    write_csv(&stats, &["variable", "N", "min", "max", "mean", "std"], summary_stats(&market))?;
    let config = dir.join(CONFIG_FILE);
    // The output directory is left out so bundles written to different
    // places are byte-identical.
    let portable = ExperimentConfig {
        outputs: PathBuf::from("."),
        ..cfg.clone()
    };
    std::fs::write(&config, portable.to_toml()?).map_err(|e| Error::io(&config, e))?;
    Ok(vec![
        dir.join(NODES_FILE),
        dir.join(EDGES_FILE),
        dir.join(OBSERVED_FILE),
        stats,
        config,
    ])
}

/// Graph, optional truth and observed prices from a generated directory.
pub fn load_data(dir: &Path) -> Result<(TradingGraph, Option<GraphTruth>, Vec<ObservedTrade>)> {
    let (graph, truth) = load_graph_with_truth(dir)?;
    let observed = load_observed(&dir.join(OBSERVED_FILE), &graph)?;
    Ok((graph, truth, observed))
}

/// Solves the equilibrium to tolerance under the stored latent truth (or,
/// without truth columns, under the configured true parameters).
pub fn cmd_solve(cfg: &ExperimentConfig, dir: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    stage("solve", solve_inner(cfg, dir, exec))
}

fn solve_inner(cfg: &ExperimentConfig, dir: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    let (graph, truth, _) = load_data(dir)?;
    let state = match truth {
        Some(t) => LatentState::new(&graph, t.c, t.pi)?,
        None => latents_from_params(&graph, &cfg.gen.true_params)?,
    };
    let sol = solve(&graph, &state, &SolveSettings::default(), None, exec)?;
    log::info!(
        "equilibrium after {} sweeps, residual {:e}",
        sol.iterations_used,
        sol.final_residual
    );
    let rows = (0..graph.num_nodes()).map(|i| {
        let k = graph.node_key(i);
        let (kind, buyer) = match sol.outcome[i] {
            Outcome::InterdealerSale { buyer, .. } => ("interdealer", buyer.to_string()),
            Outcome::CustomerSale { .. } => ("customer", String::new()),
            Outcome::Isolated { .. } => ("isolated", String::new()),
        };
        vec![
            k.dealer.to_string(),
            k.asset.to_string(),
            k.day.to_string(),
            f(sol.v[i]),
            sol.best_price[i].map(f).unwrap_or_default(),
            kind.into(),
            buyer,
            f(sol.outcome[i].price()),
        ]
    });
    let path = dir.join(EQUILIBRIUM_FILE);
    write_csv(
        &path,
        &["dealer", "asset", "day", "v", "best_price", "outcome", "buyer", "price"],
        rows,
    )?;
    Ok(vec![path])
}

/// Predicted price of each observed trade at `params` (L-sweep forward).
pub fn predict_observed(
    graph: &TradingGraph,
    observed: &[ObservedTrade],
    params: &ModelParams,
    layers: usize,
) -> Result<Vec<f64>> {
    let trace = forward(graph, params, layers)?;
    observed
        .iter()
        .map(|t| {
            trace.pred_best[t.node]
                .ok_or_else(|| Error::InvalidInput(format!("observed seller {:?} has no buyers", t.edge.seller_key())))
        })
        .collect()
}

pub fn observed_prices(observed: &[ObservedTrade]) -> Vec<f64> {
    observed.iter().map(|t| t.price).collect()
}

/// Outcome of the train stage.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub fit: FitResult,
    pub metrics: MetricsReport,
    pub files: Vec<PathBuf>,
}

pub fn cmd_train(cfg: &ExperimentConfig, dir: &Path, exec: Execution) -> Result<TrainReport> {
    stage("train", train_inner(cfg, dir, exec))
}

fn train_inner(cfg: &ExperimentConfig, dir: &Path, exec: Execution) -> Result<TrainReport> {
    let (graph, truth, observed) = load_data(dir)?;
    let fit = train(&graph, &observed, None, &cfg.train)?;
    let actual = observed_prices(&observed);
    let pred = fit.predictions(&observed);
    let metrics = MetricsReport::from_predictions(&pred, &actual, fit.params.len())?;
    log::info!(
        "fit {:?}: r2 {:.4}, mse {:.4}",
        fit.params.to_vec(),
        metrics.r2,
        metrics.mse
    );

    let mut files = Vec::new();
    let model = dir.join(MODEL_FILE);
    FittedModel::new(&fit, &cfg.train, observed.len()).save(&model)?;
    files.push(model);

    let loss = dir.join(LOSS_FILE);
    write_csv(
        &loss,
        &["epoch", "loss"],
        fit.loss_trajectory
            .iter()
            .enumerate()
            .map(|(k, l)| vec![(k + 1).to_string(), f(*l)]),
    )?;
    files.push(loss);

    let m = dir.join(TRAIN_METRICS_FILE);
    write_csv(
        &m,
        &["r2", "mae", "mse", "parameters", "aic", "bic", "n_obs"],
        [vec![
            f(metrics.r2),
            f(metrics.mae),
            f(metrics.mse),
            metrics.n_params.to_string(),
            f(metrics.aic),
            f(metrics.bic),
            metrics.n_obs.to_string(),
        ]],
    )?;
    files.push(m);

    if cfg.emit_plots {
        files.extend(write_fit_plots(&graph, truth.as_ref(), &observed, &fit, dir, exec)?);
    }
    Ok(TrainReport { fit, metrics, files })
}

fn write_fit_plots(
    graph: &TradingGraph,
    truth: Option<&GraphTruth>,
    observed: &[ObservedTrade],
    fit: &FitResult,
    dir: &Path,
    exec: Execution,
) -> Result<Vec<PathBuf>> {
    let prices = dir.join(PRICES_FILE);
    let pred = fit.predictions(observed);
    write_csv(
        &prices,
        &["seller", "buyer", "asset", "day", "observed", "predicted"],
        observed.iter().zip(&pred).map(|(t, p)| {
            vec![
                t.edge.seller.to_string(),
                t.edge.buyer.to_string(),
                t.edge.asset.to_string(),
                t.edge.day.to_string(),
                f(t.price),
                f(*p),
            ]
        }),
    )?;

    let lat = predict_latents(graph, &fit.params, exec)?;
    let opt = |v: Option<&Vec<f64>>, i: usize| v.map(|v| f(v[i])).unwrap_or_default();
    let nodes = dir.join(NODE_LATENTS_FILE);
    write_csv(
        &nodes,
        &["dealer", "asset", "day", "c_true", "c_pred", "v_true", "v_pred"],
        (0..graph.num_nodes()).map(|i| {
            let k = graph.node_key(i);
            vec![
                k.dealer.to_string(),
                k.asset.to_string(),
                k.day.to_string(),
                opt(truth.map(|t| &t.c), i),
                f(lat.c[i]),
                opt(truth.map(|t| &t.v), i),
                f(lat.v[i]),
            ]
        }),
    )?;
    let edges = dir.join(EDGE_LATENTS_FILE);
    write_csv(
        &edges,
        &["seller", "buyer", "asset", "day", "pi_true", "pi_pred", "p_true", "p_pred"],
        graph.edges().iter().enumerate().map(|(e, k)| {
            vec![
                k.seller.to_string(),
                k.buyer.to_string(),
                k.asset.to_string(),
                k.day.to_string(),
                opt(truth.map(|t| &t.pi), e),
                f(lat.pi[e]),
                opt(truth.map(|t| &t.p), e),
                f(lat.p[e]),
            ]
        }),
    )?;
    Ok(vec![prices, nodes, edges])
}

/// The fitted parameters in `dir`, training first if no model file exists.
fn point_estimate(cfg: &ExperimentConfig, dir: &Path, graph: &TradingGraph, observed: &[ObservedTrade]) -> Result<ModelParams> {
    let path = dir.join(MODEL_FILE);
    if path.exists() {
        let model = FittedModel::load(&path)?;
        model.params.check_dims(graph.features().dims())?;
        Ok(model.params)
    } else {
        log::info!("no {MODEL_FILE} in {}; training a point estimate", dir.display());
        Ok(train(graph, observed, None, &cfg.train)?.params)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapReport {
    pub point: ModelParams,
    pub result: BootstrapResult,
    pub files: Vec<PathBuf>,
}

pub fn cmd_bootstrap(cfg: &ExperimentConfig, dir: &Path, exec: Execution) -> Result<BootstrapReport> {
    stage("bootstrap", bootstrap_inner(cfg, dir, exec))
}

fn bootstrap_inner(cfg: &ExperimentConfig, dir: &Path, exec: Execution) -> Result<BootstrapReport> {
    let (graph, _, observed) = load_data(dir)?;
    let point = point_estimate(cfg, dir, &graph, &observed)?;
    let result = bootstrap(&graph, &observed, &cfg.train, &cfg.bootstrap, Some(&point), exec)?;
    log::info!(
        "bootstrap kept {} of {} replicates",
        result.draws.len(),
        cfg.bootstrap.replicates
    );
    let mut files = Vec::new();

    let draws = dir.join(DRAWS_FILE);
    let mut header = vec!["replicate".to_string()];
    header.extend(result.names.iter().cloned());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        &draws,
        &header,
        result.replicate_ids.iter().zip(&result.draws).map(|(b, p)| {
            let mut row = vec![b.to_string()];
            row.extend(p.to_vec().into_iter().map(f));
            row
        }),
    )?;
    files.push(draws);

    let summary = dir.join(BOOT_SUMMARY_FILE);
    let truth = cfg.gen.true_params.to_vec();
    let est = point.to_vec();
    let s = &result.summary;
    write_csv(
        &summary,
        &["param", "true", "estimate", "bootstrap_mean", "se", "ci_lower", "ci_upper"],
        result.names.iter().enumerate().map(|(j, name)| {
            vec![
                name.clone(),
                f(truth[j]),
                f(est[j]),
                f(s.mean[j]),
                f(s.se[j]),
                f(s.ci_lower[j]),
                f(s.ci_upper[j]),
            ]
        }),
    )?;
    files.push(summary);

    let skipped = dir.join(BOOT_SKIPPED_FILE);
    write_csv(&skipped, &["replicate"], result.skipped.iter().map(|b| vec![b.to_string()]))?;
    files.push(skipped);

    if cfg.emit_plots {
        let hist = dir.join(HISTOGRAM_FILE);
        let mut rows = Vec::new();
        for (j, name) in result.names.iter().enumerate() {
            let values: Vec<f64> = result.draws.iter().map(|p| p.to_vec()[j]).collect();
            for (k, (lo, hi, count)) in histogram(&values, HISTOGRAM_BINS).into_iter().enumerate() {
                rows.push(vec![name.clone(), k.to_string(), f(lo), f(hi), count.to_string()]);
            }
        }
        write_csv(&hist, &["param", "bin", "lower", "upper", "count"], rows)?;
        files.push(hist);
    }
    Ok(BootstrapReport { point, result, files })
}

/// One row of the model comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model: String,
    pub n_params: usize,
    /// `None` for saturated regressions.
    pub metrics: Option<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<ComparisonRow>,
    pub baselines: Vec<BaselineRow>,
    pub tgnn_predictions: Vec<f64>,
    pub files: Vec<PathBuf>,
}

pub const TGNN_LABEL: &str = "TGNN";

/// Baseline regressions and the structural fit scored on the same prices.
pub fn compare_models(
    graph: &TradingGraph,
    observed: &[ObservedTrade],
    params: &ModelParams,
    layers: usize,
    exec: Execution,
) -> Result<(Vec<ComparisonRow>, Vec<BaselineRow>, Vec<f64>)> {
    let baselines = run_baseline_suite(graph, observed, exec)?;
    let pred = predict_observed(graph, observed, params, layers)?;
    let tgnn = MetricsReport::from_predictions(&pred, &observed_prices(observed), params.len())?;
    let mut rows: Vec<ComparisonRow> = baselines
        .iter()
        .map(|b| ComparisonRow {
            model: b.spec.label().to_string(),
            n_params: b.columns.len(),
            metrics: b.metrics().copied(),
        })
        .collect();
    rows.push(ComparisonRow {
        model: TGNN_LABEL.into(),
        n_params: params.len(),
        metrics: Some(tgnn),
    });
    Ok((rows, baselines, pred))
}

pub fn cmd_compare(cfg: &ExperimentConfig, dir: &Path, exec: Execution) -> Result<CompareReport> {
    stage("compare", compare_inner(cfg, dir, exec))
}

fn compare_inner(cfg: &ExperimentConfig, dir: &Path, exec: Execution) -> Result<CompareReport> {
    let (graph, _, observed) = load_data(dir)?;
    let params = point_estimate(cfg, dir, &graph, &observed)?;
    let (rows, baselines, pred) = compare_models(&graph, &observed, &params, cfg.train.layers, exec)?;
    let mut files = Vec::new();

    let table = dir.join(COMPARISON_FILE);
    write_csv(
        &table,
        &["model", "r2", "mae", "mse", "parameters", "aic", "bic", "status"],
        rows.iter().map(|r| match &r.metrics {
            Some(m) => vec![
                r.model.clone(),
                f(m.r2),
                f(m.mae),
                f(m.mse),
                r.n_params.to_string(),
                f(m.aic),
                f(m.bic),
                "fitted".into(),
            ],
            None => {
                let mut row = vec![r.model.clone()];
                row.extend(["", "", ""].map(String::from));
                row.push(r.n_params.to_string());
                row.extend(["", "", "saturated"].map(String::from));
                row
            }
        }),
    )?;
    files.push(table);

    if cfg.emit_plots {
        // Highest-r2 regression that left residual variance to score.
        let best = baselines
            .iter()
            .filter_map(|b| match &b.outcome {
                BaselineOutcome::Fitted(r) => Some((b.spec, r)),
                BaselineOutcome::Saturated { .. } => None,
            })
            .max_by(|a, b| a.1.metrics.r2.total_cmp(&b.1.metrics.r2));
        let scatter = dir.join(SCATTER_FILE);
        write_csv(
            &scatter,
            &["seller", "buyer", "asset", "day", "observed", "tgnn", "best_ols", "best_ols_model"],
            observed.iter().enumerate().map(|(i, t)| {
                vec![
                    t.edge.seller.to_string(),
                    t.edge.buyer.to_string(),
                    t.edge.asset.to_string(),
                    t.edge.day.to_string(),
                    f(t.price),
                    f(pred[i]),
                    best.map(|(_, r)| f(r.fitted[i])).unwrap_or_default(),
                    best.map(|(s, _)| s.label().to_string()).unwrap_or_default(),
                ]
            }),
        )?;
        files.push(scatter);
    }
    Ok(CompareReport {
        rows,
        baselines,
        tgnn_predictions: pred,
        files,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceReport {
    pub files: Vec<PathBuf>,
    pub stage_seconds: Vec<(String, f64)>,
}

/// generate, solve, train, bootstrap and compare into `dir`, then the
/// stage timings and a manifest of every file.
pub fn cmd_reproduce(cfg: &ExperimentConfig, dir: &Path, exec: Execution) -> Result<ReproduceReport> {
    let _lock = OutputLock::acquire(dir)?;
    let mut files = Vec::new();
    let mut timings = Vec::new();
    let mut timed = |name: &str, files: &mut Vec<PathBuf>, run: &dyn Fn() -> Result<Vec<PathBuf>>| -> Result<()> {
        let start = Instant::now();
        let written = run()?;
        timings.push((name.to_string(), start.elapsed().as_secs_f64()));
        files.extend(written);
        Ok(())
    };
    timed("generate", &mut files, &|| cmd_generate(cfg, dir, exec))?;
    timed("solve", &mut files, &|| cmd_solve(cfg, dir, exec))?;
    timed("train", &mut files, &|| cmd_train(cfg, dir, exec).map(|r| r.files))?;
    timed("bootstrap", &mut files, &|| cmd_bootstrap(cfg, dir, exec).map(|r| r.files))?;
    timed("compare", &mut files, &|| cmd_compare(cfg, dir, exec).map(|r| r.files))?;

    let timings_path = dir.join(TIMINGS_FILE);
    write_csv(
        &timings_path,
        &["stage", "seconds"],
        timings.iter().map(|(s, t)| vec![s.clone(), f(*t)]),
    )?;
    let manifest = write_manifest(dir, &files, std::slice::from_ref(&timings_path))?;
    files.push(timings_path);
    files.push(manifest);
    Ok(ReproduceReport {
        files,
        stage_seconds: timings,
    })
}
