//! CSV persistence for graphs, latent truth and observed trades.
//!
//! A graph directory holds `nodes.csv` (dealer, asset, day, u, X_1.., Y_1..
//! and optionally c, v) and `edges.csv` (seller, buyer, asset, day, E_1..
//! and optionally pi, p). Floats are written in shortest round-trip form, so
//! a save/load cycle is bit-exact.

use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use super::{Dims, EdgeKey, FeatureMatrix, FeatureTable, TradingGraph};
use crate::equilibrium::ObservedTrade;
use crate::{Error, Result};

pub const NODES_FILE: &str = "nodes.csv";
pub const EDGES_FILE: &str = "edges.csv";
pub const OBSERVED_FILE: &str = "observed.csv";

/// Latent truth exported next to a generated graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTruth {
    /// Holding cost per node.
    pub c: Vec<f64>,
    /// Dealer value per node.
    pub v: Vec<f64>,
    /// Bargaining power per edge.
    pub pi: Vec<f64>,
    /// Potential transaction price per edge.
    pub p: Vec<f64>,
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

pub fn save_graph(graph: &TradingGraph, dir: &Path) -> Result<()> {
    write_graph(graph, None, dir)
}

/// Writes the graph plus truth columns (c, v on nodes; pi, p on edges).
pub fn save_graph_with_truth(graph: &TradingGraph, truth: &GraphTruth, dir: &Path) -> Result<()> {
    write_graph(graph, Some(truth), dir)
}

fn write_graph(graph: &TradingGraph, truth: Option<&GraphTruth>, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (dx, dy, de) = graph.features().dims();

    let path = dir.join(NODES_FILE);
    let mut w = writer(&path)?;
    let mut header: Vec<String> = ["dealer", "asset", "day", "u"].map(String::from).to_vec();
    header.extend((1..=dx).map(|i| format!("X_{i}")));
    header.extend((1..=dy).map(|i| format!("Y_{i}")));
    if truth.is_some() {
        header.extend(["c".to_string(), "v".to_string()]);
    }
    w.write_record(&header).map_err(|e| csv_err(&path, e))?;
    for node in 0..graph.num_nodes() {
        let k = graph.node_key(node);
        let mut rec = vec![
            k.dealer.to_string(),
            k.asset.to_string(),
            k.day.to_string(),
            fmt_f64(graph.customer_values()[node]),
        ];
        rec.extend(graph.x(node).iter().copied().map(fmt_f64));
        rec.extend(graph.y(node).iter().copied().map(fmt_f64));
        if let Some(t) = truth {
            rec.push(fmt_f64(t.c[node]));
            rec.push(fmt_f64(t.v[node]));
        }
        w.write_record(&rec).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(EDGES_FILE);
    let mut w = writer(&path)?;
    let mut header: Vec<String> = ["seller", "buyer", "asset", "day"].map(String::from).to_vec();
    header.extend((1..=de).map(|i| format!("E_{i}")));
    if truth.is_some() {
        header.extend(["pi".to_string(), "p".to_string()]);
    }
    w.write_record(&header).map_err(|e| csv_err(&path, e))?;
    for (i, e) in graph.edges().iter().enumerate() {
        let mut rec = vec![
            e.seller.to_string(),
            e.buyer.to_string(),
            e.asset.to_string(),
            e.day.to_string(),
        ];
        rec.extend(graph.e(i).iter().copied().map(fmt_f64));
        if let Some(t) = truth {
            rec.push(fmt_f64(t.pi[i]));
            rec.push(fmt_f64(t.p[i]));
        }
        w.write_record(&rec).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

struct Table {
    path: PathBuf,
    columns: HashMap<String, usize>,
    records: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
        let mut columns = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            if columns.insert(h.trim().to_string(), i).is_some() {
                return Err(Error::Schema {
                    path: path.to_path_buf(),
                    message: format!("duplicate column `{h}`"),
                });
            }
        }
        let mut records = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            records.push((line, rec));
        }
        Ok(Self {
            path: path.to_path_buf(),
            columns,
            records,
        })
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.columns.get(name).copied().ok_or_else(|| Error::Schema {
            path: self.path.clone(),
            message: format!("missing column `{name}`"),
        })
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.columns.get(name).copied()
    }

    /// Indices of `prefix_1..prefix_d`. Gaps and an absent `prefix_1` are
    /// schema errors naming the first missing column.
    fn feature_block(&self, prefix: &str) -> Result<Vec<usize>> {
        let mut max = 0;
        for name in self.columns.keys() {
            if let Some(rest) = name.strip_prefix(prefix).and_then(|r| r.strip_prefix('_')) {
                if let Ok(i) = rest.parse::<usize>() {
                    max = max.max(i);
                }
            }
        }
        let mut out = Vec::new();
        for i in 1..=max.max(1) {
            out.push(self.require(&format!("{prefix}_{i}"))?);
        }
        Ok(out)
    }

    fn parse<T: std::str::FromStr>(&self, line: u64, rec: &csv::StringRecord, col: usize) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let field = self
            .columns
            .iter()
            .find(|(_, &i)| i == col)
            .map(|(n, _)| n.clone())
            .unwrap_or_default();
        let raw = rec.get(col).ok_or_else(|| Error::Parse {
            path: self.path.clone(),
            line,
            field: field.clone(),
            message: "missing value".into(),
        })?;
        raw.trim().parse::<T>().map_err(|e| Error::Parse {
            path: self.path.clone(),
            line,
            field,
            message: format!("cannot parse `{raw}`: {e}"),
        })
    }

    fn schema(&self, message: String) -> Error {
        Error::Schema {
            path: self.path.clone(),
            message,
        }
    }
}

pub fn load_graph(dir: &Path) -> Result<TradingGraph> {
    load_graph_with_truth(dir).map(|(g, _)| g)
}

/// Loads a graph directory; truth is returned when all four truth columns
/// are present.
pub fn load_graph_with_truth(dir: &Path) -> Result<(TradingGraph, Option<GraphTruth>)> {
    let nodes = Table::read(&dir.join(NODES_FILE))?;
    let c_dealer = nodes.require("dealer")?;
    let c_asset = nodes.require("asset")?;
    let c_day = nodes.require("day")?;
    let c_u = nodes.require("u")?;
    let xs = nodes.feature_block("X")?;
    let ys = nodes.feature_block("Y")?;
    let c_c = nodes.optional("c");
    let c_v = nodes.optional("v");

    struct NodeRow {
        dealer: usize,
        asset: usize,
        day: usize,
        u: f64,
        x: Vec<f64>,
        y: Vec<f64>,
        c: Option<f64>,
        v: Option<f64>,
        line: u64,
    }
    let mut rows = Vec::with_capacity(nodes.records.len());
    for (line, rec) in &nodes.records {
        let line = *line;
        let floats = |cols: &[usize]| -> Result<Vec<f64>> {
            cols.iter().map(|&c| nodes.parse::<f64>(line, rec, c)).collect()
        };
        rows.push(NodeRow {
            dealer: nodes.parse(line, rec, c_dealer)?,
            asset: nodes.parse(line, rec, c_asset)?,
            day: nodes.parse(line, rec, c_day)?,
            u: nodes.parse(line, rec, c_u)?,
            x: floats(&xs)?,
            y: floats(&ys)?,
            c: c_c.map(|c| nodes.parse(line, rec, c)).transpose()?,
            v: c_v.map(|c| nodes.parse(line, rec, c)).transpose()?,
            line,
        });
    }
    if rows.is_empty() {
        return Err(nodes.schema("no node rows".into()));
    }
    let dims = Dims::new(
        rows.iter().map(|r| r.dealer).max().unwrap_or(0) + 1,
        rows.iter().map(|r| r.asset).max().unwrap_or(0) + 1,
        rows.iter().map(|r| r.day).max().unwrap_or(0) + 1,
    );

    let mut seen = vec![false; dims.nodes()];
    let mut u = vec![0.0; dims.nodes()];
    let mut x: Vec<Option<Vec<f64>>> = vec![None; dims.layers()];
    let mut y: Vec<Option<Vec<f64>>> = vec![None; dims.dealers * dims.days];
    let mut c_truth = vec![0.0; dims.nodes()];
    let mut v_truth = vec![0.0; dims.nodes()];
    for r in &rows {
        let node = dims.node_index(r.dealer, r.asset, r.day);
        if std::mem::replace(&mut seen[node], true) {
            return Err(nodes.schema(format!(
                "line {}: duplicate node (dealer {}, asset {}, day {})",
                r.line, r.dealer, r.asset, r.day
            )));
        }
        u[node] = r.u;
        let layer = dims.layer_index(r.asset, r.day);
        match &x[layer] {
            None => x[layer] = Some(r.x.clone()),
            Some(prev) if prev != &r.x => {
                return Err(nodes.schema(format!(
                    "line {}: X differs within asset {} day {}",
                    r.line, r.asset, r.day
                )))
            }
            _ => {}
        }
        let dd = dims.dealer_day_index(r.dealer, r.day);
        match &y[dd] {
            None => y[dd] = Some(r.y.clone()),
            Some(prev) if prev != &r.y => {
                return Err(nodes.schema(format!(
                    "line {}: Y differs for dealer {} day {}",
                    r.line, r.dealer, r.day
                )))
            }
            _ => {}
        }
        if let (Some(c), Some(v)) = (r.c, r.v) {
            c_truth[node] = c;
            v_truth[node] = v;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        let k = dims.node_key(missing);
        return Err(nodes.schema(format!(
            "missing node (dealer {}, asset {}, day {})",
            k.dealer, k.asset, k.day
        )));
    }
    let flatten = |rows: Vec<Option<Vec<f64>>>, dim: usize| -> Result<FeatureMatrix> {
        FeatureMatrix::from_rows(dim, rows.into_iter().flat_map(|r| r.unwrap_or_default()).collect())
    };
    let x = flatten(x, xs.len())?;
    let y = flatten(y, ys.len())?;

    let edges_t = Table::read(&dir.join(EDGES_FILE))?;
    let c_seller = edges_t.require("seller")?;
    let c_buyer = edges_t.require("buyer")?;
    let c_asset = edges_t.require("asset")?;
    let c_day = edges_t.require("day")?;
    let es = edges_t.feature_block("E")?;
    let c_pi = edges_t.optional("pi");
    let c_p = edges_t.optional("p");
    let mut edges = Vec::with_capacity(edges_t.records.len());
    let mut e_rows = FeatureMatrix::new(es.len());
    let mut edge_truth = Vec::new();
    for (line, rec) in &edges_t.records {
        let line = *line;
        let key = EdgeKey {
            seller: edges_t.parse(line, rec, c_seller)?,
            buyer: edges_t.parse(line, rec, c_buyer)?,
            asset: edges_t.parse(line, rec, c_asset)?,
            day: edges_t.parse(line, rec, c_day)?,
        };
        if key.seller == key.buyer {
            return Err(Error::Parse {
                path: edges_t.path.clone(),
                line,
                field: "buyer".into(),
                message: format!("self-loop: seller == buyer == {}", key.seller),
            });
        }
        if !dims.contains(key.seller_key()) || !dims.contains(key.buyer_key()) {
            return Err(edges_t.schema(format!(
                "line {line}: edge {key:?} outside node dimensions {dims:?}"
            )));
        }
        let feats: Vec<f64> = es
            .iter()
            .map(|&c| edges_t.parse(line, rec, c))
            .collect::<Result<_>>()?;
        e_rows.push_row(&feats);
        if let (Some(a), Some(b)) = (c_pi, c_p) {
            edge_truth.push((
                key,
                edges_t.parse::<f64>(line, rec, a)?,
                edges_t.parse::<f64>(line, rec, b)?,
            ));
        }
        edges.push(key);
    }

    let features = FeatureTable {
        x,
        y,
        e: e_rows,
        u,
        z: None,
    };
    let graph = TradingGraph::new(dims, edges, features).map_err(|e| match e {
        Error::InvalidInput(m) | Error::Config(m) => edges_t.schema(m),
        other => other,
    })?;

    let truth = if c_c.is_some() && c_v.is_some() && c_pi.is_some() && c_p.is_some() {
        let mut pi = vec![0.0; graph.num_edges()];
        let mut p = vec![0.0; graph.num_edges()];
        for (k, a, b) in edge_truth {
            let i = graph
                .find_edge(k.seller, k.buyer, k.asset, k.day)
                .expect("edge was inserted");
            pi[i] = a;
            p[i] = b;
        }
        Some(GraphTruth {
            c: c_truth,
            v: v_truth,
            pi,
            p,
        })
    } else {
        None
    };
    Ok((graph, truth))
}

pub fn save_observed(trades: &[ObservedTrade], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["seller", "buyer", "asset", "day", "price"])
        .map_err(|e| csv_err(path, e))?;
    for t in trades {
        w.write_record([
            t.edge.seller.to_string(),
            t.edge.buyer.to_string(),
            t.edge.asset.to_string(),
            t.edge.day.to_string(),
            fmt_f64(t.price),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads observed trades and checks each one against `graph`'s edges.
pub fn load_observed(path: &Path, graph: &TradingGraph) -> Result<Vec<ObservedTrade>> {
    let t = Table::read(path)?;
    let cols = ["seller", "buyer", "asset", "day", "price"]
        .map(|c| t.require(c))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let dims = graph.dims();
    let mut out = Vec::with_capacity(t.records.len());
    for (line, rec) in &t.records {
        let line = *line;
        let edge = EdgeKey {
            seller: t.parse(line, rec, cols[0])?,
            buyer: t.parse(line, rec, cols[1])?,
            asset: t.parse(line, rec, cols[2])?,
            day: t.parse(line, rec, cols[3])?,
        };
        let price: f64 = t.parse(line, rec, cols[4])?;
        if !dims.contains(edge.seller_key())
            || graph
                .find_edge(edge.seller, edge.buyer, edge.asset, edge.day)
                .is_none()
        {
            return Err(t.schema(format!("line {line}: trade {edge:?} is not an edge of the graph")));
        }
        out.push(ObservedTrade {
            node: dims.node_index(edge.seller, edge.asset, edge.day),
            edge,
            price,
        });
    }
    Ok(out)
}
