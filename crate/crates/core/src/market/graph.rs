use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Market dimensions: dealers, assets and trading days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub dealers: usize,
    pub assets: usize,
    pub days: usize,
}

impl Dims {
    pub fn new(dealers: usize, assets: usize, days: usize) -> Self {
        Self {
            dealers,
            assets,
            days,
        }
    }

    /// Number of (asset, day) layers.
    pub fn layers(&self) -> usize {
        self.assets * self.days
    }

    pub fn nodes(&self) -> usize {
        self.dealers * self.layers()
    }

    pub fn layer_index(&self, asset: usize, day: usize) -> usize {
        day * self.assets + asset
    }

    /// Inverse of [`Dims::layer_index`]: `(asset, day)`.
    pub fn layer_key(&self, layer: usize) -> (usize, usize) {
        (layer % self.assets, layer / self.assets)
    }

    pub fn node_index(&self, dealer: usize, asset: usize, day: usize) -> usize {
        self.layer_index(asset, day) * self.dealers + dealer
    }

    pub fn node_key(&self, node: usize) -> NodeKey {
        let dealer = node % self.dealers;
        let (asset, day) = self.layer_key(node / self.dealers);
        NodeKey { dealer, asset, day }
    }

    /// Row of the dealer-feature table for a (dealer, day) pair.
    pub fn dealer_day_index(&self, dealer: usize, day: usize) -> usize {
        day * self.dealers + dealer
    }

    pub fn contains(&self, key: NodeKey) -> bool {
        key.dealer < self.dealers && key.asset < self.assets && key.day < self.days
    }
}

/// A dealer holding one asset on one day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeKey {
    pub dealer: usize,
    pub asset: usize,
    pub day: usize,
}

/// A potential sale of `asset` on `day` from `seller` to `buyer`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey {
    pub seller: usize,
    pub buyer: usize,
    pub asset: usize,
    pub day: usize,
}

impl EdgeKey {
    pub fn seller_key(&self) -> NodeKey {
        NodeKey {
            dealer: self.seller,
            asset: self.asset,
            day: self.day,
        }
    }

    pub fn buyer_key(&self) -> NodeKey {
        NodeKey {
            dealer: self.buyer,
            asset: self.asset,
            day: self.day,
        }
    }
}

/// Row-major table of equally sized real vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
        }
    }

    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 && !data.is_empty() || dim > 0 && !data.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                what: "feature matrix data".into(),
                expected: dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize, rows: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * rows],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn permute_rows(&mut self, order: &[usize]) {
        let mut out = Vec::with_capacity(self.data.len());
        for &i in order {
            out.extend_from_slice(self.row(i));
        }
        self.data = out;
    }
}

/// Observable covariates attached to a graph.
///
/// `x` has one row per (asset, day) layer, `y` (and `z` when present) one row
/// per (dealer, day), `e` one row per edge in graph order, and `u` one
/// customer value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub x: FeatureMatrix,
    pub y: FeatureMatrix,
    pub e: FeatureMatrix,
    pub u: Vec<f64>,
    pub z: Option<FeatureMatrix>,
}

impl FeatureTable {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.x.dim(), self.y.dim(), self.e.dim())
    }
}

/// Layered directed trading network with its features.
///
/// Nodes are implicit: every (dealer, asset, day) triple exists, indexed by
/// [`Dims::node_index`]. Edges are stored sorted by (layer, seller, buyer), so
/// each seller's outgoing edges form a contiguous range ordered by buyer id.
#[derive(Debug, Clone, PartialEq)]
pub struct TradingGraph {
    dims: Dims,
    edges: Vec<EdgeKey>,
    seller_node: Vec<usize>,
    buyer_node: Vec<usize>,
    offsets: Vec<usize>,
    features: FeatureTable,
}

impl TradingGraph {
    /// Builds a graph, sorting edges into canonical order. Row `i` of
    /// `features.e` must belong to `edges[i]`; rows are permuted along with
    /// the edges.
    pub fn new(dims: Dims, mut edges: Vec<EdgeKey>, mut features: FeatureTable) -> Result<Self> {
        if dims.dealers == 0 || dims.assets == 0 || dims.days == 0 {
            return Err(Error::Config(format!("dimensions must be positive, got {dims:?}")));
        }
        check_rows("X (asset-day rows)", dims.layers(), features.x.rows(), features.x.dim())?;
        check_rows("Y (dealer-day rows)", dims.dealers * dims.days, features.y.rows(), features.y.dim())?;
        check_rows("E (edge rows)", edges.len(), features.e.rows(), features.e.dim())?;
        if let Some(z) = &features.z {
            check_rows("Z (dealer-day rows)", dims.dealers * dims.days, z.rows(), z.dim())?;
        }
        if features.u.len() != dims.nodes() {
            return Err(Error::Dimension {
                what: "customer values u".into(),
                expected: dims.nodes(),
                got: features.u.len(),
            });
        }
        if let Some(i) = features.u.iter().position(|&u| !(u > 0.0 && u.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "customer value of {:?} must be positive and finite, got {}",
                dims.node_key(i),
                features.u[i]
            )));
        }
        for e in &edges {
            if e.seller == e.buyer {
                return Err(Error::InvalidInput(format!("self-loop: {e:?}")));
            }
            if !dims.contains(e.seller_key()) || !dims.contains(e.buyer_key()) {
                return Err(Error::InvalidInput(format!("edge out of range: {e:?}")));
            }
        }

        let sort_key = |e: &EdgeKey| (dims.layer_index(e.asset, e.day), e.seller, e.buyer);
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by_key(|&i| sort_key(&edges[i]));
        if order.iter().enumerate().any(|(pos, &i)| pos != i) {
            edges = order.iter().map(|&i| edges[i]).collect();
            if features.e.dim() > 0 {
                features.e.permute_rows(&order);
            }
        }
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!("duplicate edge: {:?}", w[0])));
        }

        let seller_node: Vec<usize> = edges
            .iter()
            .map(|e| dims.node_index(e.seller, e.asset, e.day))
            .collect();
        let buyer_node = edges
            .iter()
            .map(|e| dims.node_index(e.buyer, e.asset, e.day))
            .collect();
        let mut offsets = vec![0usize; dims.nodes() + 1];
        for &s in &seller_node {
            offsets[s + 1] += 1;
        }
        for i in 0..dims.nodes() {
            offsets[i + 1] += offsets[i];
        }

        Ok(Self {
            dims,
            edges,
            seller_node,
            buyer_node,
            offsets,
            features,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_nodes(&self) -> usize {
        self.dims.nodes()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeKey] {
        &self.edges
    }

    pub fn features(&self) -> &FeatureTable {
        &self.features
    }

    pub fn customer_values(&self) -> &[f64] {
        &self.features.u
    }

    /// Replaces customer values, e.g. with pre-estimated ones.
    pub fn with_customer_values(&self, u: Vec<f64>) -> Result<Self> {
        let mut features = self.features.clone();
        features.u = u;
        TradingGraph::new(self.dims, self.edges.clone(), features)
    }

    pub fn node_key(&self, node: usize) -> NodeKey {
        self.dims.node_key(node)
    }

    /// Seller node of edge `e`.
    pub fn edge_seller(&self, e: usize) -> usize {
        self.seller_node[e]
    }

    /// Buyer node of edge `e`.
    pub fn edge_buyer(&self, e: usize) -> usize {
        self.buyer_node[e]
    }

    /// Outgoing edges of `node`, ordered by buyer id.
    pub fn out_edges(&self, node: usize) -> Range<usize> {
        self.offsets[node]..self.offsets[node + 1]
    }

    /// The set N(i): buyers `node` can sell to, ordered by dealer id.
    pub fn buyers(&self, node: usize) -> impl Iterator<Item = NodeKey> + '_ {
        self.out_edges(node).map(move |e| self.edges[e].buyer_key())
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn layer_nodes(&self, layer: usize) -> Range<usize> {
        layer * self.dims.dealers..(layer + 1) * self.dims.dealers
    }

    pub fn layer_edges(&self, layer: usize) -> Range<usize> {
        let nodes = self.layer_nodes(layer);
        self.offsets[nodes.start]..self.offsets[nodes.end]
    }

    pub fn find_edge(&self, seller: usize, buyer: usize, asset: usize, day: usize) -> Option<usize> {
        let node = self.dims.node_index(seller, asset, day);
        let range = self.out_edges(node);
        self.edges[range.clone()]
            .binary_search_by_key(&buyer, |e| e.buyer)
            .ok()
            .map(|i| range.start + i)
    }

    /// Asset features X_kt of the node's layer.
    pub fn x(&self, node: usize) -> &[f64] {
        self.features.x.row(node / self.dims.dealers)
    }

    /// Dealer features Y_it of the node's dealer on the node's day.
    pub fn y(&self, node: usize) -> &[f64] {
        let k = self.dims.node_key(node);
        self.features.y.row(self.dims.dealer_day_index(k.dealer, k.day))
    }

    pub fn z(&self, node: usize) -> Option<&[f64]> {
        let k = self.dims.node_key(node);
        self.features
            .z
            .as_ref()
            .map(|z| z.row(self.dims.dealer_day_index(k.dealer, k.day)))
    }

    /// Relationship features E_ijt of edge `e`.
    pub fn e(&self, e: usize) -> &[f64] {
        self.features.e.row(e)
    }
}

fn check_rows(what: &str, expected: usize, got: usize, dim: usize) -> Result<()> {
    if dim > 0 && got != expected {
        return Err(Error::Dimension {
            what: what.into(),
            expected,
            got,
        });
    }
    Ok(())
}
