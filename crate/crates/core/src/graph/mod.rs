//! Weighted undirected roadmaps over configurations.

mod halton;
mod search;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::worlds::{distance, Config, World};

pub use halton::{halton_point, halton_points, MAX_HALTON_DIM};
pub use search::{k_shortest_paths, shortest_path, Path, Query, C_MAX};

/// Connection radius constant for r-disc roadmaps.
pub const GAMMA: f64 = 1.5;

/// `GAMMA * (ln n / n)^(1/d)`.
pub fn rdisc_radius(n: usize, dim: usize) -> f64 {
    let n = n.max(2) as f64;
    GAMMA * (n.ln() / n).powf(1.0 / dim as f64)
}

/// Where an edge came from. `Terminal` edges attach a query's start or goal
/// and are never inflated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeTag {
    Sparse,
    Added,
    Terminal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub to: usize,
    pub weight: f64,
    pub tag: EdgeTag,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    vertices: Vec<Config>,
    edges: Vec<(usize, usize, f64, EdgeTag)>,
    radius: f64,
}

/// Adjacency lists are kept sorted by neighbour index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    vertices: Vec<Config>,
    adj: Vec<Vec<Edge>>,
    radius: f64,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;

    fn try_from(r: GraphRepr) -> Result<Self> {
        Graph::from_edges(r.vertices, &r.edges, r.radius)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr { edges: g.edges(), vertices: g.vertices, radius: g.radius }
    }
}

impl Graph {
    pub fn empty(radius: f64) -> Self {
        Graph { vertices: Vec::new(), adj: Vec::new(), radius }
    }

    /// Builds a graph from an explicit edge list; weights need not be distances.
    pub fn from_edges(vertices: Vec<Config>, edges: &[(usize, usize, f64, EdgeTag)], radius: f64) -> Result<Self> {
        if let Some(v) = vertices.iter().find(|v| v.dim() != vertices[0].dim()) {
            return Err(Error::DimensionMismatch { expected: vertices[0].dim(), got: v.dim() });
        }
        let mut g = Graph { adj: vec![Vec::new(); vertices.len()], vertices, radius };
        for &(u, v, w, tag) in edges {
            if u == v || u >= g.len() || v >= g.len() {
                return Err(Error::InvalidArgument(format!("bad edge ({u}, {v})")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!("bad weight {w} on ({u}, {v})")));
            }
            if g.edge(u, v).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate edge ({u}, {v})")));
            }
            g.insert_edge(u, v, w, tag);
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn vertices(&self) -> &[Config] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Config {
        &self.vertices[i]
    }

    pub fn neighbors(&self, u: usize) -> &[Edge] {
        &self.adj[u]
    }

    pub fn edge(&self, u: usize, v: usize) -> Option<&Edge> {
        let list = self.adj.get(u)?;
        list.binary_search_by_key(&v, |e| e.to).ok().map(|i| &list[i])
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Each undirected edge once, as `(u, v, w, tag)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize, f64, EdgeTag)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.adj.iter().enumerate() {
            for e in list.iter().filter(|e| e.to > u) {
                out.push((u, e.to, e.weight, e.tag));
            }
        }
        out
    }

    pub(crate) fn push_vertex(&mut self, q: Config) -> usize {
        self.vertices.push(q);
        self.adj.push(Vec::new());
        self.vertices.len() - 1
    }

    pub(crate) fn insert_edge(&mut self, u: usize, v: usize, weight: f64, tag: EdgeTag) {
        for (a, b) in [(u, v), (v, u)] {
            let list = &mut self.adj[a];
            let at = list.partition_point(|e| e.to < b);
            list.insert(at, Edge { to: b, weight, tag });
        }
    }

    pub(crate) fn delete_edge(&mut self, u: usize, v: usize) -> Result<()> {
        for (a, b) in [(u, v), (v, u)] {
            let list = self.adj.get_mut(a).ok_or(Error::MissingEdge(u, v))?;
            let at = list.binary_search_by_key(&b, |e| e.to).map_err(|_| Error::MissingEdge(u, v))?;
            list.remove(at);
        }
        Ok(())
    }

    /// Connects a new vertex to every vertex within the radius at positive distance.
    pub(crate) fn attach(&mut self, q: Config, tag: impl Fn(usize) -> EdgeTag) -> usize {
        let v = self.push_vertex(q);
        let mut found = Vec::new();
        for u in 0..v {
            let d = distance(self.vertices[u].coords(), self.vertices[v].coords());
            if d > 0.0 && d <= self.radius {
                found.push((u, d));
            }
        }
        for (u, d) in found {
            self.insert_edge(u, v, d, tag(u));
        }
        v
    }

    /// Subgraph induced by the first `n` vertices.
    pub fn prefix(&self, n: usize) -> Graph {
        let n = n.min(self.len());
        Graph {
            vertices: self.vertices[..n].to_vec(),
            adj: self.adj[..n].iter().map(|l| l.iter().filter(|e| e.to < n).copied().collect()).collect(),
            radius: self.radius,
        }
    }

    /// Connected-component label per vertex, labels assigned in index order.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.len()];
        let mut next = 0;
        for s in 0..self.len() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for e in &self.adj[u] {
                    if label[e.to] == usize::MAX {
                        label[e.to] = next;
                        stack.push(e.to);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self) -> usize {
        self.components().into_iter().max().map_or(0, |m| m + 1)
    }
}

/// r-disc graph: `(u, v)` is an edge iff `0 < |u - v| <= radius`, weighted by distance.
pub fn build_rdisc_graph(points: &[Config], radius: f64) -> Result<Graph> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let mut g = Graph::from_edges(points.to_vec(), &[], radius)?;
    for u in 0..points.len() {
        for v in u + 1..points.len() {
            let d = distance(points[u].coords(), points[v].coords());
            if d > 0.0 && d <= radius {
                g.adj[u].push(Edge { to: v, weight: d, tag: EdgeTag::Sparse });
                g.adj[v].push(Edge { to: u, weight: d, tag: EdgeTag::Sparse });
            }
        }
    }
    Ok(g)
}

/// `g` plus `new_pts`, each connected within `g`'s radius with `Added` edges.
pub fn compose_vertices(g: &Graph, new_pts: &[Config]) -> Result<Graph> {
    let mut out = g.clone();
    for q in new_pts {
        if let Some(v) = g.vertices.first() {
            if v.dim() != q.dim() {
                return Err(Error::DimensionMismatch { expected: v.dim(), got: q.dim() });
            }
        }
        out.attach(q.clone(), |_| EdgeTag::Added);
    }
    Ok(out)
}

/// `g` without the listed edges; vertices are kept.
pub fn remove_edges(g: &Graph, edge_list: &[(usize, usize)]) -> Result<Graph> {
    let mut out = g.clone();
    for &(u, v) in edge_list {
        out.delete_edge(u, v)?;
    }
    Ok(out)
}

/// `g` without the edges that collide in `world`.
pub fn free_subgraph(g: &Graph, world: &World, step: f64) -> Result<Graph> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    if let Some(v) = g.vertices().first() {
        world.check_dim(v.coords())?;
    }
    let free: Vec<bool> = g.vertices().iter().map(|q| world.config_free_raw(q.coords())).collect();
    let mut out = g.clone();
    for (u, v, _, _) in g.edges() {
        if !free[u] || !free[v] || !world.edge_free_raw(g.vertex(u).coords(), g.vertex(v).coords(), step) {
            out.delete_edge(u, v)?;
        }
    }
    Ok(out)
}

/// Per-edge weight multipliers applied during search; base weights are untouched.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InflationOverlay {
    factors: HashMap<(usize, usize), f64>,
}

impl InflationOverlay {
    pub fn set(&mut self, u: usize, v: usize, factor: f64) {
        self.factors.insert((u.min(v), u.max(v)), factor);
    }

    pub fn factor(&self, u: usize, v: usize) -> f64 {
        if self.factors.is_empty() {
            return 1.0;
        }
        self.factors.get(&(u.min(v), u.max(v))).copied().unwrap_or(1.0)
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

/// Overlay multiplying every `Added` edge of `g` by `eta`.
pub fn inflate_added_edges(g: &Graph, eta: f64) -> Result<InflationOverlay> {
    if !(eta >= 1.0) {
        return Err(Error::InvalidArgument(format!("eta must be at least 1, got {eta}")));
    }
    let mut o = InflationOverlay::default();
    for (u, v, _, tag) in g.edges() {
        if tag == EdgeTag::Added {
            o.set(u, v, eta);
        }
    }
    Ok(o)
}
