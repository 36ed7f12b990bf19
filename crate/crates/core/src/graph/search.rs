//! Lazy shortest paths and Yen's k-shortest paths over a roadmap anchored
//! to one planning problem.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use super::{EdgeTag, Graph, InflationOverlay};
use crate::error::{Error, Result};
use crate::worlds::{Config, PlanningProblem, World, DEFAULT_EDGE_STEP};

/// Cost reported for an infeasible query.
pub const C_MAX: f64 = 1e9;

/// Vertex sequence through a graph. An infeasible path has no vertices and cost `C_MAX`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub vertices: Vec<usize>,
    pub cost: f64,
}

impl Path {
    pub fn infeasible() -> Self {
        Path { vertices: Vec::new(), cost: C_MAX }
    }

    pub fn is_feasible(&self) -> bool {
        !self.vertices.is_empty()
    }

    /// Edges in path order, each as `(min, max)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.vertices.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1])))
    }
}

fn tolerance(scale: f64) -> f64 {
    1e-9 * scale.abs().max(1.0)
}

/// Orders by cost, treating costs within tolerance as equal and breaking the
/// tie on the vertex sequence.
pub(crate) fn rank(a: (f64, &[usize]), b: (f64, &[usize])) -> Ordering {
    if (a.0 - b.0).abs() <= tolerance(a.0.max(b.0)) {
        a.1.cmp(b.1)
    } else {
        a.0.total_cmp(&b.0)
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Search state for one (roadmap, problem) pair.
///
/// The roadmap is copied and the start and goal are attached to it: a
/// terminal that coincides with a vertex reuses it, otherwise a new vertex is
/// appended and joined within the connection radius by `Terminal` edges.
/// Edges found in collision are deleted from the private copy, and edges found
/// free are remembered, so repeated searches never check an edge twice.
#[derive(Clone, Debug)]
pub struct Query<'w> {
    graph: Graph,
    start: usize,
    goal: usize,
    world: &'w World,
    step: f64,
    known_free: HashSet<(usize, usize)>,
    /// Edges among the first `trusted` vertices are known to be free.
    trusted: usize,
    checks: usize,
    /// Unrestricted distances to the goal for the current graph, if known.
    to_goal: Option<Vec<f64>>,
}

impl<'w> Query<'w> {
    pub fn new(g: &Graph, problem: &PlanningProblem<'w>) -> Result<Self> {
        Query::with_step(g, problem, DEFAULT_EDGE_STEP)
    }

    pub fn with_step(g: &Graph, problem: &PlanningProblem<'w>, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
        }
        if let Some(v) = g.vertices().first() {
            if v.dim() != problem.world.dim() {
                return Err(Error::DimensionMismatch { expected: problem.world.dim(), got: v.dim() });
            }
        }
        let mut graph = g.clone();
        let mut anchor = |q: &Config| match graph.vertices().iter().position(|v| v == q) {
            Some(i) => i,
            None => graph.attach(q.clone(), |_| EdgeTag::Terminal),
        };
        let start = anchor(&problem.start);
        let goal = anchor(&problem.goal);
        Ok(Query {
            graph,
            start,
            goal,
            world: problem.world,
            step,
            known_free: HashSet::new(),
            trusted: 0,
            checks: 0,
            to_goal: None,
        })
    }

    /// Like [`Query::new`] for a roadmap whose edges were all validated
    /// against the problem's world already (see
    /// [`free_subgraph`](crate::graph::free_subgraph)); only edges to an
    /// appended start or goal are checked.
    pub fn trusted(g: &Graph, problem: &PlanningProblem<'w>) -> Result<Self> {
        let mut q = Query::new(g, problem)?;
        q.trusted = g.len();
        Ok(q)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn world(&self) -> &'w World {
        self.world
    }

    /// Number of edge collision checks performed so far.
    pub fn edge_checks(&self) -> usize {
        self.checks
    }

    pub fn configs(&self, path: &Path) -> Vec<Config> {
        path.vertices.iter().map(|&v| self.graph.vertex(v).clone()).collect()
    }

    /// Sum of base weights along `vertices`, in path order.
    pub fn cost_of(&self, vertices: &[usize], overlay: Option<&InflationOverlay>) -> f64 {
        vertices
            .windows(2)
            .map(|w| {
                let e = self.graph.edge(w[0], w[1]).expect("path edge missing from graph");
                e.weight * overlay.map_or(1.0, |o| o.factor(w[0], w[1]))
            })
            .sum()
    }

    fn make_path(&self, vertices: Vec<usize>) -> Path {
        Path { cost: self.cost_of(&vertices, None), vertices }
    }

    /// Deletes edges from this query's roadmap.
    pub fn remove_edges(&mut self, edges: &[(usize, usize)]) -> Result<()> {
        for &(u, v) in edges {
            self.graph.delete_edge(u, v)?;
        }
        self.to_goal = None;
        Ok(())
    }

    fn edge_ok(&mut self, u: usize, v: usize) -> bool {
        let key = (u.min(v), u.max(v));
        if key.1 < self.trusted || self.known_free.contains(&key) {
            return true;
        }
        self.checks += 1;
        let free = self.world.edge_free_raw(self.graph.vertex(u).coords(), self.graph.vertex(v).coords(), self.step);
        if free {
            self.known_free.insert(key);
        }
        free
    }

    /// Lazy shortest path: search, validate the path's edges in order, delete
    /// the first colliding edge, and repeat until a free path or none is left.
    /// Path costs are base weights; `overlay` only steers the search.
    pub fn shortest_path(&mut self, overlay: Option<&InflationOverlay>) -> Path {
        match self.lazy(self.start, overlay, &[], &HashSet::new()) {
            Some(v) => self.make_path(v),
            None => Path::infeasible(),
        }
    }

    fn lazy(
        &mut self,
        from: usize,
        overlay: Option<&InflationOverlay>,
        blocked: &[bool],
        banned: &HashSet<(usize, usize)>,
    ) -> Option<Vec<usize>> {
        loop {
            let path = self.search(from, overlay, blocked, banned)?;
            if self.validate(&path) {
                return Some(path);
            }
        }
    }

    /// Checks the path's edges in order and deletes the first colliding one.
    fn validate(&mut self, path: &[usize]) -> bool {
        let bad = path.windows(2).map(|w| (w[0], w[1])).find(|&(u, v)| !self.edge_ok(u, v));
        match bad {
            None => true,
            Some((u, v)) => {
                self.graph.delete_edge(u, v).expect("edge on path exists");
                self.to_goal = None;
                false
            }
        }
    }

    /// [`Query::lazy`] for a Yen spur, where `banned` edges all leave `from`
    /// and `blocked` vertices precede it. Tries [`Query::spur_walk`] before
    /// falling back to a full restricted search.
    fn lazy_spur(&mut self, from: usize, blocked: &[bool], banned: &HashSet<(usize, usize)>) -> Option<Vec<usize>> {
        loop {
            let path = match self.spur_walk(from, blocked, banned) {
                Some(p) => p,
                None => self.search(from, None, blocked, banned)?,
            };
            if self.validate(&path) {
                return Some(path);
            }
        }
    }

    /// The restricted search's answer computed from unrestricted distances
    /// to the goal, or `None` when that shortcut cannot decide. The best
    /// allowed first step plus a tight walk that never meets a blocked
    /// vertex is a restricted path of cost equal to the lower bound
    /// `min(w(from, u) + d(u))`, and every restricted-tight vertex is also
    /// unrestricted-tight, so the smallest-index choices agree.
    fn spur_walk(&mut self, from: usize, blocked: &[bool], banned: &HashSet<(usize, usize)>) -> Option<Vec<usize>> {
        let to = self.goal;
        if from == to {
            return None;
        }
        if self.to_goal.is_none() {
            self.to_goal = Some(self.distances_to_goal());
        }
        let dist = self.to_goal.as_ref().expect("just computed");
        let g = &self.graph;
        let is_blocked = |u: usize| blocked.get(u).copied().unwrap_or(false);
        let allowed = |e: &&super::Edge| !is_blocked(e.to) && !banned.contains(&(from.min(e.to), from.max(e.to)));
        let best = g.neighbors(from).iter().filter(allowed).map(|e| e.weight + dist[e.to]).fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return None;
        }
        let tol = tolerance(best);
        let first = g.neighbors(from).iter().filter(allowed).find(|e| dist[e.to] + e.weight <= best + tol)?;
        let mut path = vec![from, first.to];
        let mut cur = first.to;
        while cur != to {
            let step = g.neighbors(cur).iter().find(|e| {
                let u = e.to;
                u != from && !path.contains(&u) && !is_blocked(u) && dist[u].is_finite() && dist[u] + e.weight <= dist[cur] + tol
            });
            cur = step?.to;
            path.push(cur);
        }
        Some(path)
    }

    fn distances_to_goal(&self) -> Vec<f64> {
        let g = &self.graph;
        let mut dist = vec![f64::INFINITY; g.len()];
        let mut heap = BinaryHeap::new();
        dist[self.goal] = 0.0;
        heap.push(Item(0.0, self.goal));
        while let Some(Item(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for e in g.neighbors(v) {
                let nd = d + e.weight;
                if nd < dist[e.to] {
                    dist[e.to] = nd;
                    heap.push(Item(nd, e.to));
                }
            }
        }
        dist
    }

    /// Optimal path from `from` to the goal, ignoring collisions. Among paths
    /// of equal cost the lexicographically smallest vertex sequence wins.
    fn search(
        &self,
        from: usize,
        overlay: Option<&InflationOverlay>,
        blocked: &[bool],
        banned: &HashSet<(usize, usize)>,
    ) -> Option<Vec<usize>> {
        let to = self.goal;
        if from == to {
            return Some(vec![to]);
        }
        let g = &self.graph;
        let is_blocked = |u: usize| blocked.get(u).copied().unwrap_or(false);
        let is_banned = |u: usize, v: usize| !banned.is_empty() && banned.contains(&(u.min(v), u.max(v)));
        let weight = |u: usize, w: f64, v: usize| w * overlay.map_or(1.0, |o| o.factor(u, v));

        // backward Dijkstra from the goal
        let mut dist = vec![f64::INFINITY; g.len()];
        let mut next = vec![usize::MAX; g.len()];
        let mut heap = BinaryHeap::new();
        dist[to] = 0.0;
        heap.push(Item(0.0, to));
        while let Some(Item(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            if dist[from].is_finite() && d > dist[from] + tolerance(dist[from]) {
                break;
            }
            for e in g.neighbors(v) {
                let u = e.to;
                if is_blocked(u) || is_banned(v, u) {
                    continue;
                }
                let nd = d + weight(v, e.weight, u);
                if nd < dist[u] {
                    dist[u] = nd;
                    next[u] = v;
                    heap.push(Item(nd, u));
                }
            }
        }
        if !dist[from].is_finite() {
            return None;
        }

        // forward walk taking the smallest-index tight neighbour
        let tol = tolerance(dist[from]);
        let mut path = vec![from];
        let mut on_path = vec![false; g.len()];
        on_path[from] = true;
        let mut cur = from;
        while cur != to {
            let step = g.neighbors(cur).iter().find(|e| {
                let u = e.to;
                !on_path[u]
                    && !is_blocked(u)
                    && !is_banned(cur, u)
                    && dist[u].is_finite()
                    && dist[u] + weight(cur, e.weight, u) <= dist[cur] + tol
            });
            match step {
                Some(e) => {
                    cur = e.to;
                    on_path[cur] = true;
                    path.push(cur);
                }
                None => {
                    let mut fallback = vec![from];
                    let mut v = from;
                    while v != to {
                        v = next[v];
                        fallback.push(v);
                    }
                    return Some(fallback);
                }
            }
        }
        Some(path)
    }

    /// Up to `l` loopless collision-free paths in nondecreasing cost (Yen),
    /// stopping early once costs exceed `cap`.
    pub fn k_shortest_paths(&mut self, l: usize, cap: Option<f64>) -> Vec<Path> {
        let within = |c: f64| cap.is_none_or(|m| c <= m + tolerance(m));
        let mut accepted: Vec<Vec<usize>> = Vec::new();
        let Some(first) = self.lazy(self.start, None, &[], &HashSet::new()) else {
            return Vec::new();
        };
        if l == 0 || !within(self.cost_of(&first, None)) {
            return Vec::new();
        }
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        seen.insert(first.clone());
        accepted.push(first);
        let mut candidates: Vec<(f64, Vec<usize>)> = Vec::new();
        while accepted.len() < l {
            let prev = accepted.last().expect("nonempty").clone();
            for i in 0..prev.len().saturating_sub(1) {
                let root = &prev[..=i];
                let mut banned = HashSet::new();
                for p in &accepted {
                    if p.len() > i + 1 && &p[..=i] == root {
                        banned.insert((p[i].min(p[i + 1]), p[i].max(p[i + 1])));
                    }
                }
                let mut blocked = vec![false; self.graph.len()];
                for &r in &root[..i] {
                    blocked[r] = true;
                }
                if let Some(spur) = self.lazy_spur(prev[i], &blocked, &banned) {
                    let mut cand = root[..i].to_vec();
                    cand.extend(spur);
                    if seen.insert(cand.clone()) {
                        candidates.push((self.cost_of(&cand, None), cand));
                    }
                }
            }
            let Some(best) = (0..candidates.len())
                .min_by(|&a, &b| rank((candidates[a].0, &candidates[a].1), (candidates[b].0, &candidates[b].1)))
            else {
                break;
            };
            let (cost, path) = candidates.swap_remove(best);
            if !within(cost) {
                break;
            }
            accepted.push(path);
        }
        accepted.into_iter().map(|v| self.make_path(v)).collect()
    }
}

/// Lazy shortest path on `g` with the problem's start and goal attached.
/// Vertex indices refer to `g` followed by any appended start/goal vertices.
pub fn shortest_path(g: &Graph, problem: &PlanningProblem, inflation_overlay: Option<&InflationOverlay>) -> Result<Path> {
    Ok(Query::new(g, problem)?.shortest_path(inflation_overlay))
}

/// Up to `l` loopless collision-free paths in nondecreasing cost.
pub fn k_shortest_paths(g: &Graph, problem: &PlanningProblem, l: usize) -> Result<Vec<Path>> {
    if l == 0 {
        return Err(Error::InvalidArgument("L must be at least 1".into()));
    }
    Ok(Query::new(g, problem)?.k_shortest_paths(l, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{inflate_added_edges, remove_edges};
    use crate::worlds::{Kinematics, Rect};

    fn c(x: f64, y: f64) -> Config {
        Config::new(vec![x, y]).unwrap()
    }

    fn problem(w: &World, s: Config, g: Config) -> PlanningProblem<'_> {
        PlanningProblem::new(s, g, w).unwrap()
    }

    #[test]
    fn start_equals_goal() {
        let w = World::empty();
        let g = Graph::from_edges(vec![c(0.1, 0.1), c(0.2, 0.2)], &[(0, 1, 1.0, EdgeTag::Sparse)], 0.5).unwrap();
        let p = shortest_path(&g, &problem(&w, c(0.1, 0.1), c(0.1, 0.1)), None).unwrap();
        assert_eq!(p, Path { vertices: vec![0], cost: 0.0 });
    }

    #[test]
    fn triangle() {
        let w = World::empty();
        let g = Graph::from_edges(
            vec![c(0.1, 0.1), c(0.5, 0.5), c(0.9, 0.1)],
            &[(0, 1, 1.0, EdgeTag::Sparse), (1, 2, 1.0, EdgeTag::Sparse), (0, 2, 3.0, EdgeTag::Sparse)],
            0.01,
        )
        .unwrap();
        let p = shortest_path(&g, &problem(&w, c(0.1, 0.1), c(0.9, 0.1)), None).unwrap();
        assert_eq!(p.vertices, vec![0, 1, 2]);
        assert_eq!(p.cost, 2.0);
    }

    fn diamond() -> Graph {
        // 0 -> 1 -> 3 costs 2, 0 -> 2 -> 3 costs 3
        Graph::from_edges(
            vec![c(0.1, 0.5), c(0.5, 0.8), c(0.5, 0.2), c(0.9, 0.5)],
            &[
                (0, 1, 1.0, EdgeTag::Sparse),
                (1, 3, 1.0, EdgeTag::Sparse),
                (0, 2, 1.5, EdgeTag::Sparse),
                (2, 3, 1.5, EdgeTag::Sparse),
            ],
            0.01,
        )
        .unwrap()
    }

    #[test]
    fn removal_examples() {
        let w = World::empty();
        let two = Graph::from_edges(vec![c(0.1, 0.1), c(0.2, 0.2)], &[(0, 1, 1.0, EdgeTag::Sparse)], 0.01).unwrap();
        let cut = remove_edges(&two, &[(0, 1)]).unwrap();
        let p = shortest_path(&cut, &problem(&w, c(0.1, 0.1), c(0.2, 0.2)), None).unwrap();
        assert_eq!(p, Path::infeasible());
        assert_eq!(p.cost, C_MAX);

        let d = diamond();
        let prob = problem(&w, c(0.1, 0.5), c(0.9, 0.5));
        assert_eq!(shortest_path(&d, &prob, None).unwrap().cost, 2.0);
        let d2 = remove_edges(&d, &[(1, 3)]).unwrap();
        assert_eq!(shortest_path(&d2, &prob, None).unwrap().cost, 3.0);
    }

    #[test]
    fn k_shortest_examples() {
        let w = World::empty();
        let prob = problem(&w, c(0.1, 0.5), c(0.9, 0.5));
        let ks = k_shortest_paths(&diamond(), &prob, 2).unwrap();
        assert_eq!(ks.iter().map(|p| p.cost).collect::<Vec<_>>(), vec![2.0, 3.0]);
        let chain = remove_edges(&diamond(), &[(0, 2)]).unwrap();
        assert_eq!(k_shortest_paths(&chain, &prob, 3).unwrap().len(), 1);
        assert!(k_shortest_paths(&chain, &prob, 0).is_err());
    }

    #[test]
    fn lazy_search_routes_around_wall() {
        let w = World::new(Kinematics::PointRobot2D, vec![Rect::new([0.45, 0.0], [0.55, 0.75])], 0).unwrap();
        let pts: Vec<Config> = (0..5)
            .flat_map(|j| (0..5).map(move |i| c(0.1 + 0.2 * i as f64, 0.1 + 0.2 * j as f64)))
            .collect();
        let g = super::super::build_rdisc_graph(&pts, 0.21).unwrap();
        let mut q = Query::new(&g, &problem(&w, c(0.1, 0.1), c(0.9, 0.1))).unwrap();
        let p = q.shortest_path(None);
        // up to the free top row and back down: 4 across + 2 * 4 vertical
        assert!((p.cost - 2.4).abs() < 1e-12, "{p:?}");
        assert!(q.edge_checks() > 0);
        for pair in p.vertices.windows(2) {
            let (a, b) = (q.graph().vertex(pair[0]), q.graph().vertex(pair[1]));
            assert!(w.edge_free_raw(a.coords(), b.coords(), 0.005));
        }
    }

    #[test]
    fn overlay_examples() {
        let w = World::empty();
        // sparse 1.0 then added 0.5
        let g = Graph::from_edges(
            vec![c(0.1, 0.5), c(0.2, 0.5), c(0.3, 0.5)],
            &[(0, 1, 1.0, EdgeTag::Sparse), (1, 2, 0.5, EdgeTag::Added)],
            0.01,
        )
        .unwrap();
        let mut q = Query::new(&g, &problem(&w, c(0.1, 0.5), c(0.3, 0.5))).unwrap();
        let o = inflate_added_edges(&g, 4.0).unwrap();
        let p = q.shortest_path(Some(&o));
        assert_eq!(q.cost_of(&p.vertices, Some(&o)), 3.0);
        assert_eq!(p.cost, 1.5);

        let single = Graph::from_edges(vec![c(0.1, 0.5), c(0.3, 0.5)], &[(0, 1, 1.0, EdgeTag::Added)], 0.01).unwrap();
        let mut q = Query::new(&single, &problem(&w, c(0.1, 0.5), c(0.3, 0.5))).unwrap();
        let o = inflate_added_edges(&single, 5.0).unwrap();
        let p = q.shortest_path(Some(&o));
        assert_eq!((q.cost_of(&p.vertices, Some(&o)), p.cost), (5.0, 1.0));
        let one = inflate_added_edges(&single, 1.0).unwrap();
        assert_eq!(q.shortest_path(Some(&one)), q.shortest_path(None));
    }

    #[test]
    fn terminals_attach_with_terminal_tag() {
        let w = World::empty();
        let g = super::super::build_rdisc_graph(&[c(0.3, 0.5), c(0.5, 0.5)], 0.25).unwrap();
        let q = Query::new(&g, &problem(&w, c(0.1, 0.5), c(0.5, 0.5))).unwrap();
        assert_eq!((q.start(), q.goal()), (2, 1));
        assert_eq!(q.graph().edge(2, 0).unwrap().tag, EdgeTag::Terminal);
        assert!(q.graph().edge(2, 1).is_none());
    }
}
