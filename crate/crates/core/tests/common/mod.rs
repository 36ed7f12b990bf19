//! Independent brute-force references shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;

use lego::graph::{build_rdisc_graph, remove_edges, EdgeTag, Graph, Path, Query};
use lego::learner::{loss_and_gradient, CvaeModel};
use lego::worlds::{Config, Kinematics, PlanningProblem, Rect, World};
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn cfg(x: f64, y: f64) -> Config {
    Config::new(vec![x, y]).unwrap()
}

/// Orders by cost (ties within 1e-9 relative) and then by vertex sequence.
pub fn by_cost_then_sequence(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> Ordering {
    if (a.0 - b.0).abs() <= 1e-9 * a.0.abs().max(b.0.abs()).max(1.0) {
        a.1.cmp(&b.1)
    } else {
        a.0.partial_cmp(&b.0).unwrap()
    }
}

/// Every simple path from `s` to `t`, by depth-first enumeration.
pub fn simple_paths(g: &Graph, s: usize, t: usize) -> Vec<Vec<usize>> {
    fn dfs(g: &Graph, t: usize, stack: &mut Vec<usize>, on: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        let u = *stack.last().unwrap();
        if u == t {
            out.push(stack.clone());
            return;
        }
        for e in g.neighbors(u) {
            if !on[e.to] {
                on[e.to] = true;
                stack.push(e.to);
                dfs(g, t, stack, on, out);
                stack.pop();
                on[e.to] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut on = vec![false; g.len()];
    on[s] = true;
    dfs(g, t, &mut vec![s], &mut on, &mut out);
    out
}

pub fn path_weight(g: &Graph, p: &[usize]) -> f64 {
    p.windows(2).map(|w| g.edge(w[0], w[1]).unwrap().weight).sum()
}

/// Collision-free simple paths sorted by cost then sequence; every edge is checked.
pub fn feasible_paths_sorted(g: &Graph, world: &World, s: usize, t: usize, step: f64) -> Vec<(f64, Vec<usize>)> {
    let mut v: Vec<(f64, Vec<usize>)> = simple_paths(g, s, t)
        .into_iter()
        .filter(|p| {
            p.windows(2).all(|w| world.edge_free_raw(g.vertex(w[0]).coords(), g.vertex(w[1]).coords(), step))
        })
        .map(|p| (path_weight(g, &p), p))
        .collect();
    v.sort_by(by_cost_then_sequence);
    v
}

/// Box world used by the random search instances.
pub fn box_world() -> World {
    World::new(Kinematics::PointRobot2D, vec![Rect::new([0.4, 0.35], [0.6, 0.65])], 0).unwrap()
}

/// Random graph on `n` vertices; vertex 0 and `n - 1` are collision-free in
/// `box_world`. Integer weights make equal-cost ties common.
pub fn random_graph(seed: u64, n: usize, p_edge: f64, integer_weights: bool) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let world = box_world();
    let mut verts = Vec::with_capacity(n);
    for i in 0..n {
        loop {
            let q = cfg(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            if (i != 0 && i != n - 1) || world.config_free_raw(q.coords()) {
                verts.push(q);
                break;
            }
        }
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p_edge) {
                let w = if integer_weights {
                    rng.random_range(1..=4) as f64
                } else {
                    rng.random_range(0.05..1.0)
                };
                edges.push((u, v, w, EdgeTag::Sparse));
            }
        }
    }
    Graph::from_edges(verts, &edges, 0.3).unwrap()
}

/// Smallest number of candidate sets whose union covers `0..n_items`.
/// Returns `None` when no cover exists.
pub fn min_cover_size(n_items: usize, sets: &[Vec<usize>]) -> Option<usize> {
    let full: u64 = if n_items == 64 { u64::MAX } else { (1u64 << n_items) - 1 };
    let masks: Vec<u64> = sets.iter().map(|s| s.iter().fold(0u64, |m, &i| m | 1 << i)).collect();
    let mut best: Option<usize> = None;
    for choice in 0u64..(1u64 << sets.len()) {
        let size = choice.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let covered = (0..sets.len()).filter(|k| choice >> k & 1 == 1).fold(0u64, |m, k| m | masks[k]);
        if covered & full == full {
            best = Some(size);
        }
    }
    best
}

pub fn random_free(rng: &mut ChaCha8Rng, world: &World, n: usize) -> Vec<Config> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let q = cfg(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        if world.config_free_raw(q.coords()) {
            out.push(q);
        }
    }
    out
}

pub struct Instance {
    pub world: World,
    pub dense: Graph,
    pub sparse: Graph,
    pub start: Config,
    pub goal: Config,
}

/// Dense and sparse roadmaps over the same box world; the sparse radius is
/// the larger one so every dense-path edge is a candidate edge of sparse ∘ path.
pub fn instance(seed: u64, n_dense: usize, n_sparse: usize) -> Instance {
    let world = box_world();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dense = build_rdisc_graph(&random_free(&mut rng, &world, n_dense), 0.22).unwrap();
    let sparse = build_rdisc_graph(&random_free(&mut rng, &world, n_sparse), 0.3).unwrap();
    let ends = random_free(&mut rng, &world, 2);
    Instance { world, dense, sparse, start: ends[0].clone(), goal: ends[1].clone() }
}

/// True cost of the shortest path of Ĝ restricted to sparse vertices, the
/// terminals and the added vertices in `keep`, plus that path's Added weight.
pub fn restricted(g_hat: &Graph, added: &[usize], keep: u32, prob: &PlanningProblem) -> (f64, f64) {
    let drop: Vec<usize> = added.iter().enumerate().filter(|(b, _)| keep >> b & 1 == 0).map(|(_, &v)| v).collect();
    let cut: Vec<(usize, usize)> =
        g_hat.edges().into_iter().filter(|e| drop.contains(&e.0) || drop.contains(&e.1)).map(|e| (e.0, e.1)).collect();
    let g = remove_edges(g_hat, &cut).unwrap();
    let mut q = Query::new(&g, prob).unwrap();
    let p = q.shortest_path(None);
    if !p.is_feasible() {
        return (p.cost, 0.0);
    }
    (p.cost, added_weight(&g, &p))
}

pub fn added_weight(g: &Graph, p: &Path) -> f64 {
    p.vertices
        .windows(2)
        .map(|w| g.edge(w[0], w[1]).unwrap())
        .filter(|e| e.tag == EdgeTag::Added)
        .map(|e| e.weight)
        .sum()
}

/// Candidate edge k is (2k, 2k+1); a path through the subset {k1 < k2 < ..}
/// visits 2k1, 2k1+1, 2k2, 2k2+1, .., so linking edges are never candidates.
pub fn synthetic_path(members: &[usize]) -> Path {
    Path { vertices: members.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect(), cost: 0.0 }
}

/// Largest relative disagreement between the analytic gradient and central
/// differences of the batch loss, all noise frozen.
pub fn worst_gradient_error(seed: u64, d: usize, m: usize, q: usize, h: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = rng.random_range(0.0..2.0);
    let mut model = CvaeModel::new(d, m, q, h, lambda, seed).unwrap();
    // random biases too, so no pre-activation sits exactly on the ReLU kink
    let p: Vec<f64> = model.parameters().iter().map(|_| rng.sample::<f64, _>(StandardNormal) * 0.7).collect();
    model.set_parameters(&p).unwrap();
    let b = rng.random_range(1..4);
    let n_z = rng.random_range(1..3);
    let xs = Array2::from_shape_fn((b, d), |_| rng.random_range(0.0..1.0));
    let ys = Array2::from_shape_fn((b, m), |_| rng.random_range(0.0..1.0));
    let eps = Array3::from_shape_fn((n_z, b, q), |_| rng.sample(StandardNormal));
    let (_, g) = loss_and_gradient(&model, xs.view(), ys.view(), eps.view()).unwrap();
    let p0 = model.parameters();
    let mut worst: f64 = 0.0;
    for i in 0..p0.len() {
        let step = 1e-5;
        let mut p = p0.clone();
        p[i] = p0[i] + step;
        model.set_parameters(&p).unwrap();
        let up = loss_and_gradient(&model, xs.view(), ys.view(), eps.view()).unwrap().0.total;
        p[i] = p0[i] - step;
        model.set_parameters(&p).unwrap();
        let down = loss_and_gradient(&model, xs.view(), ys.view(), eps.view()).unwrap().0.total;
        let fd = (up - down) / (2.0 * step);
        let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

