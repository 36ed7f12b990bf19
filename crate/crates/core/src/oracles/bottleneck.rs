use super::{DensePath, NodeSet, OracleConfig, Provenance};
use crate::error::{Error, Result};
use crate::graph::{inflate_added_edges, EdgeTag, Graph, Path, Query, C_MAX};
use crate::worlds::PlanningProblem;

/// Everything the inflation search settled on.
#[derive(Clone, Debug)]
pub struct BottleneckOutcome {
    pub nodes: NodeSet,
    /// Largest inflation on the `eta_step` grid whose path met the bound.
    pub eta: f64,
    /// Sparse roadmap with start, goal and the dense path's interior attached.
    pub graph: Graph,
    /// Shortest path of `graph` under inflation `eta`.
    pub path: Path,
    pub overlay_cost: f64,
    /// Total base weight of the `Added` edges on `path`.
    pub added_weight: f64,
    /// False only when even `eta = 1` missed the bound.
    pub bound_met: bool,
    pub reached_cap: bool,
}

/// Inflation search. The overlay-weighted optimum never decreases as `eta`
/// grows, so a bisection over the grid `1 + j * eta_step` finds the same last
/// feasible `eta` as stepping through it one increment at a time.
pub fn bottleneck_search(
    problem: &PlanningProblem,
    dense_path: &DensePath,
    sparse: &Graph,
    cfg: &OracleConfig,
) -> Result<BottleneckOutcome> {
    cfg.validate()?;
    if dense_path.configs.len() < 2 || !(dense_path.cost < C_MAX) {
        return Err(Error::InvalidArgument("dense path must be feasible".into()));
    }
    let anchored = Query::new(sparse, problem)?;
    let mut g_hat = anchored.graph().clone();
    let mut added = vec![false; g_hat.len()];
    for q in dense_path.interior() {
        if g_hat.vertices().contains(q) {
            continue;
        }
        // every edge the dense path brings in is inflatable, those touching
        // start or goal included; only the anchoring edges stay Terminal
        g_hat.attach(q.clone(), |_| EdgeTag::Added);
        added.push(true);
    }
    let mut query = Query::new(&g_hat, problem)?;
    let bound = (1.0 + cfg.epsilon) * dense_path.cost;

    let mut eval = |j: u64| -> Result<(Path, f64)> {
        let eta = 1.0 + j as f64 * cfg.eta_step;
        let overlay = inflate_added_edges(query.graph(), eta)?;
        let p = query.shortest_path(Some(&overlay));
        let oc = if p.is_feasible() { query.cost_of(&p.vertices, Some(&overlay)) } else { C_MAX };
        Ok((p, oc))
    };
    let ok = |oc: f64| oc <= bound;

    let j_max = ((cfg.eta_cap - 1.0) / cfg.eta_step).floor() as u64;
    let at_one = eval(0)?;
    let (j, (path, overlay_cost), bound_met, reached_cap) = if !ok(at_one.1) {
        log::warn!("no path within the bound even without inflation (cost {} > {bound})", at_one.1);
        (0, at_one, false, false)
    } else {
        let top = eval(j_max)?;
        if ok(top.1) {
            (j_max, top, true, true)
        } else {
            let (mut lo, mut hi) = (0u64, j_max);
            let mut best = at_one;
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                let r = eval(mid)?;
                if ok(r.1) {
                    lo = mid;
                    best = r;
                } else {
                    hi = mid;
                }
            }
            (lo, best, true, false)
        }
    };

    let graph = query.graph().clone();
    let configs = path.vertices.iter().filter(|&&v| added[v]).map(|&v| graph.vertex(v).clone()).collect();
    let added_weight = path
        .vertices
        .windows(2)
        .map(|w| graph.edge(w[0], w[1]).expect("path edge"))
        .filter(|e| e.tag == EdgeTag::Added)
        .map(|e| e.weight)
        .sum();
    Ok(BottleneckOutcome {
        nodes: NodeSet { configs, provenance: Provenance::Bottleneck },
        eta: 1.0 + j as f64 * cfg.eta_step,
        graph,
        path,
        overlay_cost,
        added_weight,
        bound_met,
        reached_cap,
    })
}

/// Dense-path vertices the sparse roadmap needs to stay within `(1 + epsilon)`
/// of the dense path's cost.
pub fn bottleneck_nodes(
    problem: &PlanningProblem,
    dense_path: &DensePath,
    sparse: &Graph,
    cfg: &OracleConfig,
) -> Result<NodeSet> {
    Ok(bottleneck_search(problem, dense_path, sparse, cfg)?.nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_rdisc_graph, compose_vertices, shortest_path};
    use crate::worlds::{Config, Kinematics, Rect, World};

    fn c(x: f64, y: f64) -> Config {
        Config::new(vec![x, y]).unwrap()
    }

    fn wall() -> World {
        // vertical wall at x = 0.5 with an opening around y = 0.5
        World::new(
            Kinematics::PointRobot2D,
            vec![Rect::new([0.48, 0.0], [0.52, 0.45]), Rect::new([0.48, 0.55], [0.52, 1.0])],
            0,
        )
        .unwrap()
    }

    #[test]
    fn sparse_already_suffices() {
        let w = World::empty();
        let sparse = build_rdisc_graph(&[c(0.3, 0.5), c(0.5, 0.5), c(0.7, 0.5)], 0.25).unwrap();
        let p = PlanningProblem::new(c(0.1, 0.5), c(0.9, 0.5), &w).unwrap();
        let dense = DensePath { configs: vec![c(0.1, 0.5), c(0.4, 0.5), c(0.6, 0.5), c(0.9, 0.5)], cost: 0.8 };
        let out = bottleneck_search(&p, &dense, &sparse, &OracleConfig::default()).unwrap();
        assert!(out.nodes.is_empty());
        assert!(out.reached_cap);
    }

    #[test]
    fn single_gap_vertex() {
        let w = wall();
        // s and g are joined to nothing across the wall
        let sparse = build_rdisc_graph(&[c(0.2, 0.2), c(0.8, 0.8)], 0.45).unwrap();
        let p = PlanningProblem::new(c(0.3, 0.3), c(0.7, 0.3), &w).unwrap();
        assert!(!shortest_path(&sparse, &p, None).unwrap().is_feasible());
        let dense = DensePath { configs: vec![c(0.3, 0.3), c(0.5, 0.5), c(0.7, 0.3)], cost: 0.08f64.sqrt() * 2.0 };
        let out = bottleneck_search(&p, &dense, &sparse, &OracleConfig::default()).unwrap();
        assert_eq!(out.nodes.configs, vec![c(0.5, 0.5)]);
        assert!(out.bound_met && !out.reached_cap);
        assert_eq!(out.eta, 1.0);
    }

    #[test]
    fn two_gap_vertices() {
        let w = World::new(
            Kinematics::PointRobot2D,
            vec![
                Rect::new([0.38, 0.0], [0.42, 0.45]),
                Rect::new([0.38, 0.55], [0.42, 1.0]),
                Rect::new([0.58, 0.0], [0.62, 0.45]),
                Rect::new([0.58, 0.55], [0.62, 1.0]),
            ],
            0,
        )
        .unwrap();
        let sparse = build_rdisc_graph(&[c(0.5, 0.9), c(0.1, 0.1)], 0.25).unwrap();
        let p = PlanningProblem::new(c(0.3, 0.3), c(0.7, 0.3), &w).unwrap();
        let cost = 0.05f64.sqrt() * 2.0 + 0.2;
        let dense = DensePath { configs: vec![c(0.3, 0.3), c(0.4, 0.5), c(0.6, 0.5), c(0.7, 0.3)], cost };
        let out = bottleneck_search(&p, &dense, &sparse, &OracleConfig::default()).unwrap();
        assert_eq!(out.nodes.configs, vec![c(0.4, 0.5), c(0.6, 0.5)]);
        // composing them back in restores the bound
        let g = compose_vertices(&sparse, &out.nodes.configs).unwrap();
        assert!(shortest_path(&g, &p, None).unwrap().cost <= 1.1 * cost + 1e-9);
    }

    #[test]
    fn inflation_prefers_sparse_detour_within_bound() {
        let w = wall();
        // sparse detour through the gap costs about 5% more than the dense path
        let sparse = build_rdisc_graph(&[c(0.5, 0.52)], 0.3).unwrap();
        let p = PlanningProblem::new(c(0.3, 0.3), c(0.7, 0.3), &w).unwrap();
        let cost = 0.08f64.sqrt() * 2.0;
        let dense = DensePath { configs: vec![c(0.3, 0.3), c(0.5, 0.5), c(0.7, 0.3)], cost };
        let out = bottleneck_search(&p, &dense, &sparse, &OracleConfig::default()).unwrap();
        assert!(out.nodes.is_empty());
        let tight = OracleConfig { epsilon: 1e-4, ..Default::default() };
        let out = bottleneck_search(&p, &dense, &sparse, &tight).unwrap();
        assert_eq!(out.nodes.configs, vec![c(0.5, 0.5)]);
        assert!(!out.reached_cap);
        assert!(out.overlay_cost <= (1.0 + 1e-4) * cost);
    }
}
