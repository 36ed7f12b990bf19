use super::bottleneck::bottleneck_search;
use super::diversity::diverse_paths_in;
use super::setcover::{edges_of, greedy_set_cover};
use super::{NodeSet, OracleConfig, Provenance};
use crate::error::Result;
use crate::graph::{Graph, Query};
use crate::worlds::PlanningProblem;

/// Bottleneck nodes of every diverse dense path, cheapest path first. Before
/// each path is handled, the sparse roadmap loses a greedy cover of its own
/// near-optimal paths, so later paths cannot reuse shortcuts the sparse graph
/// already offered. Removals accumulate across paths.
pub fn lego_nodes(problem: &PlanningProblem, dense: &Graph, sparse: &Graph, cfg: &OracleConfig) -> Result<NodeSet> {
    cfg.validate()?;
    let mut diverse = diverse_paths_in(problem, dense, cfg)?;
    diverse.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    let mut work = Query::new(sparse, problem)?;
    let mut out = NodeSet { configs: Vec::new(), provenance: Provenance::Lego };
    for p in &diverse {
        let near = work.k_shortest_paths(cfg.l, Some((1.0 + cfg.epsilon) * p.cost));
        if !near.is_empty() {
            let cut = greedy_set_cover(&near, &edges_of(&near))?;
            work.remove_edges(&cut)?;
        }
        let bn = bottleneck_search(problem, p, work.graph(), cfg)?;
        for q in bn.nodes.configs {
            out.push_unique(q);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_rdisc_graph, compose_vertices, shortest_path};
    use crate::oracles::{bottleneck_nodes, dense_shortest_path};
    use crate::worlds::{Config, Kinematics, Rect, World};

    fn c(x: f64, y: f64) -> Config {
        Config::new(vec![x, y]).unwrap()
    }

    fn lattice(n: usize) -> Vec<Config> {
        let h = 1.0 / n as f64;
        (0..n).flat_map(|j| (0..n).map(move |i| c((i as f64 + 0.5) * h, (j as f64 + 0.5) * h))).collect()
    }

    /// A vertical wall with two gaps of equal width, one above and one below
    /// the straight start-goal line.
    fn two_gap_world() -> World {
        World::new(
            Kinematics::PointRobot2D,
            vec![
                Rect::new([0.46, 0.0], [0.54, 0.22]),
                Rect::new([0.46, 0.28], [0.54, 0.72]),
                Rect::new([0.46, 0.78], [0.54, 1.0]),
            ],
            0,
        )
        .unwrap()
    }

    #[test]
    fn lego_covers_both_gaps_bottleneck_only_one() {
        let w = two_gap_world();
        let dense = build_rdisc_graph(&lattice(20), 0.075).unwrap();
        let sparse = build_rdisc_graph(&lattice(5), 0.3).unwrap();
        let p = PlanningProblem::new(c(0.2, 0.5), c(0.8, 0.5), &w).unwrap();
        let cfg = OracleConfig { k: 2, ell: 2, l: 10, ..Default::default() };

        let sp = dense_shortest_path(&p, &dense).unwrap();
        let bn = bottleneck_nodes(&p, &sp, &sparse, &cfg).unwrap();
        let lego = lego_nodes(&p, &dense, &sparse, &cfg).unwrap();
        let in_gap = |q: &Config, y: f64| (q.coords()[1] - y).abs() < 0.04 && (q.coords()[0] - 0.5).abs() < 0.06;
        let hits = |s: &NodeSet, y: f64| s.configs.iter().any(|q| in_gap(q, y));
        assert!(hits(&bn, 0.25) != hits(&bn, 0.75), "bottleneck: {:?}", bn.configs);
        assert!(hits(&lego, 0.25) && hits(&lego, 0.75), "lego: {:?}", lego.configs);
        assert!(lego.len() >= bn.len());
        let g = compose_vertices(&sparse, &lego.configs).unwrap();
        assert!(shortest_path(&g, &p, None).unwrap().cost <= 1.1 * sp.cost + 1e-9);
    }
}
