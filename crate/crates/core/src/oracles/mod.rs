//! Graph oracles that pick training nodes out of a dense roadmap.
//!
//! * `sp_nodes`: interior of the dense shortest path.
//! * `bottleneck_nodes`: the few dense-path vertices a sparse roadmap cannot
//!   do without, found by inflating the cost of every edge the dense path adds.
//! * `diverse_pathset`: shortest paths that survive an adversary removing a
//!   budget of edges per round.
//! * `lego_nodes`: bottleneck nodes of every diverse path.

mod bottleneck;
mod diversity;
mod lego;
mod setcover;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Path, Query};
use crate::worlds::{Config, PlanningProblem};

pub use bottleneck::{bottleneck_nodes, bottleneck_search, BottleneckOutcome};
pub use diversity::{diverse_pathset, diverse_paths_in};
pub use lego::lego_nodes;
pub use setcover::greedy_set_cover;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Near-optimality tolerance.
    pub epsilon: f64,
    /// Inflation increment.
    pub eta_step: f64,
    /// Diverse pathset size.
    pub k: usize,
    /// Edges the adversary may remove per round.
    pub ell: usize,
    /// Candidate paths enumerated per round.
    pub l: usize,
    pub eta_cap: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { epsilon: 0.1, eta_step: 0.5, k: 3, ell: 3, l: 50, eta_cap: 1e6 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.eta_step > 0.0) {
            return bad("eta_step must be positive");
        }
        if !(self.eta_cap >= 1.0) {
            return bad("eta_cap must be at least 1");
        }
        if self.k == 0 || self.ell == 0 || self.l == 0 {
            return bad("k, ell and L must be at least 1");
        }
        if self.l < self.ell {
            return bad("L must be at least ell");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Sp,
    Bottleneck,
    Diverse,
    Lego,
}

impl Provenance {
    pub const ALL: [Provenance; 4] = [Provenance::Sp, Provenance::Bottleneck, Provenance::Diverse, Provenance::Lego];

    pub fn name(self) -> &'static str {
        match self {
            Provenance::Sp => "sp",
            Provenance::Bottleneck => "bottleneck",
            Provenance::Diverse => "diverse",
            Provenance::Lego => "lego",
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Provenance::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown oracle {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSet {
    pub configs: Vec<Config>,
    pub provenance: Provenance,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    fn push_unique(&mut self, q: Config) {
        if !self.configs.contains(&q) {
            self.configs.push(q);
        }
    }
}

/// A collision-free path given by its configurations, start and goal included.
#[derive(Clone, Debug, PartialEq)]
pub struct DensePath {
    pub configs: Vec<Config>,
    pub cost: f64,
}

impl DensePath {
    pub fn from_query(q: &Query, path: &Path) -> Self {
        DensePath { configs: q.configs(path), cost: path.cost }
    }

    pub fn interior(&self) -> &[Config] {
        let n = self.configs.len();
        if n <= 2 {
            &[]
        } else {
            &self.configs[1..n - 1]
        }
    }
}

/// Dense shortest path, or `Error::Infeasible`.
pub fn dense_shortest_path(problem: &PlanningProblem, dense: &Graph) -> Result<DensePath> {
    let mut q = Query::new(dense, problem)?;
    let p = q.shortest_path(None);
    if !p.is_feasible() {
        return Err(Error::Infeasible);
    }
    Ok(DensePath::from_query(&q, &p))
}

/// Interior vertices of the dense shortest path.
pub fn sp_nodes(problem: &PlanningProblem, dense: &Graph) -> Result<NodeSet> {
    let path = dense_shortest_path(problem, dense)?;
    Ok(NodeSet { configs: path.interior().to_vec(), provenance: Provenance::Sp })
}

/// Runs the named oracle on one problem.
pub fn extract_nodes(
    problem: &PlanningProblem,
    dense: &Graph,
    sparse: &Graph,
    oracle: Provenance,
    cfg: &OracleConfig,
) -> Result<NodeSet> {
    cfg.validate()?;
    match oracle {
        Provenance::Sp => sp_nodes(problem, dense),
        Provenance::Bottleneck => {
            let path = dense_shortest_path(problem, dense)?;
            bottleneck_nodes(problem, &path, sparse, cfg)
        }
        Provenance::Diverse => {
            let paths = diverse_paths_in(problem, dense, cfg)?;
            let mut out = NodeSet { configs: Vec::new(), provenance: Provenance::Diverse };
            for p in paths {
                for q in p.interior() {
                    out.push_unique(q.clone());
                }
            }
            Ok(out)
        }
        Provenance::Lego => lego_nodes(problem, dense, sparse, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeTag;
    use crate::worlds::World;

    fn c(x: f64, y: f64) -> Config {
        Config::new(vec![x, y]).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(OracleConfig::default().validate().is_ok());
        assert!(OracleConfig { l: 2, ..Default::default() }.validate().is_err());
        assert!(OracleConfig { epsilon: 0.0, ..Default::default() }.validate().is_err());
        assert_eq!("LEGO".parse::<Provenance>().unwrap(), Provenance::Lego);
    }

    #[test]
    fn sp_chain_and_direct() {
        let w = World::empty();
        let chain = Graph::from_edges(
            vec![c(0.1, 0.1), c(0.5, 0.5), c(0.9, 0.1)],
            &[(0, 1, 1.0, EdgeTag::Sparse), (1, 2, 1.0, EdgeTag::Sparse)],
            0.01,
        )
        .unwrap();
        let p = PlanningProblem::new(c(0.1, 0.1), c(0.9, 0.1), &w).unwrap();
        assert_eq!(sp_nodes(&p, &chain).unwrap().configs, vec![c(0.5, 0.5)]);
        let direct = Graph::from_edges(
            vec![c(0.1, 0.1), c(0.5, 0.5), c(0.9, 0.1)],
            &[(0, 1, 1.0, EdgeTag::Sparse), (1, 2, 1.0, EdgeTag::Sparse), (0, 2, 1.5, EdgeTag::Sparse)],
            0.01,
        )
        .unwrap();
        assert!(sp_nodes(&p, &direct).unwrap().is_empty());
        let cut = Graph::from_edges(vec![c(0.1, 0.1), c(0.9, 0.1)], &[], 0.01).unwrap();
        assert!(matches!(sp_nodes(&p, &cut), Err(Error::Infeasible)));
    }
}
