use std::collections::HashSet;

use super::setcover::{edges_of, greedy_set_cover};
use super::{DensePath, OracleConfig};
use crate::error::{Error, Result};
use crate::graph::{Graph, Path, Query};
use crate::worlds::PlanningProblem;

type EdgeKey = (usize, usize);

/// Up to `k` paths: the dense shortest path, then after each adversarial round
/// the shortest path of what is left. Vertex indices refer to the dense
/// roadmap anchored at start and goal (new vertices, if any, are appended).
pub fn diverse_pathset(problem: &PlanningProblem, dense: &Graph, cfg: &OracleConfig) -> Result<Vec<Path>> {
    cfg.validate()?;
    let mut q = Query::new(dense, problem)?;
    diverse_rounds(&mut q, cfg)
}

/// [`diverse_pathset`] as configuration sequences.
pub fn diverse_paths_in(problem: &PlanningProblem, dense: &Graph, cfg: &OracleConfig) -> Result<Vec<DensePath>> {
    cfg.validate()?;
    let mut q = Query::new(dense, problem)?;
    let paths = diverse_rounds(&mut q, cfg)?;
    Ok(paths.iter().map(|p| DensePath::from_query(&q, p)).collect())
}

pub(crate) fn diverse_rounds(q: &mut Query, cfg: &OracleConfig) -> Result<Vec<Path>> {
    Ok(traced_rounds(q, cfg)?.0)
}

/// Diverse paths plus the edges removed before each later round.
fn traced_rounds(q: &mut Query, cfg: &OracleConfig) -> Result<(Vec<Path>, Vec<Vec<EdgeKey>>)> {
    let first = q.shortest_path(None);
    if !first.is_feasible() {
        return Err(Error::Infeasible);
    }
    let mut out = vec![first];
    let mut cuts = Vec::new();
    while out.len() < cfg.k {
        let candidates = q.k_shortest_paths(cfg.l, None);
        let cut = adversary(&candidates, cfg.ell)?;
        q.remove_edges(&cut)?;
        cuts.push(cut);
        let next = q.shortest_path(None);
        if !next.is_feasible() {
            break;
        }
        out.push(next);
    }
    Ok((out, cuts))
}

/// Picks at most `ell` edges that invalidate as long a prefix of `paths`
/// (sorted cheapest first) as possible.
pub(crate) fn adversary(paths: &[Path], ell: usize) -> Result<Vec<EdgeKey>> {
    let sets: Vec<HashSet<EdgeKey>> = paths.iter().map(|p| p.edges().collect()).collect();
    let mut chosen: Vec<EdgeKey> = Vec::new();
    let mut invalidated: Vec<usize> = Vec::new();
    let mut alive: Vec<usize> = (0..paths.len()).collect();
    loop {
        alive.retain(|&j| !chosen.iter().any(|e| sets[j].contains(e)));
        if chosen.len() >= ell || alive.is_empty() {
            break;
        }
        while chosen.len() < ell && !alive.is_empty() {
            let mut pool: Vec<EdgeKey> = alive.iter().flat_map(|&j| sets[j].iter().copied()).collect();
            pool.sort_unstable();
            pool.dedup();
            // score: position of the first surviving path the edge misses
            let score = |e: &EdgeKey| alive.iter().position(|&j| !sets[j].contains(e)).unwrap_or(alive.len());
            let mut best = pool[0];
            let mut best_score = score(&best);
            for e in &pool[1..] {
                let s = score(e);
                if s > best_score {
                    best = *e;
                    best_score = s;
                }
            }
            chosen.push(best);
            invalidated.extend(alive.iter().copied().filter(|&j| sets[j].contains(&best)));
            alive.retain(|&j| !sets[j].contains(&best));
        }
        // a smaller edge set that still hits every invalidated path frees budget
        let hit: Vec<Path> = invalidated.iter().map(|&j| paths[j].clone()).collect();
        let cover = greedy_set_cover(&hit, &edges_of(&hit))?;
        if cover.len() <= chosen.len() {
            chosen = cover;
        }
    }
    Ok(chosen)
}
