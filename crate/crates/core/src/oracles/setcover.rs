use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::Path;

/// Greedy cover over index sets: repeatedly takes the set with the most
/// uncovered items, the lowest index winning ties. Fails listing the items no
/// set contains.
pub(crate) fn greedy_cover(n_items: usize, sets: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut coverable = vec![false; n_items];
    for s in sets {
        for &i in s {
            coverable[i] = true;
        }
    }
    let missing: Vec<usize> = (0..n_items).filter(|&i| !coverable[i]).collect();
    if !missing.is_empty() {
        return Err(Error::Uncoverable(missing));
    }
    let mut covered = vec![false; n_items];
    let mut left = n_items;
    let mut chosen = Vec::new();
    while left > 0 {
        let (best, gain) = sets
            .iter()
            .enumerate()
            .map(|(k, s)| (k, s.iter().filter(|&&i| !covered[i]).count()))
            .fold((usize::MAX, 0), |acc, (k, g)| if g > acc.1 { (k, g) } else { acc });
        debug_assert!(gain > 0);
        for &i in &sets[best] {
            if !covered[i] {
                covered[i] = true;
                left -= 1;
            }
        }
        chosen.push(best);
    }
    Ok(chosen)
}

/// Greedy edge set invalidating every path: an edge covers the paths that
/// traverse it. Ties go to the lexicographically smallest edge. The result has
/// at most `(1 + ln |paths|)` times as many edges as an optimal cover.
pub fn greedy_set_cover(paths: &[Path], candidate_edges: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let candidates: Vec<(usize, usize)> = candidate_edges
        .iter()
        .map(|&(u, v)| (u.min(v), u.max(v)))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let path_edges: Vec<BTreeSet<(usize, usize)>> = paths.iter().map(|p| p.edges().collect()).collect();
    let sets: Vec<Vec<usize>> = candidates
        .iter()
        .map(|e| (0..paths.len()).filter(|&j| path_edges[j].contains(e)).collect())
        .collect();
    Ok(greedy_cover(paths.len(), &sets)?.into_iter().map(|k| candidates[k]).collect())
}

/// All distinct edges used by `paths`, sorted.
pub(crate) fn edges_of(paths: &[Path]) -> Vec<(usize, usize)> {
    paths.iter().flat_map(|p| p.edges()).collect::<BTreeSet<_>>().into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(v: &[usize]) -> Path {
        Path { vertices: v.to_vec(), cost: 0.0 }
    }

    #[test]
    fn single_path() {
        assert_eq!(greedy_set_cover(&[path(&[0, 1, 2])], &[(2, 1)]).unwrap(), vec![(1, 2)]);
    }

    #[test]
    fn hand_trace() {
        // e1 = (0,1) in P1, P2; e2 = (2,3) in P3; e3 = (4,5) in P2, P3
        let p1 = path(&[0, 1]);
        let p2 = path(&[0, 1, 9, 4, 5]);
        let p3 = path(&[2, 3, 8, 4, 5]);
        let cover = greedy_set_cover(&[p1, p2, p3], &[(4, 5), (2, 3), (0, 1)]).unwrap();
        assert_eq!(cover, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn uncoverable() {
        let r = greedy_set_cover(&[path(&[0, 1]), path(&[2, 3]), path(&[4, 5])], &[(0, 1)]);
        assert!(matches!(r, Err(Error::Uncoverable(v)) if v == vec![1, 2]));
    }

    #[test]
    fn empty_input() {
        assert!(greedy_set_cover(&[], &[(0, 1)]).unwrap().is_empty());
    }
}
