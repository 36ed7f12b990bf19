use serde::{Deserialize, Serialize};

use super::{PlanningProblem, World};
use crate::error::{Error, Result};

pub const DEFAULT_GRID_RES: usize = 10;

/// `[start, goal, occupancy grid]` conditioning vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Row-major `g x g` grid; cell `(i, j)` at index `j * g + i` is 1.0 when its
/// centre `((i + 0.5) / g, (j + 0.5) / g)` lies inside an obstacle.
pub fn occupancy_grid(world: &World, grid_res: usize) -> Result<Vec<f64>> {
    if grid_res == 0 {
        return Err(Error::InvalidArgument("grid resolution must be at least 1".into()));
    }
    let g = grid_res as f64;
    let mut grid = Vec::with_capacity(grid_res * grid_res);
    for j in 0..grid_res {
        for i in 0..grid_res {
            let c = [(i as f64 + 0.5) / g, (j as f64 + 0.5) / g];
            grid.push(if world.point_free(c) { 0.0 } else { 1.0 });
        }
    }
    Ok(grid)
}

pub fn extract_features(problem: &PlanningProblem, grid_res: usize) -> Result<FeatureVector> {
    let grid = occupancy_grid(problem.world, grid_res)?;
    let mut v = Vec::with_capacity(2 * problem.start.dim() + grid.len());
    v.extend_from_slice(problem.start.coords());
    v.extend_from_slice(problem.goal.coords());
    v.extend(grid);
    Ok(FeatureVector(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worlds::{Config, Kinematics, Rect};
    use proptest::prelude::*;

    fn q(v: &[f64]) -> Config {
        Config::new(v.to_vec()).unwrap()
    }

    #[test]
    fn empty_world() {
        let w = World::empty();
        let p = PlanningProblem::new(q(&[0.1, 0.2]), q(&[0.3, 0.4]), &w).unwrap();
        let f = extract_features(&p, DEFAULT_GRID_RES).unwrap();
        assert_eq!(f.len(), 104);
        assert_eq!(&f.values()[..4], &[0.1, 0.2, 0.3, 0.4]);
        assert!(f.values()[4..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_world() {
        let w = World::new(Kinematics::PointRobot2D, vec![Rect::new([0.0, 0.0], [1.0, 0.99])], 0).unwrap();
        let p = PlanningProblem::new(q(&[0.5, 1.0]), q(&[0.2, 1.0]), &w).unwrap();
        let f = extract_features(&p, DEFAULT_GRID_RES).unwrap();
        assert!(f.values()[4..].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn single_corner_box() {
        let w = World::new(Kinematics::PointRobot2D, vec![Rect::new([0.0, 0.0], [0.1, 0.1])], 0).unwrap();
        let grid = occupancy_grid(&w, 10).unwrap();
        let hits: Vec<usize> = (0..100).filter(|&k| grid[k] == 1.0).collect();
        assert_eq!(hits, vec![0]);
    }

    #[test]
    fn row_major_layout() {
        // box over cell i = 3, j = 1
        let w = World::new(Kinematics::PointRobot2D, vec![Rect::new([0.32, 0.12], [0.38, 0.18])], 0).unwrap();
        let grid = occupancy_grid(&w, 10).unwrap();
        assert_eq!(grid.iter().position(|&v| v == 1.0), Some(13));
        assert!(occupancy_grid(&w, 0).is_err());
    }

    proptest! {
        #[test]
        fn length_is_two_d_plus_g_squared(g in 1usize..16, n in 1usize..4) {
            let w = World::new(Kinematics::NLinkSnake { n_links: n, link_length: 0.05 }, vec![], 0).unwrap();
            let d = n + 2;
            let mut c = vec![0.5; d];
            c[0] = 0.2;
            let p = PlanningProblem::new(Config::new(c.clone()).unwrap(), Config::new(c).unwrap(), &w).unwrap();
            let f = extract_features(&p, g).unwrap();
            prop_assert_eq!(f.len(), 2 * d + g * g);
            prop_assert!(f.values()[2 * d..].iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }
}
