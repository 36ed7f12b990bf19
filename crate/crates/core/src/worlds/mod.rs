//! Planning environments: configurations, rectilinear obstacle worlds,
//! collision queries and the feature encoding fed to the learner.

mod features;
mod generate;
mod geometry;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use features::{extract_features, occupancy_grid, FeatureVector, DEFAULT_GRID_RES};
pub use generate::{
    corrupt_world, generate_obstacle_field, generate_world, wall_layout, GapClass, Wall,
    WallLayout, CORRUPTION_MARGIN, WALL_THICKNESS,
};
pub use geometry::{Rect, Segment};

/// Default interpolation spacing for edge checks, in normalized C-space units.
pub const DEFAULT_EDGE_STEP: f64 = 0.005;

/// A point of the unit-hypercube configuration space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Config(Vec<f64>);

impl TryFrom<Vec<f64>> for Config {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Config::new(v)
    }
}

impl From<Config> for Vec<f64> {
    fn from(c: Config) -> Self {
        c.0
    }
}

impl Config {
    /// Rejects empty vectors and coordinates outside `[0, 1]`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("configuration has no coordinates".into()));
        }
        if let Some(c) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidArgument(format!("coordinate {c} outside [0, 1]")));
        }
        Ok(Config(coords))
    }

    /// Clamps every coordinate into `[0, 1]`; NaN becomes 0.
    pub fn clamped(coords: Vec<f64>) -> Self {
        Config(
            coords
                .into_iter()
                .map(|c| if c.is_nan() { 0.0 } else { c.clamp(0.0, 1.0) })
                .collect(),
        )
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn distance(&self, other: &Config) -> f64 {
        distance(&self.0, &other.0)
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Robot model that maps a configuration to its workspace footprint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kinematics {
    PointRobot2D,
    NLinkSnake { n_links: usize, link_length: f64 },
}

impl Kinematics {
    pub fn dim(&self) -> usize {
        match self {
            Kinematics::PointRobot2D => 2,
            Kinematics::NLinkSnake { n_links, .. } => n_links + 2,
        }
    }
}

#[derive(Deserialize)]
struct WorldRepr {
    dim: usize,
    kinematics: Kinematics,
    obstacles: Vec<Rect>,
    seed: u64,
}

/// Obstacle environment together with its configuration-space metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WorldRepr")]
pub struct World {
    dim: usize,
    kinematics: Kinematics,
    obstacles: Vec<Rect>,
    seed: u64,
}

impl TryFrom<WorldRepr> for World {
    type Error = Error;

    fn try_from(r: WorldRepr) -> Result<Self> {
        let w = World::new(r.kinematics, r.obstacles, r.seed)?;
        if w.dim != r.dim {
            return Err(Error::DimensionMismatch { expected: w.dim, got: r.dim });
        }
        Ok(w)
    }
}

impl World {
    pub fn new(kinematics: Kinematics, obstacles: Vec<Rect>, seed: u64) -> Result<Self> {
        if let Kinematics::NLinkSnake { n_links, link_length } = kinematics {
            if n_links == 0 || !(link_length > 0.0 && link_length.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "snake needs at least one link of positive length, got {n_links} x {link_length}"
                )));
            }
        }
        if let Some(r) = obstacles.iter().find(|r| !r.is_well_formed()) {
            return Err(Error::InvalidArgument(format!("malformed obstacle {r:?}")));
        }
        Ok(World { dim: kinematics.dim(), kinematics, obstacles, seed })
    }

    /// Obstacle-free point-robot world.
    pub fn empty() -> Self {
        World { dim: 2, kinematics: Kinematics::PointRobot2D, obstacles: Vec::new(), seed: 0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kinematics(&self) -> Kinematics {
        self.kinematics
    }

    pub fn obstacles(&self) -> &[Rect] {
        &self.obstacles
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same kinematics and seed with extra obstacles appended.
    pub fn with_obstacles(&self, extra: impl IntoIterator<Item = Rect>) -> Result<World> {
        let mut obstacles = self.obstacles.clone();
        obstacles.extend(extra);
        World::new(self.kinematics, obstacles, self.seed)
    }

    pub(crate) fn check_dim(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: q.len() });
        }
        Ok(())
    }

    /// True iff the workspace point lies outside every obstacle.
    pub fn point_free(&self, p: [f64; 2]) -> bool {
        !self.obstacles.iter().any(|r| r.contains(p))
    }

    /// Collision query on raw coordinates; the caller guarantees the dimension.
    pub fn config_free_raw(&self, q: &[f64]) -> bool {
        match self.kinematics {
            Kinematics::PointRobot2D => self.point_free([q[0], q[1]]),
            Kinematics::NLinkSnake { n_links, link_length } => {
                let mut free = true;
                for_each_link(q, n_links, link_length, |s| {
                    if free && self.obstacles.iter().any(|r| r.intersects_segment(&s)) {
                        free = false;
                    }
                });
                free
            }
        }
    }

    /// Edge query on raw coordinates; the caller guarantees dimensions and `step > 0`.
    pub fn edge_free_raw(&self, a: &[f64], b: &[f64], step: f64) -> bool {
        let len = distance(a, b);
        let mut segments: u64 = 1;
        while len / segments as f64 > step && segments < (1 << 40) {
            segments *= 2;
        }
        let mut buf = vec![0.0; a.len()];
        let mut at = |t: f64| {
            for (k, v) in buf.iter_mut().enumerate() {
                *v = a[k] + t * (b[k] - a[k]);
            }
            self.config_free_raw(&buf)
        };
        if !at(0.0) || !at(1.0) {
            return false;
        }
        // Coarse-to-fine order finds collisions early; the point set is the full grid.
        let mut stride = segments;
        while stride > 1 {
            let half = stride / 2;
            let mut i = half;
            while i < segments {
                if !at(i as f64 / segments as f64) {
                    return false;
                }
                i += stride;
            }
            stride = half;
        }
        true
    }
}

fn for_each_link(q: &[f64], n_links: usize, link_length: f64, mut f: impl FnMut(Segment)) {
    let mut p = [q[0], q[1]];
    let mut heading = 0.0;
    for k in 0..n_links {
        heading += (2.0 * q[2 + k] - 1.0) * PI;
        let next = [p[0] + link_length * heading.cos(), p[1] + link_length * heading.sin()];
        f(Segment { a: p, b: next });
        p = next;
    }
}

/// Collision check of a single configuration (closed obstacles).
pub fn is_config_free(world: &World, q: &Config) -> Result<bool> {
    world.check_dim(q.coords())?;
    Ok(world.config_free_raw(q.coords()))
}

/// Checks interpolated configurations along `a -> b` at spacing at most `step`,
/// endpoints included. The spacing is `|b - a| / 2^k`, so a finer step
/// checks a superset of points.
pub fn is_edge_free(world: &World, a: &Config, b: &Config, step: f64) -> Result<bool> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    world.check_dim(a.coords())?;
    world.check_dim(b.coords())?;
    Ok(world.edge_free_raw(a.coords(), b.coords(), step))
}

/// Link segments of a snake robot. Joint coordinate `t` maps to angle `(2t - 1)π`
/// relative to the previous link; the base sits at `(q[0], q[1])`.
pub fn snake_forward_kinematics(world: &World, q: &Config) -> Result<Vec<Segment>> {
    let Kinematics::NLinkSnake { n_links, link_length } = world.kinematics else {
        return Err(Error::WrongKinematics);
    };
    world.check_dim(q.coords())?;
    let mut out = Vec::with_capacity(n_links);
    for_each_link(q.coords(), n_links, link_length, |s| out.push(s));
    Ok(out)
}

/// Start/goal pair in a world.
#[derive(Clone, Debug)]
pub struct PlanningProblem<'a> {
    pub start: Config,
    pub goal: Config,
    pub world: &'a World,
}

impl<'a> PlanningProblem<'a> {
    pub fn new(start: Config, goal: Config, world: &'a World) -> Result<Self> {
        if world.dim() < 2 {
            return Err(Error::InvalidArgument("world dimension below 2".into()));
        }
        world.check_dim(start.coords())?;
        world.check_dim(goal.coords())?;
        if !world.config_free_raw(start.coords()) {
            return Err(Error::InCollision { which: "start" });
        }
        if !world.config_free_raw(goal.coords()) {
            return Err(Error::InCollision { which: "goal" });
        }
        Ok(PlanningProblem { start, goal, world })
    }
}
