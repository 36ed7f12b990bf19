//! Seeded world generators.
//!
//! Walls come from a recursive division of the unit square on a 10 x 10
//! lattice: every wall spans the region it splits and carries one gap, and
//! wall centrelines and gap centres sit on lattice cell centres. The
//! occupancy grid therefore shows each wall as a line of occupied cells with
//! exactly one free cell at its gap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{for_each_link, Config, Kinematics, Rect, Segment, World};
use crate::error::{Error, Result};

const LATTICE: i32 = 10;

/// Wall thickness in workspace units, below one lattice cell.
pub const WALL_THICKNESS: f64 = 0.08;

/// Clearance kept between corruption squares and protected configurations.
pub const CORRUPTION_MARGIN: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapClass {
    Small,
    Medium,
    Large,
}

impl GapClass {
    pub const ALL: [GapClass; 3] = [GapClass::Small, GapClass::Medium, GapClass::Large];

    pub fn width(self) -> f64 {
        match self {
            GapClass::Small => 0.02,
            GapClass::Medium => 0.03,
            GapClass::Large => 0.05,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GapClass::Small => "small",
            GapClass::Medium => "medium",
            GapClass::Large => "large",
        }
    }
}

impl std::str::FromStr for GapClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "small" => Ok(GapClass::Small),
            "medium" => Ok(GapClass::Medium),
            "large" => Ok(GapClass::Large),
            other => Err(Error::InvalidArgument(format!("unknown gap class {other:?}"))),
        }
    }
}

/// One wall: a thick segment along `span` at coordinate `line`, opened at `gap_center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wall {
    /// A vertical wall sits at `x = line` and spans `y`.
    pub vertical: bool,
    pub line: f64,
    pub span: [f64; 2],
    pub gap_center: f64,
    pub gap_width: f64,
    pub thickness: f64,
}

impl Wall {
    fn rect(&self, along: [f64; 2]) -> Rect {
        let h = self.thickness / 2.0;
        if self.vertical {
            Rect::new([self.line - h, along[0]], [self.line + h, along[1]])
        } else {
            Rect::new([along[0], self.line - h], [along[1], self.line + h])
        }
    }

    /// The two solid pieces on either side of the gap.
    pub fn pieces(&self) -> [Rect; 2] {
        let g = self.gap_width / 2.0;
        [
            self.rect([self.span[0], self.gap_center - g]),
            self.rect([self.gap_center + g, self.span[1]]),
        ]
    }

    /// The opening through the wall; its boundary belongs to the pieces.
    pub fn gap_rect(&self) -> Rect {
        let g = self.gap_width / 2.0;
        self.rect([self.gap_center - g, self.gap_center + g])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WallLayout {
    pub gap_class: GapClass,
    pub walls: Vec<Wall>,
}

impl WallLayout {
    pub fn obstacles(&self) -> Vec<Rect> {
        self.walls.iter().flat_map(|w| w.pieces()).collect()
    }
}

fn center(cell: i32) -> f64 {
    (cell as f64 + 0.5) / LATTICE as f64
}

#[derive(Clone, Debug)]
struct Region {
    // free lattice cells, inclusive
    cols: [i32; 2],
    rows: [i32; 2],
    // gap cells of the walls bounding this region
    gap_cols: Vec<i32>,
    gap_rows: Vec<i32>,
}

impl Region {
    fn extent(range: [i32; 2]) -> [f64; 2] {
        let lo = if range[0] == 0 { 0.0 } else { center(range[0] - 1) };
        let hi = if range[1] == LATTICE - 1 { 1.0 } else { center(range[1] + 1) };
        [lo, hi]
    }

    /// Wall cells that leave two free cells on each side and stay clear of
    /// the bounding gaps, plus the admissible gap cells along the wall.
    fn options(&self, vertical: bool) -> (Vec<i32>, Vec<i32>) {
        let (across, along, blocked) = if vertical {
            (self.cols, self.rows, &self.gap_cols)
        } else {
            (self.rows, self.cols, &self.gap_rows)
        };
        let lines: Vec<i32> = (across[0] + 2..=across[1] - 2)
            .filter(|k| blocked.iter().all(|b| (k - b).abs() > 1))
            .collect();
        let gaps: Vec<i32> = (along[0] + 1..=along[1] - 1).collect();
        if lines.is_empty() || gaps.is_empty() {
            return (Vec::new(), Vec::new());
        }
        (lines, gaps)
    }

    fn area(&self) -> i32 {
        (self.cols[1] - self.cols[0] + 1) * (self.rows[1] - self.rows[0] + 1)
    }
}

/// Wall geometry for `generate_world`, exposed so tests can inspect gap placement.
pub fn wall_layout(seed: u64, gap_class: GapClass, n_walls: usize) -> Result<WallLayout> {
    if n_walls == 0 {
        return Err(Error::InvalidArgument("n_walls must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut regions = vec![Region {
        cols: [0, LATTICE - 1],
        rows: [0, LATTICE - 1],
        gap_cols: Vec::new(),
        gap_rows: Vec::new(),
    }];
    let mut vertical = rng.random_bool(0.5);
    let mut walls = Vec::with_capacity(n_walls);
    while walls.len() < n_walls {
        let pick = |vertical: bool| {
            regions
                .iter()
                .enumerate()
                .filter(|(_, r)| !r.options(vertical).0.is_empty())
                .max_by_key(|(i, r)| (r.area(), std::cmp::Reverse(*i)))
                .map(|(i, _)| i)
        };
        let (idx, orient) = match pick(vertical) {
            Some(i) => (i, vertical),
            None => match pick(!vertical) {
                Some(i) => (i, !vertical),
                None => {
                    log::warn!("lattice full after {} of {n_walls} walls (seed {seed})", walls.len());
                    break;
                }
            },
        };
        let region = regions.swap_remove(idx);
        let (lines, gaps) = region.options(orient);
        let line = lines[rng.random_range(0..lines.len())];
        let gap = gaps[rng.random_range(0..gaps.len())];
        let (a, b) = if orient {
            let mut a = region.clone();
            a.cols[1] = line - 1;
            let mut b = region.clone();
            b.cols[0] = line + 1;
            for r in [&mut a, &mut b] {
                r.gap_rows.push(gap);
                r.gap_cols.retain(|&c| (r.cols[0]..=r.cols[1]).contains(&c));
            }
            (a, b)
        } else {
            let mut a = region.clone();
            a.rows[1] = line - 1;
            let mut b = region.clone();
            b.rows[0] = line + 1;
            for r in [&mut a, &mut b] {
                r.gap_cols.push(gap);
                r.gap_rows.retain(|&c| (r.rows[0]..=r.rows[1]).contains(&c));
            }
            (a, b)
        };
        walls.push(Wall {
            vertical: orient,
            line: center(line),
            span: Region::extent(if orient { region.rows } else { region.cols }),
            gap_center: center(gap),
            gap_width: gap_class.width(),
            thickness: WALL_THICKNESS,
        });
        regions.push(a);
        regions.push(b);
        vertical = !orient;
    }
    Ok(WallLayout { gap_class, walls })
}

/// Point-robot world of `n_walls` rectilinear walls, each with one gap.
pub fn generate_world(seed: u64, gap_class: GapClass, n_walls: usize) -> Result<World> {
    let layout = wall_layout(seed, gap_class, n_walls)?;
    World::new(Kinematics::PointRobot2D, layout.obstacles(), seed)
}

/// Uniform obstacle field: each lattice cell independently holds a centred
/// square of side 0.06 with probability `density`.
pub fn generate_obstacle_field(seed: u64, kinematics: Kinematics, density: f64) -> Result<World> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidArgument(format!("density {density} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obstacles = Vec::new();
    for j in 0..LATTICE {
        for i in 0..LATTICE {
            if rng.random_bool(density) {
                let c = [center(i), center(j)];
                obstacles.push(Rect::new([c[0] - 0.03, c[1] - 0.03], [c[0] + 0.03, c[1] + 0.03]));
            }
        }
    }
    World::new(kinematics, obstacles, seed)
}

fn footprint(world: &World, q: &Config) -> Result<Vec<Segment>> {
    world.check_dim(q.coords())?;
    let c = q.coords();
    Ok(match world.kinematics() {
        Kinematics::PointRobot2D => vec![Segment { a: [c[0], c[1]], b: [c[0], c[1]] }],
        Kinematics::NLinkSnake { n_links, link_length } => {
            let mut v = Vec::new();
            for_each_link(c, n_links, link_length, |s| v.push(s));
            v
        }
    })
}

/// Adds `n_squares` seeded squares of side `square_size` inside the unit
/// square, each kept `CORRUPTION_MARGIN` away from the footprints of `protect`.
pub fn corrupt_world(
    world: &World,
    seed: u64,
    n_squares: usize,
    square_size: f64,
    protect: &[Config],
) -> Result<World> {
    if !(square_size > 0.0 && square_size < 1.0) {
        return Err(Error::InvalidArgument(format!("square size {square_size} outside (0, 1)")));
    }
    let keep_clear: Vec<Segment> =
        protect.iter().map(|q| footprint(world, q)).collect::<Result<Vec<_>>>()?.concat();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut squares = Vec::with_capacity(n_squares);
    let mut attempts = 0;
    while squares.len() < n_squares {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::InvalidArgument(format!(
                "could not place {n_squares} squares of size {square_size} clear of protected configurations"
            )));
        }
        let x = rng.random_range(0.0..=1.0 - square_size);
        let y = rng.random_range(0.0..=1.0 - square_size);
        let sq = Rect::new([x, y], [x + square_size, y + square_size]);
        let halo = sq.inflated(CORRUPTION_MARGIN);
        if keep_clear.iter().all(|s| !halo.intersects_segment(s)) {
            squares.push(sq);
        }
    }
    world.with_obstacles(squares)
}
