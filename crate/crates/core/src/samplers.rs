//! Baseline samplers, the learned samplers, and roadmap assembly.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{build_rdisc_graph, compose_vertices, halton_points, rdisc_radius, Graph};
use crate::learner::{self, CvaeModel};
use crate::worlds::{extract_features, Config, PlanningProblem, World, DEFAULT_GRID_RES};

pub const DEFAULT_SIGMA: f64 = 0.05;
/// Fraction of the vertex budget taken from the Halton sequence.
pub const DEFAULT_SPARSE_FRACTION: f64 = 0.7;

#[derive(Clone, Debug)]
pub enum SamplerKind {
    Halton,
    GaussianNearObstacle { sigma: f64 },
    Bridge { sigma: f64 },
    LearnedSp(Arc<CvaeModel>),
    LearnedLego(Arc<CvaeModel>),
}

impl SamplerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Halton => "halton",
            SamplerKind::GaussianNearObstacle { .. } => "gaussian",
            SamplerKind::Bridge { .. } => "bridge",
            SamplerKind::LearnedSp(_) => "sp",
            SamplerKind::LearnedLego(_) => "lego",
        }
    }

    pub fn is_learned(&self) -> bool {
        matches!(self, SamplerKind::LearnedSp(_) | SamplerKind::LearnedLego(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SamplerKind::GaussianNearObstacle { sigma } | SamplerKind::Bridge { sigma } if !(*sigma > 0.0) => {
                Err(Error::InvalidArgument("sigma must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Draw {
    pub samples: Vec<Config>,
    pub elapsed_ms: f64,
    pub timed_out: bool,
}

/// Draws up to `n` samples. `world` is what the heuristic samplers test
/// against; the learned samplers read features from `problem` instead, which
/// may describe a different (e.g. uncorrupted) world.
pub fn draw(
    kind: &SamplerKind,
    world: &World,
    problem: &PlanningProblem,
    n: usize,
    timeout_ms: u64,
    seed: u64,
) -> Result<Draw> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    kind.validate()?;
    let t0 = Instant::now();
    let deadline = t0 + Duration::from_millis(timeout_ms);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = world.dim();
    let (samples, timed_out) = match kind {
        SamplerKind::Halton => (halton_points(n, d)?, false),
        SamplerKind::GaussianNearObstacle { sigma } => {
            rejection(n, deadline, || {
                let (a, b) = pair(&mut rng, d, *sigma)?;
                match (world.config_free_raw(&a), world.config_free_raw(&b)) {
                    (true, false) => Some(a),
                    (false, true) => Some(b),
                    _ => None,
                }
            })
        }
        SamplerKind::Bridge { sigma } => {
            rejection(n, deadline, || {
                let (a, b) = pair(&mut rng, d, *sigma)?;
                if world.config_free_raw(&a) || world.config_free_raw(&b) {
                    return None;
                }
                let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
                world.config_free_raw(&mid).then_some(mid)
            })
        }
        SamplerKind::LearnedSp(model) | SamplerKind::LearnedLego(model) => {
            let y = extract_features(problem, DEFAULT_GRID_RES)?;
            if model.output_dim != d {
                return Err(Error::DimensionMismatch { expected: d, got: model.output_dim });
            }
            (learner::sample(model, &y, n, seed)?, false)
        }
    };
    Ok(Draw { samples, elapsed_ms: t0.elapsed().as_secs_f64() * 1e3, timed_out })
}

/// A uniform point and a Gaussian neighbor of it, or `None` when the
/// neighbor leaves the unit box.
fn pair(rng: &mut ChaCha8Rng, d: usize, sigma: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let a: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
    let b: Vec<f64> = a.iter().map(|&x| x + sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    b.iter().all(|v| (0.0..=1.0).contains(v)).then_some((a, b))
}

fn rejection(n: usize, deadline: Instant, mut attempt: impl FnMut() -> Option<Vec<f64>>) -> (Vec<Config>, bool) {
    let mut out = Vec::with_capacity(n);
    let mut tries = 0u64;
    while out.len() < n {
        tries += 1;
        if tries.is_multiple_of(64) && Instant::now() >= deadline {
            return (out, true);
        }
        if let Some(q) = attempt() {
            out.push(Config::clamped(q));
        }
    }
    (out, false)
}

/// Vertex split of a budget of `n` between Halton and learned points.
pub fn budget_split(p: f64, n: usize) -> (usize, usize) {
    let halton = ((p * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let halton = halton.min(n);
    (halton, n - halton)
}

#[derive(Clone, Debug)]
pub struct Roadmap {
    pub graph: Graph,
    pub n_halton: usize,
    pub n_learned: usize,
    /// Halton points standing in for missing learned ones.
    pub padded: usize,
}

/// `ceil(p * n)` Halton vertices (the sparse graph's own, continuing the
/// sequence past its end if needed) plus `n - ceil(p * n)` of `learned`,
/// connected with the r-disc radius for `n` vertices. Short `learned` lists
/// are padded with further Halton points.
pub fn assemble_roadmap(sparse: &Graph, learned: &[Config], p: f64, n: usize) -> Result<Roadmap> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument("p must lie in [0, 1]".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("vertex budget must be at least 1".into()));
    }
    let d = match (sparse.vertices().first(), learned.first()) {
        (Some(q), _) | (None, Some(q)) => q.dim(),
        (None, None) => return Err(Error::InvalidArgument("nothing to assemble".into())),
    };
    let (want_halton, want_learned) = budget_split(p, n);
    let taken = want_learned.min(learned.len());
    let padded = want_learned - taken;
    let n_halton = want_halton + padded;
    let mut pts: Vec<Config> = sparse.vertices().iter().take(n_halton).cloned().collect();
    if pts.len() < n_halton {
        let more = halton_points(n_halton, d)?;
        pts.extend(more.into_iter().skip(pts.len()));
    }
    let base = build_rdisc_graph(&pts, rdisc_radius(n, d))?;
    let graph = compose_vertices(&base, &learned[..taken])?;
    if padded > 0 {
        log::debug!("padded {padded} missing learned samples with Halton points");
    }
    Ok(Roadmap { graph, n_halton: want_halton, n_learned: taken, padded })
}
