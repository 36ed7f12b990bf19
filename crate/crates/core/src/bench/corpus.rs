use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, thread_pool, BenchConfig};
use crate::error::{Error, Result};
use crate::graph::{free_subgraph, Graph, Query};
use crate::worlds::{generate_world, Config, PlanningProblem, World, DEFAULT_EDGE_STEP};

const MANIFEST: &str = "manifest.json";
const MANIFEST_VERSION: u32 = 1;
/// Start/goal draws allowed per requested problem before a world gives up.
const ATTEMPTS_PER_PROBLEM: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldEntry {
    pub id: String,
    pub split: Split,
    pub world: World,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemEntry {
    pub problem_id: String,
    pub split: Split,
    /// Index into [`Corpus::worlds`].
    pub world: usize,
    pub start: Config,
    pub goal: Config,
    /// Cost of the dense-roadmap solution in the world as generated.
    pub dense_cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub config: BenchConfig,
    pub worlds: Vec<WorldEntry>,
    pub problems: Vec<ProblemEntry>,
}

impl Corpus {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ProblemEntry> + '_ {
        self.problems.iter().filter(move |p| p.split == split)
    }

    pub fn planning_problem(&self, p: &ProblemEntry) -> Result<PlanningProblem<'_>> {
        PlanningProblem::new(p.start.clone(), p.goal.clone(), &self.worlds[p.world].world)
    }
}

/// Seeded worlds for both splits and, per world, start/goal pairs that are
/// free, not joined by a straight free segment, and connected in the dense
/// roadmap. Worlds that run out of attempts contribute fewer problems.
pub fn gen_corpus(cfg: &BenchConfig) -> Result<Corpus> {
    cfg.validate()?;
    let dense = cfg.dense_graph()?;
    let mut specs = Vec::new();
    for (split, n, per) in [
        (Split::Train, cfg.n_train_worlds, cfg.train_problems_per_world),
        (Split::Test, cfg.n_test_worlds, cfg.test_problems_per_world),
    ] {
        for i in 0..n {
            let stream = if split == Split::Train { 0 } else { 1 };
            specs.push((split, i, per, derive_seed(cfg.seed, stream, i as u64)));
        }
    }
    let built: Vec<(WorldEntry, Vec<(Config, Config, f64)>)> = thread_pool()?.install(|| {
        specs
            .par_iter()
            .map(|&(split, i, per, seed)| {
                let world = generate_world(seed, cfg.gap_class, cfg.n_walls)?;
                let free = free_subgraph(&dense, &world, DEFAULT_EDGE_STEP)?;
                let problems = world_problems(&world, &free, per, derive_seed(seed, 2, 0))?;
                if problems.len() < per {
                    log::warn!("{} world {i}: only {} of {per} problems found", split.name(), problems.len());
                }
                let id = format!("{}-{i:04}", split.name());
                Ok((WorldEntry { id, split, world }, problems))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut worlds = Vec::with_capacity(built.len());
    let mut problems = Vec::new();
    for (w, found) in built {
        for (k, (start, goal, dense_cost)) in found.into_iter().enumerate() {
            problems.push(ProblemEntry {
                problem_id: format!("{}-p{k}", w.id),
                split: w.split,
                world: worlds.len(),
                start,
                goal,
                dense_cost,
            });
        }
        worlds.push(w);
    }
    Ok(Corpus { config: cfg.clone(), worlds, problems })
}

fn world_problems(world: &World, free_dense: &Graph, count: usize, seed: u64) -> Result<Vec<(Config, Config, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = world.dim();
    let free_config = |rng: &mut ChaCha8Rng| loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
        if world.config_free_raw(&v) {
            return Config::clamped(v);
        }
    };
    let mut out = Vec::with_capacity(count);
    for _ in 0..count * ATTEMPTS_PER_PROBLEM {
        if out.len() == count {
            break;
        }
        let s = free_config(&mut rng);
        let g = free_config(&mut rng);
        if world.edge_free_raw(s.coords(), g.coords(), DEFAULT_EDGE_STEP) {
            continue;
        }
        let problem = PlanningProblem::new(s.clone(), g.clone(), world)?;
        let mut q = Query::trusted(free_dense, &problem)?;
        let path = q.shortest_path(None);
        if path.is_feasible() {
            out.push((s, g, path.cost));
        }
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    config: BenchConfig,
    files: Vec<String>,
    worlds: Vec<WorldRecord>,
    problems: Vec<ProblemEntry>,
}

#[derive(Serialize, Deserialize)]
struct WorldRecord {
    id: String,
    split: Split,
    file: String,
}

/// Writes `manifest.json` and one JSON file per world under `dir`.
pub fn save_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir.join("worlds"))?;
    let mut records = Vec::with_capacity(corpus.worlds.len());
    for w in &corpus.worlds {
        let file = format!("worlds/{}.json", w.id);
        fs::write(dir.join(&file), serde_json::to_string_pretty(&w.world)?)?;
        records.push(WorldRecord { id: w.id.clone(), split: w.split, file });
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        config: corpus.config.clone(),
        files: records.iter().map(|r| r.file.clone()).collect(),
        worlds: records,
        problems: corpus.problems.clone(),
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|_| Error::Missing(format!("corpus manifest {}", path.display())))?;
    let m: Manifest = serde_json::from_str(&text)?;
    if m.version != MANIFEST_VERSION {
        return Err(Error::InvalidArgument(format!("unsupported manifest version {}", m.version)));
    }
    let worlds = m
        .worlds
        .into_iter()
        .map(|r| {
            let p = dir.join(&r.file);
            let text = fs::read_to_string(&p).map_err(|_| Error::Missing(format!("world file {}", p.display())))?;
            Ok(WorldEntry { id: r.id, split: r.split, world: serde_json::from_str(&text)? })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(p) = m.problems.iter().find(|p| p.world >= worlds.len()) {
        return Err(Error::InvalidArgument(format!("problem {} names a missing world", p.problem_id)));
    }
    Ok(Corpus { config: m.config, worlds, problems: m.problems })
}
