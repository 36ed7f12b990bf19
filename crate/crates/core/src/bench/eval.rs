use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{Corpus, ProblemEntry, Split};
use super::{derive_seed, thread_pool};
use crate::error::{Error, Result};
use crate::graph::{free_subgraph, Graph, Query};
use crate::samplers::{assemble_roadmap, budget_split, draw, SamplerKind};
use crate::worlds::{corrupt_world, Config, PlanningProblem, World, DEFAULT_EDGE_STEP};

/// Unmodelled obstacles added to every test world.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    pub n_squares: usize,
    pub size: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub n_samples: usize,
    /// Halton share of the budget for non-Halton samplers.
    pub p: f64,
    pub timeout_ms: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub sampler: String,
    pub problem_id: String,
    pub n_samples: usize,
    pub sampling_time_ms: f64,
    pub success: bool,
    /// Roadmap solution cost over dense solution cost, on success only.
    pub normalized_cost: Option<f64>,
    /// Budget slots the sampler failed to fill before its timeout.
    pub padded: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRun {
    pub records: Vec<EvalRecord>,
    /// Test problems left out because the dense roadmap has no solution in
    /// the evaluation world.
    pub excluded: Vec<String>,
}

/// Every sampler on every test problem.
pub fn evaluate(corpus: &Corpus, samplers: &[SamplerKind], opts: &EvalOptions) -> Result<EvalRun> {
    run(corpus, samplers, opts, None)
}

/// As [`evaluate`], but collision checks use each test world with seeded
/// squares added, while learned samplers still see the clean world's
/// features. Problems the dense roadmap cannot solve in the corrupted world
/// are excluded.
pub fn mismatch_eval(
    corpus: &Corpus,
    corruption: Corruption,
    samplers: &[SamplerKind],
    opts: &EvalOptions,
) -> Result<EvalRun> {
    run(corpus, samplers, opts, Some(corruption))
}

fn run(corpus: &Corpus, samplers: &[SamplerKind], opts: &EvalOptions, corruption: Option<Corruption>) -> Result<EvalRun> {
    if opts.n_samples == 0 {
        return Err(Error::InvalidArgument("sample budget must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&opts.p) {
        return Err(Error::InvalidArgument("p must lie in [0, 1]".into()));
    }
    for s in samplers {
        s.validate()?;
    }
    let sparse = corpus.config.sparse_graph()?;
    let dense = corpus.config.dense_graph()?;
    let tests: Vec<&ProblemEntry> = corpus.split(Split::Test).collect();
    let per_problem: Vec<Option<Vec<EvalRecord>>> = thread_pool()?.install(|| {
        tests
            .par_iter()
            .enumerate()
            .map(|(i, entry)| {
                let clean = corpus.planning_problem(entry)?;
                let (world, reference) = match corruption {
                    None => (None, entry.dense_cost),
                    Some(c) => {
                        let protect = [entry.start.clone(), entry.goal.clone()];
                        let seed = derive_seed(opts.seed, 3, i as u64);
                        let w = corrupt_world(clean.world, seed, c.n_squares, c.size, &protect)?;
                        match dense_cost(&dense, &w, entry)? {
                            Some(cost) => (Some(w), cost),
                            None => {
                                log::info!("{}: no dense solution after corruption, excluded", entry.problem_id);
                                return Ok(None);
                            }
                        }
                    }
                };
                let eval_world = world.as_ref().unwrap_or(clean.world);
                samplers
                    .iter()
                    .map(|kind| {
                        let seed = derive_seed(derive_seed(opts.seed, 4, i as u64), name_stream(kind.name()), 0);
                        one(kind, &sparse, &clean, eval_world, reference, opts, seed, &entry.problem_id)
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut out = EvalRun { records: Vec::new(), excluded: Vec::new() };
    for (entry, r) in tests.iter().zip(per_problem) {
        match r {
            Some(rs) => out.records.extend(rs),
            None => out.excluded.push(entry.problem_id.clone()),
        }
    }
    Ok(out)
}

fn name_stream(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

fn dense_cost(dense: &Graph, world: &World, entry: &ProblemEntry) -> Result<Option<f64>> {
    let free = free_subgraph(dense, world, DEFAULT_EDGE_STEP)?;
    let problem = PlanningProblem::new(entry.start.clone(), entry.goal.clone(), world)?;
    let path = Query::trusted(&free, &problem)?.shortest_path(None);
    Ok(path.is_feasible().then_some(path.cost))
}

#[allow(clippy::too_many_arguments)]
fn one(
    kind: &SamplerKind,
    sparse: &Graph,
    clean: &PlanningProblem,
    world: &World,
    reference: f64,
    opts: &EvalOptions,
    seed: u64,
    problem_id: &str,
) -> Result<EvalRecord> {
    let n = opts.n_samples;
    let (p, want) = match kind {
        // the whole budget comes from the Halton sequence
        SamplerKind::Halton => (1.0, n),
        _ => (opts.p, budget_split(opts.p, n).1),
    };
    let (samples, ms) = if want == 0 {
        (Vec::new(), 0.0)
    } else {
        let d = draw(kind, world, clean, want, opts.timeout_ms, seed)?;
        (d.samples, d.elapsed_ms)
    };
    let eval_problem = PlanningProblem::new(clean.start.clone(), clean.goal.clone(), world)?;
    let (cost, padded) = solve(sparse, &samples, p, n, &eval_problem)?;
    Ok(EvalRecord {
        sampler: kind.name().to_string(),
        problem_id: problem_id.to_string(),
        n_samples: n,
        sampling_time_ms: ms,
        success: cost.is_some(),
        normalized_cost: cost.map(|c| c / reference),
        padded,
    })
}

/// Solution cost on the roadmap assembled from `samples`, if any, and the
/// number of Halton points that stood in for missing samples.
pub(crate) fn solve(
    sparse: &Graph,
    samples: &[Config],
    p: f64,
    n: usize,
    problem: &PlanningProblem,
) -> Result<(Option<f64>, usize)> {
    let roadmap = assemble_roadmap(sparse, samples, p, n)?;
    let path = Query::new(&roadmap.graph, problem)?.shortest_path(None);
    Ok((path.is_feasible().then_some(path.cost), roadmap.padded))
}
