use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{Corpus, Split};
use super::thread_pool;
use crate::error::{Error, Result};
use crate::graph::free_subgraph;
use crate::oracles::{extract_nodes, NodeSet, OracleConfig, Provenance};
use crate::worlds::{extract_features, Config, FeatureVector, DEFAULT_EDGE_STEP, DEFAULT_GRID_RES};

/// One training example: oracle nodes for a problem and its features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub problem_id: String,
    pub provenance: Provenance,
    pub features: Vec<f64>,
    pub nodes: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractSummary {
    pub records: Vec<NodeRecord>,
    /// Problems the oracle found infeasible.
    pub skipped: Vec<String>,
}

impl ExtractSummary {
    pub fn node_count(&self) -> usize {
        self.records.iter().map(|r| r.nodes.len()).sum()
    }
}

/// Runs `oracle` on every training problem. Both roadmaps are pruned
/// against each world once and shared by that world's problems; lazy search
/// answers the same on a pruned roadmap.
pub fn extract_corpus(corpus: &Corpus, oracle: Provenance, cfg: &OracleConfig) -> Result<ExtractSummary> {
    cfg.validate()?;
    let dense = corpus.config.dense_graph()?;
    let sparse = corpus.config.sparse_graph()?;
    let worlds: Vec<usize> = {
        let mut w: Vec<usize> = corpus.split(Split::Train).map(|p| p.world).collect();
        w.dedup();
        w
    };
    let per_world: Vec<Vec<std::result::Result<NodeRecord, String>>> = thread_pool()?.install(|| {
        worlds
            .par_iter()
            .map(|&wi| {
                let world = &corpus.worlds[wi].world;
                let free = free_subgraph(&dense, world, DEFAULT_EDGE_STEP)?;
                let free_sparse = free_subgraph(&sparse, world, DEFAULT_EDGE_STEP)?;
                corpus
                    .split(Split::Train)
                    .filter(|p| p.world == wi)
                    .map(|entry| {
                        let problem = corpus.planning_problem(entry)?;
                        match extract_nodes(&problem, &free, &free_sparse, oracle, cfg) {
                            Ok(set) => Ok(Ok(NodeRecord {
                                problem_id: entry.problem_id.clone(),
                                provenance: oracle,
                                features: extract_features(&problem, DEFAULT_GRID_RES)?.0,
                                nodes: set.configs.into_iter().map(Vec::from).collect(),
                            })),
                            Err(Error::Infeasible) => {
                                log::warn!("{}: infeasible, skipped", entry.problem_id);
                                Ok(Err(entry.problem_id.clone()))
                            }
                            Err(e) => Err(e),
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut out = ExtractSummary { records: Vec::new(), skipped: Vec::new() };
    for r in per_world.into_iter().flatten() {
        match r {
            Ok(rec) => out.records.push(rec),
            Err(id) => out.skipped.push(id),
        }
    }
    log::info!(
        "{}: {} records, {} skipped, {} nodes",
        oracle.name(),
        out.records.len(),
        out.skipped.len(),
        out.node_count()
    );
    Ok(out)
}

pub fn write_jsonl(records: &[NodeRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<NodeRecord>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|_| Error::Missing(format!("training data {}", path.display())))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Records as learner input.
pub fn training_set(records: &[NodeRecord]) -> Result<Vec<(NodeSet, FeatureVector)>> {
    records
        .iter()
        .map(|r| {
            let configs = r.nodes.iter().map(|v| Config::new(v.clone())).collect::<Result<Vec<_>>>()?;
            Ok((NodeSet { configs, provenance: r.provenance }, FeatureVector(r.features.clone())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::corpus::{gen_corpus, tests::tiny};
    use crate::worlds::is_config_free;

    #[test]
    fn sp_records_per_problem() {
        let c = gen_corpus(&tiny()).unwrap();
        let s = extract_corpus(&c, Provenance::Sp, &OracleConfig::default()).unwrap();
        assert_eq!(s.records.len() + s.skipped.len(), c.split(Split::Train).count());
        assert!(s.skipped.is_empty());
        for r in &s.records {
            let entry = c.problems.iter().find(|p| p.problem_id == r.problem_id).unwrap();
            let w = &c.worlds[entry.world].world;
            assert!(!r.nodes.is_empty());
            for v in &r.nodes {
                assert!(is_config_free(w, &Config::new(v.clone()).unwrap()).unwrap());
            }
            assert_eq!(r.features.len(), 104);
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sp.jsonl");
        write_jsonl(&s.records, &p).unwrap();
        assert_eq!(read_jsonl(&p).unwrap(), s.records);
        assert_eq!(training_set(&s.records).unwrap().len(), s.records.len());
    }
}
