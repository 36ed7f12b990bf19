//! The experiment pipeline: corpus generation, node extraction, evaluation
//! and reports.

mod corpus;
mod eval;
mod extract;
mod report;

pub use corpus::{gen_corpus, load_corpus, save_corpus, Corpus, ProblemEntry, Split, WorldEntry};
pub use eval::{evaluate, mismatch_eval, Corruption, EvalOptions, EvalRecord, EvalRun};
pub use extract::{extract_corpus, read_jsonl, training_set, write_jsonl, ExtractSummary, NodeRecord};
pub use report::{
    aggregate, format_table, plot_rows, wilson_interval, write_aggregate_csv, write_plot_data, write_records_csv, write_timing_csv,
    AggregateRow, PlotRow,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_rdisc_graph, halton_points, rdisc_radius, Graph};
use crate::samplers::{DEFAULT_SIGMA, DEFAULT_SPARSE_FRACTION};
use crate::worlds::{GapClass, Kinematics};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n_train_worlds: usize,
    pub n_test_worlds: usize,
    pub train_problems_per_world: usize,
    pub test_problems_per_world: usize,
    pub dense_size: usize,
    pub sparse_size: usize,
    /// Vertex budget N.
    pub n_samples: usize,
    pub p: f64,
    pub timeout_ms: u64,
    pub gap_class: GapClass,
    pub n_walls: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n_train_worlds: 200,
            n_test_worlds: 50,
            train_problems_per_world: 5,
            test_problems_per_world: 2,
            dense_size: 2000,
            sparse_size: 200,
            n_samples: 200,
            p: DEFAULT_SPARSE_FRACTION,
            timeout_ms: 5000,
            gap_class: GapClass::Small,
            n_walls: 4,
            sigma: DEFAULT_SIGMA,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.dense_size <= self.sparse_size {
            return bad("dense_size must exceed sparse_size");
        }
        if self.sparse_size == 0 {
            return bad("sparse_size must be at least 1");
        }
        if self.n_samples == 0 {
            return bad("sample budget must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad("p must lie in [0, 1]");
        }
        if self.n_walls == 0 {
            return bad("at least one wall is needed");
        }
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        Ok(())
    }

    /// Dense reference roadmap, before collision pruning.
    pub fn dense_graph(&self) -> Result<Graph> {
        halton_graph(self.dense_size)
    }

    /// The constant sparse roadmap shared by every sampler.
    pub fn sparse_graph(&self) -> Result<Graph> {
        halton_graph(self.sparse_size)
    }
}

fn halton_graph(n: usize) -> Result<Graph> {
    let d = Kinematics::PointRobot2D.dim();
    build_rdisc_graph(&halton_points(n, d)?, rdisc_radius(n, d))
}

/// Seed for item `index` of stream `stream` under a master seed (splitmix64).
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0xd1b5_4a32_d192_ed03))
        .wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Worker pool sized by `LEGO_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("LEGO_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("LEGO_THREADS={v:?} is not a thread count")))?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_checks() {
        assert!(BenchConfig::default().validate().is_ok());
        assert!(BenchConfig { dense_size: 200, ..Default::default() }.validate().is_err());
        assert!(BenchConfig { n_samples: 0, ..Default::default() }.validate().is_err());
        assert!(BenchConfig { p: 1.5, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn seeds_differ_by_stream_and_index() {
        let s = [derive_seed(1, 0, 0), derive_seed(1, 0, 1), derive_seed(1, 1, 0), derive_seed(2, 0, 0)];
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                assert_ne!(s[i], s[j]);
            }
        }
        assert_eq!(derive_seed(5, 6, 7), derive_seed(5, 6, 7));
    }
}
