use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eval::EvalRecord;
use crate::error::Result;
use crate::learner::csv_err;

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = n as f64;
    let p = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub sampler: String,
    pub n_samples: usize,
    pub problems: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_time_ms: f64,
    /// Over successful problems only.
    pub median_normalized_cost: Option<f64>,
}

/// One row per (sampler, budget) in order of first appearance.
pub fn aggregate(records: &[EvalRecord]) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in records {
        let k = (r.sampler.clone(), r.n_samples);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(sampler, n_samples)| {
            let group: Vec<&EvalRecord> =
                records.iter().filter(|r| r.sampler == sampler && r.n_samples == n_samples).collect();
            let successes = group.iter().filter(|r| r.success).count();
            let (ci_low, ci_high) = wilson_interval(successes, group.len());
            let mut costs: Vec<f64> = group.iter().filter_map(|r| r.normalized_cost).collect();
            costs.sort_by(f64::total_cmp);
            AggregateRow {
                problems: group.len(),
                successes,
                success_rate: successes as f64 / group.len() as f64,
                ci_low,
                ci_high,
                mean_time_ms: group.iter().map(|r| r.sampling_time_ms).sum::<f64>() / group.len() as f64,
                median_normalized_cost: median(&costs),
                sampler,
                n_samples,
            }
        })
        .collect()
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

/// Fixed-width text table of aggregate rows.
pub fn format_table(rows: &[AggregateRow]) -> String {
    let mut s = format!(
        "{:<9} {:>6} {:>8} {:>12} {:>8} {:>17} {:>12}\n",
        "sampler", "N", "problems", "mean ms", "success", "95% CI", "median cost"
    );
    for r in rows {
        let cost = r.median_normalized_cost.map_or_else(|| "-".to_string(), |c| format!("{c:.3}"));
        s += &format!(
            "{:<9} {:>6} {:>8} {:>12.3} {:>8.3} {:>17} {:>12}\n",
            r.sampler,
            r.n_samples,
            r.problems,
            r.mean_time_ms,
            r.success_rate,
            format!("[{:.3}, {:.3}]", r.ci_low, r.ci_high),
            cost
        );
    }
    s
}

#[derive(Serialize)]
struct ResultRow<'a> {
    sampler: &'a str,
    problem_id: &'a str,
    n_samples: usize,
    success: bool,
    normalized_cost: Option<f64>,
    padded: usize,
}

#[derive(Serialize)]
struct TimingRow<'a> {
    sampler: &'a str,
    problem_id: &'a str,
    n_samples: usize,
    sampling_time_ms: f64,
}

/// Per-record outcomes. Wall-clock times go to [`write_timing_csv`] so that
/// this file is identical across runs with the same seeds.
pub fn write_records_csv(records: &[EvalRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in records {
        w.serialize(ResultRow {
            sampler: &r.sampler,
            problem_id: &r.problem_id,
            n_samples: r.n_samples,
            success: r.success,
            normalized_cost: r.normalized_cost,
            padded: r.padded,
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timing_csv(records: &[EvalRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in records {
        w.serialize(TimingRow {
            sampler: &r.sampler,
            problem_id: &r.problem_id,
            n_samples: r.n_samples,
            sampling_time_ms: r.sampling_time_ms,
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv(rows: &[AggregateRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format series: success rate against budget (with its interval) and
/// median normalized cost against budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub figure: String,
    pub sampler: String,
    pub n_samples: usize,
    pub value: f64,
    pub low: Option<f64>,
    pub high: Option<f64>,
}

pub fn plot_rows(rows: &[AggregateRow]) -> Vec<PlotRow> {
    let mut out = Vec::new();
    for r in rows {
        out.push(PlotRow {
            figure: "success_vs_n".into(),
            sampler: r.sampler.clone(),
            n_samples: r.n_samples,
            value: r.success_rate,
            low: Some(r.ci_low),
            high: Some(r.ci_high),
        });
    }
    for r in rows {
        if let Some(c) = r.median_normalized_cost {
            out.push(PlotRow {
                figure: "cost_vs_n".into(),
                sampler: r.sampler.clone(),
                n_samples: r.n_samples,
                value: c,
                low: None,
                high: None,
            });
        }
    }
    out
}

pub fn write_plot_data(rows: &[PlotRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
