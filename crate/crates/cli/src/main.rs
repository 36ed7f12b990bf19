use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lego::bench::{
    aggregate, evaluate, extract_corpus, format_table, gen_corpus, load_corpus, mismatch_eval, plot_rows, read_jsonl,
    save_corpus, training_set, write_aggregate_csv, write_jsonl, write_plot_data, write_records_csv, write_timing_csv,
    BenchConfig, Corruption, EvalOptions, EvalRecord,
};
use lego::learner::{load_model, save_model, train, write_loss_curve, TrainConfig};
use lego::oracles::{OracleConfig, Provenance};
use lego::samplers::{SamplerKind, DEFAULT_SIGMA, DEFAULT_SPARSE_FRACTION};
use lego::worlds::GapClass;

#[derive(Parser)]
#[command(name = "lego", version, about = "Learn roadmap samplers from oracle-selected dense-graph nodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/test worlds and start/goal problems.
    GenWorlds(GenArgs),
    /// Run an oracle over the training problems and write JSONL.
    Extract(ExtractArgs),
    /// Train a sampler on extracted nodes.
    Train(TrainArgs),
    /// Evaluate samplers on the test problems.
    Eval(EvalArgs),
    /// Evaluate on test worlds with unmodelled obstacles added.
    MismatchEval {
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, default_value_t = 3)]
        squares: usize,
        #[arg(long, default_value_t = 0.05)]
        size: f64,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "small")]
    gap: GapClass,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    train_worlds: usize,
    #[arg(long, default_value_t = 50)]
    test_worlds: usize,
    #[arg(long, default_value_t = 5)]
    train_problems: usize,
    #[arg(long, default_value_t = 2)]
    test_problems: usize,
    #[arg(long, default_value_t = 2000)]
    dense_size: usize,
    #[arg(long, default_value_t = 200)]
    sparse_size: usize,
    #[arg(long, default_value_t = 4)]
    walls: usize,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "lego")]
    oracle: Provenance,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    ell: usize,
    #[arg(long = "L", default_value_t = 50)]
    l: usize,
    #[arg(long, default_value_t = 0.5)]
    eta_step: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long, default_value_t = 2e-4)]
    lambda: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 512)]
    hidden: usize,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss curve CSV.
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated: halton, gaussian, bridge, sp, lego.
    #[arg(long, value_delimiter = ',', default_value = "halton,gaussian,bridge,sp,lego")]
    samplers: Vec<String>,
    /// One or more vertex budgets, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "200")]
    n_samples: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_SPARSE_FRACTION)]
    p: f64,
    #[arg(long, default_value_t = 5000)]
    timeout_ms: u64,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sp_model: Option<PathBuf>,
    #[arg(long)]
    lego_model: Option<PathBuf>,
    /// Per-record results; timing and aggregate CSVs are written beside it.
    #[arg(long)]
    out: PathBuf,
    /// Long-format CSV of success and cost against budget.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::GenWorlds(a) => gen_worlds(a),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a, None),
        Command::MismatchEval { eval, squares, size } => eval_cmd(eval, Some(Corruption { n_squares: squares, size })),
    }
}

fn gen_worlds(a: GenArgs) -> Result<()> {
    let cfg = BenchConfig {
        n_train_worlds: a.train_worlds,
        n_test_worlds: a.test_worlds,
        train_problems_per_world: a.train_problems,
        test_problems_per_world: a.test_problems,
        dense_size: a.dense_size,
        sparse_size: a.sparse_size,
        gap_class: a.gap,
        n_walls: a.walls,
        seed: a.seed,
        ..Default::default()
    };
    let corpus = gen_corpus(&cfg)?;
    save_corpus(&corpus, &a.out).with_context(|| format!("writing corpus to {}", a.out.display()))?;
    println!("{} worlds, {} problems written to {}", corpus.worlds.len(), corpus.problems.len(), a.out.display());
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let cfg = OracleConfig { epsilon: a.eps, eta_step: a.eta_step, k: a.k, ell: a.ell, l: a.l, ..Default::default() };
    let summary = extract_corpus(&corpus, a.oracle, &cfg)?;
    write_jsonl(&summary.records, &a.out)?;
    println!(
        "{}: {} records, {} skipped, {} nodes",
        a.oracle.name(),
        summary.records.len(),
        summary.skipped.len(),
        summary.node_count()
    );
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let records = read_jsonl(&a.data)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        lambda: a.lambda,
        hidden_width: a.hidden,
        latent_dim: a.latent_dim,
        ..Default::default()
    };
    let trained = train(&training_set(&records)?, &cfg, a.seed)?;
    save_model(&trained.model, &a.out)?;
    if let Some(p) = &a.loss_csv {
        write_loss_curve(&trained.curve, p)?;
    }
    if let Some(last) = trained.curve.last() {
        println!("epoch {}: recon {:.5} kl {:.5} total {:.5}", last.epoch, last.recon, last.kl, last.total);
    }
    Ok(())
}

fn samplers(a: &EvalArgs) -> Result<Vec<SamplerKind>> {
    let model = |p: &Option<PathBuf>, flag: &str| -> Result<_> {
        let p = p.as_ref().with_context(|| format!("a learned sampler needs --{flag}"))?;
        Ok(Arc::new(load_model(p)?))
    };
    a.samplers
        .iter()
        .map(|name| {
            Ok(match name.trim() {
                "halton" => SamplerKind::Halton,
                "gaussian" => SamplerKind::GaussianNearObstacle { sigma: a.sigma },
                "bridge" => SamplerKind::Bridge { sigma: a.sigma },
                "sp" => SamplerKind::LearnedSp(model(&a.sp_model, "sp-model")?),
                "lego" => SamplerKind::LearnedLego(model(&a.lego_model, "lego-model")?),
                other => bail!("unknown sampler {other:?}"),
            })
        })
        .collect()
}

fn beside(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("eval");
    out.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn eval_cmd(a: EvalArgs, corruption: Option<Corruption>) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let kinds = samplers(&a)?;
    let mut records: Vec<EvalRecord> = Vec::new();
    let mut excluded = 0;
    for &n in &a.n_samples {
        let opts = EvalOptions { n_samples: n, p: a.p, timeout_ms: a.timeout_ms, seed: a.seed };
        let run = match corruption {
            None => evaluate(&corpus, &kinds, &opts)?,
            Some(c) => mismatch_eval(&corpus, c, &kinds, &opts)?,
        };
        excluded = run.excluded.len();
        records.extend(run.records);
    }
    write_records_csv(&records, &a.out)?;
    write_timing_csv(&records, beside(&a.out, "timing"))?;
    let rows = aggregate(&records);
    write_aggregate_csv(&rows, beside(&a.out, "aggregate"))?;
    if let Some(p) = &a.plot_data {
        write_plot_data(&plot_rows(&rows), p)?;
    }
    if excluded > 0 {
        println!("{excluded} test problems excluded: no dense solution in the corrupted world");
    }
    println!("Heuristic samplers are composed with the same sparse graph as the learned ones (p = {}).", a.p);
    print!("{}", format_table(&rows));
    Ok(())
}
