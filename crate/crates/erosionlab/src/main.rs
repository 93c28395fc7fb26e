use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use erosionlab::align::freeze_reference;
use erosionlab::dgsa::{run_dgsa, train_sft};
use erosionlab::error::{Error, Result};
use erosionlab::lab::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use erosionlab::lab::compare::{run_alignment_comparison, run_tdsc_comparison, ComparisonReport};
use erosionlab::lab::config::ExperimentConfig;
use erosionlab::lab::manifest::{config_hash, RunManifest};
use erosionlab::lab::report::{
    alignment_trend_checks, comparison_csv, scaling_csv, scaling_trend_checks, summary_text,
    tdsc_csv, tdsc_trend_checks, write_file,
};
use erosionlab::lab::sweep::{eval_policy, run_scaling_sweep, ScalingReport};
use erosionlab::policy::init_policy;
use erosionlab::seeding::derive_stream;
use erosionlab::tdsc::run_tdsc;
use erosionlab::world::{build_mixed_corpus, build_world, World};

const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "erosionlab",
    version,
    about = "Desk-scale simulator for synthetic-data erosion and self-alignment"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Experiment configuration file (TOML; every field addressable by dotted key).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports, checkpoints, and manifests.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweep parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// World-building commands.
    #[command(subcommand)]
    World(WorldCmd),
    /// Training commands.
    #[command(subcommand)]
    Train(TrainCmd),
    /// Alignment pipelines.
    #[command(subcommand)]
    Align(AlignCmd),
    /// Evaluate a checkpoint on the full prompt set.
    Eval {
        /// Policy checkpoint to evaluate.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Parameter sweeps.
    #[command(subcommand)]
    Sweep(SweepCmd),
    /// Method comparisons from a shared baseline.
    #[command(subcommand)]
    Compare(CompareCmd),
    /// Regenerate CSVs and trend summaries from stored report JSON.
    Report,
}

#[derive(Subcommand)]
enum WorldCmd {
    /// Generate the token world and write it as versioned JSON.
    Gen,
}

#[derive(Subcommand)]
enum TrainCmd {
    /// Supervised fine-tuning on a mixed corpus at the configured alpha.
    Sft,
}

#[derive(Subcommand)]
enum AlignCmd {
    /// Three-stage DGSA pipeline (needs real utterances in the corpus).
    Dgsa,
    /// Iterative TDSC refinement from a pure-synthetic start.
    Tdsc,
}

#[derive(Subcommand)]
enum SweepCmd {
    /// Scaling sweep over the alpha grid with replicates.
    Scaling,
}

#[derive(Subcommand)]
enum CompareCmd {
    /// SFT vs Standard DPO vs Rejection Sampling vs DGSA at the comparison alpha.
    Alignment,
    /// SFT vs Self-Training vs Rejection Sampling vs TDSC at alpha = 1.
    Tdsc,
}

fn load_config(global: &GlobalArgs) -> Result<ExperimentConfig> {
    let mut config = match &global.config {
        Some(path) => ExperimentConfig::load_toml(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = global.seed {
        config.master_seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    write_file(path, &text)
}

fn checkpoint_meta(config: &ExperimentConfig, produced_by: &str) -> Result<CheckpointMeta> {
    Ok(CheckpointMeta {
        config_hash: config_hash(config)?,
        produced_by: produced_by.to_string(),
        software_version: SOFTWARE_VERSION.to_string(),
        content_hash: 0,
    })
}

/// Corpus at the configured comparison alpha, with the same stream labels
/// the comparison runs use for their own corpora.
fn build_cli_corpus(
    config: &ExperimentConfig,
    world: &World,
    alpha: f64,
    label: &str,
) -> Result<erosionlab::world::Corpus> {
    let (n_real, n_syn) = config.corpus_counts(alpha)?;
    let mut rng = derive_stream(config.master_seed, label, &[]);
    build_mixed_corpus(world, n_real, n_syn, &mut rng)
}

fn cmd_world_gen(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let world = build_world(&config.world)?;
    let path = out.join("world.json");
    world.save_json(&path)?;
    println!("world: {} prompts -> {}", world.prompts.len(), path.display());
    Ok(())
}

fn cmd_train_sft(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new(config)?;
    let world = build_world(&config.world)?;
    let corpus = build_cli_corpus(config, &world, config.comparison_alpha, "cli/sft-corpus")?;
    let mut params = init_policy(&world.vocab);
    let final_loss = train_sft(
        &mut params,
        &world,
        &corpus,
        config.sft_epochs,
        config.sft_learning_rate,
    )?;
    log::info!("sft final loss {final_loss:.6} nats/token");
    let metrics = eval_policy(config, &world, &params, "cli/eval", &[])?;
    manifest.record("sft", metrics.clone());
    let ckpt = out.join("sft.ckpt");
    save_checkpoint(&params, &ckpt, &checkpoint_meta(config, "train sft")?)?;
    manifest.finish(started, "ok");
    manifest.write(&out.join("manifest.json"))?;
    println!(
        "sft: wer={:.4} h_p={:.4} pass={:.3} -> {}",
        metrics.wer,
        metrics.h_p,
        metrics.pass_rate,
        ckpt.display()
    );
    Ok(())
}

fn cmd_align_dgsa(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new(config)?;
    let world = build_world(&config.world)?;
    let corpus = build_cli_corpus(config, &world, config.comparison_alpha, "cli/dgsa-corpus")?;
    let (aligned, frozen, logs) = run_dgsa(
        &world,
        &corpus,
        &config.dgsa,
        &config.generation,
        config.master_seed,
    )?;
    let metrics = eval_policy(config, &world, &aligned, "cli/eval", &[])?;
    manifest.record("dgsa", metrics.clone());
    save_checkpoint(
        frozen.params(),
        &out.join("dgsa-stage1.ckpt"),
        &checkpoint_meta(config, "align dgsa (stage 1)")?,
    )?;
    let ckpt = out.join("dgsa.ckpt");
    save_checkpoint(&aligned, &ckpt, &checkpoint_meta(config, "align dgsa")?)?;
    write_json(&out.join("dgsa_stages.json"), &logs)?;
    manifest.finish(started, "ok");
    manifest.write(&out.join("manifest.json"))?;
    println!(
        "dgsa: alpha={} weights=(s={:.3}, e={:.3}) wer={:.4} h_p={:.4} -> {}",
        logs.alpha,
        logs.weights.lambda_s,
        logs.weights.lambda_e,
        metrics.wer,
        metrics.h_p,
        ckpt.display()
    );
    Ok(())
}

fn cmd_align_tdsc(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new(config)?;
    let world = build_world(&config.world)?;
    let corpus = build_cli_corpus(config, &world, 1.0, "cli/tdsc-corpus")?;
    let mut params = init_policy(&world.vocab);
    train_sft(
        &mut params,
        &world,
        &corpus,
        config.sft_epochs,
        config.sft_learning_rate,
    )?;
    let stage1 = freeze_reference(&params);
    save_checkpoint(
        stage1.params(),
        &out.join("tdsc-stage1.ckpt"),
        &checkpoint_meta(config, "align tdsc (stage 1)")?,
    )?;
    let prompts: Vec<&erosionlab::world::Prompt> = world.prompts.iter().collect();
    let logs = run_tdsc(
        &mut params,
        &world,
        &prompts,
        &config.schedule,
        &config.judge,
        &config.tdsc_train,
        &config.tdsc_ablation,
        &config.generation,
        config.tdsc_iterations,
        config.master_seed,
    )?;
    let metrics = eval_policy(config, &world, &params, "cli/eval", &[])?;
    manifest.record("tdsc", metrics.clone());
    let ckpt = out.join("tdsc.ckpt");
    save_checkpoint(&params, &ckpt, &checkpoint_meta(config, "align tdsc")?)?;
    write_file(&out.join("tdsc.csv"), &tdsc_csv(&logs))?;
    manifest.finish(started, "ok");
    manifest.write(&out.join("manifest.json"))?;
    println!(
        "tdsc: {} iterations, wer={:.4} pass={:.3} -> {}",
        logs.len(),
        metrics.wer,
        metrics.pass_rate,
        ckpt.display()
    );
    Ok(())
}

fn cmd_eval(config: &ExperimentConfig, out: &Path, checkpoint: &Path) -> Result<()> {
    let world = build_world(&config.world)?;
    let params = load_checkpoint(checkpoint)?;
    let metrics = eval_policy(config, &world, &params, "cli/eval", &[])?;
    write_json(&out.join("eval.json"), &metrics)?;
    println!(
        "eval: wer={:.4} h_p={:.4} rep={:.5} pass={:.3} over {} prompts",
        metrics.wer, metrics.h_p, metrics.repetition, metrics.pass_rate, metrics.sample_count
    );
    Ok(())
}

fn cmd_sweep_scaling(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new(config)?;
    let report = run_scaling_sweep(config)?;
    for agg in &report.aggregates {
        log::info!(
            "alpha={:.2}: wer={:.4} h_p={:.4}",
            agg.alpha,
            agg.wer,
            agg.h_p
        );
    }
    if let Some(last) = report.rows.last() {
        manifest.record("sweep", last.metrics.clone());
    }
    write_json(&out.join("scaling_report.json"), &report)?;
    write_file(&out.join("scaling.csv"), &scaling_csv(&report))?;
    let checks = scaling_trend_checks(&report);
    let summary = summary_text("scaling sweep", &checks);
    write_file(&out.join("scaling_summary.txt"), &summary)?;
    manifest.finish(started, "ok");
    manifest.write(&out.join("manifest.json"))?;
    print!("{summary}");
    Ok(())
}

fn write_comparison(
    out: &Path,
    stem: &str,
    title: &str,
    report: &ComparisonReport,
    checks: &[(String, bool)],
) -> Result<String> {
    write_json(&out.join(format!("{stem}_report.json")), report)?;
    write_file(&out.join(format!("{stem}.csv")), &comparison_csv(report))?;
    if !report.tdsc_logs.is_empty() {
        write_file(&out.join("tdsc.csv"), &tdsc_csv(&report.tdsc_logs))?;
    }
    let summary = summary_text(title, checks);
    write_file(&out.join(format!("{stem}_summary.txt")), &summary)?;
    Ok(summary)
}

fn cmd_compare_alignment(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new(config)?;
    let report = run_alignment_comparison(config)?;
    for row in &report.rows {
        manifest.record(row.method.to_string(), row.metrics.clone());
    }
    let checks = alignment_trend_checks(&report);
    let summary = write_comparison(out, "alignment", "alignment comparison", &report, &checks)?;
    manifest.finish(started, "ok");
    manifest.write(&out.join("manifest.json"))?;
    print!("{summary}");
    Ok(())
}

fn cmd_compare_tdsc(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new(config)?;
    let report = run_tdsc_comparison(config)?;
    for row in &report.rows {
        manifest.record(row.method.to_string(), row.metrics.clone());
    }
    let checks = tdsc_trend_checks(&report);
    let summary = write_comparison(out, "tdsc_compare", "tdsc comparison", &report, &checks)?;
    manifest.finish(started, "ok");
    manifest.write(&out.join("manifest.json"))?;
    print!("{summary}");
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Serialize(e.to_string()))
}

fn cmd_report(out: &Path) -> Result<()> {
    let mut produced = 0usize;
    let scaling = out.join("scaling_report.json");
    if scaling.exists() {
        let report: ScalingReport = read_json(&scaling)?;
        write_file(&out.join("scaling.csv"), &scaling_csv(&report))?;
        let summary = summary_text("scaling sweep", &scaling_trend_checks(&report));
        write_file(&out.join("scaling_summary.txt"), &summary)?;
        print!("{summary}");
        produced += 1;
    }
    for (stem, title, tdsc) in [
        ("alignment", "alignment comparison", false),
        ("tdsc_compare", "tdsc comparison", true),
    ] {
        let path = out.join(format!("{stem}_report.json"));
        if !path.exists() {
            continue;
        }
        let report: ComparisonReport = read_json(&path)?;
        let checks = if tdsc {
            tdsc_trend_checks(&report)
        } else {
            alignment_trend_checks(&report)
        };
        let summary = write_comparison(out, stem, title, &report, &checks)?;
        print!("{summary}");
        produced += 1;
    }
    if produced == 0 {
        return Err(Error::Io {
            path: out.to_path_buf(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "no stored report JSON found (run a sweep or comparison first)",
            ),
        });
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(threads) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let config = load_config(&cli.global)?;
    let out = cli.global.out.as_path();
    ensure_out(out)?;
    match &cli.command {
        Command::World(WorldCmd::Gen) => cmd_world_gen(&config, out),
        Command::Train(TrainCmd::Sft) => cmd_train_sft(&config, out),
        Command::Align(AlignCmd::Dgsa) => cmd_align_dgsa(&config, out),
        Command::Align(AlignCmd::Tdsc) => cmd_align_tdsc(&config, out),
        Command::Eval { checkpoint } => cmd_eval(&config, out, checkpoint),
        Command::Sweep(SweepCmd::Scaling) => cmd_sweep_scaling(&config, out),
        Command::Compare(CompareCmd::Alignment) => cmd_compare_alignment(&config, out),
        Command::Compare(CompareCmd::Tdsc) => cmd_compare_tdsc(&config, out),
        Command::Report => cmd_report(out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EROSIONLAB_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
