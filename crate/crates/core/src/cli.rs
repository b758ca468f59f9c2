//! `seizure-acs` command-line frontend.
//!
//! ```text
//! seizure-acs synth --config gen.json --out data/
//! seizure-acs select-channels --dataset data/synth.manifest.json --out run/ --channels auto
//! seizure-acs evaluate --dataset data/synth.manifest.json --out run/
//! seizure-acs benchmark --dataset data/synth.manifest.json --out run/
//! ```
//!
//! Stage seeds derive from `--seed` through [`stage_seed`]. Every report
//! carries the seed and a SHA-256 of the pipeline configuration.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acs::{
    default_m_grid, optimize_m, rank_channels, select_top, AcsConfig, ChannelRanking,
    ChannelSelection, ImportanceProvider,
};
use crate::dataset::synth::{generate_synthetic, SynthConfig};
use crate::dataset::{load_dataset, Dataset, Epoch};
use crate::eval::cv::roc_csv;
use crate::eval::{benchmark, select_threshold, two_fold_cv_with, ChannelPlan};
use crate::forest::{self, BinaryLabel, ClassMode, ForestParams};
use crate::pipeline::{feature_matrix, stage_seed, ChannelCount, PipelineConfig, Stage};
use crate::{Error, Result};

/// `--channels` value: a count, `auto`, or `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelArg {
    Top(usize),
    Auto,
    All,
}

impl FromStr for ChannelArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(ChannelArg::Auto),
            "all" => Ok(ChannelArg::All),
            _ => s
                .parse::<usize>()
                .ok()
                .filter(|&m| m > 0)
                .map(ChannelArg::Top)
                .ok_or_else(|| format!("expected a positive integer, `auto` or `all`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "seizure-acs",
    version,
    about = "Seizure detection with automatic channel selection"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Timed benchmark sections always use one.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic subject from a JSON generator config.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Rank channels once per subject and store the top-M list.
    SelectChannels(RunArgs),
    /// Fit the 3-class and binary forests on every labelled epoch.
    Train(RunArgs),
    /// Two-fold cross-validation report.
    Evaluate(RunArgs),
    /// Single-threaded timing of all channels vs. the selected M.
    Benchmark(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Dataset manifest (`<subject>.manifest.json`).
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory for rankings, models and reports.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of channels, `auto` (select-channels only) or `all`.
    /// Later commands default to the stored channel file.
    #[arg(long)]
    pub channels: Option<ChannelArg>,
    /// Trees per classification forest.
    #[arg(long, default_value_t = 3000)]
    pub trees: usize,
    /// Trees in the channel-ranking forest.
    #[arg(long, default_value_t = 300)]
    pub acs_trees: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Recompute stored ranking and channel files.
    #[arg(long)]
    pub force: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

impl RunArgs {
    fn pipeline_config(&self, channels: ChannelCount) -> PipelineConfig {
        PipelineConfig {
            channels,
            acs: AcsConfig {
                providers: vec![ImportanceProvider::RandomForest {
                    params: ForestParams::default().with_trees(self.acs_trees),
                }],
                rng_seed: self.seed,
                ..AcsConfig::default()
            },
            forest: ForestParams::default().with_trees(self.trees),
            seed: self.seed,
        }
    }

    fn artifact(&self, subject: &str, suffix: &str) -> PathBuf {
        self.out.join(format!("{subject}.{suffix}"))
    }
}

/// Hex SHA-256 of the configuration's canonical JSON.
pub fn config_hash(cfg: &PipelineConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&json)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn labelled_epochs(ds: &Dataset) -> (Vec<&Epoch>, Vec<usize>) {
    let labelled = ds.labelled();
    (
        labelled.iter().map(|&(i, _)| &ds.epochs[i]).collect(),
        labelled.iter().map(|&(_, c)| c.index()).collect(),
    )
}

fn cmd_synth(config: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(config).map_err(|e| Error::io(config, e))?;
    let cfg = SynthConfig::from_json(&text)?;
    let (manifest, ds) = generate_synthetic(&cfg, out)?;
    println!("{} ({} epochs)", manifest.display(), ds.len());
    Ok(())
}

fn cmd_select_channels(args: &RunArgs) -> Result<()> {
    let ds = load_dataset(&args.dataset)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let subject = ds.subject_id().to_string();
    let ranking_path = args.artifact(&subject, "ranking.json");
    let channels_path = args.artifact(&subject, "channels.json");
    let requested = args.channels.unwrap_or(ChannelArg::Auto);

    if !args.force && channels_path.exists() {
        let sel = ChannelSelection::load(&channels_path)?;
        if requested == ChannelArg::Auto || requested == ChannelArg::Top(sel.m) {
            println!(
                "cached: {} (M = {}, channels {:?})",
                channels_path.display(),
                sel.m,
                sel.channels
            );
            return Ok(());
        }
    }

    let cfg = args.pipeline_config(ChannelCount::All);
    let ranking = if !args.force && ranking_path.exists() {
        println!("cached: {}", ranking_path.display());
        ChannelRanking::load(&ranking_path)?
    } else {
        let (epochs, _) = labelled_epochs(&ds);
        let acs = AcsConfig {
            rng_seed: stage_seed(args.seed, Stage::Acs, 0),
            ..cfg.acs.clone()
        };
        let r = rank_channels(&subject, &epochs, &acs)?;
        r.save(&ranking_path)?;
        println!("wrote {}", ranking_path.display());
        r
    };

    let n = ranking.n_channels();
    if let ChannelArg::Top(m) = requested {
        if m > n {
            return Err(Error::config(
                "channels",
                format!("M = {m} exceeds the {n} channels of the dataset"),
            ));
        }
    }
    let (m, sweep) = match requested {
        ChannelArg::Top(m) => (m, None),
        ChannelArg::All => (n, None),
        ChannelArg::Auto => {
            let sweep = optimize_m(&ds, &ranking, &cfg, &default_m_grid(n))?;
            println!("{:>4}  {:>8}", "M", "AUC");
            for p in &sweep.points {
                println!("{:>4}  {:>8.4}", p.m, p.auc);
            }
            println!("chosen M = {}", sweep.chosen);
            (sweep.chosen, Some(sweep))
        }
    };
    let channels = select_top(&ranking, m)?;
    let sel = ChannelSelection {
        subject_id: subject,
        m,
        channels,
        sweep,
    };
    sel.save(&channels_path)?;
    println!(
        "wrote {} (M = {m}, channels {:?})",
        channels_path.display(),
        sel.channels
    );
    Ok(())
}

/// Channels for train/evaluate/benchmark: `--channels` if given, otherwise
/// the stored selection.
fn resolve_channels(args: &RunArgs, ds: &Dataset) -> Result<ChannelPlan> {
    match args.channels {
        Some(ChannelArg::All) => return Ok(ChannelPlan::All),
        Some(ChannelArg::Top(m)) => return Ok(ChannelPlan::Acs { m }),
        Some(ChannelArg::Auto) => {
            return Err(Error::config(
                "channels",
                "`auto` is only accepted by select-channels",
            ))
        }
        None => {}
    }
    let path = args.artifact(ds.subject_id(), "channels.json");
    if !path.exists() {
        return Err(Error::config(
            "channels",
            format!(
                "no channel selection at {}; run `seizure-acs select-channels --dataset {} --out {}` first, or pass `--channels all`",
                path.display(),
                args.dataset.display(),
                args.out.display()
            ),
        ));
    }
    let sel = ChannelSelection::load(&path)?;
    if sel.channels.iter().any(|&c| c >= ds.n_channels()) {
        return Err(Error::data(&path, "channel index outside the dataset"));
    }
    Ok(ChannelPlan::Fixed(sel.channels))
}

#[derive(Debug, Serialize, Deserialize)]
struct TrainSummary {
    subject_id: String,
    channels: Vec<usize>,
    threshold: f64,
    n_epochs: usize,
    seed: u64,
    config_hash: String,
}

fn cmd_train(args: &RunArgs) -> Result<()> {
    let ds = load_dataset(&args.dataset)?;
    let subject = ds.subject_id().to_string();
    let channels = match resolve_channels(args, &ds)? {
        ChannelPlan::Fixed(c) => c,
        ChannelPlan::All => (0..ds.n_channels()).collect(),
        ChannelPlan::Acs { m } => {
            let (epochs, _) = labelled_epochs(&ds);
            let acs = AcsConfig {
                rng_seed: stage_seed(args.seed, Stage::Acs, 0),
                ..args.pipeline_config(ChannelCount::Top(m)).acs
            };
            select_top(&rank_channels(&subject, &epochs, &acs)?, m)?
        }
    };
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let cfg = args.pipeline_config(ChannelCount::Top(channels.len()));
    let (epochs, y3) = labelled_epochs(&ds);
    let x = feature_matrix(&epochs, &channels)?;

    let p3 = cfg
        .forest
        .clone()
        .with_mode(ClassMode::ThreeClass)
        .with_seed(stage_seed(args.seed, Stage::ThreeClassForest, 0));
    let m3 = forest::train(&x, &y3, &p3)?;
    let y2: Vec<usize> = y3.iter().map(|&c| usize::from(c != 0)).collect();
    let p2 = cfg
        .forest
        .clone()
        .with_mode(ClassMode::Binary)
        .with_seed(stage_seed(args.seed, Stage::BinaryForest, 0));
    let m2 = forest::train(&x, &y2, &p2)?;
    let seizure = BinaryLabel::Seizure.index();
    let scores: Vec<f64> = m2
        .predict_proba_batch(&x)?
        .iter()
        .map(|p| p.0[seizure])
        .collect();
    let pos: Vec<bool> = y2.iter().map(|&c| c == 1).collect();
    let threshold = select_threshold(&scores, &pos)?;

    m3.save(&args.artifact(&subject, "model3.json"))?;
    m2.save(&args.artifact(&subject, "model2.json"))?;
    let summary = TrainSummary {
        subject_id: subject.clone(),
        channels,
        threshold,
        n_epochs: epochs.len(),
        seed: args.seed,
        config_hash: config_hash(&cfg),
    };
    let path = args.artifact(&subject, "train.json");
    write_text(&path, &to_json(&summary))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_evaluate(args: &RunArgs) -> Result<()> {
    let ds = load_dataset(&args.dataset)?;
    let subject = ds.subject_id().to_string();
    // A stored selection fixes M; ranking is redone inside each fold on its
    // training half.
    let plan = match resolve_channels(args, &ds)? {
        ChannelPlan::Fixed(c) => ChannelPlan::Acs { m: c.len() },
        other => other,
    };
    let count = match &plan {
        ChannelPlan::Acs { m } => ChannelCount::Top(*m),
        _ => ChannelCount::All,
    };
    let cfg = args.pipeline_config(count);
    let mut report = two_fold_cv_with(&ds, &cfg, &plan)?;
    report.config_hash = Some(config_hash(&cfg));

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let path = args.artifact(&subject, "eval.json");
    write_text(&path, &report.to_json())?;
    if args.format == OutputFormat::Csv {
        let roc = args.artifact(&subject, "roc.csv");
        write_text(&roc, &roc_csv(&report))?;
        println!("wrote {}", roc.display());
    }
    println!(
        "AUC_S {:.4}  AUC_E {:.4}  AUC {:.4}  SEN {:.4}  SPE {:.4}  delay {}",
        report.auc_s,
        report.auc_e,
        report.auc,
        report.sensitivity,
        report.specificity,
        report
            .mean_delay_s
            .map_or("n/a".to_string(), |d| format!("{d:.2} s"))
    );
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchmarkOutput<'a> {
    #[serde(flatten)]
    timing: &'a crate::eval::TimingReport,
    seed: u64,
    config_hash: String,
}

fn cmd_benchmark(args: &RunArgs) -> Result<()> {
    let ds = load_dataset(&args.dataset)?;
    let subject = ds.subject_id().to_string();
    let m = match resolve_channels(args, &ds)? {
        ChannelPlan::Fixed(c) => c.len(),
        ChannelPlan::Acs { m } => m,
        ChannelPlan::All => ds.n_channels(),
    };
    let cfg = args.pipeline_config(ChannelCount::Top(m));
    let timing = benchmark(&ds, m, &cfg)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let path = args.artifact(&subject, "timing.json");
    let out = BenchmarkOutput {
        timing: &timing,
        seed: args.seed,
        config_hash: config_hash(&cfg),
    };
    write_text(&path, &to_json(&out))?;
    println!(
        "N={} M={}  features {:.3}s -> {:.3}s  training {:.3}s -> {:.3}s  improvement {:.1}%  (ACS {:.3}s)",
        timing.n_channels,
        timing.m,
        timing.baseline_feature_time_s,
        timing.feature_time_s,
        timing.baseline_training_time_s,
        timing.training_time_s,
        100.0 * timing.improvement,
        timing.acs_time_s
    );
    println!("wrote {}", path.display());
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        // Fails only if a global pool already exists (e.g. repeated calls
        // in one process); the existing pool is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    match &cli.command {
        Command::Synth { config, out } => cmd_synth(config, out),
        Command::SelectChannels(a) => cmd_select_channels(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_arg_parsing() {
        assert_eq!("auto".parse::<ChannelArg>().unwrap(), ChannelArg::Auto);
        assert_eq!("all".parse::<ChannelArg>().unwrap(), ChannelArg::All);
        assert_eq!("8".parse::<ChannelArg>().unwrap(), ChannelArg::Top(8));
        assert!("0".parse::<ChannelArg>().is_err());
        assert!("x".parse::<ChannelArg>().is_err());
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(main_with_args(["seizure-acs", "evaluate"]), 1);
        assert_eq!(main_with_args(["seizure-acs", "--help"]), 0);
    }

    #[test]
    fn config_hash_tracks_config() {
        let a = PipelineConfig::new(4, 10, 1);
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert_ne!(config_hash(&a), config_hash(&PipelineConfig::new(4, 10, 2)));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
