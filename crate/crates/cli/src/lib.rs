//! `kgrl` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or invalid argument, 2 data error
//! (unreadable or malformed input), 3 numeric failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use kgrl_core::agent::encode_policy;
use kgrl_core::clustering::{kmeans, parse_assignment};
use kgrl_core::config::{ModelName, TrainConfig};
use kgrl_core::evaluation::{
    link_prediction, mask_f1, max_f1_sweep, triple_classification, EvalReport,
};
use kgrl_core::experiment::{run_experiment, DEFAULT_RUNS};
use kgrl_core::graph::{load_dir, KnowledgeGraph};
use kgrl_core::models::checkpoint::{decode, encode};
use kgrl_core::models::Matrix;
use kgrl_core::noise::{inject_noise, make_classification_negatives, NoiseLabels};
use kgrl_core::synthetic::{generate, SyntheticSpec};
use kgrl_core::trainer::{curve_csv, train, SelectionMask, TrainMode};
use kgrl_core::{Error, Result};

pub const LABELS_FILE: &str = "noise_labels.tsv";

#[derive(Parser, Debug)]
#[command(
    name = "kgrl",
    version,
    about = "Knowledge-graph embedding on noisy triples"
)]
struct Cli {
    /// Worker threads for parallel evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Add slot-constrained corrupted triples to a train split.
    InjectNoise {
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory with train.txt, valid.txt, test.txt.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// k-means over the relation rows of a checkpoint.
    Cluster {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    Train(TrainArgs),
    Evaluate(EvaluateArgs),
    /// Write the desk-scale synthetic graph (clean) as train/valid/test files.
    Synthetic {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate every method on the synthetic graph.
    Experiment {
        #[arg(long, default_value = "synthetic-n1")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: usize,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Train a model (plain, strl, mtrl or xscore).
#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    model: String,
    #[arg(long, default_value = "plain")]
    mode: String,
    /// Directory with train.txt, valid.txt, test.txt.
    #[arg(long)]
    graph: PathBuf,
    /// Preset to start from before applying --config.
    #[arg(long)]
    preset: Option<String>,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Relation-to-cluster file for mtrl (from `cluster`).
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

/// Link prediction, noise F1 and triple classification for a checkpoint.
#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    /// 0/1 noise labels aligned with train.txt.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Selection mask from `train`; without it, noise F1 is the best
    /// threshold sweep over the checkpoint's train scores.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Seed for the classification negatives.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Per-relation CSV export.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => 1,
        Error::Parse { .. } | Error::Io { .. } | Error::Format { .. } => 2,
        Error::Numeric(_) => 3,
    }
}

/// Parses `argv` (program name first), runs the command, returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read(path)?).map_err(|_| Error::Parse {
        source_name: path.display().to_string(),
        line: 0,
        message: "not UTF-8".into(),
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::InjectNoise {
            rate,
            seed,
            input,
            out,
        } => {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidArgument(format!(
                    "rate {rate} outside [0, 1]"
                )));
            }
            let (graph, _) = load_dir(&input)?;
            let (noisy, labels, report) = inject_noise(&graph, rate, seed)?;
            create_dir(&out)?;
            noisy.write_dir(&out)?;
            write(&out.join(LABELS_FILE), labels.to_text())?;
            eprintln!(
                "injected {} of {} requested ({} skipped)",
                report.injected, report.requested, report.skipped
            );
            Ok(())
        }
        Command::Cluster {
            checkpoint,
            k,
            seed,
            max_iters,
            out,
        } => {
            let ckpt = decode(&read(&checkpoint)?)?;
            let rel = &ckpt.store.relations;
            let points = Matrix::from_vec(rel.rows(), rel.cols(), rel.as_slice().to_vec());
            let clusters = kmeans(&points, k, seed, max_iters)?;
            write(&out, clusters.to_tsv(&ckpt.relations))
        }
        Command::Synthetic { seed, out } => {
            create_dir(&out)?;
            generate(&SyntheticSpec::desk(), seed).write_dir(&out)
        }
        Command::Train(args) => run_train(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Experiment {
            preset,
            seed,
            runs,
            out,
        } => {
            let report = run_experiment(&preset, seed, runs)?;
            match out {
                Some(path) => write(&path, report.to_json()),
                None => {
                    print!("{}", report.to_json());
                    Ok(())
                }
            }
        }
    }
}

fn run_train(args: TrainArgs) -> Result<()> {
    let model: ModelName = args.model.parse()?;
    let mode: TrainMode = args.mode.parse()?;
    let mut cfg = match &args.preset {
        Some(p) => TrainConfig::preset(p, model)?,
        None => TrainConfig::default(),
    };
    if let Some(path) = &args.config {
        cfg = cfg.apply_text(&read_text(path)?)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let (graph, _) = load_dir(&args.graph)?;
    let clusters = match &args.clusters {
        Some(path) => Some(parse_assignment(
            &path.display().to_string(),
            &read_text(path)?,
            graph.relations(),
        )?),
        None => None,
    };
    let outcome = train(&graph, model, mode, &cfg, clusters)?;
    create_dir(&args.out)?;
    write(&args.out.join("config.txt"), cfg.to_text())?;
    write(
        &args.out.join("model.ckpt"),
        encode(&outcome.store, graph.entities(), graph.relations())?,
    )?;
    write(&args.out.join("mask.txt"), outcome.mask.to_text())?;
    write(&args.out.join("curve.csv"), curve_csv(&outcome.curve))?;
    let policy_path = args.out.join("policy.ckpt");
    match &outcome.policy {
        Some(p) => {
            write(&policy_path, encode_policy(&p.params, &p.clusters)?)?;
            let mut rewards = String::from("episode,relation,presented,kept,reward\n");
            for r in &outcome.rewards {
                rewards.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.episode,
                    graph.relations().name(r.relation).unwrap_or("?"),
                    r.presented,
                    r.kept,
                    r.reward
                ));
            }
            write(&args.out.join("rewards.csv"), rewards)?;
        }
        // a stale policy from an earlier run would not match this model
        None => {
            if policy_path.exists() {
                fs::remove_file(&policy_path).map_err(|e| Error::Io {
                    path: policy_path.clone(),
                    source: e,
                })?;
            }
        }
    }
    Ok(())
}

fn check_vocab(
    graph: &KnowledgeGraph,
    ckpt: &kgrl_core::models::checkpoint::Checkpoint,
) -> Result<()> {
    if graph.entities() != &ckpt.entities || graph.relations() != &ckpt.relations {
        return Err(Error::Format {
            what: "model checkpoint",
            message: "entity/relation vocabulary differs from the graph".into(),
        });
    }
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let ckpt = decode(&read(&args.checkpoint)?)?;
    let (graph, _) = load_dir(&args.graph)?;
    check_vocab(&graph, &ckpt)?;
    let store = &ckpt.store;
    let mut report = EvalReport::new(link_prediction(store, &graph)?);
    if let Some(path) = &args.labels {
        let name = path.display().to_string();
        let labels = NoiseLabels::parse(&name, &read_text(path)?)?;
        report.noise_f1 = Some(match &args.mask {
            Some(mpath) => {
                let mask = SelectionMask::parse(&mpath.display().to_string(), &read_text(mpath)?)?;
                mask_f1(&mask, &labels)?
            }
            None => {
                let scores: Vec<f64> = graph.train().iter().map(|t| store.score(t)).collect();
                max_f1_sweep(&scores, &labels)?
            }
        });
    }
    if !graph.valid().is_empty() {
        let sets = make_classification_negatives(&graph, args.seed);
        report.classification_accuracy = Some(
            triple_classification(
                |t| store.score(t),
                graph.num_relations(),
                &sets.valid,
                &sets.test,
            )?
            .accuracy,
        );
    }
    write(&args.out, report.to_json())?;
    if let Some(csv) = &args.csv {
        write(csv, report.per_relation_csv())?;
    }
    Ok(())
}
