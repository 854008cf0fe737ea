//! End-to-end runs on the desk-scale synthetic graph.
//!
//! One experiment generates the clean graph and its noisy copy from the
//! master seed, then for each of `runs` training seeds trains TransE in
//! plain, single-task, X-Score and multi-task mode and evaluates all four.
//! The report contains no timings, so equal seeds give byte-identical JSON.

use serde::Serialize;

use crate::config::{ModelName, TrainConfig};
use crate::error::{Error, Result};
use crate::evaluation::{
    link_prediction, lowest_k_f1, mask_f1, max_f1_sweep, triple_classification, RankingMetrics,
};
use crate::graph::KnowledgeGraph;
use crate::noise::{
    inject_noise, make_classification_negatives, ClassificationSets, InjectionReport, NoiseLabels,
};
use crate::seed::child_seed;
use crate::synthetic::{generate, SyntheticSpec};
use crate::trainer::{train, TrainMode, TrainOutcome};

pub const NOISE_RATE: f64 = 0.10;
pub const DEFAULT_RUNS: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub entities: usize,
    pub relations: usize,
    pub clean_train: usize,
    pub noisy_train: usize,
    pub valid: usize,
    pub test: usize,
    pub injection: InjectionReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodResult {
    pub link_prediction: RankingMetrics,
    pub classification_accuracy: f64,
    pub kept: usize,
    /// F1 of the method's hard selection (unselected = noise).
    pub mask_f1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub seed: u64,
    pub plain: MethodResult,
    pub strl: MethodResult,
    pub mtrl: MethodResult,
    pub xscore: MethodResult,
    /// Best F1 over all thresholds of the pretrained scores.
    pub xscore_max_f1: f64,
    /// F1 when X-Score drops exactly as many triples as the STRL mask.
    pub xscore_f1_at_strl_count: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Means {
    pub plain_mrr: f64,
    pub strl_mrr: f64,
    pub mtrl_mrr: f64,
    pub xscore_mrr: f64,
    pub strl_mask_f1: f64,
    pub mtrl_mask_f1: f64,
    pub xscore_f1_at_strl_count: f64,
    pub xscore_max_f1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub preset: String,
    pub master_seed: u64,
    pub model: String,
    pub config: TrainConfig,
    pub graph: GraphSummary,
    pub runs: Vec<RunResult>,
    pub means: Means,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }
}

/// The clean synthetic graph, its noisy copy and the label side table.
pub struct NoisyData {
    pub clean: KnowledgeGraph,
    pub noisy: KnowledgeGraph,
    pub labels: NoiseLabels,
    pub injection: InjectionReport,
    pub classification: ClassificationSets,
}

pub fn synthetic_data(master_seed: u64) -> Result<NoisyData> {
    let clean = generate(&SyntheticSpec::desk(), child_seed(master_seed, "graph", 0));
    let (noisy, labels, injection) =
        inject_noise(&clean, NOISE_RATE, child_seed(master_seed, "noise", 0))?;
    let classification =
        make_classification_negatives(&noisy, child_seed(master_seed, "classification", 0));
    Ok(NoisyData {
        clean,
        noisy,
        labels,
        injection,
        classification,
    })
}

fn evaluate(data: &NoisyData, out: &TrainOutcome) -> Result<MethodResult> {
    let lp = link_prediction(&out.store, &data.noisy)?;
    let cls = triple_classification(
        |t| out.store.score(t),
        data.noisy.num_relations(),
        &data.classification.valid,
        &data.classification.test,
    )?;
    Ok(MethodResult {
        link_prediction: lp.filtered,
        classification_accuracy: cls.accuracy,
        kept: out.mask.kept_count(),
        mask_f1: mask_f1(&out.mask, &data.labels)?,
    })
}

/// All four methods for one training seed.
pub fn run_once(data: &NoisyData, cfg: &TrainConfig, model: ModelName) -> Result<RunResult> {
    let g = &data.noisy;
    let plain = train(g, model, TrainMode::Plain, cfg, None)?;
    let strl = train(g, model, TrainMode::Strl, cfg, None)?;
    let mtrl = train(g, model, TrainMode::Mtrl, cfg, None)?;
    let xscore = train(g, model, TrainMode::XScore, cfg, None)?;
    let scores = xscore.scores.as_deref().expect("x-score keeps its scores");
    let strl_dropped = strl.mask.len() - strl.mask.kept_count();
    Ok(RunResult {
        seed: cfg.seed,
        xscore_max_f1: max_f1_sweep(scores, &data.labels)?,
        xscore_f1_at_strl_count: lowest_k_f1(scores, &data.labels, strl_dropped)?,
        plain: evaluate(data, &plain)?,
        strl: evaluate(data, &strl)?,
        mtrl: evaluate(data, &mtrl)?,
        xscore: evaluate(data, &xscore)?,
    })
}

fn mean(runs: &[RunResult], f: impl Fn(&RunResult) -> f64) -> f64 {
    runs.iter().map(f).sum::<f64>() / runs.len() as f64
}

/// Runs a preset on the synthetic graph. Training seeds are
/// `child_seed(master, "run", i)` for `i < runs`.
pub fn run_experiment(preset: &str, master_seed: u64, runs: usize) -> Result<ExperimentReport> {
    if preset != "synthetic-n1" {
        return Err(Error::invalid(format!(
            "experiment preset {preset:?} is not available; only synthetic-n1 runs end to end"
        )));
    }
    if runs == 0 {
        return Err(Error::invalid("runs must be >= 1"));
    }
    let model = ModelName::TransE;
    let base = TrainConfig::preset(preset, model)?;
    let data = synthetic_data(master_seed)?;
    let mut results = Vec::with_capacity(runs);
    for i in 0..runs {
        let cfg = TrainConfig {
            seed: child_seed(master_seed, "run", i as u64),
            ..base.clone()
        };
        log::info!("run {i}: seed {}", cfg.seed);
        results.push(run_once(&data, &cfg, model)?);
    }
    let means = Means {
        plain_mrr: mean(&results, |r| r.plain.link_prediction.mrr),
        strl_mrr: mean(&results, |r| r.strl.link_prediction.mrr),
        mtrl_mrr: mean(&results, |r| r.mtrl.link_prediction.mrr),
        xscore_mrr: mean(&results, |r| r.xscore.link_prediction.mrr),
        strl_mask_f1: mean(&results, |r| r.strl.mask_f1),
        mtrl_mask_f1: mean(&results, |r| r.mtrl.mask_f1),
        xscore_f1_at_strl_count: mean(&results, |r| r.xscore_f1_at_strl_count),
        xscore_max_f1: mean(&results, |r| r.xscore_max_f1),
    };
    Ok(ExperimentReport {
        preset: preset.to_string(),
        master_seed,
        model: "transe".into(),
        config: base,
        graph: GraphSummary {
            entities: data.noisy.num_entities(),
            relations: data.noisy.num_relations(),
            clean_train: data.clean.train().len(),
            noisy_train: data.noisy.train().len(),
            valid: data.noisy.valid().len(),
            test: data.noisy.test().len(),
            injection: data.injection,
        },
        runs: results,
        means,
    })
}
