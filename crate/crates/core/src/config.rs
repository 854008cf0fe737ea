//! Training configuration and presets.
//!
//! Config files are flat `key = value` lines; `#` starts a comment. Every
//! key is optional and falls back to the defaults below. Unknown or
//! repeated keys are errors.
//!
//! | key                       | default | meaning                                        |
//! |---------------------------|---------|------------------------------------------------|
//! | `d`                       | 100     | embedding dimension                            |
//! | `lr`                      | 0.001   | KGE learning rate (plain training, pretraining) |
//! | `lr_extended`             | 0.0005  | KGE learning rate during joint training        |
//! | `batch_size`              | 1024    | positives per Adam step                        |
//! | `pretrain_epochs`         | 100     | KGE pretraining epochs, capped at 100          |
//! | `epochs`                  | 100     | epochs for plain training and X-Score retrain  |
//! | `norm`                    | l1      | TransE norm, `l1` or `l2`                      |
//! | `gamma`                   | 1       | TransE margin                                  |
//! | `eta`                     | 5       | RotatE margin                                  |
//! | `k_negatives`             | 10      | negatives per positive (DistMult, RotatE)      |
//! | `l2`                      | 1e-5    | DistMult L2 coefficient                        |
//! | `alpha`                   | 0.05    | reward bonus for the kept fraction             |
//! | `lambda1`                 | 0.001   | penalty on cluster-shared policy weights       |
//! | `lambda2`                 | 0.01    | penalty on relation-specific policy weights    |
//! | `agent_lr`                | 0.01    | policy learning rate                           |
//! | `M`                       | 15      | joint-training episodes                        |
//! | `agent_pretrain_episodes` | 5       | policy warm-up episodes on the frozen model    |
//! | `joint_epochs`            | 1       | KGE epochs after each relation visit           |
//! | `triple_cap`              | 5000    | max triples an agent sees per episode          |
//! | `clusters_k`              | 300     | relation clusters (multi-task mode)            |
//! | `kmeans_iters`            | 100     | k-means iteration limit                        |
//! | `delta`                   | 0.1     | fraction dropped by the X-Score baseline       |
//! | `seed`                    | 0       | master seed                                    |

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{AdamConfig, ModelKind, Norm};

/// Pretraining never runs longer than this many epochs.
pub const PRETRAIN_EPOCH_CAP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelName {
    TransE,
    DistMult,
    RotatE,
}

impl FromStr for ModelName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "transe" => Ok(ModelName::TransE),
            "distmult" => Ok(ModelName::DistMult),
            "rotate" => Ok(ModelName::RotatE),
            other => Err(Error::invalid(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub lr: f64,
    pub lr_extended: f64,
    pub batch_size: usize,
    pub pretrain_epochs: usize,
    pub epochs: usize,
    pub norm: Norm,
    pub gamma: f64,
    pub eta: f64,
    pub k_negatives: usize,
    pub l2: f64,
    pub alpha: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub agent_lr: f64,
    pub episodes: usize,
    pub agent_pretrain_episodes: usize,
    pub joint_epochs: usize,
    pub triple_cap: usize,
    pub clusters_k: usize,
    pub kmeans_iters: usize,
    pub delta: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            lr: 0.001,
            lr_extended: 0.0005,
            batch_size: 1024,
            pretrain_epochs: 100,
            epochs: 100,
            norm: Norm::L1,
            gamma: 1.0,
            eta: 5.0,
            k_negatives: 10,
            l2: 1e-5,
            alpha: 0.05,
            lambda1: 0.001,
            lambda2: 0.01,
            agent_lr: 0.01,
            episodes: 15,
            agent_pretrain_episodes: 5,
            joint_epochs: 1,
            triple_cap: 5000,
            clusters_k: 300,
            kmeans_iters: 100,
            delta: 0.1,
            seed: 0,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse("config", line, format!("bad value {value:?} for {key}")))
}

impl TrainConfig {
    pub fn model_kind(&self, model: ModelName) -> ModelKind {
        match model {
            ModelName::TransE => ModelKind::TransE {
                norm: self.norm,
                margin: self.gamma,
            },
            ModelName::DistMult => ModelKind::DistMult {
                l2: self.l2,
                negatives: self.k_negatives,
            },
            ModelName::RotatE => ModelKind::RotatE {
                margin: self.eta,
                negatives: self.k_negatives,
            },
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_lr(self.lr)
    }

    pub fn adam_extended(&self) -> AdamConfig {
        AdamConfig::with_lr(self.lr_extended)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(what.to_string()))
            }
        };
        check(self.dim >= 1, "d must be >= 1")?;
        check(self.batch_size >= 1, "batch_size must be >= 1")?;
        check(self.k_negatives >= 1, "k_negatives must be >= 1")?;
        check(self.triple_cap >= 1, "triple_cap must be >= 1")?;
        check(self.clusters_k >= 1, "clusters_k must be >= 1")?;
        check(self.kmeans_iters >= 1, "kmeans_iters must be >= 1")?;
        check((0.0..=1.0).contains(&self.delta), "delta must be in [0, 1]")?;
        check(
            self.gamma.is_finite() && self.gamma > 0.0,
            "gamma must be positive",
        )?;
        check(
            self.eta.is_finite() && self.eta > 0.0,
            "eta must be positive",
        )?;
        for (name, x) in [
            ("l2", self.l2),
            ("alpha", self.alpha),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
        ] {
            check(x.is_finite() && x >= 0.0, &format!("{name} must be >= 0"))?;
        }
        check(
            self.agent_lr.is_finite() && self.agent_lr > 0.0,
            "agent_lr must be positive",
        )?;
        self.adam().validate()?;
        self.adam_extended().validate()
    }

    /// Pretraining epochs after applying the cap.
    pub fn effective_pretrain_epochs(&self) -> usize {
        if self.pretrain_epochs > PRETRAIN_EPOCH_CAP {
            log::warn!(
                "pretrain_epochs {} clamped to {PRETRAIN_EPOCH_CAP}",
                self.pretrain_epochs
            );
        }
        self.pretrain_epochs.min(PRETRAIN_EPOCH_CAP)
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(mut self, text: &str) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.split('\n').enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse("config", line_no, "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::parse(
                    "config",
                    line_no,
                    format!("duplicate key {key}"),
                ));
            }
            self.set(key, value, line_no)?;
        }
        Ok(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        TrainConfig::default().apply_text(text)
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "d" => self.dim = parse_num(key, value, line)?,
            "lr" => self.lr = parse_num(key, value, line)?,
            "lr_extended" => self.lr_extended = parse_num(key, value, line)?,
            "batch_size" => self.batch_size = parse_num(key, value, line)?,
            "pretrain_epochs" => self.pretrain_epochs = parse_num(key, value, line)?,
            "epochs" => self.epochs = parse_num(key, value, line)?,
            "norm" => {
                self.norm = match value.to_ascii_lowercase().as_str() {
                    "l1" => Norm::L1,
                    "l2" => Norm::L2,
                    _ => return Err(Error::parse("config", line, "norm must be l1 or l2")),
                }
            }
            "gamma" => self.gamma = parse_num(key, value, line)?,
            "eta" => self.eta = parse_num(key, value, line)?,
            "k_negatives" => self.k_negatives = parse_num(key, value, line)?,
            "l2" => self.l2 = parse_num(key, value, line)?,
            "alpha" => self.alpha = parse_num(key, value, line)?,
            "lambda1" => self.lambda1 = parse_num(key, value, line)?,
            "lambda2" => self.lambda2 = parse_num(key, value, line)?,
            "agent_lr" => self.agent_lr = parse_num(key, value, line)?,
            "M" => self.episodes = parse_num(key, value, line)?,
            "agent_pretrain_episodes" => {
                self.agent_pretrain_episodes = parse_num(key, value, line)?
            }
            "joint_epochs" => self.joint_epochs = parse_num(key, value, line)?,
            "triple_cap" => self.triple_cap = parse_num(key, value, line)?,
            "clusters_k" => self.clusters_k = parse_num(key, value, line)?,
            "kmeans_iters" => self.kmeans_iters = parse_num(key, value, line)?,
            "delta" => self.delta = parse_num(key, value, line)?,
            "seed" => self.seed = parse_num(key, value, line)?,
            other => {
                return Err(Error::parse(
                    "config",
                    line,
                    format!("unknown key {other:?}"),
                ))
            }
        }
        Ok(())
    }

    /// Every key with its effective value, in the documented order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("d", self.dim.to_string());
        kv("lr", self.lr.to_string());
        kv("lr_extended", self.lr_extended.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("pretrain_epochs", self.pretrain_epochs.to_string());
        kv("epochs", self.epochs.to_string());
        kv(
            "norm",
            match self.norm {
                Norm::L1 => "l1".into(),
                Norm::L2 => "l2".into(),
            },
        );
        kv("gamma", self.gamma.to_string());
        kv("eta", self.eta.to_string());
        kv("k_negatives", self.k_negatives.to_string());
        kv("l2", self.l2.to_string());
        kv("alpha", self.alpha.to_string());
        kv("lambda1", self.lambda1.to_string());
        kv("lambda2", self.lambda2.to_string());
        kv("agent_lr", self.agent_lr.to_string());
        kv("M", self.episodes.to_string());
        kv(
            "agent_pretrain_episodes",
            self.agent_pretrain_episodes.to_string(),
        );
        kv("joint_epochs", self.joint_epochs.to_string());
        kv("triple_cap", self.triple_cap.to_string());
        kv("clusters_k", self.clusters_k.to_string());
        kv("kmeans_iters", self.kmeans_iters.to_string());
        kv("delta", self.delta.to_string());
        kv("seed", self.seed.to_string());
        out
    }

    /// Tuned settings per dataset family and noise level.
    ///
    /// Names: `synthetic-n1`, or `{fb15k,fb15k237,wn18rr}-{n1,n2,n3}`.
    pub fn preset(name: &str, model: ModelName) -> Result<Self> {
        if name == "synthetic-n1" {
            return Ok(Self::synthetic(model));
        }
        let (family, level) = name
            .rsplit_once('-')
            .ok_or_else(|| Error::invalid(format!("unknown preset {name:?}")))?;
        let level = match level {
            "n1" => 1,
            "n2" => 2,
            "n3" => 3,
            _ => return Err(Error::invalid(format!("unknown noise level in {name:?}"))),
        };
        let clusters_k = match family {
            "fb15k" => 300,
            "fb15k237" => 120,
            "wn18rr" => 10,
            _ => {
                return Err(Error::invalid(format!(
                    "unknown dataset family in {name:?}"
                )))
            }
        };
        let alpha = match (model, family) {
            (ModelName::DistMult, _) => [0.3, 0.2, 0.1][level - 1],
            (_, "wn18rr") => [0.05, 0.04, 0.02][level - 1],
            _ => [0.05, 0.03, 0.02][level - 1],
        };
        let delta = match (model, level) {
            (_, 1) => 0.10,
            (_, 2) => 0.15,
            (ModelName::DistMult, _) => 0.30,
            _ => 0.25,
        };
        Ok(TrainConfig {
            dim: 100,
            lr: 0.001,
            lr_extended: 0.0005,
            batch_size: 1024,
            norm: Norm::L1,
            gamma: 1.0,
            eta: 5.0,
            alpha,
            lambda1: 0.001,
            lambda2: 0.01,
            episodes: 15,
            clusters_k,
            delta,
            ..TrainConfig::default()
        })
    }

    /// Desk-scale settings for the 200-entity synthetic graph.
    ///
    /// The graph has ~3000 train triples, so an epoch is only ~50 batches;
    /// the rates are raised accordingly. Plain training gets the same
    /// number of epochs as pretraining plus one per relation visit
    /// (100 + 15 · 20).
    fn synthetic(model: ModelName) -> Self {
        TrainConfig {
            dim: 32,
            lr: 0.01,
            lr_extended: 0.005,
            batch_size: 64,
            epochs: 400,
            alpha: if model == ModelName::DistMult {
                0.3
            } else {
                0.05
            },
            clusters_k: 5,
            delta: 0.1,
            ..TrainConfig::default()
        }
    }
}
