//! Per-relation triple-selection policies.
//!
//! The state for a triple `(h, r, t)` is `r ⊕ h ⊕ t ⊕ h̄ ⊕ t̄`, where `h̄`
//! and `t̄` are the means of the heads and tails selected so far in the
//! episode (zero before the first selection). Every block has the entity
//! feature width of the store, so the state is `5 × width` long.
//!
//! The policy is logistic, `P(keep) = σ(w_rᵀ s)`, with the multi-task
//! decomposition `w_r = u_{c(r)} + v_r`: `u` is shared by all relations of
//! a cluster, `v` is relation specific. In single-task mode `u` stays zero.
//!
//! Training is plain REINFORCE on the episode reward, with the penalty
//! `λ1‖u_c‖² + λ2‖v_r‖²` subtracted from the objective.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Triple;
use crate::models::checkpoint::{Reader, Writer};
use crate::models::{sigmoid, softplus, EmbeddingStore, Matrix};
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyMode {
    /// Relation-specific weights only.
    Strl,
    /// Cluster-shared plus relation-specific weights.
    Mtrl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub mode: PolicyMode,
    /// |C| x 5w cluster-shared vectors.
    pub u: Matrix,
    /// |R| x 5w relation-specific vectors.
    pub v: Matrix,
}

impl PolicyParams {
    /// Zero-initialised: every relation starts at P(keep) = 0.5.
    pub fn new(
        mode: PolicyMode,
        num_clusters: usize,
        num_relations: usize,
        feature_width: usize,
    ) -> Self {
        let width = 5 * feature_width;
        PolicyParams {
            mode,
            u: Matrix::zeros(num_clusters, width),
            v: Matrix::zeros(num_relations, width),
        }
    }

    pub fn width(&self) -> usize {
        self.v.cols()
    }

    /// `w_r = u[c(r)] + v[r]`.
    pub fn weight(&self, clusters: &[usize], r: usize) -> Vec<f64> {
        let v = self.v.row(r);
        match self.mode {
            PolicyMode::Strl => v.to_vec(),
            PolicyMode::Mtrl => {
                let u = self.u.row(clusters[r]);
                u.iter().zip(v).map(|(a, b)| a + b).collect()
            }
        }
    }
}

/// Concatenated state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState(pub Vec<f64>);

/// Mean of the vectors pushed so far; zero when empty.
#[derive(Debug, Clone)]
pub struct RunningMean {
    sum: Vec<f64>,
    count: usize,
}

impl RunningMean {
    pub fn new(width: usize) -> Self {
        RunningMean {
            sum: vec![0.0; width],
            count: 0,
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        for (s, v) in self.sum.iter_mut().zip(x) {
            *s += v;
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Vec<f64> {
        if self.count == 0 {
            return vec![0.0; self.sum.len()];
        }
        let n = self.count as f64;
        self.sum.iter().map(|s| s / n).collect()
    }
}

pub fn build_state(
    store: &EmbeddingStore,
    triple: &Triple,
    head_mean: &[f64],
    tail_mean: &[f64],
) -> AgentState {
    let w = store.feature_width();
    let mut s = Vec::with_capacity(5 * w);
    s.extend_from_slice(&store.relation_features(triple.relation));
    s.extend_from_slice(store.entity_features(triple.head));
    s.extend_from_slice(store.entity_features(triple.tail));
    s.extend_from_slice(head_mean);
    s.extend_from_slice(tail_mean);
    debug_assert_eq!(s.len(), 5 * w);
    AgentState(s)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// P(a = 1 | s) for relation `r`.
pub fn policy_prob(params: &PolicyParams, clusters: &[usize], r: usize, state: &AgentState) -> f64 {
    sigmoid(dot(&params.weight(clusters, r), &state.0))
}

/// `log π(a | s)` for a logit `z = wᵀs`.
fn log_prob(z: f64, action: bool) -> f64 {
    if action {
        -softplus(-z)
    } else {
        -softplus(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    /// Position of the triple in the slice given to [`sample_trajectory`].
    pub index: usize,
    pub state: AgentState,
    pub action: bool,
    pub log_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub relation: usize,
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn selected_indices(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter(|s| s.action)
            .map(|s| s.index)
            .collect()
    }
}

/// Runs one episode over `triples` (all of relation `r`) in a shuffled order.
///
/// Returns the trajectory and the kept triples, in visiting order.
pub fn sample_trajectory(
    params: &PolicyParams,
    clusters: &[usize],
    store: &EmbeddingStore,
    r: usize,
    triples: &[Triple],
    rng: &mut Rng,
) -> (Trajectory, Vec<Triple>) {
    let width = store.feature_width();
    let w = params.weight(clusters, r);
    let mut order: Vec<usize> = (0..triples.len()).collect();
    order.shuffle(rng);
    let mut heads = RunningMean::new(width);
    let mut tails = RunningMean::new(width);
    let mut steps = Vec::with_capacity(triples.len());
    let mut selected = Vec::new();
    for index in order {
        let t = &triples[index];
        debug_assert_eq!(t.relation, r);
        let state = build_state(store, t, &heads.mean(), &tails.mean());
        let z = dot(&w, &state.0);
        let action = rng.gen::<f64>() < sigmoid(z);
        if action {
            heads.push(store.entity_features(t.head));
            tails.push(store.entity_features(t.tail));
            selected.push(*t);
        }
        steps.push(Step {
            index,
            state,
            action,
            log_prob: log_prob(z, action),
        });
    }
    (Trajectory { relation: r, steps }, selected)
}

/// Mean score of the kept triples plus `alpha · |kept| / |all|`.
///
/// With nothing kept, the mean score of `all` (no bonus term).
pub fn compute_reward(
    store: &EmbeddingStore,
    selected: &[Triple],
    all: &[Triple],
    alpha: f64,
) -> f64 {
    assert!(!all.is_empty(), "reward needs a nonempty triple set");
    let mean = |ts: &[Triple]| ts.iter().map(|t| store.score(t)).sum::<f64>() / ts.len() as f64;
    if selected.is_empty() {
        mean(all)
    } else {
        mean(selected) + alpha * selected.len() as f64 / all.len() as f64
    }
}

/// `R · Σ_t log π(a_t | s_t)` under the current parameters.
pub fn surrogate_objective(
    params: &PolicyParams,
    clusters: &[usize],
    trajectory: &Trajectory,
    reward: f64,
) -> f64 {
    let w = params.weight(clusters, trajectory.relation);
    reward
        * trajectory
            .steps
            .iter()
            .map(|s| log_prob(dot(&w, &s.state.0), s.action))
            .sum::<f64>()
}

/// `λ1‖u_c‖² + λ2‖v_r‖²` for the relation of a trajectory.
pub fn regularizer(
    params: &PolicyParams,
    clusters: &[usize],
    r: usize,
    lambda1: f64,
    lambda2: f64,
) -> f64 {
    let sq = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let shared = match params.mode {
        PolicyMode::Strl => 0.0,
        PolicyMode::Mtrl => lambda1 * sq(params.u.row(clusters[r])),
    };
    shared + lambda2 * sq(params.v.row(r))
}

/// One ascent step on `R · Σ log π(a_t|s_t) - λ1‖u_c‖² - λ2‖v_r‖²`.
///
/// The policy gradient `Σ R (a_t - σ(wᵀs_t)) s_t` goes to both `u[c(r)]`
/// and `v[r]`; in single-task mode only `v[r]` moves.
pub fn reinforce_update(
    params: &mut PolicyParams,
    clusters: &[usize],
    trajectory: &Trajectory,
    reward: f64,
    lambda1: f64,
    lambda2: f64,
    lr: f64,
) -> Result<()> {
    let r = trajectory.relation;
    let w = params.weight(clusters, r);
    let mut grad = vec![0.0; w.len()];
    for step in &trajectory.steps {
        let s = &step.state.0;
        let a = if step.action { 1.0 } else { 0.0 };
        let coeff = reward * (a - sigmoid(dot(&w, s)));
        for (g, x) in grad.iter_mut().zip(s) {
            *g += coeff * x;
        }
    }
    let v_new: Vec<f64> = params
        .v
        .row(r)
        .iter()
        .zip(&grad)
        .map(|(v, g)| v + lr * (g - 2.0 * lambda2 * v))
        .collect();
    let u_new: Option<Vec<f64>> = match params.mode {
        PolicyMode::Strl => None,
        PolicyMode::Mtrl => Some(
            params
                .u
                .row(clusters[r])
                .iter()
                .zip(&grad)
                .map(|(u, g)| u + lr * (g - 2.0 * lambda1 * u))
                .collect(),
        ),
    };
    if v_new
        .iter()
        .chain(u_new.iter().flatten())
        .any(|x| !x.is_finite())
    {
        return Err(Error::Numeric(format!(
            "policy update for relation {r} is not finite (reward {reward})"
        )));
    }
    params.v.row_mut(r).copy_from_slice(&v_new);
    if let Some(u_new) = u_new {
        params.u.row_mut(clusters[r]).copy_from_slice(&u_new);
    }
    Ok(())
}

pub const POLICY_MAGIC: &[u8; 8] = b"KGRLPLCY";
pub const POLICY_VERSION: u32 = 1;

/// Policy checkpoint. Little endian:
///
/// ```text
/// magic "KGRLPLCY" | u32 version | u8 mode (0 STRL, 1 MTRL)
/// u64 |C| | u64 |R| | u64 d (state width / 5)
/// f64 u (|C| x 5d) | f64 v (|R| x 5d) | u32 cluster id per relation
/// ```
pub fn encode_policy(params: &PolicyParams, clusters: &[usize]) -> Result<Vec<u8>> {
    if clusters.len() != params.v.rows() {
        return Err(Error::invalid(
            "cluster assignment length does not match |R|",
        ));
    }
    if clusters.iter().any(|&c| c >= params.u.rows().max(1)) {
        return Err(Error::invalid("cluster id out of range"));
    }
    let mut w = Writer::new();
    w.bytes(POLICY_MAGIC);
    w.u32(POLICY_VERSION);
    w.u8(match params.mode {
        PolicyMode::Strl => 0,
        PolicyMode::Mtrl => 1,
    });
    w.u64(params.u.rows() as u64);
    w.u64(params.v.rows() as u64);
    w.u64((params.width() / 5) as u64);
    w.f64s(params.u.as_slice());
    w.f64s(params.v.as_slice());
    for &c in clusters {
        w.u32(c as u32);
    }
    Ok(w.finish())
}

pub fn decode_policy(data: &[u8]) -> Result<(PolicyParams, Vec<usize>)> {
    let mut r = Reader::new("policy checkpoint", data);
    r.magic(POLICY_MAGIC, POLICY_VERSION)?;
    let mode = match r.u8()? {
        0 => PolicyMode::Strl,
        1 => PolicyMode::Mtrl,
        m => return Err(r.err(format!("unknown policy mode {m}"))),
    };
    let num_clusters = r.count(0)?;
    let num_relations = r.count(4)?;
    let d = r.count(8)?;
    let width = d.checked_mul(5).ok_or_else(|| r.err("width overflow"))?;
    let u = r.matrix(num_clusters, width)?;
    let v = r.matrix(num_relations, width)?;
    let mut clusters = Vec::with_capacity(num_relations);
    for _ in 0..num_relations {
        let c = r.u32()? as usize;
        if c >= num_clusters.max(1) {
            return Err(r.err(format!("cluster id {c} out of range")));
        }
        clusters.push(c);
    }
    r.end()?;
    Ok((PolicyParams { mode, u, v }, clusters))
}
