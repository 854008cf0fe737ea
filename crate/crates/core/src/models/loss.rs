use std::collections::{BTreeMap, HashSet};

use rand::Rng as _;

use crate::graph::{KnowledgeGraph, Triple};
use crate::seed::Rng;

use super::score::{accumulate_score_grad, score};
use super::{EmbeddingStore, ModelKind};

/// Draws per negative before the last draw is accepted even if it is a
/// known positive.
pub const MAX_NEGATIVE_TRIES: usize = 10;

/// What negative sampling needs to know about the graph.
#[derive(Debug, Clone, Copy)]
pub struct CorruptionSpace<'a> {
    pub num_entities: usize,
    pub known: &'a HashSet<Triple>,
}

impl<'a> CorruptionSpace<'a> {
    pub fn of(graph: &'a KnowledgeGraph) -> Self {
        CorruptionSpace {
            num_entities: graph.num_entities(),
            known: graph.known(),
        }
    }
}

/// Replaces head or tail (fair coin) with a different uniformly drawn
/// entity, redrawing while the result is a known positive.
///
/// Needs at least two entities. The result always differs from `t` in
/// exactly one slot.
pub fn sample_negative(space: &CorruptionSpace<'_>, t: &Triple, rng: &mut Rng) -> Triple {
    assert!(space.num_entities >= 2, "negative sampling needs |E| >= 2");
    let mut last = *t;
    for _ in 0..MAX_NEGATIVE_TRIES {
        let replace_head = rng.gen_bool(0.5);
        let original = if replace_head { t.head } else { t.tail };
        let mut e = rng.gen_range(0..space.num_entities - 1);
        if e >= original {
            e += 1;
        }
        last = if replace_head {
            Triple::new(e, t.relation, t.tail)
        } else {
            Triple::new(t.head, t.relation, e)
        };
        if !space.known.contains(&last) {
            return last;
        }
    }
    log::trace!("no unknown corruption of {t:?} after {MAX_NEGATIVE_TRIES} draws");
    last
}

/// A positive and its sampled negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub positive: Triple,
    pub negatives: Vec<Triple>,
}

pub fn sample_batch(
    kind: &ModelKind,
    space: &CorruptionSpace<'_>,
    positives: &[Triple],
    rng: &mut Rng,
) -> Vec<Sample> {
    let k = kind.negatives();
    positives
        .iter()
        .map(|p| Sample {
            positive: *p,
            negatives: (0..k).map(|_| sample_negative(space, p, rng)).collect(),
        })
        .collect()
}

/// Gradients for the rows a batch touched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseGrad {
    pub entities: BTreeMap<usize, Vec<f64>>,
    pub relations: BTreeMap<usize, Vec<f64>>,
}

impl SparseGrad {
    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.relations.is_empty()
    }
}

struct Accumulator<'s> {
    store: &'s EmbeddingStore,
    grad: SparseGrad,
    head: Vec<f64>,
    rel: Vec<f64>,
    tail: Vec<f64>,
}

impl<'s> Accumulator<'s> {
    fn new(store: &'s EmbeddingStore) -> Self {
        let ew = store.entities.cols();
        let rw = store.relations.cols();
        Accumulator {
            store,
            grad: SparseGrad::default(),
            head: vec![0.0; ew],
            rel: vec![0.0; rw],
            tail: vec![0.0; ew],
        }
    }

    /// Marks the rows of `t` as touched without adding anything.
    fn touch(&mut self, t: &Triple) {
        let ew = self.head.len();
        let rw = self.rel.len();
        self.grad
            .entities
            .entry(t.head)
            .or_insert_with(|| vec![0.0; ew]);
        self.grad
            .entities
            .entry(t.tail)
            .or_insert_with(|| vec![0.0; ew]);
        self.grad
            .relations
            .entry(t.relation)
            .or_insert_with(|| vec![0.0; rw]);
    }

    /// Adds `coeff * ∇score(t)`.
    fn add(&mut self, t: &Triple, coeff: f64) {
        self.touch(t);
        if coeff == 0.0 {
            return;
        }
        self.head.fill(0.0);
        self.rel.fill(0.0);
        self.tail.fill(0.0);
        accumulate_score_grad(
            self.store,
            t,
            coeff,
            &mut self.head,
            &mut self.rel,
            &mut self.tail,
        );
        add_into(self.grad.entities.get_mut(&t.head).unwrap(), &self.head);
        add_into(self.grad.entities.get_mut(&t.tail).unwrap(), &self.tail);
        add_into(self.grad.relations.get_mut(&t.relation).unwrap(), &self.rel);
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Loss and gradient of a pre-sampled batch.
///
/// * TransE: `Σ [f(neg) - f(pos) + γ]₊`
/// * DistMult: `Σ softplus(-y·f)` over each positive (y = 1) and its
///   negatives (y = -1), plus `l2 · Σ ‖row‖²` over the distinct rows touched
/// * RotatE: `Σ -log σ(η + f(pos)) - (1/k) Σ log σ(-η - f(neg))`
///
/// Deterministic: the sampling randomness lives in [`sample_batch`].
pub fn batch_loss_and_grad(store: &EmbeddingStore, samples: &[Sample]) -> (f64, SparseGrad) {
    let mut acc = Accumulator::new(store);
    let mut loss = 0.0;
    match store.kind {
        ModelKind::TransE { margin, .. } => {
            for s in samples {
                let fp = score(store, &s.positive);
                acc.touch(&s.positive);
                for n in &s.negatives {
                    let fn_ = score(store, n);
                    let m = fn_ - fp + margin;
                    if m > 0.0 {
                        loss += m;
                        acc.add(n, 1.0);
                        acc.add(&s.positive, -1.0);
                    } else {
                        acc.touch(n);
                    }
                }
            }
        }
        ModelKind::DistMult { l2, .. } => {
            for s in samples {
                let fp = score(store, &s.positive);
                loss += softplus(-fp);
                acc.add(&s.positive, -sigmoid(-fp));
                for n in &s.negatives {
                    let fn_ = score(store, n);
                    loss += softplus(fn_);
                    acc.add(n, sigmoid(fn_));
                }
            }
            if l2 > 0.0 {
                for (&e, g) in acc.grad.entities.iter_mut() {
                    let row = store.entities.row(e);
                    loss += l2 * row.iter().map(|x| x * x).sum::<f64>();
                    for (gi, xi) in g.iter_mut().zip(row) {
                        *gi += 2.0 * l2 * xi;
                    }
                }
                for (&r, g) in acc.grad.relations.iter_mut() {
                    let row = store.relations.row(r);
                    loss += l2 * row.iter().map(|x| x * x).sum::<f64>();
                    for (gi, xi) in g.iter_mut().zip(row) {
                        *gi += 2.0 * l2 * xi;
                    }
                }
            }
        }
        ModelKind::RotatE { margin, .. } => {
            for s in samples {
                let fp = score(store, &s.positive);
                // -log σ(x) = softplus(-x)
                loss += softplus(-(margin + fp));
                acc.add(&s.positive, -sigmoid(-(margin + fp)));
                let k = s.negatives.len().max(1) as f64;
                for n in &s.negatives {
                    let fn_ = score(store, n);
                    loss += softplus(margin + fn_) / k;
                    acc.add(n, sigmoid(margin + fn_) / k);
                }
            }
        }
    }
    (loss, acc.grad)
}

/// Samples negatives for `positives` and returns the batch loss and gradient.
pub fn loss_and_grad(
    store: &EmbeddingStore,
    space: &CorruptionSpace<'_>,
    positives: &[Triple],
    rng: &mut Rng,
) -> (f64, SparseGrad) {
    let samples = sample_batch(&store.kind, space, positives, rng);
    batch_loss_and_grad(store, &samples)
}
