//! Noise-detection F1, filtered link prediction and triple classification.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{KnowledgeGraph, Triple};
use crate::models::EmbeddingStore;
use crate::noise::{ClassificationExample, NoiseLabels};
use crate::trainer::{lowest_first, SelectionMask};

/// F1 of predicted-noise flags against the labels; 0 when precision and
/// recall are both 0.
pub fn f1_of_flags(predicted_noise: &[bool], labels: &NoiseLabels) -> Result<f64> {
    check_labels(predicted_noise.len(), labels)?;
    let mut tp = 0usize;
    let mut predicted = 0usize;
    for (&p, &l) in predicted_noise.iter().zip(labels.flags()) {
        predicted += p as usize;
        tp += (p && l) as usize;
    }
    Ok(f1(tp, predicted, labels.noise_count()))
}

fn f1(tp: usize, predicted: usize, actual: usize) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / predicted as f64;
    let recall = tp as f64 / actual as f64;
    2.0 * precision * recall / (precision + recall)
}

fn check_labels(n: usize, labels: &NoiseLabels) -> Result<()> {
    if n != labels.len() {
        return Err(Error::invalid(format!(
            "{n} predictions but {} labels",
            labels.len()
        )));
    }
    if labels.noise_count() == 0 {
        return Err(Error::invalid("labels contain no noise triples"));
    }
    Ok(())
}

/// F1 of a hard selection: unselected triples are the predicted noise.
pub fn mask_f1(mask: &SelectionMask, labels: &NoiseLabels) -> Result<f64> {
    let flags: Vec<bool> = mask.kept().iter().map(|&k| !k).collect();
    f1_of_flags(&flags, labels)
}

/// Maximum F1 over thresholds `τ` taken from the distinct score values,
/// flagging triples with `score < τ` as noise.
///
/// On 0/1 scores this equals the F1 of the corresponding hard mask, as
/// long as the mask keeps at least one triple.
pub fn max_f1_sweep(scores: &[f64], labels: &NoiseLabels) -> Result<f64> {
    check_labels(scores.len(), labels)?;
    let order = lowest_first(scores);
    let flags = labels.flags();
    let actual = labels.noise_count();
    let mut best = 0.0f64;
    let (mut tp, mut predicted) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        // flags so far are exactly those strictly below scores[order[i]]
        best = best.max(f1(tp, predicted, actual));
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]].total_cmp(&s).is_eq() {
            predicted += 1;
            tp += flags[order[i]] as usize;
            i += 1;
        }
    }
    Ok(best)
}

/// F1 when the `k` lowest-scored triples (stable order) are flagged.
pub fn lowest_k_f1(scores: &[f64], labels: &NoiseLabels, k: usize) -> Result<f64> {
    let mut flags = vec![false; scores.len()];
    for &i in lowest_first(scores).iter().take(k) {
        flags[i] = true;
    }
    f1_of_flags(&flags, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Head,
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QueryRank {
    pub triple: Triple,
    pub side: Side,
    pub filtered: usize,
    pub raw: usize,
}

/// Pessimistic ranks of the true entity for the head and tail query of
/// every triple, in input order (tail query first).
///
/// A candidate counts against the true entity unless its score is strictly
/// lower; NaN scores therefore rank worst. The filtered rank skips
/// candidates that form a known positive.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn rank_queries<F>(scorer: F, graph: &KnowledgeGraph, triples: &[Triple]) -> Vec<QueryRank>
where
    F: Fn(&Triple) -> f64 + Sync,
{
    let n = graph.num_entities();
    triples
        .par_iter()
        .flat_map_iter(|&t| {
            let truth = scorer(&t);
            [Side::Tail, Side::Head]
                .into_iter()
                .map(move |side| (t, truth, side))
        })
        .map(|(t, truth, side)| {
            let (mut raw, mut filtered) = (1, 1);
            for e in 0..n {
                let cand = match side {
                    Side::Tail if e != t.tail => Triple::new(t.head, t.relation, e),
                    Side::Head if e != t.head => Triple::new(e, t.relation, t.tail),
                    _ => continue,
                };
                if !(scorer(&cand) < truth) {
                    raw += 1;
                    if !graph.is_known(&cand) {
                        filtered += 1;
                    }
                }
            }
            QueryRank {
                triple: t,
                side,
                filtered,
                raw,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hits {
    #[serde(rename = "1")]
    pub at1: f64,
    #[serde(rename = "3")]
    pub at3: f64,
    #[serde(rename = "10")]
    pub at10: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankingMetrics {
    pub queries: usize,
    pub mrr: f64,
    pub hits: Hits,
}

impl RankingMetrics {
    /// Aggregates ranks in the given order.
    pub fn from_ranks(ranks: impl IntoIterator<Item = usize>) -> Self {
        let (mut q, mut rr, mut h1, mut h3, mut h10) = (0usize, 0.0, 0usize, 0usize, 0usize);
        for rank in ranks {
            q += 1;
            rr += 1.0 / rank as f64;
            h1 += (rank <= 1) as usize;
            h3 += (rank <= 3) as usize;
            h10 += (rank <= 10) as usize;
        }
        let frac = |x: usize| if q == 0 { 0.0 } else { x as f64 / q as f64 };
        RankingMetrics {
            queries: q,
            mrr: if q == 0 { 0.0 } else { rr / q as f64 },
            hits: Hits {
                at1: frac(h1),
                at3: frac(h3),
                at10: frac(h10),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationMetrics {
    pub relation: String,
    #[serde(flatten)]
    pub metrics: RankingMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkPrediction {
    pub filtered: RankingMetrics,
    pub raw: RankingMetrics,
    pub per_relation: Vec<RelationMetrics>,
}

/// Filtered and raw link prediction over the test split.
pub fn link_prediction(store: &EmbeddingStore, graph: &KnowledgeGraph) -> Result<LinkPrediction> {
    if graph.test().is_empty() {
        return Err(Error::invalid("test split is empty"));
    }
    let ranks = rank_queries(|t| store.score(t), graph, graph.test());
    let per_relation = (0..graph.num_relations())
        .filter_map(|r| {
            let m = RankingMetrics::from_ranks(
                ranks
                    .iter()
                    .filter(|q| q.triple.relation == r)
                    .map(|q| q.filtered),
            );
            (m.queries > 0).then(|| RelationMetrics {
                relation: graph.relations().name(r).unwrap_or("?").to_string(),
                metrics: m,
            })
        })
        .collect();
    Ok(LinkPrediction {
        filtered: RankingMetrics::from_ranks(ranks.iter().map(|q| q.filtered)),
        raw: RankingMetrics::from_ranks(ranks.iter().map(|q| q.raw)),
        per_relation,
    })
}

/// Threshold maximising accuracy of `score > τ ⇔ positive`, scanning
/// midpoints between consecutive distinct scores plus one point below the
/// minimum and one above the maximum. Ties go to the smallest threshold.
pub fn best_threshold(scored: &[(f64, bool)]) -> f64 {
    assert!(!scored.is_empty(), "threshold needs at least one example");
    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lo = sorted[0].0;
    let hi = sorted[sorted.len() - 1].0;
    // τ below everything: all predicted positive
    let mut correct = sorted.iter().filter(|x| x.1).count();
    let mut best = (correct, lo - 1.0);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0.total_cmp(&s).is_eq() {
            // this example flips to negative
            if sorted[i].1 {
                correct -= 1;
            } else {
                correct += 1;
            }
            i += 1;
        }
        let tau = if i < sorted.len() {
            s + (sorted[i].0 - s) / 2.0
        } else {
            hi + 1.0
        };
        if correct > best.0 {
            best = (correct, tau);
        }
    }
    best.1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub accuracy: f64,
    pub global_threshold: f64,
    /// Per relation id; `None` means the global threshold was used.
    pub thresholds: Vec<Option<f64>>,
}

/// Test accuracy with per-relation thresholds tuned on `valid`.
pub fn triple_classification<F>(
    scorer: F,
    num_relations: usize,
    valid: &[ClassificationExample],
    test: &[ClassificationExample],
) -> Result<Classification>
where
    F: Fn(&Triple) -> f64,
{
    if valid.is_empty() || test.is_empty() {
        return Err(Error::invalid(
            "classification needs nonempty valid and test sets",
        ));
    }
    let scored: Vec<(usize, f64, bool)> = valid
        .iter()
        .map(|ex| (ex.triple.relation, scorer(&ex.triple), ex.positive))
        .collect();
    let global = best_threshold(&scored.iter().map(|&(_, s, p)| (s, p)).collect::<Vec<_>>());
    let thresholds: Vec<Option<f64>> = (0..num_relations)
        .map(|r| {
            let mine: Vec<(f64, bool)> = scored
                .iter()
                .filter(|x| x.0 == r)
                .map(|&(_, s, p)| (s, p))
                .collect();
            (!mine.is_empty()).then(|| best_threshold(&mine))
        })
        .collect();
    let correct = test
        .iter()
        .filter(|ex| {
            let tau = thresholds
                .get(ex.triple.relation)
                .copied()
                .flatten()
                .unwrap_or(global);
            (scorer(&ex.triple) > tau) == ex.positive
        })
        .count();
    Ok(Classification {
        accuracy: correct as f64 / test.len() as f64,
        global_threshold: global,
        thresholds,
    })
}

/// Everything `evaluate` reports. Optional parts are omitted from JSON
/// when their inputs were not supplied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub mrr: f64,
    pub hits: Hits,
    pub queries: usize,
    pub raw_mrr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification_accuracy: Option<f64>,
    pub per_relation: Vec<RelationMetrics>,
}

impl EvalReport {
    pub fn new(lp: LinkPrediction) -> Self {
        EvalReport {
            mrr: lp.filtered.mrr,
            hits: lp.filtered.hits,
            queries: lp.filtered.queries,
            raw_mrr: lp.raw.mrr,
            noise_f1: None,
            classification_accuracy: None,
            per_relation: lp.per_relation,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    /// Per-relation table: `relation,queries,mrr,hits1,hits3,hits10`.
    pub fn per_relation_csv(&self) -> String {
        let mut out = String::from("relation,queries,mrr,hits1,hits3,hits10\n");
        for r in &self.per_relation {
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.relation, m.queries, m.mrr, m.hits.at1, m.hits.at3, m.hits.at10
            );
        }
        out
    }
}
