//! Synthetic noise with ground-truth labels.
//!
//! Corruptions are slot-constrained: a replacement head (tail) must already
//! occur as a head (tail) of the same relation. This keeps injected triples
//! type-plausible and hard to spot.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{KnowledgeGraph, Triple};
use crate::seed::{child_rng, Rng};

/// Resample budget per required corruption.
pub const DEFAULT_MAX_TRIES: usize = 100;

/// Ground-truth noise flags aligned with a graph's train split.
///
/// Only evaluation reads these. No trainer entry point takes them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseLabels(Vec<bool>);

impl NoiseLabels {
    pub fn new(flags: Vec<bool>) -> Self {
        NoiseLabels(flags)
    }

    pub fn all_clean(n: usize) -> Self {
        NoiseLabels(vec![false; n])
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn noise_count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Pairs each train triple with its label.
    pub fn labeled(&self, graph: &KnowledgeGraph) -> Vec<LabeledTriple> {
        graph
            .train()
            .iter()
            .zip(&self.0)
            .map(|(&triple, &is_noise)| LabeledTriple { triple, is_noise })
            .collect()
    }

    /// One `0`/`1` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.0.len() * 2);
        for &b in &self.0 {
            out.push(if b { '1' } else { '0' });
            out.push('\n');
        }
        out
    }

    pub fn parse(source_name: &str, text: &str) -> Result<Self> {
        parse_flags(source_name, text).map(NoiseLabels)
    }
}

/// Parses a file of `0`/`1` lines (blank lines ignored).
pub fn parse_flags(source_name: &str, text: &str) -> Result<Vec<bool>> {
    let mut out = Vec::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line = raw.trim();
        match line {
            "" => continue,
            "0" => out.push(false),
            "1" => out.push(true),
            other => {
                let shown: String = other.chars().take(16).collect();
                return Err(Error::parse(
                    source_name,
                    idx + 1,
                    format!("expected 0 or 1, found {shown:?}"),
                ));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledTriple {
    pub triple: Triple,
    pub is_noise: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct InjectionReport {
    pub requested: usize,
    pub injected: usize,
    pub skipped: usize,
}

/// Entities seen in the head and tail slot of each relation, in first-seen order.
#[derive(Debug, Clone)]
pub struct SlotIndex {
    heads: Vec<Vec<usize>>,
    tails: Vec<Vec<usize>>,
}

impl SlotIndex {
    pub fn build<'a>(num_relations: usize, triples: impl IntoIterator<Item = &'a Triple>) -> Self {
        let mut heads = vec![Vec::new(); num_relations];
        let mut tails = vec![Vec::new(); num_relations];
        let mut seen_h = HashSet::new();
        let mut seen_t = HashSet::new();
        for t in triples {
            if seen_h.insert((t.relation, t.head)) {
                heads[t.relation].push(t.head);
            }
            if seen_t.insert((t.relation, t.tail)) {
                tails[t.relation].push(t.tail);
            }
        }
        SlotIndex { heads, tails }
    }

    pub fn heads(&self, r: usize) -> &[usize] {
        self.heads.get(r).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn tails(&self, r: usize) -> &[usize] {
        self.tails.get(r).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All legal corruptions of `t` (one slot replaced by a different
    /// slot-compatible entity). Used by tests as an enumeration oracle.
    pub fn corruptions(&self, t: &Triple) -> Vec<Triple> {
        let mut out: Vec<Triple> = self
            .heads(t.relation)
            .iter()
            .filter(|&&h| h != t.head)
            .map(|&h| Triple::new(h, t.relation, t.tail))
            .collect();
        out.extend(
            self.tails(t.relation)
                .iter()
                .filter(|&&e| e != t.tail)
                .map(|&e| Triple::new(t.head, t.relation, e)),
        );
        out
    }

    /// One draw: fair coin for the slot, uniform over that slot's entities.
    /// `None` when the draw reproduces the original entity.
    fn draw(&self, t: &Triple, rng: &mut Rng) -> Option<Triple> {
        let replace_head = rng.gen_bool(0.5);
        let pool = if replace_head {
            self.heads(t.relation)
        } else {
            self.tails(t.relation)
        };
        let &e = pool.choose(rng)?;
        let out = if replace_head {
            Triple::new(e, t.relation, t.tail)
        } else {
            Triple::new(t.head, t.relation, e)
        };
        (out != *t).then_some(out)
    }
}

/// Adds `floor(rate * |train|)` slot-constrained corruptions to train.
///
/// Each injected triple is new with respect to train, valid, test and the
/// other injections. The combined train split is shuffled so position
/// carries no label information. Returns the noisy graph, the label side
/// table aligned with its train split, and the shortfall report.
pub fn inject_noise(
    graph: &KnowledgeGraph,
    rate: f64,
    seed: u64,
) -> Result<(KnowledgeGraph, NoiseLabels, InjectionReport)> {
    inject_noise_with_tries(graph, rate, seed, DEFAULT_MAX_TRIES)
}

pub fn inject_noise_with_tries(
    graph: &KnowledgeGraph,
    rate: f64,
    seed: u64,
    max_tries: usize,
) -> Result<(KnowledgeGraph, NoiseLabels, InjectionReport)> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::invalid(format!("noise rate {rate} not in [0, 1]")));
    }
    let clean = graph.train();
    let requested = (rate * clean.len() as f64).floor() as usize;
    let mut report = InjectionReport {
        requested,
        ..Default::default()
    };
    if requested == 0 {
        return Ok((graph.clone(), NoiseLabels::all_clean(clean.len()), report));
    }

    let mut rng = child_rng(seed, "inject-noise", 0);
    let slots = SlotIndex::build(graph.num_relations(), clean);
    let mut generated = HashSet::with_capacity(requested);
    let mut injected = Vec::with_capacity(requested);
    for _ in 0..requested {
        let mut found = None;
        for _ in 0..max_tries {
            let base = clean[rng.gen_range(0..clean.len())];
            if let Some(c) = slots.draw(&base, &mut rng) {
                if !graph.is_known(&c) && !generated.contains(&c) {
                    found = Some(c);
                    break;
                }
            }
        }
        match found {
            Some(c) => {
                generated.insert(c);
                injected.push(c);
            }
            None => report.skipped += 1,
        }
    }
    report.injected = injected.len();
    if report.skipped > 0 {
        log::warn!(
            "noise injection fell short: {} of {} requested triples skipped",
            report.skipped,
            requested
        );
    }

    let mut rows: Vec<(Triple, bool)> = clean
        .iter()
        .map(|&t| (t, false))
        .chain(injected.into_iter().map(|t| (t, true)))
        .collect();
    rows.shuffle(&mut rng);
    let (train, flags): (Vec<Triple>, Vec<bool>) = rows.into_iter().unzip();
    let noisy = graph.with_train(train)?;
    Ok((noisy, NoiseLabels::new(flags), report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassificationExample {
    pub triple: Triple,
    pub positive: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ClassificationSets {
    pub valid: Vec<ClassificationExample>,
    pub test: Vec<ClassificationExample>,
    /// Positives for which no legal negative was found.
    pub skipped: usize,
}

/// Pairs every valid/test positive with one slot-constrained negative.
///
/// Negatives avoid train ∪ valid ∪ test and each other.
pub fn make_classification_negatives(graph: &KnowledgeGraph, seed: u64) -> ClassificationSets {
    let all: Vec<Triple> = graph
        .train()
        .iter()
        .chain(graph.valid())
        .chain(graph.test())
        .copied()
        .collect();
    let slots = SlotIndex::build(graph.num_relations(), &all);
    let mut used = HashSet::new();
    let mut skipped = 0;
    let mut build = |split: &[Triple], rng: &mut Rng| {
        let mut out = Vec::with_capacity(split.len() * 2);
        for &t in split {
            out.push(ClassificationExample {
                triple: t,
                positive: true,
            });
            let neg = (0..DEFAULT_MAX_TRIES).find_map(|_| {
                slots
                    .draw(&t, rng)
                    .filter(|c| !graph.is_known(c) && !used.contains(c))
            });
            match neg {
                Some(c) => {
                    used.insert(c);
                    out.push(ClassificationExample {
                        triple: c,
                        positive: false,
                    });
                }
                None => skipped += 1,
            }
        }
        out
    };
    let valid = build(
        graph.valid(),
        &mut child_rng(seed, "classification-valid", 0),
    );
    let test = build(graph.test(), &mut child_rng(seed, "classification-test", 0));
    if skipped > 0 {
        log::warn!("{skipped} classification positives have no legal negative");
    }
    ClassificationSets {
        valid,
        test,
        skipped,
    }
}

/// Renders labeled examples as `head<TAB>relation<TAB>tail<TAB>1|-1`.
pub fn classification_tsv(graph: &KnowledgeGraph, examples: &[ClassificationExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        let row = graph.to_tsv(std::slice::from_ref(&ex.triple));
        let _ = writeln!(
            out,
            "{}\t{}",
            row.trim_end(),
            if ex.positive { "1" } else { "-1" }
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate, SyntheticSpec};

    fn toy() -> KnowledgeGraph {
        // a=0 b=1 c=2 d=3
        KnowledgeGraph::from_ids(
            4,
            1,
            vec![Triple::new(0, 0, 1), Triple::new(2, 0, 3)],
            vec![],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn zero_rate_is_identity() {
        let g = toy();
        let (noisy, labels, report) = inject_noise(&g, 0.0, 1).unwrap();
        assert_eq!(noisy.train(), g.train());
        assert_eq!(labels.noise_count(), 0);
        assert_eq!(report.injected, 0);
    }

    #[test]
    fn rate_out_of_range() {
        assert!(inject_noise(&toy(), 1.5, 1).is_err());
        assert!(inject_noise(&toy(), -0.1, 1).is_err());
    }

    #[test]
    fn toy_graph_injects_one_legal_corruption() {
        let g = toy();
        // brute-force enumeration of legal corruptions
        let slots = SlotIndex::build(1, g.train());
        let mut legal: Vec<Triple> = g
            .train()
            .iter()
            .flat_map(|t| slots.corruptions(t))
            .filter(|c| !g.is_known(c))
            .collect();
        legal.sort();
        legal.dedup();
        assert_eq!(legal, vec![Triple::new(0, 0, 3), Triple::new(2, 0, 1)]);

        for seed in 0..20 {
            let (noisy, labels, report) = inject_noise(&g, 0.5, seed).unwrap();
            assert_eq!(report.injected, 1);
            assert_eq!(noisy.train().len(), 3);
            let noise: Vec<Triple> = labels
                .labeled(&noisy)
                .into_iter()
                .filter(|l| l.is_noise)
                .map(|l| l.triple)
                .collect();
            assert_eq!(noise.len(), 1);
            assert!(legal.contains(&noise[0]));
        }
    }

    #[test]
    fn impossible_corruption_is_skipped_and_reported() {
        // single head, single tail: nothing to swap in
        let g = KnowledgeGraph::from_ids(2, 1, vec![Triple::new(0, 0, 1)], vec![], vec![]).unwrap();
        let (noisy, labels, report) = inject_noise(&g, 1.0, 3).unwrap();
        assert_eq!(report.requested, 1);
        assert_eq!(report.skipped, 1);
        assert_eq!(report.injected, 0);
        assert_eq!(noisy.train().len(), 1);
        assert_eq!(labels.noise_count(), 0);
    }

    #[test]
    fn injection_invariants_on_synthetic_graph() {
        let g = generate(&SyntheticSpec::small(), 5);
        let (noisy, labels, report) = inject_noise(&g, 0.2, 11).unwrap();
        assert_eq!(
            report.requested,
            (0.2 * g.train().len() as f64).floor() as usize
        );
        assert_eq!(report.injected + report.skipped, report.requested);
        assert_eq!(labels.len(), noisy.train().len());
        assert_eq!(labels.noise_count(), report.injected);
        let slots = SlotIndex::build(g.num_relations(), g.train());
        let mut seen = HashSet::new();
        for l in labels.labeled(&noisy) {
            assert!(seen.insert(l.triple));
            if l.is_noise {
                assert!(!g.is_known(&l.triple));
                // exactly one slot replaced, with a slot-compatible entity
                let t = l.triple;
                let head_ok = slots.heads(t.relation).contains(&t.head);
                let tail_ok = slots.tails(t.relation).contains(&t.tail);
                assert!(head_ok && tail_ok);
                assert!(noisy.is_known(&t));
            } else {
                assert!(g.is_known(&l.triple));
            }
        }
        let (again, labels2, _) = inject_noise(&g, 0.2, 11).unwrap();
        assert_eq!(again.train(), noisy.train());
        assert_eq!(labels2, labels);
    }

    #[test]
    fn classification_negative_single_legal() {
        // a=0 b=1 c=2 d=3; only (a, r, d) is a legal corruption of (a, r, b)
        let g = KnowledgeGraph::from_ids(
            4,
            1,
            vec![Triple::new(2, 0, 3), Triple::new(2, 0, 1)],
            vec![],
            vec![Triple::new(0, 0, 1)],
        )
        .unwrap();
        let all: Vec<Triple> = g.train().iter().chain(g.test()).copied().collect();
        let slots = SlotIndex::build(1, &all);
        let legal: Vec<Triple> = slots
            .corruptions(&Triple::new(0, 0, 1))
            .into_iter()
            .filter(|c| !g.is_known(c))
            .collect();
        assert_eq!(legal, vec![Triple::new(0, 0, 3)]);

        let sets = make_classification_negatives(&g, 9);
        assert!(sets.valid.is_empty());
        assert_eq!(
            sets.test,
            vec![
                ClassificationExample {
                    triple: Triple::new(0, 0, 1),
                    positive: true
                },
                ClassificationExample {
                    triple: Triple::new(0, 0, 3),
                    positive: false
                },
            ]
        );
    }

    #[test]
    fn classification_sets_are_balanced() {
        let g = generate(&SyntheticSpec::small(), 2);
        let sets = make_classification_negatives(&g, 4);
        assert_eq!(sets.skipped, 0);
        assert_eq!(sets.test.len(), 2 * g.test().len());
        assert_eq!(sets.valid.len(), 2 * g.valid().len());
        let negs = sets.test.iter().filter(|e| !e.positive).count();
        assert_eq!(negs, g.test().len());
        for e in sets.test.iter().chain(&sets.valid) {
            assert_eq!(e.positive, g.is_known(&e.triple));
        }
    }

    #[test]
    fn label_file_parsing() {
        let labels = NoiseLabels::new(vec![true, false, true]);
        assert_eq!(NoiseLabels::parse("x", &labels.to_text()).unwrap(), labels);
        assert!(matches!(
            NoiseLabels::parse("x", "0\n2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
