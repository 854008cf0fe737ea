//! Rule-generated knowledge graphs for tests and the desk-scale experiment.
//!
//! Entities are partitioned into types, each type into equal communities.
//! Every relation links a head type to a different tail type, and community
//! `i` of the head type always links into community `i` of the tail type,
//! so the graph has a geometry that translation-style models can fit. A
//! head is linked to `fanout` distinct tails of its target community, drawn
//! with Zipf-like weights over a per-relation popularity order, so some
//! entities are much more popular than others, as in real KGs.
//!
//! Slot-constrained corruptions of this graph usually cross communities,
//! which is what makes injected noise detectable in principle.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::graph::{KnowledgeGraph, Triple};
use crate::seed::child_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_types: usize,
    pub communities_per_type: usize,
    pub entities_per_community: usize,
    pub num_relations: usize,
    pub fanout: usize,
    pub valid_fraction: f64,
    pub test_fraction: f64,
}

impl SyntheticSpec {
    /// 200 entities, 20 relations, 3000 triples.
    pub fn desk() -> Self {
        SyntheticSpec {
            num_types: 4,
            communities_per_type: 5,
            entities_per_community: 10,
            num_relations: 20,
            fanout: 3,
            valid_fraction: 0.05,
            test_fraction: 0.05,
        }
    }

    /// 40 entities, 4 relations, 240 triples.
    pub fn small() -> Self {
        SyntheticSpec {
            num_types: 2,
            communities_per_type: 4,
            entities_per_community: 5,
            num_relations: 4,
            fanout: 3,
            valid_fraction: 0.1,
            test_fraction: 0.1,
        }
    }

    pub fn num_entities(&self) -> usize {
        self.num_types * self.communities_per_type * self.entities_per_community
    }

    fn entities_per_type(&self) -> usize {
        self.communities_per_type * self.entities_per_community
    }
}

/// Generates the clean graph. Deterministic in `(spec, seed)`.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> KnowledgeGraph {
    let mut rng = child_rng(seed, "synthetic", 0);
    let per_type = spec.entities_per_type();
    let per_comm = spec.entities_per_community;
    let fanout = spec.fanout.min(per_comm);

    // popularity weights by position inside a community
    let weights: Vec<f64> = (0..per_comm).map(|i| 1.0 / (i as f64 + 1.0)).collect();

    let mut triples = Vec::with_capacity(spec.num_relations * per_type * fanout);
    for r in 0..spec.num_relations {
        let head_type = rng.gen_range(0..spec.num_types);
        let mut tail_type = rng.gen_range(0..spec.num_types);
        if spec.num_types > 1 && tail_type == head_type {
            tail_type = (tail_type + 1) % spec.num_types;
        }
        // per-relation popularity order inside each community
        let mut order: Vec<usize> = (0..per_comm).collect();
        order.shuffle(&mut rng);

        for local in 0..per_type {
            let head = head_type * per_type + local;
            let comm = local / per_comm;
            let base = tail_type * per_type + comm * per_comm;
            let mut pool: Vec<usize> = (0..per_comm).collect();
            let mut w = weights.clone();
            for _ in 0..fanout {
                let total: f64 = w.iter().sum();
                let mut x = rng.gen::<f64>() * total;
                let mut pick = w.len() - 1;
                for (i, wi) in w.iter().enumerate() {
                    if x < *wi {
                        pick = i;
                        break;
                    }
                    x -= wi;
                }
                let slot = pool.remove(pick);
                w.remove(pick);
                let tail = base + order[slot];
                if tail != head {
                    triples.push(Triple::new(head, r, tail));
                }
            }
        }
    }

    triples.shuffle(&mut rng);
    let n = triples.len();
    let n_valid = (spec.valid_fraction * n as f64).round() as usize;
    let n_test = (spec.test_fraction * n as f64).round() as usize;
    let test = triples.split_off(n - n_test);
    let valid = triples.split_off(n - n_test - n_valid);
    KnowledgeGraph::from_ids(
        spec.num_entities(),
        spec.num_relations,
        triples,
        valid,
        test,
    )
    .expect("generator emits in-range, duplicate-free triples")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_graph_shape() {
        let spec = SyntheticSpec::desk();
        let g = generate(&spec, 7);
        assert_eq!(g.num_entities(), 200);
        assert_eq!(g.num_relations(), 20);
        let total = g.train().len() + g.valid().len() + g.test().len();
        assert!((2900..=3000).contains(&total), "{total}");
        assert_eq!(g.test().len(), 150);
    }

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec::small();
        let a = generate(&spec, 3);
        let b = generate(&spec, 3);
        assert_eq!(a.train(), b.train());
        assert_eq!(a.test(), b.test());
        let c = generate(&spec, 4);
        assert_ne!(a.train(), c.train());
    }
}
