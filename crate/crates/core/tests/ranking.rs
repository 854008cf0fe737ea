mod common;

use common::oracles::{brute_force_rank, random_graph, transe_l1};
use kgrl_core::evaluation::{rank_queries, RankingMetrics, Side};
use kgrl_core::models::{EmbeddingStore, ModelKind, Norm};

const KIND: ModelKind = ModelKind::TransE {
    norm: Norm::L1,
    margin: 1.0,
};

#[test]
fn filtered_ranks_match_brute_force() {
    for seed in 0..10 {
        let g = random_graph(seed);
        let store = EmbeddingStore::init(g.num_entities(), g.num_relations(), 8, KIND, seed);
        let ranks = rank_queries(|t| store.score(t), &g, g.test());
        assert_eq!(ranks.len(), 2 * g.test().len());
        for q in &ranks {
            let expected = brute_force_rank(&store, &g, q.triple, q.side == Side::Head);
            assert_eq!(q.filtered, expected, "seed {seed} {:?}", q);
        }
    }
}

#[test]
fn oracle_scorer_agrees_with_store() {
    let g = random_graph(3);
    let store = EmbeddingStore::init(g.num_entities(), g.num_relations(), 8, KIND, 3);
    for t in g.train() {
        assert_eq!(transe_l1(&store, t), store.score(t));
    }
}

#[test]
fn hits_are_monotone_and_bound_mrr() {
    for seed in 0..10 {
        let g = random_graph(seed);
        let store = EmbeddingStore::init(g.num_entities(), g.num_relations(), 4, KIND, seed + 100);
        let ranks = rank_queries(|t| store.score(t), &g, g.test());
        let m = RankingMetrics::from_ranks(ranks.iter().map(|q| q.filtered));
        assert!(m.hits.at1 <= m.hits.at3 && m.hits.at3 <= m.hits.at10);
        assert!(m.mrr > 0.0 && m.mrr <= 1.0);
        assert!(m.hits.at1 <= m.mrr);
        for q in &ranks {
            assert!(q.filtered <= q.raw);
        }
    }
}
