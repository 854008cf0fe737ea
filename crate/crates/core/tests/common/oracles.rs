//! Reference computations written independently of the library code paths
//! they check: central finite differences and a brute-force ranker.

#![allow(dead_code)]

use kgrl_core::agent::{
    regularizer, reinforce_update, sample_trajectory, surrogate_objective, PolicyMode, PolicyParams,
};
use kgrl_core::graph::{KnowledgeGraph, Triple};
use kgrl_core::models::{batch_loss_and_grad, EmbeddingStore, Matrix, ModelKind, Norm, Sample};
use kgrl_core::seed::rng_from_seed;
use rand::Rng as _;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;

/// `‖a - n‖ / max(‖a‖, ‖n‖)`, or 0 when both vanish.
pub fn rel_err(a: &[f64], n: &[f64]) -> f64 {
    let norm = |x: &mut dyn Iterator<Item = f64>| x.map(|v| v * v).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(n).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()).max(norm(&mut n.iter().copied()));
    if scale < 1e-12 {
        0.0
    } else {
        diff / scale
    }
}

fn central<F: FnMut(f64) -> f64>(mut f: F, x: f64) -> f64 {
    (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
}

pub fn kind_name(kind: &ModelKind) -> String {
    match kind {
        ModelKind::TransE { norm: Norm::L1, .. } => "TransE-L1".into(),
        ModelKind::TransE { norm: Norm::L2, .. } => "TransE-L2".into(),
        ModelKind::DistMult { .. } => "DistMult+L2".into(),
        ModelKind::RotatE { .. } => "RotatE".into(),
    }
}

/// The kinds covered by the gradient checks.
pub fn gradient_kinds() -> Vec<ModelKind> {
    vec![
        ModelKind::TransE {
            norm: Norm::L1,
            margin: 5.0,
        },
        ModelKind::TransE {
            norm: Norm::L2,
            margin: 5.0,
        },
        ModelKind::DistMult {
            l2: 0.1,
            negatives: 3,
        },
        ModelKind::RotatE {
            margin: 5.0,
            negatives: 3,
        },
    ]
}

/// Distance of the instance from the nearest nondifferentiable point.
fn kink_distance(store: &EmbeddingStore, samples: &[Sample]) -> f64 {
    let mut best = f64::INFINITY;
    let d = store.dim;
    let residual_kink = |t: &Triple, best: &mut f64| {
        let h = store.entities.row(t.head);
        let r = store.relations.row(t.relation);
        let e = store.entities.row(t.tail);
        match store.kind {
            ModelKind::TransE { norm: Norm::L1, .. } => {
                for i in 0..d {
                    *best = best.min((h[i] + r[i] - e[i]).abs());
                }
            }
            ModelKind::TransE { norm: Norm::L2, .. } => {
                let n: f64 = (0..d).map(|i| (h[i] + r[i] - e[i]).powi(2)).sum();
                *best = best.min(n.sqrt());
            }
            ModelKind::RotatE { .. } => {
                for i in 0..d {
                    let (c, s) = (r[i].cos(), r[i].sin());
                    let a = h[i] * c - h[d + i] * s - e[i];
                    let b = h[i] * s + h[d + i] * c - e[d + i];
                    *best = best.min(a.hypot(b));
                }
            }
            ModelKind::DistMult { .. } => {}
        }
    };
    for s in samples {
        residual_kink(&s.positive, &mut best);
        for n in &s.negatives {
            residual_kink(n, &mut best);
            if let ModelKind::TransE { margin, .. } = store.kind {
                let hinge = store.score(n) - store.score(&s.positive) + margin;
                best = best.min(hinge.abs());
            }
        }
    }
    best
}

/// A random store and batch, redrawn until it sits away from every kink.
pub fn random_instance(kind: ModelKind, dim: usize, seed: u64) -> (EmbeddingStore, Vec<Sample>) {
    let mut attempt = 0u64;
    loop {
        let s = seed * 1000 + attempt;
        let store = EmbeddingStore::init(6, 3, dim, kind, s);
        let mut rng = rng_from_seed(s ^ 0x5eed);
        let samples: Vec<Sample> = (0..3)
            .map(|_| {
                let positive = Triple::new(
                    rng.gen_range(0..6),
                    rng.gen_range(0..3),
                    rng.gen_range(0..6),
                );
                let negatives = (0..kind.negatives())
                    .map(|_| {
                        if rng.gen::<bool>() {
                            Triple::new(rng.gen_range(0..6), positive.relation, positive.tail)
                        } else {
                            Triple::new(positive.head, positive.relation, rng.gen_range(0..6))
                        }
                    })
                    .collect();
                Sample {
                    positive,
                    negatives,
                }
            })
            .collect();
        if kink_distance(&store, &samples) > 10.0 * FD_STEP {
            return (store, samples);
        }
        attempt += 1;
    }
}

/// Relative error between the analytic batch gradient and central
/// differences over every entry of every entity and relation row.
pub fn loss_gradient_error(store: &EmbeddingStore, samples: &[Sample]) -> f64 {
    let (_, grad) = batch_loss_and_grad(store, samples);
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    let mut probe = store.clone();
    for (is_entity, rows) in [(true, store.num_entities()), (false, store.num_relations())] {
        for row in 0..rows {
            let width = if is_entity {
                store.entities.cols()
            } else {
                store.relations.cols()
            };
            let g = if is_entity {
                grad.entities.get(&row)
            } else {
                grad.relations.get(&row)
            };
            for col in 0..width {
                analytic.push(g.map_or(0.0, |g| g[col]));
                let x0 = if is_entity {
                    store.entities.row(row)[col]
                } else {
                    store.relations.row(row)[col]
                };
                numeric.push(central(
                    |x| {
                        if is_entity {
                            probe.entities.row_mut(row)[col] = x;
                        } else {
                            probe.relations.row_mut(row)[col] = x;
                        }
                        batch_loss_and_grad(&probe, samples).0
                    },
                    x0,
                ));
                if is_entity {
                    probe.entities.row_mut(row)[col] = x0;
                } else {
                    probe.relations.row_mut(row)[col] = x0;
                }
            }
        }
    }
    rel_err(&analytic, &numeric)
}

/// Policy-gradient check: the ascent direction applied by
/// `reinforce_update` (λ = 0, lr = 1) against central differences of the
/// surrogate `R · Σ log π`. Checks `v` (and `u` in multi-task mode).
pub fn policy_gradient_error(mode: PolicyMode, dim: usize, seed: u64) -> f64 {
    let kind = ModelKind::TransE {
        norm: Norm::L1,
        margin: 1.0,
    };
    let store = EmbeddingStore::init(10, 2, dim, kind, seed);
    let mut rng = rng_from_seed(seed);
    let mut params = PolicyParams::new(mode, 1, 2, dim);
    for x in params
        .v
        .as_mut_slice()
        .iter_mut()
        .chain(params.u.as_mut_slice())
    {
        *x = rng.gen_range(-0.3..0.3);
    }
    if mode == PolicyMode::Strl {
        params.u.as_mut_slice().fill(0.0);
    }
    let clusters = vec![0, 0];
    let triples: Vec<Triple> = (0..8).map(|i| Triple::new(i, 1, (i + 3) % 10)).collect();
    let (traj, _) = sample_trajectory(&params, &clusters, &store, 1, &triples, &mut rng);
    let reward = rng.gen_range(-3.0..-0.5);

    let mut updated = params.clone();
    reinforce_update(&mut updated, &clusters, &traj, reward, 0.0, 0.0, 1.0).unwrap();

    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    let mut probe = params.clone();
    let mut fd = |probe: &mut PolicyParams, m: fn(&mut PolicyParams) -> &mut Matrix, row: usize| {
        for col in 0..m(probe).cols() {
            let x0 = m(probe).row(row)[col];
            numeric.push(central(
                |x| {
                    m(probe).row_mut(row)[col] = x;
                    surrogate_objective(probe, &clusters, &traj, reward)
                },
                x0,
            ));
            m(probe).row_mut(row)[col] = x0;
        }
    };
    fd(&mut probe, |p| &mut p.v, 1);
    for (new, old) in updated.v.row(1).iter().zip(params.v.row(1)) {
        analytic.push(new - old);
    }
    if mode == PolicyMode::Mtrl {
        fd(&mut probe, |p| &mut p.u, 0);
        for (new, old) in updated.u.row(0).iter().zip(params.u.row(0)) {
            analytic.push(new - old);
        }
    }
    rel_err(&analytic, &numeric)
}

fn pick(p: &mut PolicyParams, which: usize) -> &mut Matrix {
    if which == 0 {
        &mut p.u
    } else {
        &mut p.v
    }
}

/// Regularizer check: the decay applied by a zero-reward update against
/// central differences of `λ1‖u_c‖² + λ2‖v_r‖²`.
pub fn regularizer_gradient_error(dim: usize, seed: u64) -> f64 {
    let kind = ModelKind::TransE {
        norm: Norm::L1,
        margin: 1.0,
    };
    let store = EmbeddingStore::init(6, 1, dim, kind, seed);
    let mut rng = rng_from_seed(seed);
    let mut params = PolicyParams::new(PolicyMode::Mtrl, 1, 1, dim);
    for x in params
        .v
        .as_mut_slice()
        .iter_mut()
        .chain(params.u.as_mut_slice())
    {
        *x = rng.gen_range(-1.0..1.0);
    }
    let clusters = vec![0];
    let (l1, l2) = (rng.gen_range(0.01..1.0), rng.gen_range(0.01..1.0));
    let triples = vec![Triple::new(0, 0, 1)];
    let (traj, _) = sample_trajectory(&params, &clusters, &store, 0, &triples, &mut rng);
    let mut updated = params.clone();
    reinforce_update(&mut updated, &clusters, &traj, 0.0, l1, l2, 1.0).unwrap();
    // the update ascends -Ω, so ∇Ω = -(new - old)
    let mut analytic: Vec<f64> = Vec::new();
    analytic.extend(
        updated
            .u
            .row(0)
            .iter()
            .zip(params.u.row(0))
            .map(|(n, o)| o - n),
    );
    analytic.extend(
        updated
            .v
            .row(0)
            .iter()
            .zip(params.v.row(0))
            .map(|(n, o)| o - n),
    );
    let mut numeric = Vec::new();
    let mut probe = params.clone();
    for which in 0..2 {
        for col in 0..params.width() {
            let x0 = pick(&mut probe, which).row(0)[col];
            numeric.push(central(
                |x| {
                    pick(&mut probe, which).row_mut(0)[col] = x;
                    regularizer(&probe, &clusters, 0, l1, l2)
                },
                x0,
            ));
            pick(&mut probe, which).row_mut(0)[col] = x0;
        }
    }
    rel_err(&analytic, &numeric)
}

/// TransE L1 score straight from the matrices.
pub fn transe_l1(store: &EmbeddingStore, t: &Triple) -> f64 {
    let h = store.entities.row(t.head);
    let r = store.relations.row(t.relation);
    let e = store.entities.row(t.tail);
    let mut s = 0.0;
    for i in 0..h.len() {
        s += (h[i] + r[i] - e[i]).abs();
    }
    -s
}

/// Filtered pessimistic rank by materialising and sorting the candidates.
/// Known positives are found by scanning the three splits.
pub fn brute_force_rank(
    store: &EmbeddingStore,
    graph: &KnowledgeGraph,
    t: Triple,
    replace_head: bool,
) -> usize {
    let known = |c: &Triple| {
        graph
            .train()
            .iter()
            .chain(graph.valid())
            .chain(graph.test())
            .any(|x| x == c)
    };
    let truth = transe_l1(store, &t);
    let mut list: Vec<(f64, bool)> = vec![(truth, true)];
    for e in 0..graph.num_entities() {
        let c = if replace_head {
            Triple::new(e, t.relation, t.tail)
        } else {
            Triple::new(t.head, t.relation, e)
        };
        if c != t && !known(&c) {
            list.push((transe_l1(store, &c), false));
        }
    }
    // descending score; the true entity goes after its equals
    list.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    list.iter().position(|x| x.1).unwrap() + 1
}

/// A random graph with at most 50 entities and 200 triples.
pub fn random_graph(seed: u64) -> KnowledgeGraph {
    let mut rng = rng_from_seed(seed);
    let n_e = rng.gen_range(20..=50);
    let n_r = rng.gen_range(2..=5);
    let total = rng.gen_range(100..=200);
    let mut set = std::collections::BTreeSet::new();
    while set.len() < total {
        set.insert(Triple::new(
            rng.gen_range(0..n_e),
            rng.gen_range(0..n_r),
            rng.gen_range(0..n_e),
        ));
    }
    let mut all: Vec<Triple> = set.into_iter().collect();
    // shuffle so splits are not sorted by head
    for i in (1..all.len()).rev() {
        all.swap(i, rng.gen_range(0..=i));
    }
    let n_test = total / 10;
    let test = all.split_off(all.len() - n_test);
    let valid = all.split_off(all.len() - n_test);
    KnowledgeGraph::from_ids(n_e, n_r, all, valid, test).unwrap()
}
