//! KGE models: parameters, scores, losses, negative sampling, Adam.
//!
//! Storage layout per model:
//!
//! | model    | entity row            | relation row     |
//! |----------|-----------------------|------------------|
//! | TransE   | `d` reals             | `d` reals        |
//! | DistMult | `d` reals             | `d` reals (diag) |
//! | RotatE   | `d` re, then `d` im   | `d` phases       |
//!
//! RotatE relations are phases θ ∈ [0, 2π), so every relation coefficient
//! `e^{iθ}` has modulus one by construction.

mod adam;
pub mod checkpoint;
mod loss;
mod score;

use std::borrow::Cow;
use std::f64::consts::TAU;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{
    batch_loss_and_grad, loss_and_grad, sample_batch, sample_negative, CorruptionSpace, Sample,
    SparseGrad, MAX_NEGATIVE_TRIES,
};
pub(crate) use loss::{sigmoid, softplus};
pub use score::{accumulate_score_grad, score};

use crate::seed::{rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    TransE { norm: Norm, margin: f64 },
    DistMult { l2: f64, negatives: usize },
    RotatE { margin: f64, negatives: usize },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::TransE { .. } => "transe",
            ModelKind::DistMult { .. } => "distmult",
            ModelKind::RotatE { .. } => "rotate",
        }
    }

    pub fn entity_width(&self, dim: usize) -> usize {
        match self {
            ModelKind::RotatE { .. } => 2 * dim,
            _ => dim,
        }
    }

    pub fn relation_width(&self, dim: usize) -> usize {
        dim
    }

    /// Negatives drawn per positive.
    pub fn negatives(&self) -> usize {
        match *self {
            ModelKind::TransE { .. } => 1,
            ModelKind::DistMult { negatives, .. } | ModelKind::RotatE { negatives, .. } => {
                negatives
            }
        }
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Entity and relation parameters plus their Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    pub kind: ModelKind,
    pub dim: usize,
    pub entities: Matrix,
    pub relations: Matrix,
    pub entity_adam: AdamState,
    pub relation_adam: AdamState,
}

impl EmbeddingStore {
    /// Uniform `U[-6/√d, 6/√d]` reals; RotatE phases uniform on `[0, 2π)`.
    pub fn init(
        num_entities: usize,
        num_relations: usize,
        dim: usize,
        kind: ModelKind,
        seed: u64,
    ) -> Self {
        assert!(dim >= 1, "embedding dimension must be positive");
        let mut rng = rng_from_seed(seed);
        let bound = 6.0 / (dim as f64).sqrt();
        let ew = kind.entity_width(dim);
        let rw = kind.relation_width(dim);
        let uniform = |n: usize, lo: f64, hi: f64, rng: &mut Rng| -> Vec<f64> {
            (0..n).map(|_| rng.gen_range(lo..hi)).collect()
        };
        let entities = Matrix::from_vec(
            num_entities,
            ew,
            uniform(num_entities * ew, -bound, bound, &mut rng),
        );
        let relations = match kind {
            ModelKind::RotatE { .. } => Matrix::from_vec(
                num_relations,
                rw,
                uniform(num_relations * rw, 0.0, TAU, &mut rng),
            ),
            _ => Matrix::from_vec(
                num_relations,
                rw,
                uniform(num_relations * rw, -bound, bound, &mut rng),
            ),
        };
        EmbeddingStore {
            kind,
            dim,
            entity_adam: AdamState::new(num_entities, ew),
            relation_adam: AdamState::new(num_relations, rw),
            entities,
            relations,
        }
    }

    pub fn num_entities(&self) -> usize {
        self.entities.rows()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.rows()
    }

    pub fn score(&self, t: &crate::graph::Triple) -> f64 {
        score(self, t)
    }

    /// Width of the per-entity feature vector exposed to selection agents.
    pub fn feature_width(&self) -> usize {
        self.kind.entity_width(self.dim)
    }

    pub fn entity_features(&self, e: usize) -> &[f64] {
        self.entities.row(e)
    }

    /// Relation features at entity width. RotatE phases are expanded to
    /// their unit complex numbers `(cos θ, sin θ)` in the entity layout.
    pub fn relation_features(&self, r: usize) -> Cow<'_, [f64]> {
        match self.kind {
            ModelKind::RotatE { .. } => {
                let theta = self.relations.row(r);
                let mut out = Vec::with_capacity(2 * theta.len());
                out.extend(theta.iter().map(|t| t.cos()));
                out.extend(theta.iter().map(|t| t.sin()));
                Cow::Owned(out)
            }
            _ => Cow::Borrowed(self.relations.row(r)),
        }
    }

    /// The parameter vector of every entity and relation row is finite.
    pub fn is_finite(&self) -> bool {
        self.entities.as_slice().iter().all(|x| x.is_finite())
            && self.relations.as_slice().iter().all(|x| x.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRANSE: ModelKind = ModelKind::TransE {
        norm: Norm::L1,
        margin: 1.0,
    };

    #[test]
    fn init_bounds() {
        let s = EmbeddingStore::init(30, 5, 36, TRANSE, 1);
        assert!(s
            .entities
            .as_slice()
            .iter()
            .all(|x| (-1.0..=1.0).contains(x)));
        let s = EmbeddingStore::init(30, 5, 100, TRANSE, 1);
        assert!(s
            .entities
            .as_slice()
            .iter()
            .chain(s.relations.as_slice())
            .all(|x| (-0.6..=0.6).contains(x)));
        let max = s
            .entities
            .as_slice()
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(max > 0.5, "draws should fill the interval");
    }

    #[test]
    fn init_rotate_phases() {
        let kind = ModelKind::RotatE {
            margin: 5.0,
            negatives: 4,
        };
        let s = EmbeddingStore::init(10, 6, 8, kind, 3);
        assert_eq!(s.entities.cols(), 16);
        assert_eq!(s.relations.cols(), 8);
        assert!(s
            .relations
            .as_slice()
            .iter()
            .all(|x| (0.0..TAU).contains(x)));
        let f = s.relation_features(2);
        for i in 0..8 {
            let m = (f[i] * f[i] + f[8 + i] * f[8 + i]).sqrt();
            assert!((m - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn init_deterministic() {
        assert_eq!(
            EmbeddingStore::init(10, 3, 4, TRANSE, 9),
            EmbeddingStore::init(10, 3, 4, TRANSE, 9)
        );
        assert_ne!(
            EmbeddingStore::init(10, 3, 4, TRANSE, 9),
            EmbeddingStore::init(10, 3, 4, TRANSE, 10)
        );
    }
}
