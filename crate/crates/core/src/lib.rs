//! Knowledge-graph embedding on noisy triple sets.
//!
//! A KGE model (TransE, DistMult or RotatE) is trained jointly with one
//! logistic selection policy per relation. Each policy walks over its
//! relation's training triples, keeps or drops each one, and is updated
//! with REINFORCE from the score of what it kept. Policies of related
//! relations can share a cluster-level weight vector (multi-task mode).
//!
//! The crate also carries the surrounding machinery: TSV ingestion, noise
//! injection with ground-truth labels, k-means relation clustering, the
//! score-filtering baseline, and evaluation (noise-detection F1, filtered
//! link prediction, triple classification).

pub mod agent;
pub mod clustering;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod graph;
pub mod models;
pub mod noise;
pub mod seed;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
pub use graph::{KnowledgeGraph, Triple};
pub use models::{EmbeddingStore, ModelKind, Norm};
