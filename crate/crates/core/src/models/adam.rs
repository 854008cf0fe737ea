use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::loss::SparseGrad;
use super::{EmbeddingStore, Matrix, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.lr.is_finite()
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("bad Adam configuration {self:?}")))
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moments and the step counter of one parameter matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Matrix,
    pub v: Matrix,
    pub step: u64,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize) -> Self {
        AdamState {
            m: Matrix::zeros(rows, cols),
            v: Matrix::zeros(rows, cols),
            step: 0,
        }
    }
}

fn check_finite(grads: &std::collections::BTreeMap<usize, Vec<f64>>, what: &str) -> Result<()> {
    for (row, g) in grads {
        if let Some(i) = g.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient in {what} row {row}, column {i}: {}",
                g[i]
            )));
        }
    }
    Ok(())
}

fn update_rows(
    params: &mut Matrix,
    state: &mut AdamState,
    grads: &std::collections::BTreeMap<usize, Vec<f64>>,
    cfg: &AdamConfig,
) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (&row, g) in grads {
        let p = params.row_mut(row);
        let m = state.m.row_mut(row);
        let v = state.v.row_mut(row);
        for i in 0..g.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

/// Bias-corrected Adam on the touched rows only.
///
/// Both step counters advance on every call. Rows absent from `grads` and
/// their moments are left bitwise untouched. A non-finite gradient aborts
/// before anything is modified.
pub fn adam_step(store: &mut EmbeddingStore, grads: &SparseGrad, cfg: &AdamConfig) -> Result<()> {
    check_finite(&grads.entities, "entity")?;
    check_finite(&grads.relations, "relation")?;
    update_rows(
        &mut store.entities,
        &mut store.entity_adam,
        &grads.entities,
        cfg,
    );
    update_rows(
        &mut store.relations,
        &mut store.relation_adam,
        &grads.relations,
        cfg,
    );
    if let ModelKind::RotatE { .. } = store.kind {
        for &r in grads.relations.keys() {
            for theta in store.relations.row_mut(r) {
                *theta = theta.rem_euclid(TAU);
                // rem_euclid can round up to TAU itself
                if *theta >= TAU {
                    *theta = 0.0;
                }
            }
        }
    }
    for &row in grads.entities.keys() {
        if let Some(x) = store.entities.row(row).iter().find(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("entity row {row} became {x}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::Norm;
    use super::*;

    const KIND: ModelKind = ModelKind::TransE {
        norm: Norm::L1,
        margin: 1.0,
    };

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut s = EmbeddingStore::init(4, 2, 3, KIND, 1);
        let before = s.clone();
        let mut g = SparseGrad::default();
        for e in 0..4 {
            g.entities.insert(e, vec![0.0; 3]);
        }
        for r in 0..2 {
            g.relations.insert(r, vec![0.0; 3]);
        }
        adam_step(&mut s, &g, &AdamConfig::default()).unwrap();
        assert_eq!(s.entities, before.entities);
        assert_eq!(s.relations, before.relations);
        assert_eq!(s.entity_adam.step, 1);
        assert_eq!(s.relation_adam.step, 1);
    }

    #[test]
    fn scalar_hand_trace() {
        // constant g = 1: m̂ = 1, v̂ = 1 at every step, so each step moves lr/(1+eps)
        let mut s = EmbeddingStore::init(1, 1, 1, KIND, 1);
        let x0 = s.entities.row(0)[0];
        let mut g = SparseGrad::default();
        g.entities.insert(0, vec![1.0]);
        let cfg = AdamConfig::with_lr(0.1);
        adam_step(&mut s, &g, &cfg).unwrap();
        let step = s.entities.row(0)[0] - x0;
        assert!((step + 0.1).abs() < 1e-8, "{step}");
        adam_step(&mut s, &g, &cfg).unwrap();
        let step2 = s.entities.row(0)[0] - x0;
        assert!((step2 + 0.2).abs() < 1e-8, "{step2}");
    }

    #[test]
    fn untouched_rows_bitwise_unchanged() {
        let mut s = EmbeddingStore::init(5, 3, 4, KIND, 2);
        let before = s.clone();
        let mut g = SparseGrad::default();
        g.entities.insert(2, vec![0.5, -1.0, 2.0, 0.1]);
        g.relations.insert(1, vec![1.0; 4]);
        adam_step(&mut s, &g, &AdamConfig::default()).unwrap();
        for e in [0, 1, 3, 4] {
            assert_eq!(s.entities.row(e), before.entities.row(e));
            assert_eq!(s.entity_adam.m.row(e), before.entity_adam.m.row(e));
            assert_eq!(s.entity_adam.v.row(e), before.entity_adam.v.row(e));
        }
        assert_ne!(s.entities.row(2), before.entities.row(2));
        assert_eq!(s.relations.row(0), before.relations.row(0));
        assert_eq!(s.relations.row(2), before.relations.row(2));
    }

    #[test]
    fn non_finite_gradient_aborts_untouched() {
        let mut s = EmbeddingStore::init(3, 1, 2, KIND, 2);
        let before = s.clone();
        let mut g = SparseGrad::default();
        g.entities.insert(0, vec![1.0, 1.0]);
        g.entities.insert(1, vec![f64::NAN, 0.0]);
        let err = adam_step(&mut s, &g, &AdamConfig::default()).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
        assert_eq!(s, before);
    }

    #[test]
    fn config_validation() {
        assert!(AdamConfig::default().validate().is_ok());
        let bad = AdamConfig {
            beta1: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
