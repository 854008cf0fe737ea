//! Analytic gradients against central finite differences.

mod common;

use common::oracles::{
    gradient_kinds, kind_name, loss_gradient_error, policy_gradient_error, random_instance,
    regularizer_gradient_error, FD_TOL,
};
use kgrl_core::agent::PolicyMode;
use kgrl_core::models::batch_loss_and_grad;

#[test]
fn loss_gradients_match_finite_differences() {
    for kind in gradient_kinds() {
        for dim in [4, 8] {
            let mut active = 0;
            for i in 0..20 {
                let (store, samples) = random_instance(kind, dim, i);
                let (_, grad) = batch_loss_and_grad(&store, &samples);
                let nonzero = grad.entities.values().flatten().any(|g| *g != 0.0);
                active += usize::from(nonzero);
                let err = loss_gradient_error(&store, &samples);
                assert!(
                    err < FD_TOL,
                    "{} d={dim} instance {i}: relative error {err:e}",
                    kind_name(&kind)
                );
            }
            assert!(
                active >= 15,
                "{}: only {active} instances had a gradient",
                kind_name(&kind)
            );
        }
    }
}

#[test]
fn policy_gradient_matches_surrogate() {
    for mode in [PolicyMode::Strl, PolicyMode::Mtrl] {
        for dim in [4, 8] {
            for seed in 0..20 {
                let err = policy_gradient_error(mode, dim, seed);
                assert!(err < FD_TOL, "{mode:?} d={dim} seed {seed}: {err:e}");
            }
        }
    }
}

#[test]
fn regularizer_gradient() {
    for dim in [4, 8] {
        for seed in 0..20 {
            let err = regularizer_gradient_error(dim, seed);
            assert!(err < FD_TOL, "d={dim} seed {seed}: {err:e}");
        }
    }
}
