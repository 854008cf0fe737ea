use crate::graph::Triple;

use super::{EmbeddingStore, ModelKind, Norm};

/// Score of a triple. Higher means more plausible.
///
/// TransE: `-‖h + r - t‖`; DistMult: `Σ h·r·t`; RotatE: `-Σ |h_i e^{iθ_i} - t_i|`.
pub fn score(store: &EmbeddingStore, t: &Triple) -> f64 {
    let h = store.entities.row(t.head);
    let r = store.relations.row(t.relation);
    let e = store.entities.row(t.tail);
    match store.kind {
        ModelKind::TransE { norm, .. } => {
            let it = h.iter().zip(r).zip(e).map(|((h, r), t)| h + r - t);
            match norm {
                Norm::L1 => -it.map(f64::abs).sum::<f64>(),
                Norm::L2 => -it.map(|x| x * x).sum::<f64>().sqrt(),
            }
        }
        ModelKind::DistMult { .. } => h.iter().zip(r).zip(e).map(|((h, r), t)| h * r * t).sum(),
        ModelKind::RotatE { .. } => {
            let d = store.dim;
            let mut total = 0.0;
            for i in 0..d {
                let (a, b) = rotate_residual(h[i], h[d + i], r[i], e[i], e[d + i]);
                total += a.hypot(b);
            }
            -total
        }
    }
}

#[inline]
fn rotate_residual(hr: f64, hi: f64, theta: f64, tr: f64, ti: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (hr * c - hi * s - tr, hr * s + hi * c - ti)
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Adds `coeff * ∂score/∂θ` for the three rows of `t` into the given
/// buffers. Nondifferentiable points (L1 at zero, zero-length L2 residual,
/// zero RotatE modulus) get subgradient 0.
pub fn accumulate_score_grad(
    store: &EmbeddingStore,
    t: &Triple,
    coeff: f64,
    head: &mut [f64],
    rel: &mut [f64],
    tail: &mut [f64],
) {
    let h = store.entities.row(t.head);
    let r = store.relations.row(t.relation);
    let e = store.entities.row(t.tail);
    match store.kind {
        ModelKind::TransE { norm, .. } => match norm {
            Norm::L1 => {
                for i in 0..h.len() {
                    let g = -sign(h[i] + r[i] - e[i]) * coeff;
                    head[i] += g;
                    rel[i] += g;
                    tail[i] -= g;
                }
            }
            Norm::L2 => {
                let n = h
                    .iter()
                    .zip(r)
                    .zip(e)
                    .map(|((h, r), t)| (h + r - t).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if n > 0.0 {
                    for i in 0..h.len() {
                        let g = -(h[i] + r[i] - e[i]) / n * coeff;
                        head[i] += g;
                        rel[i] += g;
                        tail[i] -= g;
                    }
                }
            }
        },
        ModelKind::DistMult { .. } => {
            for i in 0..h.len() {
                head[i] += coeff * r[i] * e[i];
                rel[i] += coeff * h[i] * e[i];
                tail[i] += coeff * h[i] * r[i];
            }
        }
        ModelKind::RotatE { .. } => {
            let d = store.dim;
            for i in 0..d {
                let (hr, hi, th) = (h[i], h[d + i], r[i]);
                let (s, c) = th.sin_cos();
                let a = hr * c - hi * s - e[i];
                let b = hr * s + hi * c - e[d + i];
                let m = a.hypot(b);
                if m == 0.0 {
                    continue;
                }
                // f = -m, so ∂f/∂a = -a/m and ∂f/∂b = -b/m
                let ga = -a / m * coeff;
                let gb = -b / m * coeff;
                head[i] += ga * c + gb * s;
                head[d + i] += -ga * s + gb * c;
                rel[i] += ga * (-hr * s - hi * c) + gb * (hr * c - hi * s);
                tail[i] -= ga;
                tail[d + i] -= gb;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::super::Matrix;
    use super::*;

    fn store(kind: ModelKind, dim: usize, ents: Vec<f64>, rels: Vec<f64>) -> EmbeddingStore {
        let mut s = EmbeddingStore::init(1, 1, dim, kind, 0);
        let ew = kind.entity_width(dim);
        s.entities = Matrix::from_vec(ents.len() / ew, ew, ents);
        s.relations = Matrix::from_vec(rels.len() / dim, dim, rels);
        s
    }

    #[test]
    fn transe_l1_exact() {
        let kind = ModelKind::TransE {
            norm: Norm::L1,
            margin: 1.0,
        };
        let s = store(kind, 2, vec![1.0, 2.0, 0.0, 0.0], vec![0.0, 0.0]);
        assert_eq!(score(&s, &Triple::new(0, 0, 1)), -3.0);
    }

    #[test]
    fn transe_l2_exact() {
        let kind = ModelKind::TransE {
            norm: Norm::L2,
            margin: 1.0,
        };
        let s = store(kind, 2, vec![3.0, 4.0, 0.0, 0.0], vec![0.0, 0.0]);
        assert_eq!(score(&s, &Triple::new(0, 0, 1)), -5.0);
    }

    #[test]
    fn distmult_exact() {
        let kind = ModelKind::DistMult {
            l2: 0.0,
            negatives: 1,
        };
        let s = store(kind, 2, vec![1.0, 2.0, 5.0, 6.0], vec![3.0, 4.0]);
        assert_eq!(score(&s, &Triple::new(0, 0, 1)), 63.0);
        assert_eq!(score(&s, &Triple::new(1, 0, 0)), 63.0);
    }

    #[test]
    fn rotate_exact_rotation() {
        let kind = ModelKind::RotatE {
            margin: 5.0,
            negatives: 1,
        };
        // h = (1+0i, 0+1i), t = (0+1i, -1+0i); layout is [re.., im..]
        let s = store(
            kind,
            2,
            vec![1.0, 0.0, 0.0, 1.0, 0.0, -1.0, 1.0, 0.0],
            vec![FRAC_PI_2, FRAC_PI_2],
        );
        let f = score(&s, &Triple::new(0, 0, 1));
        assert!(f <= 0.0);
        assert!(f.abs() < 1e-12, "{f}");
    }
}
