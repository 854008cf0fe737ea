//! k-means over relation embeddings.
//!
//! Lloyd iterations from k-means++ seeds. Nearest-centroid ties go to the
//! lower cluster id. A cluster left empty after assignment takes the point
//! farthest from its own centroid (among clusters with more than one
//! member), which never increases the within-cluster sum of squares.

use std::fmt::Write as _;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::Vocab;
use crate::models::Matrix;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct RelationClusters {
    pub k: usize,
    /// Relation id -> cluster id.
    pub assignment: Vec<usize>,
    pub centroids: Matrix,
    /// WCSS after each completed iteration.
    pub wcss_history: Vec<f64>,
}

impl RelationClusters {
    /// Every relation in its own cluster.
    pub fn singletons(num_relations: usize, width: usize) -> Self {
        RelationClusters {
            k: num_relations,
            assignment: (0..num_relations).collect(),
            centroids: Matrix::zeros(num_relations, width),
            wcss_history: Vec::new(),
        }
    }

    pub fn wcss(&self) -> f64 {
        self.wcss_history.last().copied().unwrap_or(0.0)
    }

    pub fn members(&self, c: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == c)
            .map(|(r, _)| r)
            .collect()
    }

    /// `relation_name<TAB>cluster_id` per relation, in id order.
    pub fn to_tsv(&self, relations: &Vocab) -> String {
        let mut out = String::new();
        for (r, c) in self.assignment.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}", relations.name(r).unwrap_or("?"), c);
        }
        out
    }
}

/// Parses a cluster TSV against a relation vocabulary.
///
/// Every relation must appear exactly once. Cluster ids are compacted to
/// `0..k` in order of first appearance.
pub fn parse_assignment(source_name: &str, text: &str, relations: &Vocab) -> Result<Vec<usize>> {
    let mut raw: Vec<Option<u64>> = vec![None; relations.len()];
    for (idx, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let (name, id) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(source_name, idx + 1, "expected relation<TAB>cluster"))?;
        let id: u64 = id
            .trim()
            .parse()
            .map_err(|_| Error::parse(source_name, idx + 1, "cluster id is not an integer"))?;
        let r = relations.id(name).ok_or_else(|| {
            Error::parse(source_name, idx + 1, format!("unknown relation {name:?}"))
        })?;
        if raw[r].replace(id).is_some() {
            return Err(Error::parse(
                source_name,
                idx + 1,
                format!("relation {name:?} listed twice"),
            ));
        }
    }
    let mut remap = std::collections::HashMap::new();
    raw.into_iter()
        .enumerate()
        .map(|(r, id)| {
            let id = id.ok_or_else(|| {
                Error::invalid(format!(
                    "{source_name}: relation {:?} has no cluster",
                    relations.name(r).unwrap_or("?")
                ))
            })?;
            let next = remap.len();
            Ok(*remap.entry(id).or_insert(next))
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, ties to the lower id.
fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_seeds(points: &Matrix, k: usize, seed: u64) -> Matrix {
    let mut rng = rng_from_seed(seed);
    let n = points.rows();
    let mut centroids = Matrix::zeros(k, points.cols());
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), points.row(first)))
        .collect();
    let mut chosen = vec![false; n];
    chosen[first] = true;
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut x = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && x < w {
                    pick = Some(i);
                    break;
                }
                x -= w;
            }
            // rounding can run off the end
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            // all remaining points coincide with a centre; take any unused one
            let unused: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            unused[rng.gen_range(0..unused.len())]
        };
        chosen[pick] = true;
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), points.row(pick)));
        }
    }
    centroids
}

fn recompute_centroids(points: &Matrix, assignment: &[usize], k: usize) -> Matrix {
    let mut sums = Matrix::zeros(k, points.cols());
    let mut counts = vec![0usize; k];
    for (i, &c) in assignment.iter().enumerate() {
        counts[c] += 1;
        for (s, x) in sums.row_mut(c).iter_mut().zip(points.row(i)) {
            *s += x;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        let n = count.max(1) as f64;
        for s in sums.row_mut(c) {
            *s /= n;
        }
    }
    sums
}

fn wcss(points: &Matrix, assignment: &[usize], centroids: &Matrix) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(points.row(i), centroids.row(c)))
        .sum()
}

/// Moves the farthest-from-centroid point of a multi-member cluster into
/// each empty cluster.
fn repair_empty(points: &Matrix, assignment: &mut [usize], centroids: &mut Matrix, k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &c in assignment.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&n| n == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &c) in assignment.iter().enumerate() {
            if counts[c] < 2 {
                continue;
            }
            let d = sq_dist(points.row(i), centroids.row(c));
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("k <= n guarantees a multi-member cluster");
        assignment[i] = empty;
        centroids.row_mut(empty).copy_from_slice(points.row(i));
    }
}

pub fn kmeans(points: &Matrix, k: usize, seed: u64, max_iters: usize) -> Result<RelationClusters> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} must be in [1, {n}]")));
    }
    if max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    let mut centroids = plus_plus_seeds(points, k, seed);
    let mut assignment: Vec<usize> = vec![usize::MAX; n];
    let mut history: Vec<f64> = Vec::new();
    for iter in 0..max_iters {
        let next: Vec<usize> = (0..n)
            .map(|i| nearest(points.row(i), &centroids).0)
            .collect();
        let changed = next != assignment;
        assignment = next;
        repair_empty(points, &mut assignment, &mut centroids, k);
        centroids = recompute_centroids(points, &assignment, k);
        let cost = wcss(points, &assignment, &centroids);
        if let Some(&prev) = history.last() {
            assert!(
                cost <= prev + 1e-9 * prev.abs().max(1.0),
                "WCSS increased at iteration {iter}: {prev} -> {cost}"
            );
        }
        history.push(cost);
        if !changed {
            break;
        }
    }
    Ok(RelationClusters {
        k,
        assignment,
        centroids,
        wcss_history: history,
    })
}
