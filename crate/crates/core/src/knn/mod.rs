//! Exact k-th nearest-neighbour distances.
//!
//! Two interchangeable backends compute the same squared Euclidean distances
//! with the same per-pair arithmetic (differences squared and summed in
//! coordinate order), so their outputs agree bit for bit:
//!
//! * [`Backend::Brute`]: tiled all-pairs pass, the reference.
//! * [`Backend::Tree`]: median-split kd-tree with exact pruning.
//!
//! Distances are kept squared until the very end and square-rooted once.

mod brute;
mod kdtree;
mod topk;

use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Above this dimension kd-tree pruning is ineffective and `Auto` picks brute force.
pub const TREE_MAX_DIM: usize = 15;

/// Below this many points the tree is not worth building.
const TREE_MIN_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Auto,
    Brute,
    Tree,
}

impl Backend {
    /// The concrete backend `Auto` resolves to for this problem size.
    pub fn resolve(self, n: usize, m: usize) -> Backend {
        match self {
            Backend::Auto if m > TREE_MAX_DIM || n < TREE_MIN_POINTS => Backend::Brute,
            Backend::Auto => Backend::Tree,
            b => b,
        }
    }
}

impl FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Backend::Auto),
            "brute" => Ok(Backend::Brute),
            "tree" => Ok(Backend::Tree),
            other => Err(format!("unknown kNN backend {other:?} (auto, brute, tree)")),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Auto => "auto",
            Backend::Brute => "brute",
            Backend::Tree => "tree",
        })
    }
}

/// k-th nearest-neighbour distance of every point, self excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet<T> {
    pub k: usize,
    pub distances: Vec<T>,
    /// Points whose k-th neighbour sits at distance zero (exact duplicates).
    pub zero_distance_count: usize,
}

impl<T: Real> NeighborSet<T> {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    fn from_distances(k: usize, distances: Vec<T>) -> Self {
        let zero_distance_count = distances.iter().filter(|d| **d == T::zero()).count();
        Self {
            k,
            distances,
            zero_distance_count,
        }
    }
}

/// `ln V_m(r) = (m/2) ln π + m ln r − ln Γ(1 + m/2)`; `-∞` for `r = 0`.
pub fn log_ball_volume<T: Real>(m: usize, log_radius: T) -> T {
    let mf = m as f64;
    let constant = 0.5 * mf * std::f64::consts::PI.ln() - ln_gamma(1.0 + 0.5 * mf);
    T::lit(constant) + T::from_usize_lossy(m) * log_radius
}

/// `ln α_m` with `V_m(r) = α_m r^m`.
pub fn log_unit_ball_volume(m: usize) -> f64 {
    log_ball_volume(m, 0.0f64)
}

/// Distance from each point to its k-th nearest other point.
pub fn kth_neighbor_distances<T: Real>(
    points: &Matrix<T>,
    k: usize,
    backend: Backend,
) -> Result<NeighborSet<T>> {
    let mut sets = neighbor_sets(points, k, backend)?;
    Ok(sets.pop().expect("k >= 1"))
}

/// Neighbour sets for every order 1..=max_k from a single search.
pub fn neighbor_sets<T: Real>(
    points: &Matrix<T>,
    max_k: usize,
    backend: Backend,
) -> Result<Vec<NeighborSet<T>>> {
    let n = points.rows();
    if max_k == 0 {
        return Err(Error::Validation(
            "neighbour order k must be at least 1".into(),
        ));
    }
    if n <= max_k {
        return Err(Error::Validation(format!(
            "{n} points cannot have a neighbour of order {max_k}"
        )));
    }
    if points.cols() == 0 {
        return Err(Error::Validation("points have no coordinates".into()));
    }
    let sq = match backend.resolve(n, points.cols()) {
        Backend::Tree => kdtree::sorted_sq_distances(points, max_k),
        _ => brute::sorted_sq_distances(points, max_k),
    };
    Ok((0..max_k)
        .map(|j| {
            let d = (0..n).map(|i| sq[i * max_k + j].sqrt()).collect();
            NeighborSet::from_distances(j + 1, d)
        })
        .collect())
}

#[inline]
fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s
}
