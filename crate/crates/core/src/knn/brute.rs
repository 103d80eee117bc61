//! Tiled all-pairs search. Every unordered pair is evaluated once and offered
//! to both endpoints; candidate tiles are stored coordinate-major so the
//! inner loop runs over candidates.

use rayon::prelude::*;

use super::topk;
use crate::linalg::Matrix;
use crate::scalar::Real;

const TILE: usize = 128;

/// For each point, its `k` smallest squared distances to other points,
/// ascending, flattened row-major (N×k).
pub(super) fn sorted_sq_distances<T: Real>(points: &Matrix<T>, k: usize) -> Vec<T> {
    let n = points.rows();
    let m = points.cols();
    let ntiles = n.div_ceil(TILE);
    let tiles: Vec<Vec<T>> = (0..ntiles)
        .map(|t| {
            let j0 = t * TILE;
            let len = TILE.min(n - j0);
            let mut xt = vec![T::zero(); m * TILE];
            for c in 0..len {
                for (d, &v) in points.row(j0 + c).iter().enumerate() {
                    xt[d * TILE + c] = v;
                }
            }
            xt
        })
        .collect();

    (0..ntiles)
        .into_par_iter()
        .fold(
            || vec![T::infinity(); n * k],
            |mut best, ti| {
                let i0 = ti * TILE;
                let i1 = n.min(i0 + TILE);
                let mut acc = [T::zero(); TILE];
                for (tj, xt) in tiles.iter().enumerate().skip(ti) {
                    let j0 = tj * TILE;
                    let len = TILE.min(n - j0);
                    for i in i0..i1 {
                        let start = if tj == ti { i - j0 + 1 } else { 0 };
                        if start >= len {
                            continue;
                        }
                        let acc = &mut acc[start..len];
                        acc.fill(T::zero());
                        for (d, &qd) in points.row(i).iter().enumerate() {
                            let col = &xt[d * TILE + start..d * TILE + len];
                            for (a, &x) in acc.iter_mut().zip(col) {
                                let t = qd - x;
                                *a += t * t;
                            }
                        }
                        for (c, &dist) in acc.iter().enumerate() {
                            let j = j0 + start + c;
                            topk::insert(&mut best[i * k..(i + 1) * k], dist);
                            topk::insert(&mut best[j * k..(j + 1) * k], dist);
                        }
                    }
                }
                best
            },
        )
        .reduce_with(|mut a, b| {
            for (ra, rb) in a.chunks_exact_mut(k).zip(b.chunks_exact(k)) {
                topk::merge(ra, rb);
            }
            a
        })
        .unwrap_or_default()
}
