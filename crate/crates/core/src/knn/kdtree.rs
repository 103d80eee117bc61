//! Median-split kd-tree with exact k-best search.
//!
//! Pruning uses a per-axis lower bound on the offset to each cell, summed in
//! coordinate order exactly like the point-to-point distance. Floating point
//! subtraction, squaring and addition of non-negative terms are monotone, so
//! the bound never exceeds the computed distance of any point in the cell and
//! the search returns the same values as brute force.

use rayon::prelude::*;

use super::{sq_dist, topk};
use crate::linalg::Matrix;
use crate::scalar::Real;

const LEAF_SIZE: usize = 12;

enum Node<T> {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: T,
        left: usize,
        right: usize,
    },
}

struct KdTree<T> {
    /// Original indices in tree order.
    order: Vec<usize>,
    /// Coordinates in tree order, row-major.
    coords: Vec<T>,
    nodes: Vec<Node<T>>,
}

impl<T: Real> KdTree<T> {
    fn build(points: &Matrix<T>) -> Self {
        let mut order: Vec<usize> = (0..points.rows()).collect();
        let mut nodes = Vec::new();
        Self::build_node(points, &mut order, 0, &mut nodes);
        let coords = order
            .iter()
            .flat_map(|&i| points.row(i).iter().copied())
            .collect();
        Self {
            order,
            coords,
            nodes,
        }
    }

    fn build_node(
        points: &Matrix<T>,
        idx: &mut [usize],
        offset: usize,
        nodes: &mut Vec<Node<T>>,
    ) -> usize {
        let id = nodes.len();
        if idx.len() <= LEAF_SIZE {
            nodes.push(Node::Leaf {
                start: offset,
                end: offset + idx.len(),
            });
            return id;
        }
        let m = points.cols();
        let mut lo = points.row(idx[0]).to_vec();
        let mut hi = lo.clone();
        for &i in idx.iter() {
            for (d, &v) in points.row(i).iter().enumerate() {
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        let dim = (0..m)
            .max_by(|&a, &b| (hi[a] - lo[a]).partial_cmp(&(hi[b] - lo[b])).unwrap())
            .unwrap();
        if !(hi[dim] > lo[dim]) {
            // all points identical
            nodes.push(Node::Leaf {
                start: offset,
                end: offset + idx.len(),
            });
            return id;
        }
        let mid = idx.len() / 2;
        idx.select_nth_unstable_by(mid, |&a, &b| {
            points[(a, dim)].partial_cmp(&points[(b, dim)]).unwrap()
        });
        let value = points[(idx[mid], dim)];
        nodes.push(Node::Leaf { start: 0, end: 0 });
        let (l, r) = idx.split_at_mut(mid);
        let left = Self::build_node(points, l, offset, nodes);
        let right = Self::build_node(points, r, offset + mid, nodes);
        nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    fn search(&self, node: usize, query: &[T], skip: usize, off: &mut [T], best: &mut [T]) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                let m = query.len();
                let k = best.len();
                for pos in start..end {
                    if pos == skip {
                        continue;
                    }
                    let d = sq_dist(query, &self.coords[pos * m..(pos + 1) * m]);
                    if d < best[k - 1] {
                        topk::insert(best, d);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let q = query[dim];
                let (near, far, gap) = if q <= value {
                    (left, right, value - q)
                } else {
                    (right, left, q - value)
                };
                self.search(near, query, skip, off, best);
                let saved = off[dim];
                off[dim] = gap.max(saved);
                let bound = off.iter().fold(T::zero(), |s, &o| s + o * o);
                if bound < best[best.len() - 1] {
                    self.search(far, query, skip, off, best);
                }
                off[dim] = saved;
            }
        }
    }
}

pub(super) fn sorted_sq_distances<T: Real>(points: &Matrix<T>, k: usize) -> Vec<T> {
    let n = points.rows();
    let m = points.cols();
    let tree = KdTree::build(points);
    // queries in tree order for locality, scattered back afterwards
    let mut tree_order = vec![T::infinity(); n * k];
    tree_order.par_chunks_mut(k).enumerate().for_each_init(
        || vec![T::zero(); m],
        |off, (pos, best)| {
            off.fill(T::zero());
            let q = &tree.coords[pos * m..(pos + 1) * m];
            tree.search(0, q, pos, off, best);
        },
    );
    let mut out = vec![T::zero(); n * k];
    for (pos, &orig) in tree.order.iter().enumerate() {
        out[orig * k..(orig + 1) * k].copy_from_slice(&tree_order[pos * k..(pos + 1) * k]);
    }
    out
}
