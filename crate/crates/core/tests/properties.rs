//! Randomized invariants of the chain, whitening, kNN and evidence layers.

use knn_evidence::chain::{dump_chain, parse_chain};
use knn_evidence::knn::{kth_neighbor_distances, neighbor_sets, Backend};
use knn_evidence::linalg::Matrix;
use knn_evidence::pipeline::{self, EstimateOptions};
use knn_evidence::whiten::{weighted_mean_cov, whiten_chain};
use knn_evidence::{Chain, ColumnSpec};
use proptest::prelude::*;

fn chain_strategy(max_n: usize, max_m: usize) -> impl Strategy<Value = Chain<f64>> {
    (2..=max_n, 1..=max_m).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-50.0f64..50.0, n * m),
            prop::collection::vec(-20.0f64..5.0, n),
            prop::collection::vec(
                prop_oneof![Just(1.0f64), Just(2.0), Just(3.0), 0.01f64..10.0],
                n,
            ),
        )
            .prop_map(move |(p, lt, w)| Chain::new(Matrix::from_row_major(n, m, p), lt, w).unwrap())
    })
}

/// Chains drawn from a small value alphabet so consecutive duplicates occur.
fn repetitive_chain() -> impl Strategy<Value = Chain<f64>> {
    prop::collection::vec((0u8..3, 1u8..4), 2..60).prop_map(|rows| {
        let n = rows.len();
        let params: Vec<f64> = rows
            .iter()
            .flat_map(|&(v, _)| [v as f64, -(v as f64)])
            .collect();
        let lt: Vec<f64> = rows.iter().map(|&(v, _)| -(v as f64) * 0.5).collect();
        let w: Vec<f64> = rows.iter().map(|&(_, w)| w as f64).collect();
        Chain::new(Matrix::from_row_major(n, 2, params), lt, w).unwrap()
    })
}

fn points_strategy(max_n: usize, max_m: usize) -> impl Strategy<Value = Matrix<f64>> {
    (5..=max_n, 1..=max_m).prop_flat_map(|(n, m)| {
        prop::collection::vec(-10.0f64..10.0, n * m)
            .prop_map(move |v| Matrix::from_row_major(n, m, v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn thinning_composes(chain in chain_strategy(80, 3), a in 1usize..5, b in 1usize..5) {
        prop_assume!(chain.len() > a * b);
        let twice = chain.thin(a).unwrap().thin(b).unwrap();
        let once = chain.thin(a * b).unwrap();
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn compaction_keeps_weight_and_is_idempotent(chain in repetitive_chain()) {
        let Ok(c) = chain.compact_duplicates() else {
            // a single merged row is not a valid chain
            let first = chain.parameters().row(0);
            prop_assert!(chain.parameters().iter_rows().all(|r| r == first));
            return Ok(());
        };
        prop_assert_eq!(c.weight_sum(), chain.weight_sum());
        prop_assert!(c.len() <= chain.len());
        for i in 1..c.len() {
            prop_assert!(c.parameters().row(i) != c.parameters().row(i - 1));
        }
        prop_assert_eq!(c.compact_duplicates().unwrap(), c);
    }

    #[test]
    fn dump_then_parse_is_identity(chain in chain_strategy(40, 4)) {
        let mut text = Vec::new();
        dump_chain(&chain, &mut text).unwrap();
        let back: Chain<f64> = parse_chain(text.as_slice(), &ColumnSpec::default(), None).unwrap();
        prop_assert_eq!(back, chain);
    }

    #[test]
    fn neighbour_distances_grow_with_k(pts in points_strategy(60, 4)) {
        let max_k = 4.min(pts.rows() - 1);
        let sets = neighbor_sets(&pts, max_k, Backend::Auto).unwrap();
        for k in 1..max_k {
            for (a, b) in sets[k - 1].distances.iter().zip(&sets[k].distances) {
                prop_assert!(a <= b);
            }
        }
    }

    #[test]
    fn neighbour_distances_follow_permutations(
        (pts, perm) in points_strategy(60, 4).prop_flat_map(|p| {
            let idx: Vec<usize> = (0..p.rows()).collect();
            (Just(p), Just(idx).prop_shuffle())
        }),
        k in 1usize..4,
    ) {
        let k = k.min(pts.rows() - 1);
        let rows: Vec<Vec<f64>> = perm.iter().map(|&i| pts.row(i).to_vec()).collect();
        let shuffled = Matrix::from_rows(&rows);
        for backend in [Backend::Brute, Backend::Tree] {
            let base = kth_neighbor_distances(&pts, k, backend).unwrap().distances;
            let moved = kth_neighbor_distances(&shuffled, k, backend).unwrap().distances;
            for (j, &i) in perm.iter().enumerate() {
                prop_assert_eq!(moved[j], base[i]);
            }
        }
    }

    #[test]
    fn whitening_is_affine_equivariant(chain in chain_strategy(40, 3), s in 0.5f64..4.0, shift in -5.0f64..5.0) {
        let m = chain.dim();
        prop_assume!(chain.len() > 2 * m + 2);
        let Ok((w0, p0)) = whiten_chain(&chain) else { return Ok(()); };
        prop_assume!(!w0.ill_conditioned());
        // θ -> A θ + b with A = s·(lower-triangular ones)
        let mut a = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                a[(i, j)] = s * if i == j { 1.0 } else { 0.3 };
            }
        }
        let moved: Vec<f64> = chain
            .parameters()
            .iter_rows()
            .flat_map(|r| a.mul_vec(r).into_iter().map(|x| x + shift).collect::<Vec<_>>())
            .collect();
        let other = Chain::new(Matrix::from_row_major(chain.len(), m, moved), chain.log_target().to_vec(), chain.weights().to_vec()).unwrap();
        let (w1, p1) = whiten_chain(&other).unwrap();
        let log_det_a = m as f64 * s.ln();
        prop_assert!((w1.log_jacobian() - w0.log_jacobian() - log_det_a).abs() < 1e-8 * (1.0 + w0.log_jacobian().abs()));
        // whitened clouds agree up to an orthogonal map, so pairwise distances match
        for (i, j) in [(0usize, 1usize), (0, chain.len() - 1), (1, chain.len() / 2)] {
            let d0: f64 = p0.row(i).iter().zip(p0.row(j)).map(|(x, y)| (x - y).powi(2)).sum();
            let d1: f64 = p1.row(i).iter().zip(p1.row(j)).map(|(x, y)| (x - y).powi(2)).sum();
            prop_assert!((d0 - d1).abs() < 1e-6 * (1.0 + d0));
        }
    }

    #[test]
    fn weight_scale_leaves_estimate_unchanged(chain in chain_strategy(60, 3), scale in 1e-3f64..1e3) {
        prop_assume!(chain.len() > 10);
        let opts = EstimateOptions { whiten: false, ..Default::default() };
        let Ok(base) = pipeline::estimate(&chain, &opts) else { return Ok(()); };
        let w: Vec<f64> = chain.weights().iter().map(|w| w * scale).collect();
        let scaled = Chain::new(chain.parameters().clone(), chain.log_target().to_vec(), w).unwrap();
        let s = pipeline::estimate(&scaled, &opts).unwrap();
        let tol = 1e-12 * base.posterior.log_map.abs().max(1.0);
        prop_assert!((s.posterior.log_map - base.posterior.log_map).abs() <= tol);
    }

    #[test]
    fn weighted_moments_match_duplicated_rows(chain in repetitive_chain()) {
        let mut rows = Vec::new();
        for (i, &w) in chain.weights().iter().enumerate() {
            for _ in 0..w as usize {
                rows.push(chain.parameters().row(i).to_vec());
            }
        }
        let n = rows.len();
        let expanded = Chain::unweighted(Matrix::from_rows(&rows), vec![0.0; n]).unwrap();
        let Ok((ma, ca)) = weighted_mean_cov(&chain) else { return Ok(()); };
        let (mb, cb) = weighted_mean_cov(&expanded).unwrap();
        for (x, y) in ma.iter().zip(&mb) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!(ca.max_abs_diff(&cb) < 1e-12);
    }
}
