//! Posterior for the marginal likelihood from k-th neighbour distances.
//!
//! Each sample with k-th neighbour distance `D` and target value `p̃`
//! contributes a Poisson likelihood for the local number density
//! `n = p̃ / (w a)`. Combined over the chain with a Jeffreys prior on the
//! evidence `E = aW`, the posterior is
//!
//! ```text
//! ln p(E | D) = const − (Nk + 1) ln E − β / E,
//! β = W · J · Σ_α V_m(D_α) p̃_α / w_α,
//! ```
//!
//! an inverse-gamma density with shape `Nk` and scale `β`. Everything is
//! evaluated in log space because `p̃` routinely under- or overflows.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{Error, Result};
use crate::knn::{log_ball_volume, log_unit_ball_volume, NeighborSet};
use crate::scalar::Real;

/// Resolution indicator above which errors of order 0.1 dex appear.
pub const RESOLUTION_THRESHOLD: f64 = 0.5;

/// Inverse-gamma posterior over the evidence, in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidencePosterior<T> {
    pub n_points: usize,
    pub k: usize,
    /// `ln W`.
    pub log_weight_sum: T,
    /// Inverse-gamma shape `N·k`.
    pub shape: T,
    /// `ln β`.
    pub log_scale: T,
    /// `ln E_MAP = ln β − ln(Nk + 1)`.
    pub log_map: T,
    /// `1/√(Nk+1)`, from the curvature at the peak.
    pub sigma_frac: T,
    /// `√2 · sigma_frac`: mutual nearest neighbours make the distances
    /// pairwise dependent, which the independent-sample curvature ignores.
    pub sigma_frac_conservative: T,
}

/// `(α_m N)^(−1/m)` with unit target volume in whitened units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionDiagnostic {
    pub indicator: f64,
    pub threshold_exceeded: bool,
}

/// `ln Σ exp(x_i)` with max extraction and a fixed pairwise summation order.
///
/// `-∞` entries contribute nothing; an all-`-∞` (or empty) input gives `-∞`.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() || !max.is_finite() {
        return max;
    }
    max + pairwise_exp_sum(xs, max).ln()
}

fn pairwise_exp_sum<T: Real>(xs: &[T], shift: T) -> T {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().fold(T::zero(), |s, &x| s + (x - shift).exp());
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_exp_sum(a, shift) + pairwise_exp_sum(b, shift)
}

/// Builds the evidence posterior.
///
/// `log_target` holds `ln p̃`, `weights` the strictly positive sample weights,
/// and `log_jacobian` is `ln J` of the whitening used to measure `neighbors`
/// (zero without whitening). `dim` is the parameter dimension m.
pub fn build_posterior<T: Real>(
    log_target: &[T],
    weights: &[T],
    neighbors: &NeighborSet<T>,
    log_jacobian: T,
    dim: usize,
) -> Result<EvidencePosterior<T>> {
    let n = log_target.len();
    let k = neighbors.k;
    if weights.len() != n || neighbors.len() != n {
        return Err(Error::Validation(format!(
            "length mismatch: {n} log-targets, {} weights, {} distances",
            weights.len(),
            neighbors.len()
        )));
    }
    if k == 0 || n < k + 1 {
        return Err(Error::Validation(format!(
            "{n} samples are too few for neighbour order {k}"
        )));
    }
    if dim == 0 {
        return Err(Error::Validation("dimension must be at least 1".into()));
    }
    if !log_jacobian.is_finite() {
        return Err(Error::Numeric {
            index: 0,
            msg: format!("log-Jacobian {log_jacobian} is not finite"),
        });
    }

    let mut log_weights = Vec::with_capacity(n);
    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        let w = weights[i];
        if !(w > T::zero() && w.is_finite()) {
            return Err(Error::Numeric {
                index: i,
                msg: format!("weight {w} is not strictly positive"),
            });
        }
        if !log_target[i].is_finite() {
            return Err(Error::Numeric {
                index: i,
                msg: format!("log-target {} is not finite", log_target[i]),
            });
        }
        let d = neighbors.distances[i];
        if !(d >= T::zero()) || !d.is_finite() {
            return Err(Error::Numeric {
                index: i,
                msg: format!("neighbour distance {d} is invalid"),
            });
        }
        let lw = w.ln();
        let term = log_ball_volume(dim, d.ln()) + log_target[i] - lw;
        if term.is_nan() || term == T::infinity() {
            return Err(Error::Numeric {
                index: i,
                msg: format!("log volume term {term} is not finite"),
            });
        }
        log_weights.push(lw);
        terms.push(term);
    }

    let log_volume_sum = log_sum_exp(&terms);
    if log_volume_sum == T::neg_infinity() {
        return Err(Error::Degenerate);
    }
    let log_weight_sum = log_sum_exp(&log_weights);
    let log_scale = log_weight_sum + log_jacobian + log_volume_sum;
    if !log_scale.is_finite() {
        return Err(Error::Numeric {
            index: 0,
            msg: format!("log scale {log_scale} is not finite"),
        });
    }
    let shape = T::from_usize_lossy(n * k);
    let sigma_frac = (shape + T::one()).sqrt().recip();
    Ok(EvidencePosterior {
        n_points: n,
        k,
        log_weight_sum,
        shape,
        log_scale,
        log_map: log_scale - (shape + T::one()).ln(),
        sigma_frac,
        sigma_frac_conservative: sigma_frac * T::SQRT_2(),
    })
}

impl<T: Real> EvidencePosterior<T> {
    /// Unnormalized `ln p(E | D)` at `ln E`.
    pub fn log_posterior_density(&self, log_e: T) -> T {
        -(self.shape + T::one()) * log_e - (self.log_scale - log_e).exp()
    }

    pub fn log10_map(&self) -> T {
        self.log_map / T::LN_10()
    }

    /// Equal-tailed credible interval `(ln E_low, ln E_high)`.
    pub fn credible_interval(&self, level: f64) -> Result<(T, T)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Validation(format!(
                "credible level {level} is outside (0, 1)"
            )));
        }
        let tail = 0.5 * (1.0 - level);
        let a = self.shape.as_f64();
        let log_beta = self.log_scale.as_f64();
        // E = β / y with y ~ Gamma(shape, 1): the lower E bound is the upper y quantile
        let low = log_beta - log_gamma_quantile(a, 1.0 - tail);
        let high = log_beta - log_gamma_quantile(a, tail);
        Ok((T::lit(low), T::lit(high)))
    }

    /// Posterior median of `ln E`.
    pub fn log_median(&self) -> T {
        T::lit(self.log_scale.as_f64() - log_gamma_quantile(self.shape.as_f64(), 0.5))
    }
}

/// `ln y` such that `P(shape, y) = q` for the unit-scale gamma distribution.
///
/// Bisection in `ln y`, evaluating whichever regularized incomplete gamma
/// tail is small so extreme quantiles keep their relative accuracy.
pub fn log_gamma_quantile(shape: f64, q: f64) -> f64 {
    assert!(shape > 0.0 && q > 0.0 && q < 1.0);
    // g(u) increases with u and crosses zero at the quantile
    let g = |u: f64| -> f64 {
        let y = u.exp();
        if q <= 0.5 {
            gamma_lr(shape, y) - q
        } else {
            (1.0 - q) - gamma_ur(shape, y)
        }
    };
    let centre = shape.ln();
    let mut step = shape.sqrt().recip().max(1e-3);
    let mut lo = centre - step;
    while g(lo) > 0.0 {
        step *= 2.0;
        lo = centre - step;
    }
    step = shape.sqrt().recip().max(1e-3);
    let mut hi = centre + step;
    while g(hi) < 0.0 {
        step *= 2.0;
        hi = centre + step;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Flags chains too sparse for a locally constant target over the typical
/// neighbour distance.
pub fn resolution_diagnostic(n_points: usize, dim: usize) -> ResolutionDiagnostic {
    let m = dim.max(1) as f64;
    let indicator = (-(log_unit_ball_volume(dim.max(1)) + (n_points.max(1) as f64).ln()) / m).exp();
    ResolutionDiagnostic {
        indicator,
        threshold_exceeded: indicator > RESOLUTION_THRESHOLD,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(distances: Vec<f64>) -> NeighborSet<f64> {
        let zero_distance_count = distances.iter().filter(|d| **d == 0.0).count();
        NeighborSet {
            k: 1,
            distances,
            zero_distance_count,
        }
    }

    #[test]
    fn two_point_map() {
        // m = 1, V_1(D) = 2D, so D = 0.25 gives V = 0.5
        let ep = build_posterior(&[0.0, 0.0], &[1.0, 1.0], &set(vec![0.25, 0.25]), 0.0, 1).unwrap();
        assert!((ep.log_map.exp() - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(ep.log_map, ep.log_scale - (ep.shape + 1.0).ln());
        assert_eq!(ep.shape, 2.0);
        assert!((ep.sigma_frac - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn scaling_weights_leaves_map_unchanged() {
        let lt = [-1.0, -2.0, -0.5];
        let nb = set(vec![0.3, 0.2, 0.6]);
        let a = build_posterior(&lt, &[1.0, 2.0, 0.5], &nb, 0.1, 2).unwrap();
        let b = build_posterior(&lt, &[10.0, 20.0, 5.0], &nb, 0.1, 2).unwrap();
        assert!((a.log_map - b.log_map).abs() <= 1e-12 * a.log_map.abs().max(1.0));
        assert!((b.log_weight_sum - a.log_weight_sum - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn large_chain_sigma() {
        let n = 100_000;
        let ep = build_posterior(&vec![0.0; n], &vec![1.0; n], &set(vec![1.0; n]), 0.0, 3).unwrap();
        assert!((ep.sigma_frac - 1.0 / 100_001f64.sqrt()).abs() < 1e-18);
        assert!((ep.sigma_frac - 3.16e-3).abs() < 1e-5);
        assert!((ep.sigma_frac_conservative / ep.sigma_frac - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn all_zero_distances_are_degenerate() {
        let err =
            build_posterior(&[0.0, 0.0], &[1.0, 1.0], &set(vec![0.0, 0.0]), 0.0, 2).unwrap_err();
        assert!(matches!(err, Error::Degenerate));
    }

    #[test]
    fn non_finite_input_names_index() {
        let err = build_posterior(&[0.0, f64::NAN, 0.0], &[1.0; 3], &set(vec![1.0; 3]), 0.0, 2)
            .unwrap_err();
        assert!(matches!(err, Error::Numeric { index: 1, .. }));
        let err =
            build_posterior(&[0.0; 3], &[1.0, 1.0, 0.0], &set(vec![1.0; 3]), 0.0, 2).unwrap_err();
        assert!(matches!(err, Error::Numeric { index: 2, .. }));
    }

    #[test]
    fn too_few_points_for_k() {
        let mut nb = set(vec![1.0, 1.0]);
        nb.k = 2;
        assert!(build_posterior(&[0.0; 2], &[1.0; 2], &nb, 0.0, 1).is_err());
    }

    #[test]
    fn density_peaks_at_map() {
        let ep = build_posterior(
            &[-3.0, -1.0, -2.0, -4.0],
            &[1.0; 4],
            &set(vec![0.5, 1.0, 0.7, 2.0]),
            0.3,
            2,
        )
        .unwrap();
        let at = ep.log_posterior_density(ep.log_map);
        for d in [-0.5, -0.1, 0.1, 0.5] {
            assert!(at > ep.log_posterior_density(ep.log_map + d));
        }
        // two evaluations differ exactly as the closed form says
        let (u1, u2) = (ep.log_map - 0.2, ep.log_map + 0.3);
        let direct =
            -(ep.shape + 1.0) * (u2 - u1) - ((ep.log_scale - u2).exp() - (ep.log_scale - u1).exp());
        let diff = ep.log_posterior_density(u2) - ep.log_posterior_density(u1);
        assert!((diff - direct).abs() < 1e-12);
    }

    #[test]
    fn interval_validation_and_ordering() {
        let ep = build_posterior(&[0.0; 50], &[1.0; 50], &set(vec![1.0; 50]), 0.0, 2).unwrap();
        assert!(ep.credible_interval(0.0).is_err());
        assert!(ep.credible_interval(1.0).is_err());
        let (lo, hi) = ep.credible_interval(0.68).unwrap();
        assert!(lo < ep.log_map && ep.log_map < hi);
        let med = ep.log_median();
        let (a, b) = ep.credible_interval(1e-9).unwrap();
        assert!((a - med).abs() < 1e-6 && (b - med).abs() < 1e-6);
    }

    #[test]
    fn gamma_quantile_inverts_cdf() {
        for &(a, q) in &[(1.0, 0.3), (2.0, 1e-6), (50.0, 0.975), (1e5, 0.16)] {
            let y = log_gamma_quantile(a, q).exp();
            let p = gamma_lr(a, y);
            assert!(
                (p - q).abs() < 1e-9 * q.max(1e-3) + 1e-12,
                "a={a} q={q} p={p}"
            );
        }
    }

    #[test]
    fn resolution_examples() {
        let r = resolution_diagnostic(100, 1);
        assert!((r.indicator - 0.005).abs() < 1e-15);
        assert!(!r.threshold_exceeded);
        let mut prev = f64::INFINITY;
        for n in [10, 100, 1000, 10_000] {
            let r = resolution_diagnostic(n, 7);
            assert!(r.indicator < prev);
            prev = r.indicator;
        }
    }

    #[test]
    fn lse_handles_extremes() {
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        let v = log_sum_exp(&[-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        let xs: Vec<f64> = (0..1000).map(|i| 800.0 + (i as f64) * 1e-3).collect();
        let direct = 800.0 + xs.iter().map(|x| (x - 800.0).exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-12);
    }
}
