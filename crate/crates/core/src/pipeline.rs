//! End-to-end estimation: preprocessing, whitening, neighbour search, posterior.

use serde::{Deserialize, Serialize};

use crate::chain::{integrated_autocorr_time, AutocorrReport, Chain};
use crate::error::{Error, Result};
use crate::evidence::{
    build_posterior, resolution_diagnostic, EvidencePosterior, ResolutionDiagnostic,
};
use crate::knn::{neighbor_sets, Backend};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::whiten::{whiten_chain, Whitening};

/// Default fraction of each input chain discarded as burn-in.
pub const DEFAULT_BURN_IN: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Thinning {
    /// Stride ⌈max τ⌉ from the integrated autocorrelation time.
    Auto,
    Stride(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessOptions {
    pub burn_in: f64,
    pub thin: Thinning,
    pub compact: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            burn_in: DEFAULT_BURN_IN,
            thin: Thinning::Auto,
            compact: true,
        }
    }
}

impl PreprocessOptions {
    /// Burn-in 0, stride 1, no compaction.
    pub fn none() -> Self {
        Self {
            burn_in: 0.0,
            thin: Thinning::Stride(1),
            compact: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessReport {
    pub n_input: usize,
    pub n_after_burn_in: usize,
    pub stride: usize,
    pub autocorr: Option<AutocorrReport>,
    pub n_after_thin: usize,
    pub n_after_compact: usize,
}

/// Burn-in (per input chain), concatenation, thinning, then compaction.
pub fn preprocess<T: Real>(
    chains: &[Chain<T>],
    opts: &PreprocessOptions,
) -> Result<(Chain<T>, PreprocessReport)> {
    let (first, rest) = chains
        .split_first()
        .ok_or_else(|| Error::Validation("no input chains".into()))?;
    let n_input = chains.iter().map(Chain::len).sum();
    let mut merged = first.burn_in(opts.burn_in)?;
    for c in rest {
        merged = merged.concat(&c.burn_in(opts.burn_in)?)?;
    }
    let n_after_burn_in = merged.len();

    let (stride, autocorr) = match opts.thin {
        Thinning::Stride(s) => (s, None),
        Thinning::Auto => {
            let report = integrated_autocorr_time(&merged)?;
            (report.suggested_stride.max(1), Some(report))
        }
    };
    let thinned = merged.thin(stride)?;
    let n_after_thin = thinned.len();
    let out = if opts.compact {
        thinned.compact_duplicates()?
    } else {
        thinned
    };
    let report = PreprocessReport {
        n_input,
        n_after_burn_in,
        stride,
        autocorr,
        n_after_thin,
        n_after_compact: out.len(),
    };
    Ok((out, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub k: usize,
    pub whiten: bool,
    pub backend: Backend,
    pub level: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            k: 1,
            whiten: true,
            backend: Backend::Auto,
            level: 0.68,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T> {
    pub posterior: EvidencePosterior<T>,
    /// `(ln E_low, ln E_high)` at `level`.
    pub interval: (T, T),
    pub level: f64,
    pub resolution: ResolutionDiagnostic,
    pub log_jacobian: T,
    pub zero_distance_count: usize,
    /// The backend actually used after resolving `Auto`.
    pub backend: Backend,
    /// Whitening needed eigenvalue flooring.
    pub ill_conditioned: bool,
    pub dim: usize,
}

/// Coordinates in which distances are measured, with their `ln J`.
pub fn metric_points<T: Real>(chain: &Chain<T>, whiten: bool) -> Result<(Matrix<T>, Whitening<T>)> {
    if whiten {
        let (w, pts) = whiten_chain(chain)?;
        Ok((pts, w))
    } else {
        Ok((chain.parameters().clone(), Whitening::identity(chain.dim())))
    }
}

/// Evidence posterior for a preprocessed chain.
pub fn estimate<T: Real>(chain: &Chain<T>, opts: &EstimateOptions) -> Result<Estimate<T>> {
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(Error::Validation(format!(
            "credible level {} is outside (0, 1)",
            opts.level
        )));
    }
    let (points, w) = metric_points(chain, opts.whiten)?;
    let backend = opts.backend.resolve(points.rows(), points.cols());
    let neighbors = neighbor_sets(&points, opts.k, backend)?
        .pop()
        .expect("k >= 1");
    let posterior = build_posterior(
        chain.log_target(),
        chain.weights(),
        &neighbors,
        w.log_jacobian(),
        chain.dim(),
    )?;
    Ok(Estimate {
        interval: posterior.credible_interval(opts.level)?,
        posterior,
        level: opts.level,
        resolution: resolution_diagnostic(chain.len(), chain.dim()),
        log_jacobian: w.log_jacobian(),
        zero_distance_count: neighbors.zero_distance_count,
        backend,
        ill_conditioned: w.ill_conditioned(),
        dim: chain.dim(),
    })
}

/// Posteriors for several neighbour orders sharing a single search.
pub fn estimate_orders<T: Real>(
    chain: &Chain<T>,
    ks: &[usize],
    whiten: bool,
    backend: Backend,
) -> Result<Vec<EvidencePosterior<T>>> {
    let max_k = ks.iter().copied().max().unwrap_or(0);
    let (points, w) = metric_points(chain, whiten)?;
    let sets = neighbor_sets(&points, max_k, backend)?;
    ks.iter()
        .map(|&k| {
            if k == 0 {
                return Err(Error::Validation(
                    "neighbour order k must be at least 1".into(),
                ));
            }
            build_posterior(
                chain.log_target(),
                chain.weights(),
                &sets[k - 1],
                w.log_jacobian(),
                chain.dim(),
            )
        })
        .collect()
}
