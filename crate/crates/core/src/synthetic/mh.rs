//! Random-walk Metropolis on the benchmark posterior. Rejections repeat the
//! current row, so the output is correlated and duplicate-bearing like a real
//! sampler's chain.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::GaussianBenchmark;
use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::rng_from_seed;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct MetropolisRun<T> {
    pub chain: Chain<T>,
    pub acceptance_rate: f64,
}

impl<T> MetropolisRun<T> {
    /// Acceptance outside [1%, 99%] means the proposal scale is badly tuned.
    pub fn poorly_tuned(&self) -> bool {
        !(0.01..=0.99).contains(&self.acceptance_rate)
    }
}

/// `n_samples` steps with Gaussian proposals of covariance
/// `proposal_scale² · Σ/n`, started from a posterior draw.
pub fn sample_posterior_mh<T: Real>(
    n_samples: usize,
    bench: &GaussianBenchmark<T>,
    proposal_scale: f64,
    seed: u64,
) -> Result<MetropolisRun<T>>
where
    StandardNormal: Distribution<T>,
{
    if !(proposal_scale > 0.0 && proposal_scale.is_finite()) {
        return Err(Error::Validation(format!(
            "proposal scale {proposal_scale} must be positive"
        )));
    }
    let m = bench.dim();
    let l = bench.posterior_factor();
    let scale = T::lit(proposal_scale);
    let mut rng = rng_from_seed(seed);
    let mut z = vec![T::zero(); m];
    let draw = |rng: &mut crate::rng::BenchRng, z: &mut Vec<T>| {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(rng);
        }
        l.mul_vec(z)
    };

    let mut current: Vec<T> = bench
        .sample_mean()
        .iter()
        .zip(draw(&mut rng, &mut z))
        .map(|(&a, b)| a + b)
        .collect();
    let mut current_lt = bench.log_likelihood(&current);
    let mut params = Vec::with_capacity(n_samples * m);
    let mut lt = Vec::with_capacity(n_samples);
    let mut accepted = 0usize;
    for _ in 0..n_samples {
        let step = draw(&mut rng, &mut z);
        let proposal: Vec<T> = current
            .iter()
            .zip(&step)
            .map(|(&c, &s)| c + scale * s)
            .collect();
        let proposal_lt = bench.log_likelihood(&proposal);
        let log_u: f64 = rng.random::<f64>().ln();
        if log_u < (proposal_lt - current_lt).as_f64() {
            current = proposal;
            current_lt = proposal_lt;
            accepted += 1;
        }
        params.extend_from_slice(&current);
        lt.push(current_lt);
    }
    let chain = Chain::unweighted(Matrix::from_row_major(n_samples, m, params), lt)?;
    Ok(MetropolisRun {
        chain,
        acceptance_rate: accepted as f64 / n_samples.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_steps_are_almost_always_accepted() {
        let b: GaussianBenchmark<f64> = GaussianBenchmark::generate(3, 50, 1).unwrap();
        let run = sample_posterior_mh(2000, &b, 1e-4, 2).unwrap();
        assert!(run.acceptance_rate > 0.99);
    }

    #[test]
    fn rejections_leave_duplicates() {
        let b: GaussianBenchmark<f64> = GaussianBenchmark::generate(3, 50, 1).unwrap();
        let run = sample_posterior_mh(5000, &b, 1.5, 3).unwrap();
        assert!(run.acceptance_rate < 1.0 && !run.poorly_tuned());
        let compacted = run.chain.compact_duplicates().unwrap();
        assert!(compacted.len() < run.chain.len());
        let total: f64 = compacted.weights().iter().sum();
        assert_eq!(total, 5000.0);
    }

    #[test]
    fn bad_scale_is_rejected() {
        let b: GaussianBenchmark<f64> = GaussianBenchmark::generate(2, 10, 1).unwrap();
        assert!(sample_posterior_mh(10, &b, 0.0, 1).is_err());
        assert!(sample_posterior_mh(10, &b, f64::NAN, 1).is_err());
    }
}
