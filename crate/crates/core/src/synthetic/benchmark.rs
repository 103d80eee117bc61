use rand_distr::{Distribution, StandardNormal};

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::linalg::{log_det_from_cholesky, solve_lower_in_place, Matrix};
use crate::rng::{derive_seed, rng_from_seed};
use crate::scalar::Real;

/// Data vectors drawn from a Gaussian with known covariance; the model
/// parameters are the Gaussian's mean. With a flat prior of unit density the
/// evidence has a closed form.
#[derive(Debug, Clone)]
pub struct GaussianBenchmark<T> {
    sigma: Matrix<T>,
    sigma_factor: Matrix<T>,
    data: Matrix<T>,
    sample_mean: Vec<T>,
    /// `ln |2πΣ|`.
    log_det_2pi_sigma: T,
    /// `Σ_i (x_i − x̄)ᵀ Σ⁻¹ (x_i − x̄)`.
    scatter: T,
    log_analytic_evidence: T,
    seed: u64,
}

/// `AᵀA` for an m×m matrix `A` of i.i.d. standard normals.
pub fn random_covariance<T: Real>(m: usize, seed: u64) -> Matrix<T>
where
    StandardNormal: Distribution<T>,
{
    let mut rng = rng_from_seed(seed);
    let a = Matrix::from_row_major(
        m,
        m,
        (0..m * m)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect(),
    );
    let mut s = a.transpose().matmul(&a);
    for i in 0..m {
        for j in 0..i {
            s[(j, i)] = s[(i, j)];
        }
    }
    s
}

/// `n` i.i.d. rows from `N(mu, sigma)` as `mu + L z`.
pub fn generate_data<T: Real>(n: usize, mu: &[T], sigma: &Matrix<T>, seed: u64) -> Result<Matrix<T>>
where
    StandardNormal: Distribution<T>,
{
    let l = factor(sigma)?;
    Ok(gaussian_rows(n, mu, &l, seed))
}

fn factor<T: Real>(sigma: &Matrix<T>) -> Result<Matrix<T>> {
    sigma
        .cholesky()
        .map_err(|(pivot, value)| Error::NotPositiveDefinite {
            pivot,
            value: value.as_f64(),
        })
}

fn gaussian_rows<T: Real>(n: usize, mu: &[T], l: &Matrix<T>, seed: u64) -> Matrix<T>
where
    StandardNormal: Distribution<T>,
{
    let m = mu.len();
    let mut rng = rng_from_seed(seed);
    let mut data = Vec::with_capacity(n * m);
    let mut z = vec![T::zero(); m];
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        let lz = l.mul_vec(&z);
        data.extend(mu.iter().zip(&lz).map(|(&a, &b)| a + b));
    }
    Matrix::from_row_major(n, m, data)
}

impl<T: Real> GaussianBenchmark<T>
where
    StandardNormal: Distribution<T>,
{
    /// Random covariance and `n_data` vectors around a zero mean, all from `seed`.
    pub fn generate(m: usize, n_data: usize, seed: u64) -> Result<Self> {
        if m == 0 || n_data == 0 {
            return Err(Error::Validation(
                "benchmark needs m >= 1 and n_data >= 1".into(),
            ));
        }
        let sigma = random_covariance(m, derive_seed(seed, &[0]));
        let data = generate_data(n_data, &vec![T::zero(); m], &sigma, derive_seed(seed, &[1]))?;
        let mut b = Self::from_data(sigma, data)?;
        b.seed = seed;
        Ok(b)
    }

    /// Direct draws from the posterior over the mean, `N(x̄, Σ/n)`, with
    /// `ln p̃` equal to the log-likelihood and unit weights.
    pub fn sample_posterior_direct(&self, n_samples: usize, seed: u64) -> Result<Chain<T>> {
        let scaled = self.posterior_factor();
        let params = gaussian_rows(n_samples, &self.sample_mean, &scaled, seed);
        let lt = params
            .iter_rows()
            .map(|mu| self.log_likelihood(mu))
            .collect();
        Chain::unweighted(params, lt)
    }
}

impl<T: Real> GaussianBenchmark<T> {
    /// Benchmark over explicit data.
    pub fn from_data(sigma: Matrix<T>, data: Matrix<T>) -> Result<Self> {
        let m = sigma.rows();
        if !sigma.is_square() || data.cols() != m || data.rows() == 0 {
            return Err(Error::Validation(format!(
                "covariance is {}x{} but data are {}x{}",
                sigma.rows(),
                sigma.cols(),
                data.rows(),
                data.cols()
            )));
        }
        let l = factor(&sigma)?;
        let n = data.rows();
        let nf = T::from_usize_lossy(n);
        let mut mean = vec![T::zero(); m];
        for row in data.iter_rows() {
            for (a, &x) in mean.iter_mut().zip(row) {
                *a += x;
            }
        }
        for a in mean.iter_mut() {
            *a /= nf;
        }
        let log_det_2pi_sigma = T::from_usize_lossy(m) * (T::PI() + T::PI()).ln()
            + T::lit(2.0) * log_det_from_cholesky(&l);
        let scatter = data
            .iter_rows()
            .map(|x| mahalanobis_sq(&l, x, &mean))
            .sum::<T>();
        let half = T::lit(0.5);
        // ∫ dμ of the completed square: (2π)^{m/2} |Σ/n|^{1/2}
        let log_analytic_evidence = -(nf - T::one()) * half * log_det_2pi_sigma
            - half * T::from_usize_lossy(m) * nf.ln()
            - half * scatter;
        Ok(Self {
            sigma,
            sigma_factor: l,
            data,
            sample_mean: mean,
            log_det_2pi_sigma,
            scatter,
            log_analytic_evidence,
            seed: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }

    pub fn n_data(&self) -> usize {
        self.data.rows()
    }

    pub fn sigma(&self) -> &Matrix<T> {
        &self.sigma
    }

    pub fn data(&self) -> &Matrix<T> {
        &self.data
    }

    pub fn sample_mean(&self) -> &[T] {
        &self.sample_mean
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `ln E` with a unit-density flat prior over all of parameter space.
    pub fn analytic_log_evidence(&self) -> T {
        self.log_analytic_evidence
    }

    /// Cholesky factor of the posterior covariance `Σ/n`.
    pub fn posterior_factor(&self) -> Matrix<T> {
        let s = T::from_usize_lossy(self.n_data()).sqrt().recip();
        let mut l = self.sigma_factor.clone();
        for i in 0..l.rows() {
            for v in l.row_mut(i) {
                *v *= s;
            }
        }
        l
    }

    /// `ln Π_i N(x_i; μ, Σ)` via the completed square around `x̄`.
    pub fn log_likelihood(&self, mu: &[T]) -> T {
        let half = T::lit(0.5);
        let nf = T::from_usize_lossy(self.n_data());
        -half * nf * self.log_det_2pi_sigma
            - half * nf * mahalanobis_sq(&self.sigma_factor, mu, &self.sample_mean)
            - half * self.scatter
    }

    /// The same likelihood summed over data vectors one at a time.
    pub fn log_likelihood_direct(&self, mu: &[T]) -> T {
        let half = T::lit(0.5);
        self.data
            .iter_rows()
            .map(|x| {
                -half * self.log_det_2pi_sigma - half * mahalanobis_sq(&self.sigma_factor, mu, x)
            })
            .sum()
    }
}

/// `(a − b)ᵀ (LLᵀ)⁻¹ (a − b)`.
fn mahalanobis_sq<T: Real>(l: &Matrix<T>, a: &[T], b: &[T]) -> T {
    let mut d: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    solve_lower_in_place(l, &mut d);
    d.iter().map(|&v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_is_symmetric() {
        let s: Matrix<f64> = random_covariance(1, 3);
        assert!(s[(0, 0)] >= 0.0);
        let s: Matrix<f64> = random_covariance(6, 4);
        assert_eq!(s, s.transpose());
    }

    #[test]
    fn data_generation_is_deterministic() {
        let sigma: Matrix<f64> = random_covariance(3, 9);
        let a = generate_data(10, &[0.0; 3], &sigma, 1).unwrap();
        let b = generate_data(10, &[0.0; 3], &sigma, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_data(10, &[0.0; 3], &sigma, 2).unwrap());
    }

    #[test]
    fn single_row_is_mu_plus_lz() {
        let sigma = Matrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 9.0]]);
        let mu = [1.0, -1.0];
        let row = generate_data(1, &mu, &sigma, 77).unwrap();
        let mut rng = rng_from_seed(77);
        let z0: f64 = StandardNormal.sample(&mut rng);
        let z1: f64 = StandardNormal.sample(&mut rng);
        assert_eq!(row.row(0), &[1.0 + 2.0 * z0, -1.0 + 3.0 * z1]);
    }

    #[test]
    fn indefinite_sigma_is_rejected() {
        let sigma = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(generate_data(3, &[0.0, 0.0], &sigma, 0).is_err());
    }

    #[test]
    fn standard_normal_at_its_mode() {
        let b = GaussianBenchmark::from_data(
            Matrix::identity(1),
            Matrix::from_row_major(1, 1, vec![0.0]),
        )
        .unwrap();
        let expect = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((b.log_likelihood(&[0.0]) - expect).abs() < 1e-15);
        assert!(b.analytic_log_evidence().abs() < 1e-15);
    }

    #[test]
    fn two_point_evidence() {
        let b = GaussianBenchmark::from_data(
            Matrix::identity(1),
            Matrix::from_row_major(2, 1, vec![-1.0, 1.0]),
        )
        .unwrap();
        let expect = -1.0 - (2.0 * std::f64::consts::PI.sqrt()).ln();
        assert!((b.analytic_log_evidence() - expect).abs() < 1e-14);
        assert!((expect + 2.2655).abs() < 1e-4);
    }

    #[test]
    fn likelihood_peaks_at_sample_mean() {
        let b: GaussianBenchmark<f64> = GaussianBenchmark::generate(3, 20, 5).unwrap();
        let best = b.log_likelihood(b.sample_mean());
        for j in 0..3 {
            for delta in [-0.1, 0.05] {
                let mut mu = b.sample_mean().to_vec();
                mu[j] += delta;
                assert!(b.log_likelihood(&mu) < best);
            }
        }
    }

    #[test]
    fn direct_chain_log_targets_recompute() {
        let b: GaussianBenchmark<f64> = GaussianBenchmark::generate(2, 30, 8).unwrap();
        let c = b.sample_posterior_direct(50, 3).unwrap();
        for (mu, &lt) in c.parameters().iter_rows().zip(c.log_target()) {
            assert_eq!(lt, b.log_likelihood(mu));
        }
        assert_eq!(c, b.sample_posterior_direct(50, 3).unwrap());
    }
}
