//! Mahalanobis pre-whitening.
//!
//! The chain's weighted covariance `C = L·Lᵀ` defines the affine map
//! `θ ↦ L⁻¹(θ − θ̄)`, after which the samples have identity covariance and a
//! plain Euclidean metric is the Mahalanobis metric of the original space.
//! Volumes measured in whitened units are converted back to model units by
//! the Jacobian `J = √det C`, recorded here as `ln J = Σ ln L_ii`.

use rayon::prelude::*;

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::linalg::{log_det_from_cholesky, solve_lower_in_place, Matrix};
use crate::scalar::Real;

/// Relative eigenvalue floor used when the covariance is numerically singular.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Eigenvalues below `-NEGATIVE_TOLERANCE · λ_max` mean the input is not a covariance.
pub const NEGATIVE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Whitening<T> {
    mean: Vec<T>,
    factor: Matrix<T>,
    log_jacobian: T,
    /// Number of eigenvalues raised to the floor by the fallback path; zero
    /// when plain Cholesky succeeded.
    floored_eigenvalues: usize,
}

impl<T: Real> Whitening<T> {
    /// The identity transform (no whitening, `ln J = 0`).
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![T::zero(); dim],
            factor: Matrix::identity(dim),
            log_jacobian: T::zero(),
            floored_eigenvalues: 0,
        }
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    /// Lower-triangular `L` with positive diagonal, `C = L·Lᵀ`.
    pub fn factor(&self) -> &Matrix<T> {
        &self.factor
    }

    /// `ln J = ½ ln det C`.
    pub fn log_jacobian(&self) -> T {
        self.log_jacobian
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn floored_eigenvalues(&self) -> usize {
        self.floored_eigenvalues
    }

    /// True when the covariance needed eigenvalue flooring.
    pub fn ill_conditioned(&self) -> bool {
        self.floored_eigenvalues > 0
    }

    /// Whitened coordinates of a single point.
    pub fn transform_point(&self, theta: &[T]) -> Vec<T> {
        let mut out: Vec<T> = theta.iter().zip(&self.mean).map(|(&x, &m)| x - m).collect();
        solve_lower_in_place(&self.factor, &mut out);
        out
    }
}

/// Weighted mean `Σ w θ / W` and covariance `Σ w (θ−θ̄)(θ−θ̄)ᵀ / W`.
pub fn weighted_mean_cov<T: Real>(chain: &Chain<T>) -> Result<(Vec<T>, Matrix<T>)> {
    let m = chain.dim();
    let n = chain.len();
    if n < m + 1 {
        return Err(Error::Validation(format!(
            "{n} samples cannot determine a {m}-dimensional covariance"
        )));
    }
    let w = chain.weights();
    let total = chain.weight_sum();
    let params = chain.parameters();

    let mut mean = vec![T::zero(); m];
    for (row, &wi) in params.iter_rows().zip(w) {
        for (acc, &x) in mean.iter_mut().zip(row) {
            *acc += wi * x;
        }
    }
    for v in mean.iter_mut() {
        *v /= total;
    }

    let mut cov = Matrix::zeros(m, m);
    let mut d = vec![T::zero(); m];
    for (row, &wi) in params.iter_rows().zip(w) {
        for ((di, &x), &mu) in d.iter_mut().zip(row).zip(&mean) {
            *di = x - mu;
        }
        for i in 0..m {
            let wdi = wi * d[i];
            for j in 0..=i {
                cov[(i, j)] += wdi * d[j];
            }
        }
    }
    for i in 0..m {
        for j in 0..=i {
            let v = cov[(i, j)] / total;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    for j in 0..m {
        let scale = params
            .iter_rows()
            .fold(T::zero(), |acc, r| acc.max(r[j].abs()))
            .max(T::min_positive_value());
        if !(cov[(j, j)] > (scale * T::epsilon()).powi(2) * T::lit(16.0)) {
            return Err(Error::ZeroVariance { column: j });
        }
    }
    Ok((mean, cov))
}

/// Cholesky factor of `cov`, falling back to a floored eigendecomposition
/// when the matrix is numerically singular.
pub fn fit_whitening<T: Real>(cov: &Matrix<T>, mean: &[T]) -> Result<Whitening<T>> {
    if !cov.is_square() || cov.rows() != mean.len() || mean.is_empty() {
        return Err(Error::Validation(format!(
            "covariance is {}x{} but mean has length {}",
            cov.rows(),
            cov.cols(),
            mean.len()
        )));
    }
    let sym = symmetrized(cov);
    let (factor, floored) = match sym.cholesky() {
        Ok(l) => (l, 0),
        Err(_) => floored_factor(&sym)?,
    };
    Ok(Whitening {
        mean: mean.to_vec(),
        log_jacobian: log_det_from_cholesky(&factor),
        factor,
        floored_eigenvalues: floored,
    })
}

fn symmetrized<T: Real>(cov: &Matrix<T>) -> Matrix<T> {
    let n = cov.rows();
    let half = T::lit(0.5);
    let mut s = cov.clone();
    for i in 0..n {
        for j in 0..i {
            let v = (cov[(i, j)] + cov[(j, i)]) * half;
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

fn floored_factor<T: Real>(cov: &Matrix<T>) -> Result<(Matrix<T>, usize)> {
    let n = cov.rows();
    let (values, vectors) = cov.symmetric_eigen();
    let largest = values[n - 1];
    if !(largest > T::zero()) {
        return Err(Error::NotPositiveDefinite {
            pivot: n - 1,
            value: largest.as_f64(),
        });
    }
    if values[0] < -T::lit(NEGATIVE_TOLERANCE) * largest {
        return Err(Error::NotPositiveDefinite {
            pivot: 0,
            value: values[0].as_f64(),
        });
    }
    // f32 cannot resolve a 1e-12 floor; never go below what the type can represent
    let rel = T::lit(EIGEN_FLOOR).max(T::epsilon() * T::from_usize_lossy(100 * n));
    let floor = rel * largest;
    let mut floored = 0;
    let clamped: Vec<T> = values
        .iter()
        .map(|&v| {
            if v < floor {
                floored += 1;
                floor
            } else {
                v
            }
        })
        .collect();
    let rebuilt = symmetrized(
        &vectors
            .matmul(&Matrix::from_diagonal(&clamped))
            .matmul(&vectors.transpose()),
    );
    let l = rebuilt
        .cholesky()
        .map_err(|(pivot, value)| Error::NotPositiveDefinite {
            pivot,
            value: value.as_f64(),
        })?;
    Ok((l, floored.max(1)))
}

/// Whitened coordinates `L⁻¹(θ_α − θ̄)` for every row.
pub fn apply_whitening<T: Real>(w: &Whitening<T>, chain: &Chain<T>) -> Result<Matrix<T>> {
    apply_whitening_to(w, chain.parameters())
}

/// As [`apply_whitening`] on a bare N×m matrix.
pub fn apply_whitening_to<T: Real>(w: &Whitening<T>, points: &Matrix<T>) -> Result<Matrix<T>> {
    let m = w.dimension();
    if points.cols() != m {
        return Err(Error::Validation(format!(
            "whitening is {m}-dimensional but points have {} columns",
            points.cols()
        )));
    }
    let mut out = points.clone().into_vec();
    out.par_chunks_mut(m).for_each(|row| {
        for (x, &mu) in row.iter_mut().zip(&w.mean) {
            *x -= mu;
        }
        solve_lower_in_place(&w.factor, row);
    });
    Ok(Matrix::from_row_major(points.rows(), m, out))
}

/// Fits and applies whitening in one step.
pub fn whiten_chain<T: Real>(chain: &Chain<T>) -> Result<(Whitening<T>, Matrix<T>)> {
    let (mean, cov) = weighted_mean_cov(chain)?;
    let w = fit_whitening(&cov, &mean)?;
    let pts = apply_whitening(&w, chain)?;
    Ok((w, pts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(rows: &[Vec<f64>], weights: &[f64]) -> Chain<f64> {
        Chain::new(
            Matrix::from_rows(rows),
            vec![0.0; rows.len()],
            weights.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn square_corners_have_unit_covariance() {
        let c = chain(
            &[
                vec![0.0, 0.0],
                vec![2.0, 0.0],
                vec![0.0, 2.0],
                vec![2.0, 2.0],
            ],
            &[1.0; 4],
        );
        let (mean, cov) = weighted_mean_cov(&c).unwrap();
        assert_eq!(mean, vec![1.0, 1.0]);
        assert_eq!(cov, Matrix::identity(2));
    }

    #[test]
    fn weights_enter_the_moments() {
        let c = chain(&[vec![0.0], vec![4.0]], &[1.0, 3.0]);
        let (mean, cov) = weighted_mean_cov(&c).unwrap();
        assert_eq!(mean, vec![3.0]);
        assert_eq!(cov[(0, 0)], 3.0);
    }

    #[test]
    fn zero_variance_names_column() {
        let c = chain(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]], &[1.0; 3]);
        assert!(matches!(
            weighted_mean_cov(&c),
            Err(Error::ZeroVariance { column: 1 })
        ));
    }

    #[test]
    fn diagonal_and_identity_factors() {
        let w = fit_whitening(&Matrix::from_diagonal(&[4.0, 9.0]), &[0.0, 0.0]).unwrap();
        assert_eq!(w.factor(), &Matrix::from_diagonal(&[2.0, 3.0]));
        assert!((w.log_jacobian() - 6f64.ln()).abs() < 1e-15);

        let w = fit_whitening(&Matrix::<f64>::identity(5), &[0.0; 5]).unwrap();
        assert_eq!(w.factor(), &Matrix::identity(5));
        assert_eq!(w.log_jacobian(), 0.0);
    }

    #[test]
    fn correlated_2x2_factor() {
        let cov = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let w = fit_whitening(&cov, &[0.0, 0.0]).unwrap();
        let l = w.factor();
        let expect = Matrix::from_rows(&[
            vec![2f64.sqrt(), 0.0],
            vec![1.0 / 2f64.sqrt(), 1.5f64.sqrt()],
        ]);
        assert!(l.max_abs_diff(&expect) < 1e-15);
        assert!(l.matmul(&l.transpose()).max_abs_diff(&cov) < 1e-15);
        assert!((w.log_jacobian() - 0.5 * 3f64.ln()).abs() < 1e-15);
        let diag_sum: f64 = (0..2).map(|i| l[(i, i)].ln()).sum();
        assert_eq!(w.log_jacobian(), diag_sum);
    }

    #[test]
    fn singular_covariance_is_floored() {
        let cov = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let w = fit_whitening(&cov, &[0.0, 0.0]).unwrap();
        assert!(w.ill_conditioned());
        let l = w.factor();
        assert_eq!(l[(0, 1)], 0.0);
        assert!(l[(1, 1)] > 0.0);
        assert!(l.matmul(&l.transpose()).max_abs_diff(&cov) < 1e-5);
    }

    #[test]
    fn indefinite_covariance_is_rejected() {
        let cov = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        match fit_whitening(&cov, &[0.0, 0.0]) {
            Err(Error::NotPositiveDefinite { value, .. }) => assert!((value + 1.0).abs() < 1e-12),
            other => panic!("expected decomposition error, got {other:?}"),
        }
    }

    #[test]
    fn identity_transform_and_center() {
        let c = chain(&[vec![1.0, -2.0], vec![3.0, 0.5]], &[1.0, 1.0]);
        let id = Whitening::identity(2);
        assert_eq!(apply_whitening(&id, &c).unwrap(), c.parameters().clone());

        let cov = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let w = fit_whitening(&cov, &[0.5, -0.25]).unwrap();
        assert_eq!(w.transform_point(&[0.5, -0.25]), vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let c = chain(&[vec![1.0, -2.0], vec![3.0, 0.5]], &[1.0, 1.0]);
        assert!(apply_whitening(&Whitening::identity(3), &c).is_err());
    }
}
