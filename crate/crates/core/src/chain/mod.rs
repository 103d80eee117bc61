//! Posterior sample chains: the canonical in-memory representation plus the
//! preprocessing steps applied before density estimation (burn-in removal,
//! thinning, duplicate compaction).

mod autocorr;
mod text;

pub use autocorr::{integrated_autocorr_time, AutocorrReport};
pub use text::{dump_chain, parse_chain, read_chain_file, ColumnSpec, ParameterColumns};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// N parameter samples with their log unnormalized posterior and weights.
///
/// Construction validates every invariant, so a `Chain` in hand always has
/// at least two rows, at least one parameter, finite coordinates and
/// log-targets, and strictly positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain<T> {
    parameters: Matrix<T>,
    log_target: Vec<T>,
    weights: Vec<T>,
    param_names: Option<Vec<String>>,
    model_id: Option<String>,
}

impl<T: Real> Chain<T> {
    pub fn new(parameters: Matrix<T>, log_target: Vec<T>, weights: Vec<T>) -> Result<Self> {
        let n = parameters.rows();
        if parameters.cols() == 0 {
            return Err(Error::Validation("chain has no parameter columns".into()));
        }
        if n < 2 {
            return Err(Error::Validation(format!(
                "chain needs at least 2 samples, found {n}"
            )));
        }
        if log_target.len() != n || weights.len() != n {
            return Err(Error::Validation(format!(
                "length mismatch: {n} parameter rows, {} log-target values, {} weights",
                log_target.len(),
                weights.len()
            )));
        }
        for (i, row) in parameters.iter_rows().enumerate() {
            if let Some(j) = row.iter().position(|x| !x.is_finite()) {
                return Err(Error::Validation(format!(
                    "sample {i}: parameter {j} is not finite"
                )));
            }
        }
        if let Some(i) = log_target.iter().position(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "sample {i}: log-target {} is not finite",
                log_target[i]
            )));
        }
        if let Some(i) = weights
            .iter()
            .position(|w| !(*w > T::zero() && w.is_finite()))
        {
            return Err(Error::Validation(format!(
                "sample {i}: weight {} is not strictly positive",
                weights[i]
            )));
        }
        Ok(Self {
            parameters,
            log_target,
            weights,
            param_names: None,
            model_id: None,
        })
    }

    /// Chain with every weight equal to one.
    pub fn unweighted(parameters: Matrix<T>, log_target: Vec<T>) -> Result<Self> {
        let n = parameters.rows();
        Self::new(parameters, log_target, vec![T::one(); n])
    }

    pub fn with_param_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::Validation(format!(
                "{} parameter names for {} parameters",
                names.len(),
                self.dim()
            )));
        }
        self.param_names = Some(names);
        Ok(self)
    }

    pub fn with_model_id(mut self, id: impl Into<String>) -> Self {
        self.model_id = Some(id.into());
        self
    }

    /// Number of samples N.
    #[inline]
    pub fn len(&self) -> usize {
        self.parameters.rows()
    }

    /// Never true; present for API symmetry with `len`.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Parameter dimension m.
    #[inline]
    pub fn dim(&self) -> usize {
        self.parameters.cols()
    }

    pub fn parameters(&self) -> &Matrix<T> {
        &self.parameters
    }

    pub fn log_target(&self) -> &[T] {
        &self.log_target
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn param_names(&self) -> Option<&[String]> {
        self.param_names.as_deref()
    }

    pub fn model_id(&self) -> Option<&str> {
        self.model_id.as_deref()
    }

    /// Sum of weights W.
    pub fn weight_sum(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Replaces the log-target column, e.g. after a change of variables.
    pub fn with_log_target(self, log_target: Vec<T>) -> Result<Self> {
        let Self {
            parameters,
            weights,
            param_names,
            model_id,
            ..
        } = self;
        let mut c = Self::new(parameters, log_target, weights)?;
        c.param_names = param_names;
        c.model_id = model_id;
        Ok(c)
    }

    fn select(&self, rows: impl Iterator<Item = usize>) -> Result<Self> {
        let m = self.dim();
        let mut data = Vec::new();
        let mut lt = Vec::new();
        let mut w = Vec::new();
        for i in rows {
            data.extend_from_slice(self.parameters.row(i));
            lt.push(self.log_target[i]);
            w.push(self.weights[i]);
        }
        let n = lt.len();
        let mut c = Self::new(Matrix::from_row_major(n, m, data), lt, w)?;
        c.param_names = self.param_names.clone();
        c.model_id = self.model_id.clone();
        Ok(c)
    }

    /// Drops the first ⌊fraction·N⌋ rows.
    pub fn burn_in(&self, fraction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Validation(format!(
                "burn-in fraction {fraction} is outside [0, 1)"
            )));
        }
        let drop = (fraction * self.len() as f64).floor() as usize;
        self.select(drop..self.len())
    }

    /// Keeps rows 0, stride, 2·stride, …
    pub fn thin(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Validation(
                "thinning stride must be at least 1".into(),
            ));
        }
        self.select((0..self.len()).step_by(stride))
    }

    /// Merges maximal runs of consecutive rows with bitwise-identical
    /// coordinates into one row carrying the run's total weight.
    pub fn compact_duplicates(&self) -> Result<Self> {
        let m = self.dim();
        let mut data: Vec<T> = Vec::with_capacity(self.len() * m);
        let mut lt: Vec<T> = Vec::with_capacity(self.len());
        let mut w: Vec<T> = Vec::with_capacity(self.len());
        let mut prev: Option<usize> = None;
        for i in 0..self.len() {
            let row = self.parameters.row(i);
            if let Some(p) = prev {
                if bitwise_eq(self.parameters.row(p), row) {
                    if self.log_target[p].to_bits_eq(self.log_target[i]) {
                        *w.last_mut().unwrap() += self.weights[i];
                        continue;
                    }
                    return Err(Error::Validation(format!(
                        "samples {p} and {i} share coordinates but have log-targets {} and {}",
                        self.log_target[p], self.log_target[i]
                    )));
                }
            }
            data.extend_from_slice(row);
            lt.push(self.log_target[i]);
            w.push(self.weights[i]);
            prev = Some(i);
        }
        let n = lt.len();
        let mut c = Self::new(Matrix::from_row_major(n, m, data), lt, w)?;
        c.param_names = self.param_names.clone();
        c.model_id = self.model_id.clone();
        Ok(c)
    }

    /// Appends the rows of `other`, which must have the same dimension.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::Validation(format!(
                "cannot concatenate chains of dimension {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let mut data = self.parameters.as_slice().to_vec();
        data.extend_from_slice(other.parameters.as_slice());
        let mut lt = self.log_target.clone();
        lt.extend_from_slice(&other.log_target);
        let mut w = self.weights.clone();
        w.extend_from_slice(&other.weights);
        let n = lt.len();
        let mut c = Self::new(Matrix::from_row_major(n, self.dim(), data), lt, w)?;
        c.param_names = self
            .param_names
            .clone()
            .or_else(|| other.param_names.clone());
        c.model_id = self.model_id.clone().or_else(|| other.model_id.clone());
        Ok(c)
    }
}

/// Exact equality of the bit patterns (so `-0.0 != 0.0`, NaN never occurs).
trait BitsEq {
    fn to_bits_eq(self, other: Self) -> bool;
}

impl<T: Real> BitsEq for T {
    #[inline]
    fn to_bits_eq(self, other: Self) -> bool {
        // integer_decode is exact for both f32 and f64
        self.integer_decode() == other.integer_decode()
    }
}

fn bitwise_eq<T: Real>(a: &[T], b: &[T]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| x.to_bits_eq(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_1d(values: &[f64]) -> Chain<f64> {
        let n = values.len();
        Chain::unweighted(
            Matrix::from_row_major(n, 1, values.to_vec()),
            (0..n).map(|i| -(i as f64)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_short_and_bad_weights() {
        let p = Matrix::from_row_major(1, 1, vec![0.0]);
        assert!(Chain::unweighted(p, vec![0.0]).is_err());
        let p = Matrix::from_row_major(2, 1, vec![0.0, 1.0]);
        assert!(Chain::new(p.clone(), vec![0.0, 0.0], vec![1.0, 0.0]).is_err());
        assert!(Chain::new(p.clone(), vec![0.0, f64::INFINITY], vec![1.0, 1.0]).is_err());
        assert!(Chain::new(p, vec![0.0, 1.0], vec![1.0, -2.0]).is_err());
    }

    #[test]
    fn burn_in_drops_floor_fraction() {
        let c = chain_1d(&(0..10).map(f64::from).collect::<Vec<_>>());
        let b = c.burn_in(0.3).unwrap();
        assert_eq!(b.len(), 7);
        assert_eq!(b.parameters().row(0), &[3.0]);
        assert_eq!(c.burn_in(0.0).unwrap(), c);

        let short = chain_1d(&[0.0, 1.0, 2.0, 3.0]);
        assert!(short.burn_in(0.9).is_err());
        assert!(short.burn_in(1.0).is_err());
    }

    #[test]
    fn thinning_keeps_every_stride_row() {
        let c = chain_1d(&(0..7).map(f64::from).collect::<Vec<_>>());
        assert_eq!(c.thin(1).unwrap(), c);
        let t = c.thin(3).unwrap();
        assert_eq!(t.parameters().as_slice(), &[0.0, 3.0, 6.0]);
        assert_eq!(t.log_target(), &[0.0, -3.0, -6.0]);
        let five = chain_1d(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(five.thin(5).is_err());
        assert!(five.thin(0).is_err());
    }

    #[test]
    fn compaction_merges_runs() {
        let c = Chain::unweighted(
            Matrix::from_row_major(3, 1, vec![1.0, 1.0, 2.0]),
            vec![-1.0, -1.0, -2.0],
        )
        .unwrap();
        let k = c.compact_duplicates().unwrap();
        assert_eq!(k.parameters().as_slice(), &[1.0, 2.0]);
        assert_eq!(k.weights(), &[2.0, 1.0]);

        let distinct = chain_1d(&[0.0, 1.0, 0.0]);
        assert_eq!(distinct.compact_duplicates().unwrap(), distinct);
    }

    #[test]
    fn compaction_rejects_inconsistent_log_target() {
        let c = Chain::unweighted(
            Matrix::from_row_major(3, 1, vec![1.0, 1.0, 2.0]),
            vec![-1.0, -2.0, -2.0],
        )
        .unwrap();
        assert!(matches!(c.compact_duplicates(), Err(Error::Validation(_))));
    }

    #[test]
    fn concat_checks_dimension() {
        let a = chain_1d(&[0.0, 1.0]);
        let b = Chain::unweighted(
            Matrix::from_row_major(2, 2, vec![0.0, 1.0, 2.0, 3.0]),
            vec![0.0, 0.0],
        )
        .unwrap();
        assert!(a.concat(&b).is_err());
        assert_eq!(a.concat(&a).unwrap().len(), 4);
    }
}
