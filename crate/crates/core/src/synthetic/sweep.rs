//! Accuracy sweeps over dimension, chain length, neighbour order and
//! whitening on the Gaussian benchmark.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::GaussianBenchmark;
use crate::error::{Error, Result};
use crate::knn::Backend;
use crate::pipeline::estimate_orders;
use crate::rng::derive_seed;

/// Number of data vectors per benchmark unless overridden.
pub const DEFAULT_N_DATA: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub chain_lengths: Vec<usize>,
    pub ks: Vec<usize>,
    pub whiten_flags: Vec<bool>,
    pub repeats: usize,
    pub seed: u64,
    pub n_data: usize,
    pub backend: Backend,
    /// Record wall-clock time per record. Off by default so that output depends
    /// on the seed alone.
    pub timing: bool,
}

impl SweepConfig {
    pub fn new(
        dims: Vec<usize>,
        chain_lengths: Vec<usize>,
        ks: Vec<usize>,
        whiten_flags: Vec<bool>,
        repeats: usize,
        seed: u64,
    ) -> Self {
        Self {
            dims,
            chain_lengths,
            ks,
            whiten_flags,
            repeats,
            seed,
            n_data: DEFAULT_N_DATA,
            backend: Backend::Auto,
            timing: false,
        }
    }

    fn validate(&self) -> Result<()> {
        let empty = [
            ("dims", self.dims.is_empty()),
            ("chain lengths", self.chain_lengths.is_empty()),
            ("k values", self.ks.is_empty()),
            ("whitening flags", self.whiten_flags.is_empty()),
            ("repeats", self.repeats == 0),
        ];
        if let Some((what, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Validation(format!("sweep has no {what}")));
        }
        if self.dims.contains(&0) || self.ks.contains(&0) {
            return Err(Error::Validation(
                "dimensions and k must be positive".into(),
            ));
        }
        if let Some(&n) = self
            .chain_lengths
            .iter()
            .find(|&&n| n <= *self.ks.iter().max().unwrap())
        {
            return Err(Error::Validation(format!(
                "chain length {n} is too short for the largest k"
            )));
        }
        Ok(())
    }

    /// Seed of the (m, N, repeat) cell; the benchmark and the chain are
    /// derived from it and shared by every k and whitening flag.
    pub fn cell_seed(&self, m: usize, n: usize, repeat: usize) -> u64 {
        derive_seed(self.seed, &[m as u64, n as u64, repeat as u64])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub whitened: bool,
    pub repeat: usize,
    pub seed: u64,
    /// `ln E_MAP − ln E_analytic`.
    pub log_ratio: f64,
    pub sigma_frac: f64,
    /// Whitening, neighbour search and posterior for this record's
    /// (cell, whitening) group; empty unless timing was requested.
    pub runtime_seconds: Option<f64>,
}

/// Runs every configured cell with direct posterior samples.
///
/// Records are sorted by (m, N, k, whitened, repeat).
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let mut ks = config.ks.clone();
    ks.sort_unstable();
    ks.dedup();
    let mut records = Vec::new();
    for &m in &config.dims {
        for &n in &config.chain_lengths {
            for repeat in 0..config.repeats {
                let seed = config.cell_seed(m, n, repeat);
                let bench =
                    GaussianBenchmark::<f64>::generate(m, config.n_data, derive_seed(seed, &[0]))?;
                let chain = bench.sample_posterior_direct(n, derive_seed(seed, &[1]))?;
                let truth = bench.analytic_log_evidence();
                for &whitened in &config.whiten_flags {
                    let started = Instant::now();
                    let posteriors = estimate_orders(&chain, &ks, whitened, config.backend)?;
                    let elapsed = started.elapsed().as_secs_f64();
                    for (&k, ep) in ks.iter().zip(&posteriors) {
                        records.push(SweepRecord {
                            m,
                            n,
                            k,
                            whitened,
                            repeat,
                            seed,
                            log_ratio: ep.log_map - truth,
                            sigma_frac: ep.sigma_frac,
                            runtime_seconds: config.timing.then_some(elapsed),
                        });
                    }
                }
            }
        }
    }
    records.sort_by(|a, b| {
        (a.m, a.n, a.k, a.whitened, a.repeat).cmp(&(b.m, b.n, b.k, b.whitened, b.repeat))
    });
    records.dedup_by(|a, b| {
        (a.m, a.n, a.k, a.whitened, a.repeat) == (b.m, b.n, b.k, b.whitened, b.repeat)
    });
    Ok(records)
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()
        .map_err(|e| Error::Validation(format!("writing CSV: {e}")))?;
    Ok(())
}

pub fn write_json<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, records)
        .map_err(|e| Error::Validation(format!("writing JSON: {e}")))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Validation(format!("writing CSV: {e}"))
}

/// Median of the values; `NaN` for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_is_complete_and_reproducible() {
        let cfg = SweepConfig {
            n_data: 50,
            ..SweepConfig::new(vec![2, 3], vec![200], vec![1, 2], vec![true, false], 2, 9)
        };
        let a = run_sweep(&cfg).unwrap();
        assert_eq!(a.len(), 2 * 2 * 2 * 2);
        assert_eq!(a, run_sweep(&cfg).unwrap());
        assert!(a
            .iter()
            .all(|r| r.runtime_seconds.is_none() && r.log_ratio.is_finite()));

        let mut buf = Vec::new();
        write_csv(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(
            text.starts_with("m,N,k,whitened,repeat,seed,log_ratio,sigma_frac,runtime_seconds\n")
        );
        assert_eq!(text.lines().count(), a.len() + 1);
    }

    #[test]
    fn rejects_empty_axes() {
        let cfg = SweepConfig::new(vec![], vec![100], vec![1], vec![true], 1, 0);
        assert!(run_sweep(&cfg).is_err());
        let cfg = SweepConfig::new(vec![2], vec![3], vec![4], vec![true], 1, 0);
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
