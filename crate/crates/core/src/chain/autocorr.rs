//! Integrated autocorrelation time, used to pick a thinning stride.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::Chain;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Cap on the weight-expanded length relative to the row count.
const MAX_EXPANSION: f64 = 64.0;

/// Per-parameter integrated autocorrelation times.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrReport {
    /// τ_j ≥ 1 for each parameter column.
    pub taus: Vec<f64>,
    /// ⌈max τ⌉.
    pub suggested_stride: usize,
    /// Whether integer weights were expanded into repeated rows. Non-integer
    /// (importance) weights are ignored and the rows are analysed as-is.
    pub weight_expanded: bool,
    /// N < 10·m: the estimate is unreliable.
    pub short_chain: bool,
}

/// Integrated autocorrelation time of every parameter column via Geyer's
/// initial positive sequence estimator.
pub fn integrated_autocorr_time<T: Real>(chain: &Chain<T>) -> Result<AutocorrReport> {
    let weights = chain.weights();
    let integral = weights.iter().all(|w| w.fract() == T::zero());
    let expanded_len: f64 = weights.iter().map(|w| w.as_f64()).sum();
    let expand = integral && expanded_len <= MAX_EXPANSION * chain.len() as f64;
    let counts: Vec<usize> = if expand {
        weights.iter().map(|w| w.as_f64() as usize).collect()
    } else {
        vec![1; chain.len()]
    };
    let total: usize = counts.iter().sum();

    let mut planner = FftPlanner::<f64>::new();
    let mut taus = Vec::with_capacity(chain.dim());
    let mut series = Vec::with_capacity(total);
    for j in 0..chain.dim() {
        series.clear();
        for (i, &c) in counts.iter().enumerate() {
            let v = chain.parameters()[(i, j)].as_f64();
            series.extend(std::iter::repeat_n(v, c));
        }
        let rho =
            autocorrelation(&series, &mut planner).ok_or(Error::ZeroVariance { column: j })?;
        taus.push(initial_positive_sequence(&rho));
    }
    let max_tau = taus.iter().copied().fold(1.0, f64::max);
    Ok(AutocorrReport {
        suggested_stride: max_tau.ceil() as usize,
        taus,
        weight_expanded: expand,
        short_chain: chain.len() < 10 * chain.dim(),
    })
}

/// Normalized autocorrelation ρ_t for t = 0..n, or `None` for a constant series.
fn autocorrelation(x: &[f64], planner: &mut FftPlanner<f64>) -> Option<Vec<f64>> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    if !(c0 > 0.0) || c0 <= 1e-300 * size as f64 {
        return None;
    }
    // reject columns whose spread is pure rounding noise
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let var = c0 / (size as f64 * n as f64);
    if var <= (scale * f64::EPSILON).powi(2) {
        return None;
    }
    Some(buf[..n].iter().map(|c| c.re / c0).collect())
}

/// τ = −1 + 2 Σ_k Γ_k with Γ_k = ρ_{2k} + ρ_{2k+1}, summed while Γ_k > 0.
fn initial_positive_sequence(rho: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < rho.len() {
        let pair = rho[2 * k] + rho[2 * k + 1];
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 1;
    }
    (2.0 * sum - 1.0).max(1.0)
}
