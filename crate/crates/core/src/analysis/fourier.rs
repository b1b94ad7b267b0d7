//! Fourier coefficients over exact integer-period windows, and THD.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::engine::Waveforms;
use crate::error::{AnalysisError, Result};
use crate::netlist::Observable;

/// Tolerance on sample spacing and on the integer-period window check.
const GRID_TOL: f64 = 1e-6;

/// Complex Fourier coefficients `c_0..=c_K` of a uniformly sampled window
/// holding an integer number of fundamental periods.
///
/// `c_k = (2/M) * sum w[m] exp(-j 2 pi k f0 t[m])` for `k >= 1`, `c_0` uses `1/M`;
/// `|c_k|` is the amplitude of harmonic `k`.
pub fn fourier_coefficients(
    samples: &[f64],
    time: &[f64],
    f0: f64,
    n_harmonics: usize,
) -> Result<Vec<Complex64>> {
    let m = samples.len();
    if m < 2 || time.len() != m {
        return Err(AnalysisError::Invalid("need at least two samples with matching times".into()).into());
    }
    if !(f0 > 0.0) {
        return Err(AnalysisError::Invalid("fundamental must be > 0".into()).into());
    }
    let dt = (time[m - 1] - time[0]) / (m - 1) as f64;
    if !(dt > 0.0) || time.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > GRID_TOL * dt) {
        return Err(AnalysisError::NonUniformSampling.into());
    }
    let periods = m as f64 * dt * f0;
    if periods.round() < 1.0 || (periods - periods.round()).abs() > GRID_TOL * periods.max(1.0) {
        return Err(AnalysisError::NonIntegerWindow { periods }.into());
    }

    let inv = 1.0 / m as f64;
    Ok((0..=n_harmonics)
        .map(|k| {
            let omega = 2.0 * PI * k as f64 * f0;
            let sum: Complex64 = samples
                .iter()
                .zip(time)
                .map(|(&w, &t)| Complex64::from_polar(w, -omega * t))
                .sum();
            sum * if k == 0 { inv } else { 2.0 * inv }
        })
        .collect())
}

/// `100 * sqrt(sum_{k>=2} |c_k|^2) / |c_1|`.
pub fn thd(coefficients: &[Complex64]) -> Result<f64> {
    if coefficients.len() < 3 {
        return Err(AnalysisError::Invalid("THD needs coefficients up to at least k = 2".into()).into());
    }
    let fundamental = coefficients[1].norm();
    // relative to the whole spectrum so that round-off in c_1 of a DC or
    // pure-harmonic signal is not mistaken for a fundamental
    let largest = coefficients.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if !(fundamental > 0.0) || fundamental < 1e-12 * largest {
        return Err(AnalysisError::NoFundamental.into());
    }
    let harmonics: f64 = coefficients[2..].iter().map(|c| c.norm_sqr()).sum();
    Ok(100.0 * harmonics.sqrt() / fundamental)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisWindow {
    pub first_period: usize,
    pub period_count: usize,
    pub samples_per_period: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThdReport {
    pub fundamental_hz: f64,
    /// `|c_k|` for `k = 1..=K`.
    pub harmonic_magnitudes: Vec<f64>,
    pub thd_percent: f64,
    pub window: AnalysisWindow,
}

/// THD of one observable, skipping the first `warmup_periods` periods and
/// analysing all remaining whole periods.
pub fn thd_report(
    waves: &Waveforms,
    observable: &Observable,
    f0: f64,
    n_harmonics: usize,
    warmup_periods: usize,
) -> Result<ThdReport> {
    let signal = waves
        .signal(observable)
        .ok_or_else(|| AnalysisError::Invalid(format!("no signal {observable}")))?;
    let spp_f = 1.0 / (f0 * waves.dt);
    let spp = spp_f.round() as usize;
    if spp < 2 || (spp_f - spp as f64).abs() > GRID_TOL * spp_f {
        return Err(AnalysisError::NonIntegerWindow { periods: spp_f }.into());
    }
    // time has one sample more than steps: drop the closing endpoint
    let total_periods = (waves.time.len() - 1) / spp;
    if warmup_periods >= total_periods {
        return Err(AnalysisError::Invalid(format!(
            "warmup of {warmup_periods} periods leaves nothing of {total_periods}"
        ))
        .into());
    }
    let period_count = total_periods - warmup_periods;
    let start = warmup_periods * spp;
    let end = start + period_count * spp;
    let coeffs = fourier_coefficients(&signal[start..end], &waves.time[start..end], f0, n_harmonics)?;
    Ok(ThdReport {
        fundamental_hz: f0,
        harmonic_magnitudes: coeffs[1..].iter().map(|c| c.norm()).collect(),
        thd_percent: thd(&coeffs)?,
        window: AnalysisWindow {
            first_period: warmup_periods,
            period_count,
            samples_per_period: spp,
        },
    })
}

/// Summed absolute areas of the two half-period lobes of an I–V trajectory
/// over the last full period. For a pinched loop the lobes circulate in
/// opposite senses, so their signed areas would cancel.
pub fn pinched_loop_area(voltage: &[f64], current: &[f64], samples_per_period: usize) -> f64 {
    let n = voltage.len().min(current.len());
    if samples_per_period < 2 || n < samples_per_period + 1 {
        return 0.0;
    }
    let start = n - 1 - samples_per_period;
    let half = samples_per_period / 2;
    let lobe = |a: usize, b: usize| {
        let mut s = 0.0;
        for k in a..b {
            s += voltage[k] * current[k + 1] - voltage[k + 1] * current[k];
        }
        // close the polygon
        s += voltage[b] * current[a] - voltage[a] * current[b];
        0.5 * s.abs()
    };
    lobe(start, start + half) + lobe(start + half, start + samples_per_period)
}
