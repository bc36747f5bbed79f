//! Distributional diagnostics for exit time samples.
//!
//! Everything here works on the standardized scale: an exit time sample is
//! multiplied by a per-step exit rate, and the resulting values are
//! compared against the unit exponential law that the scaled times
//! approach at large thresholds. The comparisons are a Kolmogorov-Smirnov
//! statistic, quantile-quantile pairs, a log survival curve, and the
//! empirical moment generating function against `1 / (1 - t)`.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::mc::SummaryStats;
use crate::{Error, Result};

/// Where the standardizing rate comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSource {
    /// Reciprocal of the sample mean.
    PHatFromMean,
    /// Externally supplied rate, e.g. from a grid kernel's exit
    /// probability or a closed-form approximation.
    External(f64),
}

/// Exit times multiplied by a per-step exit rate, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedSample {
    pub values: Vec<f64>,
    pub rate: f64,
}

/// Standardizes raw exit times. The rate must lie strictly between 0 and
/// 1; a sample whose mean is 1 has no exponential regime to exhibit.
pub fn standardize(exit_times: &[u64], source: RateSource) -> Result<StandardizedSample> {
    if exit_times.is_empty() {
        return Err(Error::insufficient_sample(
            "cannot standardize an empty sample",
        ));
    }
    let rate = match source {
        RateSource::External(r) => r,
        RateSource::PHatFromMean => {
            let sum: u128 = exit_times.iter().map(|&v| v as u128).sum();
            exit_times.len() as f64 / sum as f64
        }
    };
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::invalid_input(format!(
            "standardizing rate must lie in (0, 1), got {rate}"
        )));
    }
    let mut values: Vec<f64> = exit_times.iter().map(|&v| rate * v as f64).collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite standardized values"));
    Ok(StandardizedSample { values, rate })
}

/// Kolmogorov-Smirnov distance between the standardized sample and the
/// unit exponential distribution.
pub fn ks_stat_exp1(sample: &StandardizedSample) -> Result<f64> {
    let n = sample.values.len();
    if n == 0 {
        return Err(Error::insufficient_sample("empty standardized sample"));
    }
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.values.iter().enumerate() {
        let cdf = -math::exp_m1(-x);
        let upper = (i + 1) as f64 / nf - cdf;
        let lower = cdf - i as f64 / nf;
        d = d.max(upper).max(lower);
    }
    Ok(d)
}

/// One quantile-quantile pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QqPoint {
    pub probability: f64,
    /// Unit exponential quantile at `probability`.
    pub theoretical: f64,
    /// Nearest-rank sample quantile.
    pub sample: f64,
}

/// Quantile pairs at probabilities `(i - 1/2) / k` for `i = 1..=k`.
pub fn qq_data(sample: &StandardizedSample, k: usize) -> Result<Vec<QqPoint>> {
    if sample.values.is_empty() {
        return Err(Error::insufficient_sample("empty standardized sample"));
    }
    if k == 0 {
        return Err(Error::invalid_input("need at least one quantile"));
    }
    let n = sample.values.len();
    Ok((1..=k)
        .map(|i| {
            let p = (i as f64 - 0.5) / k as f64;
            let rank = math::ceil(p * n as f64) as usize;
            let idx = rank.clamp(1, n) - 1;
            QqPoint {
                probability: p,
                theoretical: -math::ln_1p(-p),
                sample: sample.values[idx],
            }
        })
        .collect())
}

/// One point of a log survival curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalPoint {
    pub y: f64,
    /// `ln P(X > y)`; negative infinity once the sample is exhausted.
    pub log_survival: f64,
}

/// Empirical log survival function evaluated on `grid`. For a unit
/// exponential sample the curve tracks `-y`.
pub fn survival_curve(sample: &StandardizedSample, grid: &[f64]) -> Result<Vec<SurvivalPoint>> {
    let n = sample.values.len();
    if n == 0 {
        return Err(Error::insufficient_sample("empty standardized sample"));
    }
    if grid.iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid_input("survival grid must be finite"));
    }
    Ok(grid
        .iter()
        .map(|&y| {
            let at_most = sample.values.partition_point(|&v| v <= y);
            let surviving = n - at_most;
            let log_survival = if surviving == 0 {
                f64::NEG_INFINITY
            } else {
                math::ln(surviving as f64 / n as f64)
            };
            SurvivalPoint { y, log_survival }
        })
        .collect())
}

/// One point of the empirical moment generating function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfPoint {
    pub t: f64,
    pub empirical: f64,
    /// Unit exponential value `1 / (1 - t)`.
    pub theoretical: f64,
}

/// Arguments above this need a large sample; the summand variance blows
/// up as `t` approaches 1.
pub const MGF_GUARD_T: f64 = 0.7;

/// Minimum sample size for arguments at or above [`MGF_GUARD_T`].
pub const MGF_GUARD_MIN_SAMPLE: usize = 100_000;

/// Default evaluation grid; stops well short of the guard region.
pub const DEFAULT_T_GRID: [f64; 6] = [-1.0, -0.5, -0.25, 0.1, 0.25, 0.45];

/// Empirical moment generating function against the unit exponential one.
///
/// Arguments must stay below 1, where the limit diverges; arguments at or
/// above [`MGF_GUARD_T`] additionally require at least
/// [`MGF_GUARD_MIN_SAMPLE`] values, since smaller samples produce
/// estimates whose error bars are useless.
pub fn empirical_mgf(sample: &StandardizedSample, t_grid: &[f64]) -> Result<Vec<MgfPoint>> {
    let n = sample.values.len();
    if n == 0 {
        return Err(Error::insufficient_sample("empty standardized sample"));
    }
    for &t in t_grid {
        if t.is_nan() || t >= 1.0 {
            return Err(Error::invalid_input(format!(
                "mgf argument must be below 1, got {t}"
            )));
        }
        if t >= MGF_GUARD_T && n < MGF_GUARD_MIN_SAMPLE {
            return Err(Error::precondition(format!(
                "mgf at t = {t} needs at least {MGF_GUARD_MIN_SAMPLE} values, got {n}"
            )));
        }
    }
    Ok(t_grid
        .iter()
        .map(|&t| {
            let sum: f64 = sample.values.iter().map(|&x| math::exp(t * x)).sum();
            MgfPoint {
                t,
                empirical: sum / n as f64,
                theoretical: 1.0 / (1.0 - t),
            }
        })
        .collect())
}

/// Coefficient of variation `sd / mean`; approaches 1 from below as the
/// exit law approaches the exponential regime.
pub fn moment_diagnostic(summary: &SummaryStats) -> f64 {
    summary.sd / summary.mean
}
