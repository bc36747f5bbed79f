//! Closed-form run length approximations and the renewal-theoretic
//! constant estimator.
//!
//! For the exponential scale model with parameter `q`, pre-change ARLs of
//! the threshold-`A` procedures admit closed forms. With
//! `I1 = q - ln(1+q)` and `I0 = ln(1+q) - q/(1+q)`:
//!
//! ```text
//! shiryaev-roberts:   ARL ~ (1+q) A
//! cusum, 1st order:   ARL ~ (1+q)^2 A / I1
//! cusum, refined:     1st order - ln(A)/I0 - (1+q)/I1 - q/((1+q)ln(1+q) - q)
//! ```
//!
//! CUSUM thresholds here live on the likelihood ratio scale (`A = e^a`),
//! so the same number feeds both the log-scale and exp-scale recursions.
//!
//! The per-step exit probability from the quasi-stationary regime is
//! approximated by `gamma / A` for Shiryaev-Roberts and `I1 gamma^2 / A`
//! for CUSUM; the latter is exactly the reciprocal of the first order ARL.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::model::{ChangePointModel, InnovationSampler, Regime};
use crate::rng::StreamFamily;
use crate::statistic::StatisticKind;
use crate::{Error, Result};

/// RNG component label for the renewal overshoot walks.
pub const RENEWAL_COMPONENT: &str = "renewal-gamma";

fn exp_scale_q(model: &ChangePointModel) -> f64 {
    let ChangePointModel::ExponentialScale { q } = *model;
    q
}

/// First order pre-change ARL of the Shiryaev-Roberts procedure at
/// threshold `A`, `A / gamma`.
pub fn arl_sr_approx(model: &ChangePointModel, threshold: f64) -> Result<f64> {
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::invalid_input(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    Ok(threshold / model.constants().gamma)
}

/// First order pre-change ARL of the CUSUM procedure at likelihood ratio
/// threshold `A`.
pub fn fo_arl_cusum(model: &ChangePointModel, threshold: f64) -> Result<f64> {
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::invalid_input(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let q = exp_scale_q(model);
    let i1 = model.constants().i1;
    Ok((1.0 + q) * (1.0 + q) * threshold / i1)
}

/// Refined pre-change ARL of the CUSUM procedure at likelihood ratio
/// threshold `A > 1`, sharpening the first order value with the constant
/// and logarithmic corrections.
pub fn ho_arl_cusum(model: &ChangePointModel, threshold: f64) -> Result<f64> {
    if !threshold.is_finite() || threshold <= 1.0 {
        return Err(Error::invalid_input(format!(
            "refined approximation needs a threshold above 1, got {threshold}"
        )));
    }
    let q = exp_scale_q(model);
    let constants = model.constants();
    let fo = fo_arl_cusum(model, threshold)?;
    let log_term = math::ln(threshold) / constants.i0;
    let const_term = (1.0 + q) / constants.i1;
    let overshoot_term = q / ((1.0 + q) * math::ln_1p(q) - q);
    Ok(fo - log_term - const_term - overshoot_term)
}

/// Approximate per-step exit probability of the stopped statistic in its
/// quasi-stationary regime.
///
/// For the CUSUM kinds the threshold is on the likelihood ratio scale,
/// matching [`fo_arl_cusum`]; the value is exactly `1 / fo_arl_cusum`.
pub fn p_a_approx(
    kind: StatisticKind,
    model: &ChangePointModel,
    threshold: f64,
) -> Result<f64> {
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::invalid_input(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let constants = model.constants();
    let gamma = constants.gamma;
    Ok(match kind {
        StatisticKind::ShiryaevRoberts => gamma / threshold,
        StatisticKind::CusumLog | StatisticKind::CusumExpScale => {
            constants.i1 * gamma * gamma / threshold
        }
    })
}

/// Probability of at least one exit among `m` independent per-step trials
/// of probability `p`, computed stably as `1 - (1-p)^m`.
pub fn local_false_alarm_prob(p: f64, m: u64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid_input(format!(
            "per-step probability must lie in [0, 1), got {p}"
        )));
    }
    if m == 0 {
        return Err(Error::invalid_input("window length must be at least 1"));
    }
    Ok(-math::exp_m1(m as f64 * math::ln_1p(-p)))
}

/// Overshoot estimate at one crossing level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaLevel {
    pub level: f64,
    pub gamma_hat: f64,
    pub standard_error: f64,
}

/// Renewal estimate of the limiting overshoot transform.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    /// Estimate at the largest level, the best proxy for the limit.
    pub gamma_hat: f64,
    pub standard_error: f64,
    pub by_level: Vec<GammaLevel>,
}

/// Estimates `gamma = lim E exp(-omega * overshoot)` by random walk
/// simulation: each replication runs one log likelihood ratio walk under
/// `regime` through the ascending `levels`, recording
/// `exp(-omega * (S_tau - level))` at each first strict crossing.
///
/// The walk continues across levels, so per-level estimates are coupled.
/// A walk that fails to cross within `step_cap` steps aborts with a
/// precondition error; that happens when the drift under `regime` is not
/// positive.
pub fn renewal_gamma_mc(
    sampler: &dyn InnovationSampler,
    regime: Regime,
    omega: f64,
    levels: &[f64],
    replications: u64,
    master_seed: u64,
    step_cap: u64,
) -> Result<GammaEstimate> {
    if !omega.is_finite() || omega <= 0.0 {
        return Err(Error::invalid_input(format!(
            "omega must be positive and finite, got {omega}"
        )));
    }
    if levels.is_empty() {
        return Err(Error::invalid_input("at least one crossing level required"));
    }
    if !levels[0].is_finite() || levels[0] <= 0.0 {
        return Err(Error::invalid_input("levels must be positive and finite"));
    }
    if !levels.windows(2).all(|w| w[0] < w[1] && w[1].is_finite()) {
        return Err(Error::invalid_input("levels must be strictly increasing"));
    }
    if replications < 2 {
        return Err(Error::invalid_input("need at least 2 replications"));
    }
    if step_cap == 0 {
        return Err(Error::invalid_input("step cap must be at least 1"));
    }

    let family = StreamFamily::new(master_seed, RENEWAL_COMPONENT);
    let mut sums = alloc::vec![0.0; levels.len()];
    let mut sq_sums = alloc::vec![0.0; levels.len()];
    for r in 0..replications {
        let mut rng = family.stream(r);
        let mut s = 0.0;
        let mut steps = 0u64;
        for (k, &level) in levels.iter().enumerate() {
            while s <= level {
                s += sampler.sample_innovation(regime, &mut rng).z;
                steps += 1;
                if steps >= step_cap {
                    return Err(Error::precondition(format!(
                        "walk failed to cross level {level} within {step_cap} steps; \
                         drift under {} may not be positive",
                        regime.name()
                    )));
                }
            }
            let transform = math::exp(-omega * (s - level));
            sums[k] += transform;
            sq_sums[k] += transform * transform;
        }
    }

    let n = replications as f64;
    let by_level: Vec<GammaLevel> = levels
        .iter()
        .enumerate()
        .map(|(k, &level)| {
            let mean = sums[k] / n;
            let var = (sq_sums[k] - n * mean * mean).max(0.0) / (n - 1.0);
            GammaLevel {
                level,
                gamma_hat: mean,
                standard_error: math::sqrt(var / n),
            }
        })
        .collect();
    let last = by_level[by_level.len() - 1];
    Ok(GammaEstimate {
        gamma_hat: last.gamma_hat,
        standard_error: last.standard_error,
        by_level,
    })
}
