//! Observation models and their log likelihood ratios.
//!
//! The built-in model observes positive values whose scale inflates after a
//! change: pre-change observations are standard exponential with density
//! `f0(y) = exp(-y)`, post-change observations are exponential with mean
//! `1 + q` for a fixed `q > 0`. Each observation `Y` carries the log
//! likelihood ratio
//!
//! ```text
//! z = log f1(Y)/f0(Y) = q*Y/(1+q) - log(1+q),    lambda = exp(z),
//! ```
//!
//! and the detection statistics in [`crate::statistic`] are driven entirely
//! by the pair `(z, lambda)`. Closed forms exist for the model's
//! information numbers and renewal constants; arbitrary models plug in
//! through the [`InnovationSampler`] trait and get their constants estimated
//! numerically instead.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::RngCore;

use crate::math;
use crate::rng::{self, StreamRng};
use crate::{Error, Result};

/// Whether observations are drawn from the pre-change or post-change law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    PreChange,
    PostChange,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::PreChange => "pre",
            Regime::PostChange => "post",
        }
    }
}

/// One observation reduced to its log likelihood ratio `z` and the
/// likelihood ratio `lambda = exp(z)`.
///
/// `lambda` is always computed as `exp(z)`, so the pair is exactly
/// consistent by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Innovation {
    pub z: f64,
    pub lambda: f64,
}

impl Innovation {
    pub fn from_llr(z: f64) -> Self {
        Innovation {
            z,
            lambda: math::exp(z),
        }
    }
}

/// Source of innovations for simulation. Implemented by the built-in model
/// and by any user-supplied sampler.
pub trait InnovationSampler {
    fn sample_innovation(&self, regime: Regime, rng: &mut dyn RngCore) -> Innovation;
}

/// Information numbers and renewal constants of a model.
///
/// - `i1`: mean of `z` under the post-change law (positive),
/// - `i0`: mean of `-z` under the pre-change law (positive),
/// - `gamma`: limiting mean of `exp(-overshoot)` for the post-change random
///   walk of `z`-increments crossing a high level,
/// - `omega`: the positive root of `E_pre exp(omega*z) = 1`,
/// - `beta`: `E_pre lambda` (equals 1 when `f1` is a genuine density),
/// - `mu`: `E_pre z` (negative whenever the two laws differ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants {
    pub i1: f64,
    pub i0: f64,
    pub gamma: f64,
    pub omega: f64,
    pub beta: f64,
    pub mu: f64,
}

/// A change point observation model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChangePointModel {
    /// Exponential observations whose mean inflates from 1 to `1 + q`.
    ExponentialScale { q: f64 },
}

impl ChangePointModel {
    /// Builds the exponential scale model; `q` must be finite and positive.
    pub fn exponential_scale(q: f64) -> Result<Self> {
        if !q.is_finite() || q <= 0.0 {
            return Err(Error::invalid_input(format!(
                "exponential scale parameter q must be finite and positive, got {q}"
            )));
        }
        Ok(ChangePointModel::ExponentialScale { q })
    }

    /// Log likelihood ratio of a raw observation `y >= 0`.
    pub fn llr(&self, y: f64) -> f64 {
        match *self {
            ChangePointModel::ExponentialScale { q } => q * y / (1.0 + q) - math::ln_1p(q),
        }
    }

    /// CDF of `lambda` under the pre-change law.
    ///
    /// For the exponential scale model `lambda >= 1/(1+q)` almost surely and
    /// `P(lambda <= t) = 1 - ((1+q) t)^(-(1+q)/q)` above that bound.
    pub fn lambda_cdf_pre(&self, t: f64) -> f64 {
        match *self {
            ChangePointModel::ExponentialScale { q } => {
                let scaled = (1.0 + q) * t;
                if scaled <= 1.0 {
                    0.0
                } else {
                    1.0 - math::powf(scaled, -(1.0 + q) / q)
                }
            }
        }
    }

    /// CDF of `z` under the pre-change law.
    pub fn llr_cdf_pre(&self, z: f64) -> f64 {
        self.lambda_cdf_pre(math::exp(z))
    }

    /// Almost-sure lower bound of `lambda` (used to place grid edges).
    pub fn lambda_lower_bound(&self) -> f64 {
        match *self {
            ChangePointModel::ExponentialScale { q } => 1.0 / (1.0 + q),
        }
    }

    /// Closed-form constants of the model.
    pub fn constants(&self) -> ModelConstants {
        match *self {
            ChangePointModel::ExponentialScale { q } => {
                let log1q = math::ln_1p(q);
                let i0 = log1q - q / (1.0 + q);
                ModelConstants {
                    i1: q - log1q,
                    i0,
                    gamma: 1.0 / (1.0 + q),
                    omega: 1.0,
                    beta: 1.0,
                    mu: -i0,
                }
            }
        }
    }

    /// Stable label used in config fingerprints and manifests.
    pub fn label(&self) -> String {
        match *self {
            ChangePointModel::ExponentialScale { q } => format!("exponential-scale(q={q})"),
        }
    }
}

impl InnovationSampler for ChangePointModel {
    fn sample_innovation(&self, regime: Regime, rng: &mut dyn RngCore) -> Innovation {
        match *self {
            ChangePointModel::ExponentialScale { q } => {
                let y = match regime {
                    Regime::PreChange => rng::exp1(rng),
                    Regime::PostChange => (1.0 + q) * rng::exp1(rng),
                };
                Innovation::from_llr(self.llr(y))
            }
        }
    }
}

/// Search interval for [`solve_omega`]; roots of practical models live well
/// inside it.
pub const OMEGA_BRACKET: (f64, f64) = (1e-6, 64.0);

/// Solves `E exp(omega * z) = 1` for `omega > 0` by Monte Carlo.
///
/// Draws `draws` values of `z` once through `sample_z`, then finds a root of
/// the empirical moment function `psi(w) = mean(exp(w * z)) - 1` by
/// geometric bracket expansion on [`OMEGA_BRACKET`] followed by bisection.
/// Because the sample is frozen before the search, the result is
/// deterministic given the rng state. Returns the root once
/// `|psi(omega)| <= tolerance`.
///
/// Fails with [`Error::NoRoot`] when the sampled `z` has nonnegative mean
/// (no decay at small `omega`) or never recovers to positive moment on the
/// bracket, both of which indicate a misconfigured model.
pub fn solve_omega<F>(
    mut sample_z: F,
    draws: usize,
    rng: &mut StreamRng,
    tolerance: f64,
) -> Result<f64>
where
    F: FnMut(&mut StreamRng) -> f64,
{
    if !tolerance.is_finite() || tolerance <= 0.0 {
        return Err(Error::invalid_input(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    if draws < 2 {
        return Err(Error::insufficient_sample(
            "solve_omega needs at least 2 draws",
        ));
    }

    let zs: Vec<f64> = (0..draws).map(|_| sample_z(rng)).collect();
    let psi = |w: f64| -> f64 {
        let mut sum = 0.0;
        for &z in &zs {
            sum += math::exp(w * z);
        }
        sum / zs.len() as f64 - 1.0
    };

    let (lo0, hi0) = OMEGA_BRACKET;
    if psi(lo0) >= 0.0 {
        // psi(0) = 0 and psi'(0) = mean(z); a nonnegative value this close
        // to zero means the sampled drift is not negative.
        return Err(Error::NoRoot { lo: lo0, hi: hi0 });
    }
    let mut lo = lo0;
    let mut hi = lo0;
    loop {
        hi *= 2.0;
        if hi > hi0 {
            return Err(Error::NoRoot { lo: lo0, hi: hi0 });
        }
        if psi(hi) >= 0.0 {
            break;
        }
        lo = hi;
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let value = psi(mid);
        if math::abs(value) <= tolerance {
            return Ok(mid);
        }
        if value < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        what: "solve_omega bisection",
        iterations: 200,
        residual: math::abs(psi(mid)),
    })
}

/// Estimates [`ModelConstants`] for a sampler without closed forms.
///
/// `i1`, `i0`, `beta`, and `mu` are plain Monte Carlo means over `draws`
/// innovations per regime; `omega` comes from [`solve_omega`] on the
/// pre-change law; `gamma` is left to the renewal estimator in
/// [`crate::approx`] and reported as NaN here.
pub fn estimate_constants<S: InnovationSampler + ?Sized>(
    sampler: &S,
    draws: usize,
    rng: &mut StreamRng,
    omega_tolerance: f64,
) -> Result<ModelConstants> {
    if draws < 2 {
        return Err(Error::insufficient_sample(
            "estimate_constants needs at least 2 draws",
        ));
    }
    let mut sum_z_post = 0.0;
    let mut sum_z_pre = 0.0;
    let mut sum_lambda_pre = 0.0;
    for _ in 0..draws {
        sum_z_post += sampler.sample_innovation(Regime::PostChange, rng).z;
        let pre = sampler.sample_innovation(Regime::PreChange, rng);
        sum_z_pre += pre.z;
        sum_lambda_pre += pre.lambda;
    }
    let n = draws as f64;
    let mu = sum_z_pre / n;
    let omega = solve_omega(
        |r| sampler.sample_innovation(Regime::PreChange, r).z,
        draws,
        rng,
        omega_tolerance,
    )?;
    Ok(ModelConstants {
        i1: sum_z_post / n,
        i0: -mu,
        gamma: f64::NAN,
        omega,
        beta: sum_lambda_pre / n,
        mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFamily;

    fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
        assert!(
            (actual - expected).abs() <= tol,
            "{what}: got {actual}, expected {expected} (tol {tol})"
        );
    }

    #[test]
    fn rejects_nonpositive_or_nonfinite_q() {
        assert!(ChangePointModel::exponential_scale(0.0).is_err());
        assert!(ChangePointModel::exponential_scale(-1.0).is_err());
        assert!(ChangePointModel::exponential_scale(f64::NAN).is_err());
        assert!(ChangePointModel::exponential_scale(f64::INFINITY).is_err());
        assert!(ChangePointModel::exponential_scale(3.0).is_ok());
    }

    #[test]
    fn llr_at_zero_observation_is_minus_log_one_plus_q() {
        let model = ChangePointModel::exponential_scale(3.0).unwrap();
        let z = model.llr(0.0);
        assert_close(z, -(4.0f64.ln()), 1e-12, "llr(0) for q=3");
        assert_close(Innovation::from_llr(z).lambda, 0.25, 1e-12, "lambda at y=0");
    }

    #[test]
    fn llr_crosses_zero_where_densities_match() {
        // q*y/(1+q) = log(1+q) at y = (1+q)*log(1+q)/q.
        let model = ChangePointModel::exponential_scale(3.0).unwrap();
        let y = 4.0 / 3.0 * 4.0f64.ln();
        let z = model.llr(y);
        assert_close(z, 0.0, 1e-12, "llr at the density crossing");
        assert_close(Innovation::from_llr(z).lambda, 1.0, 1e-12, "lambda there");
    }

    #[test]
    fn closed_form_constants_match_frozen_values_for_q_three() {
        let c = ChangePointModel::exponential_scale(3.0).unwrap().constants();
        assert_close(c.i1, 1.613706, 1e-6, "i1");
        assert_close(c.i0, 0.636294, 1e-6, "i0");
        assert_close(c.gamma, 0.25, 1e-12, "gamma");
        assert_close(c.omega, 1.0, 1e-12, "omega");
        assert_close(c.beta, 1.0, 1e-12, "beta");
        assert_close(c.mu, -c.i0, 1e-15, "mu = -i0");
    }

    /// Independent oracle for i0 and i1: Simpson quadrature of the signed
    /// integrands against the exponential densities.
    #[test]
    fn information_numbers_agree_with_quadrature_oracle() {
        let q = 3.0;
        let model = ChangePointModel::exponential_scale(q).unwrap();

        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize| -> f64 {
            // n must be even.
            let h = (b - a) / n as f64;
            let mut acc = f(a) + f(b);
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(a + h * k as f64);
            }
            acc * h / 3.0
        };

        let i0_oracle = simpson(&|y: f64| -model.llr(y) * (-y).exp(), 0.0, 120.0, 40_000);
        let i1_oracle = simpson(
            &|y: f64| model.llr(y) * (-y / (1.0 + q)).exp() / (1.0 + q),
            0.0,
            400.0,
            40_000,
        );

        let c = model.constants();
        assert_close(c.i0, i0_oracle, 1e-9, "i0 vs quadrature");
        assert_close(c.i1, i1_oracle, 1e-9, "i1 vs quadrature");
    }

    #[test]
    fn lambda_cdf_matches_monte_carlo() {
        let model = ChangePointModel::exponential_scale(3.0).unwrap();
        let family = StreamFamily::new(11, "lambda-cdf");
        let mut rng = family.stream(0);
        let n = 100_000usize;
        let probes = [0.3, 0.5, 1.0, 2.0, 5.0];
        let mut hits = [0u64; 5];
        for _ in 0..n {
            let lambda = model
                .sample_innovation(Regime::PreChange, &mut rng)
                .lambda;
            for (k, &t) in probes.iter().enumerate() {
                if lambda <= t {
                    hits[k] += 1;
                }
            }
        }
        for (k, &t) in probes.iter().enumerate() {
            let empirical = hits[k] as f64 / n as f64;
            let exact = model.lambda_cdf_pre(t);
            let se = (exact * (1.0 - exact) / n as f64).sqrt().max(1e-4);
            assert_close(empirical, exact, 4.0 * se, "F_lambda MC check");
        }
        assert_eq!(model.lambda_cdf_pre(0.25), 0.0, "mass below the lower bound");
        assert_eq!(model.lambda_cdf_pre(0.1), 0.0);
    }

    #[test]
    fn innovation_lambda_is_exactly_exp_of_z() {
        let model = ChangePointModel::exponential_scale(2.0).unwrap();
        let family = StreamFamily::new(5, "consistency");
        let mut rng = family.stream(0);
        for _ in 0..1_000 {
            let innov = model.sample_innovation(Regime::PreChange, &mut rng);
            assert_eq!(innov.lambda, crate::math::exp(innov.z));
        }
    }

    #[test]
    fn pre_change_sampling_matches_moment_identities() {
        // q = 0.5 keeps Var(lambda) finite so the SE-based bound is sound.
        let q = 0.5;
        let model = ChangePointModel::exponential_scale(q).unwrap();
        let family = StreamFamily::new(17, "pre-moments");
        let mut rng = family.stream(0);
        let n = 100_000usize;
        let (mut sum_l, mut sum_l2, mut sum_z, mut sum_z2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let innov = model.sample_innovation(Regime::PreChange, &mut rng);
            sum_l += innov.lambda;
            sum_l2 += innov.lambda * innov.lambda;
            sum_z += innov.z;
            sum_z2 += innov.z * innov.z;
        }
        let nf = n as f64;
        let mean_l = sum_l / nf;
        let se_l = ((sum_l2 / nf - mean_l * mean_l) / nf).sqrt();
        assert_close(mean_l, 1.0, 3.0 * se_l, "E_pre lambda = beta = 1");

        let mean_z = sum_z / nf;
        let se_z = ((sum_z2 / nf - mean_z * mean_z) / nf).sqrt();
        let mu = model.constants().mu;
        assert_close(mean_z, mu, 3.0 * se_z, "E_pre z = mu");
        assert!(mean_z < 0.0, "pre-change llr drift must be negative");
    }

    #[test]
    fn post_change_sampling_has_drift_i1() {
        let model = ChangePointModel::exponential_scale(3.0).unwrap();
        let family = StreamFamily::new(19, "post-moments");
        let mut rng = family.stream(0);
        let n = 100_000usize;
        let (mut sum_z, mut sum_z2) = (0.0, 0.0);
        for _ in 0..n {
            let z = model.sample_innovation(Regime::PostChange, &mut rng).z;
            sum_z += z;
            sum_z2 += z * z;
        }
        let nf = n as f64;
        let mean = sum_z / nf;
        let se = ((sum_z2 / nf - mean * mean) / nf).sqrt();
        assert_close(mean, model.constants().i1, 3.0 * se, "E_post z = i1");
    }

    #[test]
    fn solve_omega_recovers_unit_root_for_exponential_scale() {
        let model = ChangePointModel::exponential_scale(3.0).unwrap();
        let family = StreamFamily::new(23, "omega-expscale");
        let mut rng = family.stream(0);
        let omega = solve_omega(
            |r| model.sample_innovation(Regime::PreChange, r).z,
            200_000,
            &mut rng,
            1e-4,
        )
        .expect("root must exist");
        // The moment estimator is heavy-tailed near omega = 1 for q = 3, so
        // the window is wider than for the Gaussian cases below.
        assert_close(omega, 1.0, 0.1, "omega for exponential scale q=3");
    }

    #[test]
    fn solve_omega_recovers_gaussian_roots() {
        // For z ~ N(m, 1): E exp(wz) = exp(wm + w^2/2) = 1 at w = -2m.
        use rand_distr::{Distribution, Normal};

        let family = StreamFamily::new(29, "omega-gauss");
        let mut rng = family.stream(0);
        let normal = Normal::new(-0.5, 1.0).unwrap();
        let omega = solve_omega(|r| normal.sample(r), 200_000, &mut rng, 1e-4)
            .expect("root must exist");
        assert_close(omega, 1.0, 0.05, "omega for N(-0.5, 1)");

        let mut rng2 = family.stream(1);
        let normal2 = Normal::new(-1.0, 1.0).unwrap();
        let omega2 = solve_omega(|r| normal2.sample(r), 200_000, &mut rng2, 1e-4)
            .expect("root must exist");
        assert_close(omega2, 2.0, 0.1, "omega for N(-1, 1)");
    }

    #[test]
    fn solve_omega_reports_no_root_for_nonnegative_drift() {
        let family = StreamFamily::new(29, "omega-noroot");
        let mut rng = family.stream(2);
        let err = solve_omega(|_| 0.5, 10, &mut rng, 1e-4);
        assert!(matches!(err, Err(Error::NoRoot { .. })));
    }

    #[test]
    fn estimate_constants_agrees_with_closed_forms() {
        let model = ChangePointModel::exponential_scale(3.0).unwrap();
        let family = StreamFamily::new(31, "estimate");
        let mut rng = family.stream(0);
        let est = estimate_constants(&model, 200_000, &mut rng, 1e-4).unwrap();
        let exact = model.constants();
        assert_close(est.i1, exact.i1, 0.02, "estimated i1");
        assert_close(est.i0, exact.i0, 0.01, "estimated i0");
        assert_close(est.mu, exact.mu, 0.01, "estimated mu");
        assert_close(est.omega, exact.omega, 0.1, "estimated omega");
        assert!(est.gamma.is_nan(), "gamma is delegated to the renewal estimator");
    }
}
