//! Detection statistic recursions and the first-exit driver.
//!
//! Three monotone statistics are supported, each driven by the innovation
//! pair `(z, lambda)`:
//!
//! ```text
//! shiryaev-roberts:  S(n) = (1 + S(n-1)) * lambda_n,           S(0) = 0
//! cusum-log:         X(n) = max(0, X(n-1) + z_n),              X(0) = 0
//! cusum-exp-scale:   W(n) = max(1, W(n-1) * lambda_n),         W(0) = 1
//! ```
//!
//! The exp-scale form is the exact conjugate of `cusum-log` through
//! `W = exp(X)`; thresholds map as `A = exp(a)`. A literal additive variant
//! `max(1, W + lambda)` is also exposed for comparison runs. It is *not*
//! conjugate to `cusum-log` and carries no run-length guarantees; it exists
//! only so the two forms can be contrasted, and stays off unless explicitly
//! requested.
//!
//! All updates are nondecreasing in the current state, which is what makes
//! exit times from lower starts stochastically larger and underpins every
//! coupling argument used in the tests.

use alloc::format;

use rand::RngCore;

use crate::model::{Innovation, InnovationSampler, Regime};
use crate::{Error, Result};

/// Default step budget for a single exit-time run.
pub const DEFAULT_CENSOR_CAP: u64 = 100_000_000;

/// The statistic families tracked by this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatisticKind {
    ShiryaevRoberts,
    CusumLog,
    CusumExpScale,
}

impl StatisticKind {
    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::ShiryaevRoberts => "shiryaev-roberts",
            StatisticKind::CusumLog => "cusum-log",
            StatisticKind::CusumExpScale => "cusum-exp-scale",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "shiryaev-roberts" | "sr" => Ok(StatisticKind::ShiryaevRoberts),
            "cusum-log" => Ok(StatisticKind::CusumLog),
            "cusum-exp-scale" => Ok(StatisticKind::CusumExpScale),
            other => Err(Error::invalid_input(format!(
                "unknown statistic '{other}' (expected shiryaev-roberts, cusum-log, or cusum-exp-scale)"
            ))),
        }
    }

    /// Conventional starting state: the recursion floor.
    pub fn default_initial_state(self) -> f64 {
        match self {
            StatisticKind::ShiryaevRoberts | StatisticKind::CusumLog => 0.0,
            StatisticKind::CusumExpScale => 1.0,
        }
    }
}

pub fn sr_update(state: f64, innovation: &Innovation) -> f64 {
    (1.0 + state) * innovation.lambda
}

pub fn cusum_update(state: f64, innovation: &Innovation) -> f64 {
    (state + innovation.z).max(0.0)
}

pub fn cusum_exp_update(state: f64, innovation: &Innovation) -> f64 {
    (state * innovation.lambda).max(1.0)
}

/// Literal additive exp-scale form; comparison-only, see the module docs.
pub fn cusum_exp_update_additive(state: f64, innovation: &Innovation) -> f64 {
    (state + innovation.lambda).max(1.0)
}

/// Which recursion a run uses. `AdditiveExpScale` is the comparison-only
/// variant selected by an explicit config flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateRule {
    Standard(StatisticKind),
    AdditiveExpScale,
}

impl UpdateRule {
    pub fn from_config(kind: StatisticKind, additive_exp_scale: bool) -> Result<Self> {
        if additive_exp_scale {
            if kind != StatisticKind::CusumExpScale {
                return Err(Error::invalid_input(
                    "additive_exp_scale only applies to the cusum-exp-scale statistic",
                ));
            }
            Ok(UpdateRule::AdditiveExpScale)
        } else {
            Ok(UpdateRule::Standard(kind))
        }
    }

    pub fn kind(self) -> StatisticKind {
        match self {
            UpdateRule::Standard(kind) => kind,
            UpdateRule::AdditiveExpScale => StatisticKind::CusumExpScale,
        }
    }

    pub fn apply(self, state: f64, innovation: &Innovation) -> f64 {
        match self {
            UpdateRule::Standard(StatisticKind::ShiryaevRoberts) => sr_update(state, innovation),
            UpdateRule::Standard(StatisticKind::CusumLog) => cusum_update(state, innovation),
            UpdateRule::Standard(StatisticKind::CusumExpScale) => {
                cusum_exp_update(state, innovation)
            }
            UpdateRule::AdditiveExpScale => cusum_exp_update_additive(state, innovation),
        }
    }

    /// Validates a (threshold, initial state) pair for this rule.
    ///
    /// Exp-scale statistics live on `[1, inf)` and need `A > 1` and
    /// `1 <= x <= A`; the others live on `[0, inf)` and need `A > 0` and
    /// `0 <= x < A`.
    pub fn validate_run(self, threshold: f64, initial_state: f64) -> Result<()> {
        if !threshold.is_finite() || !initial_state.is_finite() {
            return Err(Error::invalid_input(format!(
                "threshold and initial state must be finite, got A={threshold}, x={initial_state}"
            )));
        }
        match self.kind() {
            StatisticKind::CusumExpScale => {
                if threshold <= 1.0 {
                    return Err(Error::invalid_input(format!(
                        "exp-scale threshold must exceed 1, got {threshold}"
                    )));
                }
                if !(1.0..=threshold).contains(&initial_state) {
                    return Err(Error::precondition(format!(
                        "exp-scale initial state must satisfy 1 <= x <= A, got x={initial_state}, A={threshold}"
                    )));
                }
            }
            _ => {
                if threshold <= 0.0 {
                    return Err(Error::invalid_input(format!(
                        "threshold must be positive, got {threshold}"
                    )));
                }
                if !(0.0..threshold).contains(&initial_state) {
                    return Err(Error::precondition(format!(
                        "initial state must satisfy 0 <= x < A, got x={initial_state}, A={threshold}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A statistic bundled with its running state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneStatistic {
    pub kind: StatisticKind,
    pub state: f64,
}

impl MonotoneStatistic {
    /// Starts at the conventional initial state for `kind`.
    pub fn new(kind: StatisticKind) -> Self {
        MonotoneStatistic {
            kind,
            state: kind.default_initial_state(),
        }
    }

    pub fn with_state(kind: StatisticKind, state: f64) -> Self {
        MonotoneStatistic { kind, state }
    }

    /// Applies one innovation and returns the new state.
    pub fn observe(&mut self, innovation: &Innovation) -> f64 {
        self.state = UpdateRule::Standard(self.kind).apply(self.state, innovation);
        self.state
    }
}

/// Result of a single exit-time run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitOutcome {
    /// First step `n >= 1` at which the statistic strictly exceeded the
    /// threshold.
    Exited(u64),
    /// The step budget ran out before the threshold was crossed.
    Censored,
}

/// Runs a statistic from `initial_state` until it first strictly exceeds
/// `threshold`, drawing innovations from `sampler` under `regime`.
///
/// Exceedance is strict: a state exactly equal to the threshold keeps
/// running. Returns [`ExitOutcome::Censored`] after `censor_cap` steps.
pub fn run_to_exit<S: InnovationSampler + ?Sized>(
    rule: UpdateRule,
    threshold: f64,
    initial_state: f64,
    sampler: &S,
    regime: Regime,
    rng: &mut dyn RngCore,
    censor_cap: u64,
) -> Result<ExitOutcome> {
    rule.validate_run(threshold, initial_state)?;
    if censor_cap == 0 {
        return Err(Error::invalid_input("censor cap must be at least 1"));
    }
    let mut state = initial_state;
    for n in 1..=censor_cap {
        let innovation = sampler.sample_innovation(regime, rng);
        state = rule.apply(state, &innovation);
        if state > threshold {
            return Ok(ExitOutcome::Exited(n));
        }
    }
    Ok(ExitOutcome::Censored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChangePointModel;
    use crate::rng::StreamFamily;
    use rand::Rng;

    /// Sampler with a fixed llr sequence, cycled; regime is ignored.
    struct FixedLlr<'a>(&'a [f64], core::cell::Cell<usize>);

    impl<'a> FixedLlr<'a> {
        fn new(zs: &'a [f64]) -> Self {
            FixedLlr(zs, core::cell::Cell::new(0))
        }
    }

    impl InnovationSampler for FixedLlr<'_> {
        fn sample_innovation(&self, _regime: Regime, _rng: &mut dyn RngCore) -> Innovation {
            let i = self.1.get();
            self.1.set((i + 1) % self.0.len());
            Innovation::from_llr(self.0[i])
        }
    }

    fn innov(z: f64) -> Innovation {
        Innovation::from_llr(z)
    }

    #[test]
    fn update_rules_match_hand_computed_values() {
        let two = Innovation { z: 2.0f64.ln(), lambda: 2.0 };
        let half = Innovation { z: 0.5f64.ln(), lambda: 0.5 };
        assert_eq!(sr_update(0.0, &two), 2.0);
        assert_eq!(sr_update(3.0, &half), 2.0);

        assert_eq!(cusum_update(0.5, &innov(-1.0)), 0.0);
        assert_eq!(cusum_update(1.0, &innov(0.25)), 1.25);

        let lam04 = Innovation { z: 0.4f64.ln(), lambda: 0.4 };
        let lam3 = Innovation { z: 3.0f64.ln(), lambda: 3.0 };
        assert_eq!(cusum_exp_update(1.0, &lam04), 1.0);
        assert_eq!(cusum_exp_update(2.0, &lam3), 6.0);

        assert_eq!(cusum_exp_update_additive(1.0, &lam04), 1.4);
        assert_eq!(cusum_exp_update_additive(2.0, &lam3), 5.0);
    }

    #[test]
    fn exp_scale_update_is_exact_conjugate_of_cusum_log() {
        let family = StreamFamily::new(3, "conjugacy");
        let mut rng = family.stream(0);
        for _ in 0..10_000 {
            let x: f64 = rng.gen_range(0.0..8.0);
            let z: f64 = rng.gen_range(-3.0..3.0);
            let innovation = Innovation::from_llr(z);
            let via_log = crate::math::exp(cusum_update(x, &innovation));
            let via_exp = cusum_exp_update(crate::math::exp(x), &innovation);
            let tol = 1e-12 * via_exp.max(1.0);
            assert!(
                (via_log - via_exp).abs() <= tol,
                "conjugacy broke at x={x}, z={z}: {via_log} vs {via_exp}"
            );
        }
    }

    #[test]
    fn updates_are_monotone_in_state_for_every_kind() {
        let family = StreamFamily::new(4, "monotone");
        let mut rng = family.stream(0);
        let rules = [
            UpdateRule::Standard(StatisticKind::ShiryaevRoberts),
            UpdateRule::Standard(StatisticKind::CusumLog),
            UpdateRule::Standard(StatisticKind::CusumExpScale),
            UpdateRule::AdditiveExpScale,
        ];
        for rule in rules {
            for _ in 0..10_000 {
                let a: f64 = rng.gen_range(0.0..10.0);
                let b: f64 = rng.gen_range(0.0..10.0);
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let innovation = Innovation::from_llr(rng.gen_range(-4.0..4.0));
                let (lo, hi) = match rule.kind() {
                    StatisticKind::CusumExpScale => (1.0 + lo, 1.0 + hi),
                    _ => (lo, hi),
                };
                let out_lo = rule.apply(lo, &innovation);
                let out_hi = rule.apply(hi, &innovation);
                assert!(
                    out_lo <= out_hi,
                    "{rule:?} not monotone: f({lo}) = {out_lo} > f({hi}) = {out_hi}"
                );
            }
        }
    }

    #[test]
    fn coupled_paths_from_ordered_starts_stay_ordered() {
        let model = ChangePointModel::exponential_scale(3.0).unwrap();
        let family = StreamFamily::new(6, "coupling");
        for path in 0..100u64 {
            let mut rng = family.stream(path);
            let mut lo = 0.0f64;
            let mut hi = 2.0f64;
            for _ in 0..200 {
                let innovation = model.sample_innovation(Regime::PreChange, &mut rng);
                lo = sr_update(lo, &innovation);
                hi = sr_update(hi, &innovation);
                assert!(lo <= hi, "SR coupling order violated");
            }
        }
    }

    #[test]
    fn run_to_exit_uses_strict_exceedance() {
        // z = 2 lands exactly on A = 2 after one step; exit must wait for
        // the second step.
        let sampler = FixedLlr::new(&[2.0]);
        let family = StreamFamily::new(8, "strict");
        let mut rng = family.stream(0);
        let outcome = run_to_exit(
            UpdateRule::Standard(StatisticKind::CusumLog),
            2.0,
            0.0,
            &sampler,
            Regime::PreChange,
            &mut rng,
            1_000,
        )
        .unwrap();
        assert_eq!(outcome, ExitOutcome::Exited(2));
    }

    #[test]
    fn run_to_exit_censors_when_cap_is_hit() {
        let sampler = FixedLlr::new(&[-1.0]);
        let family = StreamFamily::new(8, "censor");
        let mut rng = family.stream(0);
        let outcome = run_to_exit(
            UpdateRule::Standard(StatisticKind::CusumLog),
            5.0,
            0.0,
            &sampler,
            Regime::PreChange,
            &mut rng,
            3,
        )
        .unwrap();
        assert_eq!(outcome, ExitOutcome::Censored);
    }

    #[test]
    fn run_to_exit_state_strictly_exceeds_threshold_at_exit() {
        let model = ChangePointModel::exponential_scale(3.0).unwrap();
        let threshold = 20.0f64.ln();
        let family = StreamFamily::new(12, "replay");
        let mut rng = family.stream(0);
        let outcome = run_to_exit(
            UpdateRule::Standard(StatisticKind::CusumLog),
            threshold,
            0.0,
            &model,
            Regime::PreChange,
            &mut rng,
            1_000_000,
        )
        .unwrap();
        let n = match outcome {
            ExitOutcome::Exited(n) => n,
            ExitOutcome::Censored => panic!("run unexpectedly censored"),
        };
        assert!(n >= 1);

        // Replay the identical stream and check the path against the
        // strictness contract step by step.
        let mut replay = family.stream(0);
        let mut state = 0.0;
        for step in 1..=n {
            let innovation = model.sample_innovation(Regime::PreChange, &mut replay);
            state = cusum_update(state, &innovation);
            if step < n {
                assert!(state <= threshold, "exited earlier than reported");
            }
        }
        assert!(state > threshold, "state at exit must strictly exceed A");
    }

    #[test]
    fn exit_times_from_higher_starts_are_pathwise_smaller() {
        let model = ChangePointModel::exponential_scale(3.0).unwrap();
        let family = StreamFamily::new(13, "exit-order");
        for rep in 0..50u64 {
            let run = |x: f64| {
                let mut rng = family.stream(rep);
                match run_to_exit(
                    UpdateRule::Standard(StatisticKind::ShiryaevRoberts),
                    20.0,
                    x,
                    &model,
                    Regime::PreChange,
                    &mut rng,
                    10_000_000,
                )
                .unwrap()
                {
                    ExitOutcome::Exited(n) => n,
                    ExitOutcome::Censored => panic!("censored"),
                }
            };
            assert!(run(5.0) <= run(0.0), "higher start must exit no later");
        }
    }

    #[test]
    fn validation_rejects_out_of_range_starts() {
        let rule = UpdateRule::Standard(StatisticKind::ShiryaevRoberts);
        assert!(rule.validate_run(10.0, -0.5).is_err());
        assert!(rule.validate_run(10.0, 10.0).is_err());
        assert!(rule.validate_run(0.0, 0.0).is_err());
        assert!(rule.validate_run(10.0, 0.0).is_ok());

        let exp_rule = UpdateRule::Standard(StatisticKind::CusumExpScale);
        assert!(exp_rule.validate_run(13.0, 0.5).is_err());
        assert!(exp_rule.validate_run(1.0, 1.0).is_err());
        assert!(exp_rule.validate_run(13.0, 1.0).is_ok());
        assert!(exp_rule.validate_run(13.0, 13.0).is_ok());
    }

    #[test]
    fn additive_flag_only_pairs_with_exp_scale() {
        assert!(UpdateRule::from_config(StatisticKind::CusumLog, true).is_err());
        assert_eq!(
            UpdateRule::from_config(StatisticKind::CusumExpScale, true).unwrap(),
            UpdateRule::AdditiveExpScale
        );
        assert_eq!(
            UpdateRule::from_config(StatisticKind::ShiryaevRoberts, false).unwrap(),
            UpdateRule::Standard(StatisticKind::ShiryaevRoberts)
        );
    }

    #[test]
    fn monotone_statistic_tracks_its_state() {
        let mut stat = MonotoneStatistic::new(StatisticKind::ShiryaevRoberts);
        assert_eq!(stat.state, 0.0);
        let lam2 = Innovation { z: 2.0f64.ln(), lambda: 2.0 };
        assert_eq!(stat.observe(&lam2), 2.0);
        assert_eq!(stat.observe(&lam2), 6.0);

        assert_eq!(
            MonotoneStatistic::new(StatisticKind::CusumExpScale).state,
            1.0
        );
    }

    #[test]
    fn statistic_names_round_trip() {
        for kind in [
            StatisticKind::ShiryaevRoberts,
            StatisticKind::CusumLog,
            StatisticKind::CusumExpScale,
        ] {
            assert_eq!(StatisticKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(StatisticKind::parse("page-cusum").is_err());
    }
}
