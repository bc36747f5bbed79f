//! End-to-end checks of the exponential limit: as the threshold grows,
//! scaled exit times of a monotone statistic approach a unit exponential.
//! These watch the approach at moderate thresholds, not the limit itself.

use exitlab_core::diagnostics::{ks_stat_exp1, moment_diagnostic, standardize, RateSource};
use exitlab_core::mc::{run_experiment, summarize, ExperimentConfig};
use exitlab_core::model::ChangePointModel;
use exitlab_core::statistic::StatisticKind;

fn sr_config(threshold: f64, replications: u64, seed: u64) -> ExperimentConfig {
    let model = ChangePointModel::exponential_scale(3.0).unwrap();
    let mut config = ExperimentConfig::new(StatisticKind::ShiryaevRoberts, model, threshold);
    config.replications = replications;
    config.master_seed = seed;
    config
}

/// An exponential law has coefficient of variation 1; exit times start
/// sub-exponential and the ratio climbs with the threshold. One master
/// seed across thresholds couples the paths, so the comparison is not at
/// the mercy of independent sampling noise.
#[test]
fn moment_ratio_climbs_toward_one() {
    let mut ratios = Vec::new();
    for threshold in [20.0, 40.0, 100.0] {
        let sample = run_experiment(&sr_config(threshold, 50_000, 7)).unwrap();
        let summary = summarize(&sample).unwrap();
        ratios.push(moment_diagnostic(&summary));
    }
    assert!(
        ratios.windows(2).all(|w| w[0] < w[1]),
        "sd/mean should increase with the threshold, got {ratios:?}"
    );
    let last = *ratios.last().unwrap();
    assert!(
        (0.9..=1.02).contains(&last),
        "sd/mean at the largest threshold should be near 1, got {last}"
    );
}

#[test]
fn desk_scale_sample_is_close_to_unit_exponential() {
    let sample = run_experiment(&sr_config(40.0, 10_000, 11)).unwrap();
    let standardized = standardize(&sample.values, RateSource::PHatFromMean).unwrap();
    let d = ks_stat_exp1(&standardized).unwrap();
    assert!(
        d < 0.05,
        "Kolmogorov-Smirnov distance {d} too large at threshold 40"
    );
}
