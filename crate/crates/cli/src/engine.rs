//! Parallel experiment driver.
//!
//! Replications are independent and indexed, so the work is an
//! order-preserving parallel map; results are identical for every worker
//! count, including one.

use exitlab_core::mc::{
    replication_exit, ExitTimeSample, ExperimentConfig, MAX_RETAINED_REPLICATIONS,
};
use exitlab_core::statistic::ExitOutcome;
use exitlab_core::Error as CoreError;
use rayon::prelude::*;

use crate::error::CliError;

pub fn run_parallel(
    config: &ExperimentConfig,
    workers: Option<usize>,
) -> Result<ExitTimeSample, CliError> {
    config.validate()?;
    if config.replications > MAX_RETAINED_REPLICATIONS {
        return Err(CliError::Core(CoreError::invalid_input(format!(
            "{} replications exceed the retained-sample limit of {MAX_RETAINED_REPLICATIONS}",
            config.replications
        ))));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    let outcomes: Result<Vec<ExitOutcome>, CoreError> = pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|index| replication_exit(config, index))
            .collect()
    });

    let mut values = Vec::new();
    let mut censored = 0u64;
    for outcome in outcomes? {
        match outcome {
            ExitOutcome::Exited(n) => values.push(n),
            ExitOutcome::Censored => censored += 1,
        }
    }
    Ok(ExitTimeSample {
        values,
        censored,
        fingerprint: config.fingerprint(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use exitlab_core::mc::run_experiment;
    use exitlab_core::model::ChangePointModel;
    use exitlab_core::statistic::StatisticKind;

    #[test]
    fn parallel_run_matches_sequential_for_any_worker_count() {
        let model = ChangePointModel::exponential_scale(3.0).unwrap();
        let mut config =
            ExperimentConfig::new(StatisticKind::ShiryaevRoberts, model, 20.0);
        config.replications = 2_000;
        config.master_seed = 5;
        let sequential = run_experiment(&config).unwrap();
        for workers in [Some(1), Some(4), None] {
            let parallel = run_parallel(&config, workers).unwrap();
            assert_eq!(parallel, sequential, "workers = {workers:?}");
        }
    }
}
