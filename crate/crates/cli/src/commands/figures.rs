use std::fs;
use std::path::Path;

use exitlab_core::diagnostics::{standardize, RateSource};
use exitlab_core::mc::ExperimentConfig;
use exitlab_core::model::ChangePointModel;
use exitlab_core::statistic::StatisticKind;
use serde_json::json;

use crate::config::{resolve_figures, Overrides, RawConfig};
use crate::engine::run_parallel;
use crate::error::CliError;
use crate::output::{experiment_comments, Manifest};

/// The standard diagnostic settings: CUSUM at A = 13 and
/// Shiryaev-Roberts at A = 40, both at q = 3, where the scaled exit
/// times already hug the unit exponential.
const PANELS: [(&str, StatisticKind, f64); 2] = [
    ("cusum", StatisticKind::CusumExpScale, 13.0),
    ("sr", StatisticKind::ShiryaevRoberts, 40.0),
];

pub fn execute(
    config_path: Option<&Path>,
    overrides: Overrides,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let raw = config_path.map(RawConfig::parse_file).transpose()?;
    let spec = resolve_figures(raw.as_ref())?;
    let replications = overrides.replications(spec.replications);
    let seed = overrides.seed(spec.master_seed);
    if replications < 10_000 {
        return Err(CliError::usage(format!(
            "figure reproduction needs at least 10000 replications, got {replications}"
        )));
    }

    let model = ChangePointModel::exponential_scale(3.0)?;
    fs::create_dir_all(out_dir)?;
    let mut manifest = Manifest::new(
        "figures",
        seed,
        json!({
            "model": model.label(),
            "replications": replications,
            "master_seed": seed,
        }),
    );

    let mut emitted = Vec::new();
    for (label, statistic, threshold) in PANELS {
        let mut config = ExperimentConfig::new(statistic, model, threshold);
        config.replications = replications;
        config.master_seed = seed;
        config.worker_hint = workers;
        let sample = run_parallel(&config, workers)?;
        let standardized = standardize(&sample.values, RateSource::PHatFromMean)?;
        let comments = experiment_comments(&config);

        let qq_name = format!("{label}_qq.csv");
        super::write_qq_csv(&out_dir.join(&qq_name), &comments, &standardized)?;
        manifest.record(&qq_name);
        emitted.push(qq_name);

        let survival_name = format!("{label}_survival.csv");
        super::write_survival_csv(&out_dir.join(&survival_name), &comments, &standardized)?;
        manifest.record(&survival_name);
        emitted.push(survival_name);
    }
    manifest.write(out_dir)?;

    println!(
        "figures: {} at R={replications} seed={seed} -> {}",
        emitted.join(", "),
        out_dir.display()
    );
    Ok(())
}
