use std::fs;
use std::path::Path;

use exitlab_core::diagnostics::{
    empirical_mgf, ks_stat_exp1, standardize, RateSource, DEFAULT_T_GRID,
};
use exitlab_core::mc::summarize;
use serde_json::json;

use crate::config::{resolve_run, Overrides, OutputKind, RawConfig};
use crate::engine::run_parallel;
use crate::error::CliError;
use crate::output::{
    experiment_comments, experiment_config_json, fmt_f64, summary_stats_json, write_csv,
    write_json, Manifest,
};

pub fn execute(
    config_path: &Path,
    overrides: Overrides,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let raw = RawConfig::parse_file(config_path)?;
    let mut spec = resolve_run(&raw)?;
    spec.experiment.master_seed = overrides.seed(spec.experiment.master_seed);
    spec.experiment.replications = overrides.replications(spec.experiment.replications);
    spec.experiment.worker_hint = workers;

    let sample = run_parallel(&spec.experiment, workers)?;
    let summary = summarize(&sample)?;

    // The exponential-limit diagnostics all live on the standardized
    // scale; a degenerate sample (rate outside (0,1)) simply has none.
    let standardized = standardize(&sample.values, RateSource::PHatFromMean).ok();

    fs::create_dir_all(out_dir)?;
    let config_json = experiment_config_json(&spec.experiment);
    let mut manifest = Manifest::new("run", spec.experiment.master_seed, config_json.clone());
    let comments = experiment_comments(&spec.experiment);

    let ks = standardized.as_ref().and_then(|s| ks_stat_exp1(s).ok());
    let summary_value = json!({
        "config": config_json,
        "summary": summary_stats_json(&summary),
        "ks_exp1": ks,
    });
    write_json(&out_dir.join("summary.json"), &summary_value)?;
    manifest.record("summary.json");

    for output in &spec.outputs {
        let path = out_dir.join(output.file_name());
        match output {
            OutputKind::Samples => {
                let mut comments = comments.clone();
                comments.push(format!("censored = {}", sample.censored));
                let rows: Vec<Vec<String>> =
                    sample.values.iter().map(|v| vec![v.to_string()]).collect();
                write_csv(&path, &comments, &["exit_time"], &rows)?;
            }
            OutputKind::Qq => {
                let s = require_standardized(&standardized, output)?;
                super::write_qq_csv(&path, &comments, s)?;
            }
            OutputKind::Survival => {
                let s = require_standardized(&standardized, output)?;
                super::write_survival_csv(&path, &comments, s)?;
            }
            OutputKind::Mgf => {
                let s = require_standardized(&standardized, output)?;
                let points = empirical_mgf(s, &DEFAULT_T_GRID)?;
                let rows: Vec<Vec<String>> = points
                    .iter()
                    .map(|p| vec![fmt_f64(p.t), fmt_f64(p.empirical), fmt_f64(p.theoretical)])
                    .collect();
                write_csv(&path, &comments, &["t", "empirical", "theoretical"], &rows)?;
            }
        }
        manifest.record(output.file_name());
    }
    manifest.write(out_dir)?;

    println!(
        "run: n={} censored={} mean={} sd={} se={} p_hat={} -> {}",
        summary.count,
        summary.censored,
        fmt_f64(summary.mean),
        fmt_f64(summary.sd),
        fmt_f64(summary.standard_error),
        fmt_f64(summary.p_hat),
        out_dir.display()
    );
    Ok(())
}

fn require_standardized<'a>(
    standardized: &'a Option<exitlab_core::diagnostics::StandardizedSample>,
    output: &OutputKind,
) -> Result<&'a exitlab_core::diagnostics::StandardizedSample, CliError> {
    standardized.as_ref().ok_or_else(|| {
        CliError::Core(exitlab_core::Error::precondition(format!(
            "cannot emit {}: sample has no usable standardizing rate",
            output.file_name()
        )))
    })
}
