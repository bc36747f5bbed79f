use std::fs;
use std::path::Path;

use exitlab_core::approx::p_a_approx;
use exitlab_core::mc::summarize;
use exitlab_core::qsd::{
    build_grid_kernel, qsd_power_iteration, stationary_distribution, tail_exponent_estimate,
    DiscreteDistribution, GridKernel, GridScheme,
};
use serde_json::{json, Value};

use crate::config::{resolve_qsd, Overrides, QsdGridSpec, QsdJob, RawConfig};
use crate::engine::run_parallel;
use crate::error::CliError;
use crate::output::{fmt_f64, write_csv, write_json, Manifest, VERSION};

/// Bundled 2-cell demonstration kernel. Small enough that its dominant
/// left eigenpair is a pencil exercise: eigenvalue 0.7, quasi-stationary
/// masses (1/3, 2/3), exit probability 0.3.
pub fn two_cell_fixture() -> GridKernel {
    GridKernel::from_parts(
        vec![0.0, 1.0, 2.0],
        vec![0.5, 1.5],
        vec![0.5, 0.2, 0.1, 0.6],
        vec![0.3, 0.3],
    )
    .expect("fixture kernel is well formed")
}

pub fn execute(
    config_path: &Path,
    overrides: Overrides,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let raw = RawConfig::parse_file(config_path)?;
    match resolve_qsd(&raw)? {
        QsdJob::Fixture => run_fixture(out_dir),
        QsdJob::Grid(spec) => run_grid(*spec, overrides, out_dir, workers),
    }
}

fn distribution_rows(dist: &DiscreteDistribution) -> Vec<Vec<String>> {
    dist.masses
        .iter()
        .enumerate()
        .map(|(i, &mass)| vec![fmt_f64(dist.edges[i + 1]), fmt_f64(mass)])
        .collect()
}

fn run_fixture(out_dir: &Path) -> Result<(), CliError> {
    let kernel = two_cell_fixture();
    let result = qsd_power_iteration(&kernel, None, 1e-13, 100_000)?;

    fs::create_dir_all(out_dir)?;
    let comments = vec![
        format!("exitlab {VERSION}"),
        "fixture=two-cell".to_string(),
    ];
    write_csv(
        &out_dir.join("qsd.csv"),
        &comments,
        &["upper_edge", "mass"],
        &distribution_rows(&result.distribution),
    )?;
    let value = json!({
        "fixture": "two-cell",
        "p_a": result.p_a,
        "iterations": result.iterations,
        "residual": result.residual,
    });
    write_json(&out_dir.join("qsd.json"), &value)?;

    let mut manifest = Manifest::new("qsd", 0, json!({"fixture": "two-cell"}));
    manifest.record("qsd.csv");
    manifest.record("qsd.json");
    manifest.write(out_dir)?;

    println!(
        "qsd: fixture two-cell p_a={} iterations={} -> {}",
        fmt_f64(result.p_a),
        result.iterations,
        out_dir.display()
    );
    Ok(())
}

fn run_grid(
    spec: QsdGridSpec,
    overrides: Overrides,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let kernel = build_grid_kernel(
        spec.statistic,
        &spec.model,
        spec.threshold,
        spec.grid_m,
        GridScheme::Midpoint,
    )?;
    let result = qsd_power_iteration(&kernel, None, spec.tolerance, spec.max_iterations)?;

    fs::create_dir_all(out_dir)?;
    let comments = vec![
        format!("exitlab {VERSION}"),
        format!(
            "statistic={};model={};threshold={};grid_m={}",
            spec.statistic.name(),
            spec.model.label(),
            fmt_f64(spec.threshold),
            spec.grid_m
        ),
    ];
    write_csv(
        &out_dir.join("qsd.csv"),
        &comments,
        &["upper_edge", "mass"],
        &distribution_rows(&result.distribution),
    )?;

    let mut report = serde_json::Map::new();
    report.insert("statistic".into(), json!(spec.statistic.name()));
    report.insert("model".into(), json!(spec.model.label()));
    report.insert("threshold".into(), json!(spec.threshold));
    report.insert("grid_m".into(), json!(spec.grid_m));
    report.insert("tolerance".into(), json!(spec.tolerance));
    report.insert("p_a".into(), json!(result.p_a));
    report.insert("iterations".into(), json!(result.iterations));
    report.insert("residual".into(), json!(result.residual));
    report.insert(
        "p_a_first_order".into(),
        json!(p_a_approx(spec.statistic, &spec.model, spec.threshold)?),
    );

    let mut manifest_config = json!({
        "statistic": spec.statistic.name(),
        "model": spec.model.label(),
        "threshold": spec.threshold,
        "grid_m": spec.grid_m,
        "tolerance": spec.tolerance,
        "max_iterations": spec.max_iterations,
    });
    let mut seed_for_manifest = 0;

    let mut compare_line = String::new();
    if let Some(mut mc_config) = spec.compare {
        mc_config.master_seed = overrides.seed(mc_config.master_seed);
        mc_config.replications = overrides.replications(mc_config.replications);
        mc_config.worker_hint = workers;
        seed_for_manifest = mc_config.master_seed;
        let summary = summarize(&run_parallel(&mc_config, workers)?)?;
        let product = result.p_a * summary.mean;
        report.insert(
            "compare".into(),
            json!({
                "mc_mean": summary.mean,
                "mc_standard_error": summary.standard_error,
                "mc_replications": summary.count + summary.censored,
                "mc_seed": mc_config.master_seed,
                "p_a_times_mc_mean": product,
            }),
        );
        manifest_config["compare"] = crate::output::experiment_config_json(&mc_config);
        compare_line = format!(" p_a*mc_mean={}", fmt_f64(product));
    }

    if let Some(bound) = spec.bound {
        let stationary = stationary_distribution(
            spec.statistic,
            &spec.model,
            spec.grid_m,
            bound,
            spec.tolerance,
            spec.max_iterations,
        )?;
        // Fit the tail one to two decades below the bound, clear of both
        // the bulk and the reflection pile-up at the truncation edge.
        let window = (bound / 100.0, bound / 10.0);
        let fit = tail_exponent_estimate(&stationary.distribution, window)?;
        write_csv(
            &out_dir.join("stationary.csv"),
            &comments,
            &["upper_edge", "mass"],
            &distribution_rows(&stationary.distribution),
        )?;
        report.insert(
            "stationary".into(),
            json!({
                "bound": bound,
                "grid_m": spec.grid_m,
                "truncation_mass": stationary.truncation_mass,
                "iterations": stationary.iterations,
                "residual": stationary.residual,
                "tail_fit": {
                    "window": [window.0, window.1],
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "r_squared": fit.r_squared,
                    "points": fit.points,
                },
            }),
        );
        manifest_config["bound"] = json!(bound);
    }

    write_json(&out_dir.join("qsd.json"), &Value::Object(report))?;

    let mut manifest = Manifest::new("qsd", seed_for_manifest, manifest_config);
    manifest.record("qsd.csv");
    manifest.record("qsd.json");
    if spec.bound.is_some() {
        manifest.record("stationary.csv");
    }
    manifest.write(out_dir)?;

    println!(
        "qsd: {} A={} m={} p_a={} iterations={}{} -> {}",
        spec.statistic.name(),
        fmt_f64(spec.threshold),
        spec.grid_m,
        fmt_f64(result.p_a),
        result.iterations,
        compare_line,
        out_dir.display()
    );
    Ok(())
}
