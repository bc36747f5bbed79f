//! CSV and JSON emission.
//!
//! Data files must be byte-identical across reruns and worker counts, so
//! everything here is deterministic: floats print in shortest round-trip
//! form, JSON objects sort their keys, and the only timing field lives in
//! the manifest, which is not a data file.

use std::fs;
use std::path::Path;
use std::time::Instant;

use exitlab_core::mc::{ExperimentConfig, SummaryStats};
use serde_json::{json, Value};

use crate::error::CliError;

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

pub fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

pub fn write_csv(
    path: &Path,
    comments: &[String],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    let mut text = String::new();
    for comment in comments {
        text.push_str("# ");
        text.push_str(comment);
        text.push('\n');
    }
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Header comment block stamped into every CSV tied to one experiment.
pub fn experiment_comments(config: &ExperimentConfig) -> Vec<String> {
    vec![
        format!("exitlab {VERSION}"),
        format!("fingerprint = {:#018x}", config.fingerprint()),
        config.describe(),
    ]
}

pub fn experiment_config_json(config: &ExperimentConfig) -> Value {
    json!({
        "statistic": config.statistic.name(),
        "additive_exp_scale": config.additive_exp_scale,
        "model": config.model.label(),
        "regime": config.regime.name(),
        "threshold": config.threshold,
        "initial_state": config.initial_state,
        "replications": config.replications,
        "master_seed": config.master_seed,
        "censor_cap": config.censor_cap,
        "fingerprint": format!("{:#018x}", config.fingerprint()),
    })
}

pub fn summary_stats_json(summary: &SummaryStats) -> Value {
    let quantiles: serde_json::Map<String, Value> = summary
        .quantiles
        .iter()
        .map(|&(p, v)| (fmt_f64(p), json!(v)))
        .collect();
    json!({
        "count": summary.count,
        "censored": summary.censored,
        "mean": summary.mean,
        "sd": summary.sd,
        "standard_error": summary.standard_error,
        "p_hat": summary.p_hat,
        "moment_ratio": summary.sd / summary.mean,
        "quantiles": quantiles,
    })
}

/// Record of one subcommand invocation: resolved config, emitted files,
/// and wall time. Rerunning with the recorded seed and config reproduces
/// every listed data file byte for byte.
pub struct Manifest {
    command: &'static str,
    master_seed: u64,
    config: Value,
    outputs: Vec<String>,
    started: Instant,
}

impl Manifest {
    pub fn new(command: &'static str, master_seed: u64, config: Value) -> Self {
        Manifest {
            command,
            master_seed,
            config,
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn record(&mut self, file_name: &str) {
        self.outputs.push(file_name.to_string());
    }

    pub fn write(self, out_dir: &Path) -> Result<(), CliError> {
        let value = json!({
            "command": self.command,
            "version": VERSION,
            "master_seed": self.master_seed,
            "config": self.config,
            "outputs": self.outputs,
            "wall_time_ms": self.started.elapsed().as_millis() as u64,
        });
        write_json(&out_dir.join("manifest.json"), &value)
    }
}
