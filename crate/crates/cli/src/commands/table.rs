use std::fs;
use std::path::Path;

use exitlab_core::approx::{arl_sr_approx, fo_arl_cusum, ho_arl_cusum};
use exitlab_core::mc::{summarize, ExperimentConfig};
use exitlab_core::model::ChangePointModel;
use exitlab_core::statistic::StatisticKind;
use serde_json::json;

use crate::config::Overrides;
use crate::engine::run_parallel;
use crate::error::CliError;
use crate::output::{fmt_f64, write_csv, Manifest, VERSION};

/// Threshold grids of the two reference tables, in print order.
pub const TABLE1_THRESHOLDS: [f64; 9] = [1.2, 1.7, 2.5, 4.6, 9.2, 13.0, 17.1, 21.0, 41.0];
pub const TABLE2_THRESHOLDS: [f64; 9] = [1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 100.0];

/// Both tables use the exponential scale model at q = 3.
pub const TABLE_Q: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    One,
    Two,
}

impl TableId {
    pub fn parse(text: &str) -> Result<Self, String> {
        match text {
            "1" | "table1" => Ok(TableId::One),
            "2" | "table2" => Ok(TableId::Two),
            other => Err(format!("expected 1 or 2, got '{other}'")),
        }
    }

    fn file_name(self) -> &'static str {
        match self {
            TableId::One => "table1.csv",
            TableId::Two => "table2.csv",
        }
    }
}

pub fn execute(
    which: TableId,
    overrides: Overrides,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let replications = overrides.replications(exitlab_core::mc::DEFAULT_REPLICATIONS);
    let seed = overrides.seed(42);
    if replications < 1_000 {
        return Err(CliError::usage(format!(
            "table reproduction needs at least 1000 replications, got {replications}"
        )));
    }
    let model = ChangePointModel::exponential_scale(TABLE_Q)?;

    let (statistic, thresholds, header): (_, &[f64], Vec<&str>) = match which {
        TableId::One => (
            StatisticKind::CusumExpScale,
            &TABLE1_THRESHOLDS,
            vec!["A", "FO", "HO", "MC-ARL", "MC-SD"],
        ),
        TableId::Two => (
            StatisticKind::ShiryaevRoberts,
            &TABLE2_THRESHOLDS,
            vec!["A", "approx-ARL", "MC-ARL", "MC-SD"],
        ),
    };

    let mut rows = Vec::with_capacity(thresholds.len());
    for &threshold in thresholds {
        // One master seed across thresholds: the same innovation streams
        // drive every column, so the rows are coupled, not independent.
        let mut config = ExperimentConfig::new(statistic, model, threshold);
        config.replications = replications;
        config.master_seed = seed;
        let summary = summarize(&run_parallel(&config, workers)?)?;
        let row = match which {
            TableId::One => vec![
                fmt_f64(threshold),
                fmt_f64(fo_arl_cusum(&model, threshold)?),
                fmt_f64(ho_arl_cusum(&model, threshold)?),
                fmt_f64(summary.mean),
                fmt_f64(summary.sd),
            ],
            TableId::Two => vec![
                fmt_f64(threshold),
                fmt_f64(arl_sr_approx(&model, threshold)?),
                fmt_f64(summary.mean),
                fmt_f64(summary.sd),
            ],
        };
        rows.push(row);
    }

    fs::create_dir_all(out_dir)?;
    let comments = vec![
        format!("exitlab {VERSION}"),
        format!(
            "statistic={};model={};replications={replications};seed={seed}",
            statistic.name(),
            model.label()
        ),
    ];
    let file_name = which.file_name();
    write_csv(&out_dir.join(file_name), &comments, &header, &rows)?;

    let mut manifest = Manifest::new(
        "table",
        seed,
        json!({
            "which": file_name.trim_end_matches(".csv"),
            "statistic": statistic.name(),
            "model": model.label(),
            "replications": replications,
            "master_seed": seed,
        }),
    );
    manifest.record(file_name);
    manifest.write(out_dir)?;

    println!(
        "table: {} thresholds at R={replications} seed={seed} -> {}",
        thresholds.len(),
        out_dir.join(file_name).display()
    );
    Ok(())
}
