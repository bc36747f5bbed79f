pub mod figures;
pub mod qsd;
pub mod run;
pub mod table;

use std::path::Path;

use exitlab_core::diagnostics::{qq_data, survival_curve, StandardizedSample};

use crate::error::CliError;
use crate::output::{fmt_f64, write_csv};

/// Quantile pairs emitted for plot-ready QQ files.
pub const QQ_POINTS: usize = 200;

/// Standardized-scale grid for survival curves: 0 to 6 in steps of 1/4.
pub fn survival_grid() -> Vec<f64> {
    (0..=24).map(|i| i as f64 * 0.25).collect()
}

pub fn write_qq_csv(
    path: &Path,
    comments: &[String],
    sample: &StandardizedSample,
) -> Result<(), CliError> {
    let points = qq_data(sample, QQ_POINTS)?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                fmt_f64(p.probability),
                fmt_f64(p.theoretical),
                fmt_f64(p.sample),
            ]
        })
        .collect();
    write_csv(path, comments, &["probability", "theoretical", "sample"], &rows)
}

pub fn write_survival_csv(
    path: &Path,
    comments: &[String],
    sample: &StandardizedSample,
) -> Result<(), CliError> {
    let curve = survival_curve(sample, &survival_grid())?;
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|p| vec![fmt_f64(p.y), fmt_f64(p.log_survival)])
        .collect();
    write_csv(path, comments, &["y", "log_survival"], &rows)
}
