//! Flat key=value experiment configs.
//!
//! The format is deliberately small: one `key = value` pair per line, `#`
//! comments, no sections, no quoting. Every key must be known, spelled
//! once, and applicable to the subcommand that reads it; violations are
//! reported with the offending line.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use exitlab_core::mc::{ExperimentConfig, DEFAULT_REPLICATIONS, DESK_REPLICATIONS};
use exitlab_core::model::{ChangePointModel, Regime};
use exitlab_core::qsd::{DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use exitlab_core::statistic::StatisticKind;

use crate::error::CliError;

/// Union of keys across all subcommands. Each resolver additionally
/// rejects keys its subcommand does not consume.
const KNOWN_KEYS: &[&str] = &[
    "statistic",
    "model.kind",
    "model.q",
    "threshold",
    "initial_state",
    "replications",
    "seed",
    "censor_cap",
    "regime",
    "additive_exp_scale",
    "outputs",
    "grid_m",
    "tolerance",
    "max_iterations",
    "bound",
    "compare",
    "fixture",
];

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug)]
pub struct RawConfig {
    path: String,
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse_file(path: &Path) -> Result<Self, CliError> {
        let label = path.display().to_string();
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(label.clone(), None, format!("cannot read: {e}")))?;
        Self::parse_str(&text, &label)
    }

    pub fn parse_str(text: &str, path_label: &str) -> Result<Self, CliError> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw_line.trim();
            if stripped.is_empty() || stripped.starts_with('#') {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(CliError::config(
                    path_label,
                    line,
                    format!("expected 'key = value', got '{stripped}'"),
                ));
            };
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::config(
                    path_label,
                    line,
                    format!("unknown key '{key}'"),
                ));
            }
            if value.is_empty() {
                return Err(CliError::config(
                    path_label,
                    line,
                    format!("key '{key}' has an empty value"),
                ));
            }
            if let Some(previous) = entries.get(key) {
                return Err(CliError::config(
                    path_label,
                    line,
                    format!("key '{key}' already set on line {}", previous.line),
                ));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }
        Ok(RawConfig {
            path: path_label.to_string(),
            entries,
        })
    }

    /// Rejects keys the given subcommand does not consume.
    fn restrict(&self, command: &str, allowed: &[&str]) -> Result<(), CliError> {
        for (key, entry) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::config(
                    &self.path,
                    entry.line,
                    format!("key '{key}' is not used by the {command} command"),
                ));
            }
        }
        Ok(())
    }

    fn bad_value(&self, key: &str, detail: impl std::fmt::Display) -> CliError {
        let line = self.entries.get(key).map(|e| e.line);
        CliError::config(&self.path, line, format!("key '{key}': {detail}"))
    }

    fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn require_str(&self, key: &str) -> Result<&str, CliError> {
        self.get_str(key)
            .ok_or_else(|| CliError::config(&self.path, None, format!("missing required key '{key}'")))
    }

    fn get_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get_str(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| self.bad_value(key, format!("'{v}' is not a number")))
            })
            .transpose()
    }

    fn require_f64(&self, key: &str) -> Result<f64, CliError> {
        self.require_str(key)?;
        Ok(self.get_f64(key)?.expect("checked above"))
    }

    fn get_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.get_str(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| self.bad_value(key, format!("'{v}' is not a nonnegative integer")))
            })
            .transpose()
    }

    fn get_usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.get_str(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| self.bad_value(key, format!("'{v}' is not a nonnegative integer")))
            })
            .transpose()
    }

    fn get_bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        self.get_str(key)
            .map(|v| match v {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(self.bad_value(key, format!("'{other}' is not 'true' or 'false'"))),
            })
            .transpose()
    }
}

/// Command line overrides shared by every subcommand.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<u64>,
    pub desk: bool,
}

impl Overrides {
    pub fn seed(&self, base: u64) -> u64 {
        self.seed.unwrap_or(base)
    }

    /// `--reps` wins, then `--desk`, then the configured value.
    pub fn replications(&self, base: u64) -> u64 {
        match (self.reps, self.desk) {
            (Some(r), _) => r,
            (None, true) => DESK_REPLICATIONS,
            (None, false) => base,
        }
    }
}

fn parse_statistic(raw: &RawConfig) -> Result<StatisticKind, CliError> {
    let name = raw.require_str("statistic")?;
    StatisticKind::parse(name).map_err(|e| raw.bad_value("statistic", e))
}

fn parse_model(raw: &RawConfig) -> Result<ChangePointModel, CliError> {
    let kind = raw.require_str("model.kind")?;
    if kind != "exponential-scale" {
        return Err(raw.bad_value(
            "model.kind",
            format!("unknown model '{kind}' (expected exponential-scale)"),
        ));
    }
    let q = raw.require_f64("model.q")?;
    ChangePointModel::exponential_scale(q).map_err(|e| raw.bad_value("model.q", e))
}

fn parse_regime(raw: &RawConfig) -> Result<Regime, CliError> {
    match raw.get_str("regime") {
        None => Ok(Regime::PreChange),
        Some("pre-change") => Ok(Regime::PreChange),
        Some("post-change") => Ok(Regime::PostChange),
        Some(other) => Err(raw.bad_value(
            "regime",
            format!("unknown regime '{other}' (expected pre-change or post-change)"),
        )),
    }
}

/// Diagnostic files the run command can emit next to summary.json.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutputKind {
    Samples,
    Qq,
    Survival,
    Mgf,
}

impl OutputKind {
    pub fn file_name(self) -> &'static str {
        match self {
            OutputKind::Samples => "samples.csv",
            OutputKind::Qq => "qq.csv",
            OutputKind::Survival => "survival.csv",
            OutputKind::Mgf => "mgf.csv",
        }
    }
}

fn parse_outputs(raw: &RawConfig) -> Result<Vec<OutputKind>, CliError> {
    let Some(list) = raw.get_str("outputs") else {
        return Ok(Vec::new());
    };
    let mut outputs = Vec::new();
    for item in list.split(',') {
        let kind = match item.trim() {
            "samples" => OutputKind::Samples,
            "qq" => OutputKind::Qq,
            "survival" => OutputKind::Survival,
            "mgf" => OutputKind::Mgf,
            other => {
                return Err(raw.bad_value(
                    "outputs",
                    format!("unknown output '{other}' (expected samples, qq, survival, mgf)"),
                ))
            }
        };
        if !outputs.contains(&kind) {
            outputs.push(kind);
        }
    }
    // Emission order is fixed regardless of how the config spells it.
    outputs.sort();
    Ok(outputs)
}

fn experiment_from(raw: &RawConfig) -> Result<ExperimentConfig, CliError> {
    let statistic = parse_statistic(raw)?;
    let model = parse_model(raw)?;
    let threshold = raw.require_f64("threshold")?;
    let mut config = ExperimentConfig::new(statistic, model, threshold);
    if let Some(x) = raw.get_f64("initial_state")? {
        config.initial_state = x;
    }
    if let Some(r) = raw.get_u64("replications")? {
        config.replications = r;
    }
    if let Some(s) = raw.get_u64("seed")? {
        config.master_seed = s;
    }
    if let Some(cap) = raw.get_u64("censor_cap")? {
        config.censor_cap = cap;
    }
    config.regime = parse_regime(raw)?;
    if let Some(flag) = raw.get_bool("additive_exp_scale")? {
        config.additive_exp_scale = flag;
    }
    Ok(config)
}

#[derive(Debug)]
pub struct RunSpec {
    pub experiment: ExperimentConfig,
    pub outputs: Vec<OutputKind>,
}

pub fn resolve_run(raw: &RawConfig) -> Result<RunSpec, CliError> {
    raw.restrict(
        "run",
        &[
            "statistic",
            "model.kind",
            "model.q",
            "threshold",
            "initial_state",
            "replications",
            "seed",
            "censor_cap",
            "regime",
            "additive_exp_scale",
            "outputs",
        ],
    )?;
    Ok(RunSpec {
        experiment: experiment_from(raw)?,
        outputs: parse_outputs(raw)?,
    })
}

#[derive(Debug)]
pub struct QsdGridSpec {
    pub statistic: StatisticKind,
    pub model: ChangePointModel,
    pub threshold: f64,
    pub grid_m: usize,
    pub tolerance: f64,
    pub max_iterations: u64,
    /// Truncation bound for an additional stationary-law solve.
    pub bound: Option<f64>,
    /// Monte Carlo cross-check config, built when `compare = true`.
    pub compare: Option<ExperimentConfig>,
}

#[derive(Debug)]
pub enum QsdJob {
    /// The bundled 2-cell demonstration kernel.
    Fixture,
    Grid(Box<QsdGridSpec>),
}

pub const DEFAULT_GRID_CELLS: usize = 4000;

pub fn resolve_qsd(raw: &RawConfig) -> Result<QsdJob, CliError> {
    raw.restrict(
        "qsd",
        &[
            "statistic",
            "model.kind",
            "model.q",
            "threshold",
            "initial_state",
            "replications",
            "seed",
            "censor_cap",
            "grid_m",
            "tolerance",
            "max_iterations",
            "bound",
            "compare",
            "fixture",
        ],
    )?;
    if let Some(fixture) = raw.get_str("fixture") {
        if fixture != "two-cell" {
            return Err(raw.bad_value(
                "fixture",
                format!("unknown fixture '{fixture}' (expected two-cell)"),
            ));
        }
        if raw.entries.len() > 1 {
            let other = raw
                .entries
                .keys()
                .find(|k| k.as_str() != "fixture")
                .expect("more than one entry");
            return Err(raw.bad_value(
                other,
                "the fixture kernel takes no other configuration",
            ));
        }
        return Ok(QsdJob::Fixture);
    }

    let statistic = parse_statistic(raw)?;
    let model = parse_model(raw)?;
    let threshold = raw.require_f64("threshold")?;
    let grid_m = raw.get_usize("grid_m")?.unwrap_or(DEFAULT_GRID_CELLS);
    let tolerance = raw.get_f64("tolerance")?.unwrap_or(DEFAULT_TOLERANCE);
    let max_iterations = raw
        .get_u64("max_iterations")?
        .unwrap_or(DEFAULT_MAX_ITERATIONS);
    let bound = raw.get_f64("bound")?;

    let compare = if raw.get_bool("compare")?.unwrap_or(false) {
        let mut config = ExperimentConfig::new(statistic, model, threshold);
        if let Some(x) = raw.get_f64("initial_state")? {
            config.initial_state = x;
        }
        if let Some(r) = raw.get_u64("replications")? {
            config.replications = r;
        }
        if let Some(s) = raw.get_u64("seed")? {
            config.master_seed = s;
        }
        if let Some(cap) = raw.get_u64("censor_cap")? {
            config.censor_cap = cap;
        }
        Some(config)
    } else {
        None
    };

    Ok(QsdJob::Grid(Box::new(QsdGridSpec {
        statistic,
        model,
        threshold,
        grid_m,
        tolerance,
        max_iterations,
        bound,
        compare,
    })))
}

#[derive(Debug)]
pub struct FigureSpec {
    pub replications: u64,
    pub master_seed: u64,
}

pub fn resolve_figures(raw: Option<&RawConfig>) -> Result<FigureSpec, CliError> {
    let mut spec = FigureSpec {
        replications: DEFAULT_REPLICATIONS,
        master_seed: 42,
    };
    if let Some(raw) = raw {
        raw.restrict("figures", &["replications", "seed"])?;
        if let Some(r) = raw.get_u64("replications")? {
            spec.replications = r;
        }
        if let Some(s) = raw.get_u64("seed")? {
            spec.master_seed = s;
        }
    }
    Ok(spec)
}
