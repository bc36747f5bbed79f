//! Reproducible Monte Carlo engine for exit-time experiments.
//!
//! Replication `i` of an experiment draws from the stream keyed by
//! `(master seed, "exit-mc", i)`, so the multiset of exit times is a pure
//! function of the config: execution order, chunking, and worker count
//! cannot change it. Parallel drivers (kept out of this crate) simply map
//! [`replication_exit`] over `0..replications` and collect by index.
//!
//! Full value vectors are retained up to [`MAX_RETAINED_REPLICATIONS`];
//! larger experiments must go through [`run_experiment_streaming`], which
//! keeps only running moments plus a fixed-size geometric histogram for
//! quantiles.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::model::{ChangePointModel, Regime};
use crate::rng::{fnv1a, StreamFamily};
use crate::statistic::{ExitOutcome, StatisticKind, UpdateRule, DEFAULT_CENSOR_CAP};
use crate::{Error, Result};

/// Largest replication count for which full exit-time vectors are kept.
pub const MAX_RETAINED_REPLICATIONS: u64 = 10_000_000;

/// Default replication count for production runs.
pub const DEFAULT_REPLICATIONS: u64 = 100_000;

/// Desk-scale replication count for quick runs.
pub const DESK_REPLICATIONS: u64 = 10_000;

/// Stream-family component label for exit-time replications.
pub const MC_COMPONENT: &str = "exit-mc";

/// Quantile probabilities reported by [`summarize`].
pub const DEFAULT_QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Complete description of one exit-time experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub statistic: StatisticKind,
    /// Selects the comparison-only additive exp-scale recursion.
    pub additive_exp_scale: bool,
    pub model: ChangePointModel,
    pub regime: Regime,
    pub threshold: f64,
    pub initial_state: f64,
    pub replications: u64,
    pub master_seed: u64,
    pub censor_cap: u64,
    /// Worker-count hint for parallel drivers. Never affects results, only
    /// scheduling, and is excluded from the fingerprint.
    pub worker_hint: Option<usize>,
}

impl ExperimentConfig {
    /// Config with conventional defaults for the given statistic.
    pub fn new(statistic: StatisticKind, model: ChangePointModel, threshold: f64) -> Self {
        ExperimentConfig {
            statistic,
            additive_exp_scale: false,
            model,
            regime: Regime::PreChange,
            threshold,
            initial_state: statistic.default_initial_state(),
            replications: DEFAULT_REPLICATIONS,
            master_seed: 42,
            censor_cap: DEFAULT_CENSOR_CAP,
            worker_hint: None,
        }
    }

    pub fn rule(&self) -> Result<UpdateRule> {
        UpdateRule::from_config(self.statistic, self.additive_exp_scale)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid_input("replications must be at least 1"));
        }
        if self.censor_cap == 0 {
            return Err(Error::invalid_input("censor cap must be at least 1"));
        }
        self.rule()?.validate_run(self.threshold, self.initial_state)
    }

    /// Canonical description used for fingerprints and manifests.
    pub fn describe(&self) -> String {
        format!(
            "statistic={};additive={};model={};regime={};threshold={};initial={};replications={};seed={};cap={}",
            self.statistic.name(),
            self.additive_exp_scale,
            self.model.label(),
            self.regime.name(),
            self.threshold,
            self.initial_state,
            self.replications,
            self.master_seed,
            self.censor_cap,
        )
    }

    /// Stable 64-bit fingerprint of everything that determines results.
    pub fn fingerprint(&self) -> u64 {
        fnv1a(self.describe().as_bytes())
    }

    pub fn stream_family(&self) -> StreamFamily {
        StreamFamily::new(self.master_seed, MC_COMPONENT)
    }
}

/// Exit times from one experiment. `values` holds uncensored exit times
/// only; censored replications are counted separately and
/// `values.len() + censored == replications` always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitTimeSample {
    pub values: Vec<u64>,
    pub censored: u64,
    pub fingerprint: u64,
}

impl ExitTimeSample {
    pub fn total_replications(&self) -> u64 {
        self.values.len() as u64 + self.censored
    }
}

/// Runs replication `index` of the experiment. Pure in `(config, index)`.
pub fn replication_exit(config: &ExperimentConfig, index: u64) -> Result<ExitOutcome> {
    let rule = config.rule()?;
    let mut rng = config.stream_family().stream(index);
    crate::statistic::run_to_exit(
        rule,
        config.threshold,
        config.initial_state,
        &config.model,
        config.regime,
        &mut rng,
        config.censor_cap,
    )
}

/// Runs the full experiment sequentially, retaining every exit time.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExitTimeSample> {
    config.validate()?;
    if config.replications > MAX_RETAINED_REPLICATIONS {
        return Err(Error::invalid_input(format!(
            "replications {} exceeds the retained-sample limit {}; use run_experiment_streaming",
            config.replications, MAX_RETAINED_REPLICATIONS
        )));
    }
    let rule = config.rule()?;
    let family = config.stream_family();
    let mut values = Vec::with_capacity(config.replications as usize);
    let mut censored = 0u64;
    for index in 0..config.replications {
        let mut rng = family.stream(index);
        let outcome = crate::statistic::run_to_exit(
            rule,
            config.threshold,
            config.initial_state,
            &config.model,
            config.regime,
            &mut rng,
            config.censor_cap,
        )?;
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

/// Summary of an exit-time sample. Censored replications are excluded from
/// every moment; they appear only in `censored`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub count: u64,
    pub censored: u64,
    pub mean: f64,
    /// Sample standard deviation (divisor `n - 1`).
    pub sd: f64,
    pub standard_error: f64,
    /// `1 / mean`: the implied per-step exit probability.
    pub p_hat: f64,
    /// Nearest-rank quantiles at the requested probabilities.
    pub quantiles: Vec<(f64, u64)>,
    pub fingerprint: u64,
}

/// Nearest-rank quantile: the smallest sorted value whose rank is at least
/// `ceil(p * n)`.
pub fn nearest_rank_quantile(sorted: &[u64], p: f64) -> Result<u64> {
    if sorted.is_empty() {
        return Err(Error::insufficient_sample("quantile of an empty sample"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid_input(format!(
            "quantile probability must be in (0, 1], got {p}"
        )));
    }
    let n = sorted.len();
    let rank = math::ceil(p * n as f64) as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

pub fn summarize(sample: &ExitTimeSample) -> Result<SummaryStats> {
    summarize_with_quantiles(sample, &DEFAULT_QUANTILES)
}

pub fn summarize_with_quantiles(
    sample: &ExitTimeSample,
    probabilities: &[f64],
) -> Result<SummaryStats> {
    let n = sample.values.len();
    if n < 2 {
        return Err(Error::insufficient_sample(format!(
            "summary needs at least 2 uncensored exit times, got {n} ({} censored)",
            sample.censored
        )));
    }
    let sum: u128 = sample.values.iter().map(|&v| u128::from(v)).sum();
    let mean = sum as f64 / n as f64;
    let mut ss = 0.0;
    for &v in &sample.values {
        let d = v as f64 - mean;
        ss += d * d;
    }
    let sd = math::sqrt(ss / (n as f64 - 1.0));
    let standard_error = sd / math::sqrt(n as f64);

    let mut sorted = sample.values.clone();
    sorted.sort_unstable();
    let mut quantiles = Vec::with_capacity(probabilities.len());
    for &p in probabilities {
        quantiles.push((p, nearest_rank_quantile(&sorted, p)?));
    }

    Ok(SummaryStats {
        count: n as u64,
        censored: sample.censored,
        mean,
        sd,
        standard_error,
        p_hat: 1.0 / mean,
        quantiles,
        fingerprint: sample.fingerprint,
    })
}

/// Number of geometric histogram bins in a [`StreamingSummary`].
pub const STREAMING_HISTOGRAM_BINS: usize = 4096;

/// Fixed replication chunk size for streaming runs. Chunk boundaries are a
/// function of the index alone, so partial summaries merge in a canonical
/// order regardless of how chunks were scheduled.
pub const STREAMING_CHUNK: u64 = 8192;

/// Constant-memory summary: running moments plus a geometric histogram.
/// Quantiles come back as bin upper edges, accurate to the bin ratio
/// (`cap^(1/bins)`, about 0.5% relative for the default sizes).
#[derive(Debug, Clone, PartialEq)]
pub struct StreamingSummary {
    pub count: u64,
    pub censored: u64,
    mean: f64,
    m2: f64,
    pub min: u64,
    pub max: u64,
    log_cap: f64,
    bins: Vec<u64>,
}

impl StreamingSummary {
    pub fn new(censor_cap: u64) -> Self {
        StreamingSummary {
            count: 0,
            censored: 0,
            mean: 0.0,
            m2: 0.0,
            min: u64::MAX,
            max: 0,
            log_cap: math::ln(censor_cap as f64).max(f64::MIN_POSITIVE),
            bins: vec![0; STREAMING_HISTOGRAM_BINS],
        }
    }

    fn bin_index(&self, value: u64) -> usize {
        let x = math::ln(value as f64) / self.log_cap * STREAMING_HISTOGRAM_BINS as f64;
        (x as usize).min(STREAMING_HISTOGRAM_BINS - 1)
    }

    fn bin_upper(&self, index: usize) -> u64 {
        let log_edge = (index + 1) as f64 / STREAMING_HISTOGRAM_BINS as f64 * self.log_cap;
        // Largest integer inside the half-open bin. Exit times are
        // integers, so any bin narrower than 1 reports its value exactly.
        (math::ceil(math::exp(log_edge)) as u64).saturating_sub(1).max(1)
    }

    pub fn push(&mut self, outcome: ExitOutcome) {
        match outcome {
            ExitOutcome::Censored => self.censored += 1,
            ExitOutcome::Exited(v) => {
                self.count += 1;
                let delta = v as f64 - self.mean;
                self.mean += delta / self.count as f64;
                self.m2 += delta * (v as f64 - self.mean);
                self.min = self.min.min(v);
                self.max = self.max.max(v);
                let idx = self.bin_index(v);
                self.bins[idx] += 1;
            }
        }
    }

    /// Chan's parallel merge of Welford states. Merging in a fixed chunk
    /// order keeps results bit-deterministic.
    pub fn merge(&mut self, other: &StreamingSummary) {
        if other.count == 0 {
            self.censored += other.censored;
            return;
        }
        if self.count == 0 {
            let censored = self.censored;
            *self = other.clone();
            self.censored += censored;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        let combined_mean =
            self.mean + delta * other.count as f64 / total as f64;
        self.m2 += other.m2
            + delta * delta * self.count as f64 * other.count as f64 / total as f64;
        self.mean = combined_mean;
        self.count = total;
        self.censored += other.censored;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            math::sqrt(self.m2 / (self.count as f64 - 1.0))
        }
    }

    /// Nearest-rank quantile over the histogram, reported as the upper edge
    /// of the bin containing the ranked observation.
    pub fn quantile(&self, p: f64) -> Result<u64> {
        if self.count == 0 {
            return Err(Error::insufficient_sample("quantile of an empty summary"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid_input(format!(
                "quantile probability must be in (0, 1], got {p}"
            )));
        }
        let rank = math::ceil(p * self.count as f64) as u64;
        let mut cum = 0u64;
        for (i, &c) in self.bins.iter().enumerate() {
            cum += c;
            if cum >= rank {
                return Ok(self.bin_upper(i).min(self.max));
            }
        }
        Ok(self.max)
    }
}

/// Streaming variant of [`run_experiment`] for replication counts beyond
/// the retained-sample limit. Processes fixed-size chunks in index order.
pub fn run_experiment_streaming(config: &ExperimentConfig) -> Result<StreamingSummary> {
    config.validate()?;
    let rule = config.rule()?;
    let family = config.stream_family();
    let mut total = StreamingSummary::new(config.censor_cap);
    let mut chunk_start = 0u64;
    while chunk_start < config.replications {
        let chunk_end = (chunk_start + STREAMING_CHUNK).min(config.replications);
        let mut partial = StreamingSummary::new(config.censor_cap);
        for index in chunk_start..chunk_end {
            let mut rng = family.stream(index);
            let outcome = crate::statistic::run_to_exit(
                rule,
                config.threshold,
                config.initial_state,
                &config.model,
                config.regime,
                &mut rng,
                config.censor_cap,
            )?;
            partial.push(outcome);
        }
        total.merge(&partial);
        chunk_start = chunk_end;
    }
    Ok(total)
}
