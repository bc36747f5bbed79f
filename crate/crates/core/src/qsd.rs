//! Grid discretization of the pre-change transition kernel and the
//! distributions attached to it.
//!
//! A statistic with a monotone update has a one-step law with closed-form
//! conditional CDFs under the exponential scale model:
//!
//! ```text
//! shiryaev-roberts:  P(X1 <= y | x) = F_lambda(y / (1 + x))
//! cusum-log:         P(X1 <= y | x) = F_z(y - x)       (atom at 0)
//! cusum-exp-scale:   P(W1 <= y | w) = F_lambda(y / w)  (atom at 1)
//! ```
//!
//! [`build_grid_kernel`] turns these into an `m x m` substochastic matrix
//! over grid cells of `[0, A]` plus an absorption vector (mass landing
//! above the threshold). Reflection atoms are assigned wholly to the lowest
//! cell. Grid spacing is uniform for `cusum-log` and geometric for the two
//! multiplicative statistics, whose states spread over orders of magnitude.
//!
//! On such a kernel:
//! - [`qsd_power_iteration`] iterates the conditioned operator
//!   `T(G) = normalize(G * M)` to the quasi-stationary law and the per-step
//!   exit probability `p_a`,
//! - [`exit_law`] computes the exact exit-time distribution of the finite
//!   chain (the oracle for geometric-exactness checks),
//! - [`stationary_on_kernel`] computes the stationary law of the
//!   unconditioned chain truncated at the top edge, reporting the reflected
//!   leakage instead of hiding it,
//! - [`tail_exponent_estimate`] fits a power-law exponent to a stationary
//!   tail on log-log scale.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::model::ChangePointModel;
use crate::statistic::StatisticKind;
use crate::{Error, Result};

/// Grids coarser than this are rejected; discretization error at small `m`
/// silently corrupts `p_a`.
pub const MIN_GRID_CELLS: usize = 50;

/// Default TV tolerance for fixed-point iterations.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Default iteration budget for fixed-point iterations.
pub const DEFAULT_MAX_ITERATIONS: u64 = 1_000_000;

/// How each cell is collapsed to a representative point for transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScheme {
    Midpoint,
    RightEdge,
}

/// Substochastic one-step kernel on a cell grid, plus absorption.
#[derive(Debug, Clone, PartialEq)]
pub struct GridKernel {
    /// `m + 1` strictly increasing cell edges.
    pub edges: Vec<f64>,
    /// Representative state of each cell.
    pub representatives: Vec<f64>,
    /// Row-major `m x m` transition probabilities between cells.
    pub matrix: Vec<f64>,
    /// Probability of leaving `[edges[0], edges[m]]` upward from each cell.
    pub absorption: Vec<f64>,
}

impl GridKernel {
    pub fn m(&self) -> usize {
        self.absorption.len()
    }

    /// Builds a kernel from raw parts, validating shapes, nonnegativity,
    /// and row conservation (row sum + absorption = 1 within 1e-9).
    pub fn from_parts(
        edges: Vec<f64>,
        representatives: Vec<f64>,
        matrix: Vec<f64>,
        absorption: Vec<f64>,
    ) -> Result<Self> {
        let m = absorption.len();
        if m == 0 {
            return Err(Error::invalid_input("kernel needs at least one cell"));
        }
        if edges.len() != m + 1 {
            return Err(Error::invalid_input(format!(
                "expected {} edges for {m} cells, got {}",
                m + 1,
                edges.len()
            )));
        }
        if !edges.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid_input("cell edges must be strictly increasing"));
        }
        if representatives.len() != m {
            return Err(Error::invalid_input("one representative per cell required"));
        }
        if matrix.len() != m * m {
            return Err(Error::invalid_input(format!(
                "expected {} matrix entries, got {}",
                m * m,
                matrix.len()
            )));
        }
        for (i, row) in matrix.chunks_exact(m).enumerate() {
            let mut sum = absorption[i];
            if absorption[i] < 0.0 {
                return Err(Error::invalid_input(format!(
                    "negative absorption in row {i}"
                )));
            }
            for &p in row {
                if p < 0.0 {
                    return Err(Error::invalid_input(format!(
                        "negative transition probability in row {i}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid_input(format!(
                    "row {i} plus absorption sums to {sum}, expected 1"
                )));
            }
        }
        Ok(GridKernel {
            edges,
            representatives,
            matrix,
            absorption,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.m();
        &self.matrix[i * m..(i + 1) * m]
    }

    /// Left action `mass * M`; returns the propagated mass and the amount
    /// absorbed in this step.
    pub fn apply_left(&self, mass: &[f64]) -> (Vec<f64>, f64) {
        let m = self.m();
        let mut out = vec![0.0; m];
        let mut absorbed = 0.0;
        for (i, &g) in mass.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            absorbed += g * self.absorption[i];
            let row = self.row(i);
            for (o, &p) in out.iter_mut().zip(row) {
                *o += g * p;
            }
        }
        (out, absorbed)
    }

    /// Checks stochastic monotonicity: exceedance mass above every column
    /// cutoff is nondecreasing in the source cell.
    pub fn stochastically_monotone(&self, tol: f64) -> bool {
        let m = self.m();
        let mut prev_tails = vec![0.0; m + 1];
        for (i, row) in self.matrix.chunks_exact(m).enumerate() {
            let mut tails = vec![0.0; m + 1];
            tails[m] = self.absorption[i];
            for j in (0..m).rev() {
                tails[j] = tails[j + 1] + row[j];
            }
            if i > 0 && tails.iter().zip(&prev_tails).any(|(t, p)| *t < p - tol) {
                return false;
            }
            prev_tails = tails;
        }
        true
    }
}

/// Builds the cell edges for a statistic on `[floor, threshold]`.
///
/// Uniform spacing for `cusum-log`; geometric for the multiplicative
/// statistics, with the Shiryaev-Roberts grid reserving one cell for
/// `[0, lambda_min)`, the region reachable only as an initial state.
pub fn grid_edges(
    kind: StatisticKind,
    model: &ChangePointModel,
    threshold: f64,
    m: usize,
) -> Result<Vec<f64>> {
    if m < MIN_GRID_CELLS {
        return Err(Error::invalid_input(format!(
            "grid needs at least {MIN_GRID_CELLS} cells, got {m}"
        )));
    }
    if !threshold.is_finite() {
        return Err(Error::invalid_input("threshold must be finite"));
    }
    let mut edges = Vec::with_capacity(m + 1);
    match kind {
        StatisticKind::CusumLog => {
            if threshold <= 0.0 {
                return Err(Error::invalid_input(format!(
                    "cusum-log threshold must be positive, got {threshold}"
                )));
            }
            for i in 0..=m {
                edges.push(threshold * i as f64 / m as f64);
            }
        }
        StatisticKind::CusumExpScale => {
            if threshold <= 1.0 {
                return Err(Error::invalid_input(format!(
                    "exp-scale threshold must exceed 1, got {threshold}"
                )));
            }
            let log_a = math::ln(threshold);
            edges.push(1.0);
            for i in 1..m {
                edges.push(math::exp(log_a * i as f64 / m as f64));
            }
            edges.push(threshold);
        }
        StatisticKind::ShiryaevRoberts => {
            let lo = model.lambda_lower_bound();
            if threshold <= lo {
                return Err(Error::invalid_input(format!(
                    "threshold {threshold} is below the one-step support bound {lo}"
                )));
            }
            edges.push(0.0);
            edges.push(lo);
            let log_ratio = math::ln(threshold / lo);
            for i in 1..(m - 1) {
                edges.push(lo * math::exp(log_ratio * i as f64 / (m - 1) as f64));
            }
            edges.push(threshold);
        }
    }
    Ok(edges)
}

/// Extends a grid geometrically from its top edge to `bound`, appending
/// `extra` cells. The shared prefix lets cumulative masses be compared
/// cell-by-cell between a threshold grid and a larger truncation grid.
pub fn extend_edges(edges: &[f64], bound: f64, extra: usize) -> Result<Vec<f64>> {
    let top = *edges.last().ok_or_else(|| Error::invalid_input("empty edge list"))?;
    if bound.is_nan() || bound <= top {
        return Err(Error::invalid_input(format!(
            "bound {bound} must exceed the current top edge {top}"
        )));
    }
    if extra == 0 {
        return Err(Error::invalid_input("extension needs at least one cell"));
    }
    let mut out = edges.to_vec();
    let log_ratio = math::ln(bound / top);
    for i in 1..extra {
        out.push(top * math::exp(log_ratio * i as f64 / extra as f64));
    }
    out.push(bound);
    Ok(out)
}

fn one_step_cdf(kind: StatisticKind, model: &ChangePointModel, state: f64, y: f64) -> f64 {
    match kind {
        StatisticKind::ShiryaevRoberts => model.lambda_cdf_pre(y / (1.0 + state)),
        StatisticKind::CusumLog => model.llr_cdf_pre(y - state),
        StatisticKind::CusumExpScale => model.lambda_cdf_pre(y / state),
    }
}

/// Discretizes the one-step kernel on explicit edges.
///
/// Cell 0 receives everything at or below its upper edge, which is exactly
/// where the reflection atom of the CUSUM statistics lands.
pub fn build_kernel_on_edges(
    kind: StatisticKind,
    model: &ChangePointModel,
    edges: Vec<f64>,
    scheme: GridScheme,
) -> Result<GridKernel> {
    if edges.len() < 2 {
        return Err(Error::invalid_input("need at least one cell"));
    }
    if !edges.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid_input("cell edges must be strictly increasing"));
    }
    let m = edges.len() - 1;
    let representatives: Vec<f64> = (0..m)
        .map(|i| match scheme {
            GridScheme::Midpoint => 0.5 * (edges[i] + edges[i + 1]),
            GridScheme::RightEdge => edges[i + 1],
        })
        .collect();

    let top = edges[m];
    let mut matrix = vec![0.0; m * m];
    let mut absorption = vec![0.0; m];
    for i in 0..m {
        let x = representatives[i];
        let row = &mut matrix[i * m..(i + 1) * m];
        let mut below = one_step_cdf(kind, model, x, edges[1]);
        row[0] = below;
        for j in 1..m {
            let next = one_step_cdf(kind, model, x, edges[j + 1]);
            row[j] = (next - below).max(0.0);
            below = next;
        }
        absorption[i] = (1.0 - one_step_cdf(kind, model, x, top)).max(0.0);
    }
    GridKernel::from_parts(edges, representatives, matrix, absorption)
}

/// Builds the grid and discretizes the kernel in one step.
pub fn build_grid_kernel(
    kind: StatisticKind,
    model: &ChangePointModel,
    threshold: f64,
    m: usize,
    scheme: GridScheme,
) -> Result<GridKernel> {
    let edges = grid_edges(kind, model, threshold, m)?;
    build_kernel_on_edges(kind, model, edges, scheme)
}

/// Probability masses on the cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    /// Cell edges, shared with the kernel the masses live on.
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn uniform(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::invalid_input("need at least one cell"));
        }
        let m = edges.len() - 1;
        Ok(DiscreteDistribution {
            edges,
            masses: vec![1.0 / m as f64; m],
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.edges.len() != self.masses.len() + 1 {
            return Err(Error::invalid_input("edge/mass length mismatch"));
        }
        if self.masses.iter().any(|&p| p < -1e-12) {
            return Err(Error::invalid_input("negative probability mass"));
        }
        let sum: f64 = self.masses.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid_input(format!(
                "masses sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    /// Total-variation distance to another distribution on the same grid.
    pub fn tv_distance(&self, other: &DiscreteDistribution) -> Result<f64> {
        if self.masses.len() != other.masses.len() {
            return Err(Error::invalid_input(
                "TV distance needs distributions on a common grid",
            ));
        }
        Ok(tv(&self.masses, &other.masses))
    }

    /// Running cumulative mass at each cell's upper edge.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.masses
            .iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect()
    }
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a
        .iter()
        .zip(b)
        .map(|(x, y)| math::abs(x - y))
        .sum::<f64>()
}

/// Quasi-stationary distribution and its per-step exit probability.
#[derive(Debug, Clone, PartialEq)]
pub struct QsdResult {
    pub distribution: DiscreteDistribution,
    /// Per-step exit probability from the quasi-stationary law; equals the
    /// complement of the kernel's dominant eigenvalue.
    pub p_a: f64,
    pub iterations: u64,
    pub residual: f64,
}

/// Iterates the conditioned operator `G -> normalize(G * M)` until two
/// successive iterates are within `tolerance` in total variation.
///
/// Starts from `init` (uniform when absent). Fails with
/// [`Error::NonConvergence`] once `max_iterations` is exhausted, which is
/// also what a zero tolerance produces.
pub fn qsd_power_iteration(
    kernel: &GridKernel,
    init: Option<&DiscreteDistribution>,
    tolerance: f64,
    max_iterations: u64,
) -> Result<QsdResult> {
    if tolerance < 0.0 || tolerance.is_nan() {
        return Err(Error::invalid_input("tolerance must be nonnegative"));
    }
    if max_iterations == 0 {
        return Err(Error::invalid_input("max_iterations must be at least 1"));
    }
    let m = kernel.m();
    let mut g: Vec<f64> = match init {
        Some(dist) => {
            dist.validate()?;
            if dist.masses.len() != m {
                return Err(Error::invalid_input(
                    "initial distribution does not match the kernel grid",
                ));
            }
            dist.masses.clone()
        }
        None => vec![1.0 / m as f64; m],
    };

    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iterations {
        let (mut next, _absorbed) = kernel.apply_left(&g);
        let survived: f64 = next.iter().sum();
        if survived <= 0.0 {
            return Err(Error::precondition(
                "all mass absorbed in one step; threshold grid is degenerate",
            ));
        }
        for p in &mut next {
            *p /= survived;
        }
        residual = tv(&next, &g);
        g = next;
        if residual < tolerance {
            let p_a = g
                .iter()
                .zip(&kernel.absorption)
                .map(|(p, a)| p * a)
                .sum();
            return Ok(QsdResult {
                distribution: DiscreteDistribution {
                    edges: kernel.edges.clone(),
                    masses: g,
                },
                p_a,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "quasi-stationary power iteration",
        iterations: max_iterations,
        residual,
    })
}

/// Exact exit-time law of the finite chain: `P(N = n)` for
/// `n = 1..=horizon` starting from `start`.
///
/// This is the oracle behind geometric-exactness checks: started from the
/// quasi-stationary law, the result is Geometric(p_a) up to the numerical
/// quality of that law.
pub fn exit_law(kernel: &GridKernel, start: &[f64], horizon: usize) -> Result<Vec<f64>> {
    let m = kernel.m();
    if start.len() != m {
        return Err(Error::invalid_input(
            "start distribution does not match the kernel grid",
        ));
    }
    if start.iter().any(|&p| p < 0.0) {
        return Err(Error::invalid_input("negative mass in start distribution"));
    }
    let total: f64 = start.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid_input(format!(
            "start masses sum to {total}, expected 1"
        )));
    }
    let mut surviving = start.to_vec();
    let mut law = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let absorbed_now: f64 = surviving
            .iter()
            .zip(&kernel.absorption)
            .map(|(p, a)| p * a)
            .sum();
        law.push(absorbed_now);
        let (next, _) = kernel.apply_left(&surviving);
        surviving = next;
    }
    Ok(law)
}

/// Stationary law of a truncated chain with its reported leakage.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    pub distribution: DiscreteDistribution,
    /// Long-run per-step mass that the untruncated chain would have pushed
    /// above the top edge; reflected into the top cell, never renormalized
    /// away silently.
    pub truncation_mass: f64,
    pub iterations: u64,
    pub residual: f64,
}

/// Stationary law of the kernel's chain with absorption reflected into the
/// top cell (mass conservation on `[edges[0], edges[m]]`).
pub fn stationary_on_kernel(
    kernel: &GridKernel,
    tolerance: f64,
    max_iterations: u64,
) -> Result<StationaryResult> {
    if tolerance < 0.0 || tolerance.is_nan() {
        return Err(Error::invalid_input("tolerance must be nonnegative"));
    }
    if max_iterations == 0 {
        return Err(Error::invalid_input("max_iterations must be at least 1"));
    }
    let m = kernel.m();
    let mut g = vec![1.0 / m as f64; m];
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iterations {
        let (mut next, absorbed) = kernel.apply_left(&g);
        next[m - 1] += absorbed;
        let total: f64 = next.iter().sum();
        for p in &mut next {
            *p /= total;
        }
        residual = tv(&next, &g);
        g = next;
        if residual < tolerance {
            let truncation_mass = g
                .iter()
                .zip(&kernel.absorption)
                .map(|(p, a)| p * a)
                .sum();
            return Ok(StationaryResult {
                distribution: DiscreteDistribution {
                    edges: kernel.edges.clone(),
                    masses: g,
                },
                truncation_mass,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "stationary power iteration",
        iterations: max_iterations,
        residual,
    })
}

/// Builds the truncated kernel on `[floor, bound]` and computes its
/// stationary law. Requires negative log likelihood ratio drift; without
/// it the untruncated chain has no stationary law to approximate.
pub fn stationary_distribution(
    kind: StatisticKind,
    model: &ChangePointModel,
    m: usize,
    bound: f64,
    tolerance: f64,
    max_iterations: u64,
) -> Result<StationaryResult> {
    let mu = model.constants().mu;
    if mu.is_nan() || mu >= 0.0 {
        return Err(Error::precondition(format!(
            "stationary law needs negative llr drift, got mu = {mu}"
        )));
    }
    let kernel = build_grid_kernel(kind, model, bound, m, GridScheme::Midpoint)?;
    stationary_on_kernel(&kernel, tolerance, max_iterations)
}

/// Least-squares power-law fit of a distribution tail on log-log scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `log P(X > y) ~ slope * log y + intercept` over grid edges inside
/// `window`. Needs at least 10 usable points with positive tail mass.
pub fn tail_exponent_estimate(
    dist: &DiscreteDistribution,
    window: (f64, f64),
) -> Result<TailFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid_input(format!(
            "fit window must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    dist.validate()?;
    let m = dist.masses.len();
    // Tail mass above edge k.
    let mut tail = vec![0.0; m + 1];
    for k in (0..m).rev() {
        tail[k] = tail[k + 1] + dist.masses[k];
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&edge, &mass_above) in dist.edges.iter().zip(&tail) {
        if edge >= lo && edge <= hi && mass_above > 0.0 {
            xs.push(math::ln(edge));
            ys.push(math::ln(mass_above));
        }
    }
    if xs.len() < 10 {
        return Err(Error::insufficient_sample(format!(
            "tail fit needs at least 10 points inside the window, found {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::invalid_input("degenerate fit window (single edge)"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = syy - slope * sxy;
    let r_squared = if syy <= 0.0 {
        1.0
    } else {
        1.0 - (ss_res / syy).max(0.0)
    };
    Ok(TailFit {
        slope,
        intercept,
        r_squared,
        points: xs.len(),
    })
}
