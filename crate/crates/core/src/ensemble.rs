//! Seeded ensembles over `(z, σ)`: connectivity sweeps, metrics runs and
//! exact merging of partial results.
//!
//! Every realization draws from its own random streams, keyed by the master
//! seed, the range, the grid position and the realization index, so results
//! do not depend on how rayon schedules the work. All pooled quantities are
//! integer totals, which makes merging associative and commutative.

use std::fmt::Write as _;
use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connectivity::components_unionfind;
use crate::dynamics::{derive_seed, node_count, Configuration, Purpose, RngStream, StreamId};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeConfig};
use crate::netmetrics::{MetricsAccumulator, MetricsTable};

/// How realizations are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleMode {
    /// Fresh placement plus warm-up per realization.
    Independent,
    /// Snapshots of one long walk, `trajectory_stride` steps apart.
    Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub side: u32,
    pub z_list: Vec<u32>,
    pub sigma_grid: Vec<f64>,
    pub realizations: usize,
    pub warmup_steps: usize,
    pub seed: u64,
    pub mode: EnsembleMode,
    pub trajectory_stride: usize,
}

impl ExperimentPlan {
    /// Plan with the default protocol: 300 realizations and `L` warm-up steps.
    pub fn new(side: u32, z_list: Vec<u32>, sigma_grid: Vec<f64>, seed: u64) -> Self {
        Self {
            side,
            z_list,
            sigma_grid,
            realizations: 300,
            warmup_steps: side as usize,
            seed,
            mode: EnsembleMode::Independent,
            trajectory_stride: side as usize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPlan(m));
        if self.z_list.is_empty() {
            return bad("z_list is empty".into());
        }
        if let Some(z) = self.z_list.iter().find(|&&z| z == 0) {
            return bad(format!("transmission range z={z} must be at least 1"));
        }
        let zmax = *self.z_list.iter().max().unwrap();
        if (self.side as u64) < 2 * zmax as u64 + 1 {
            return bad(format!(
                "lattice side L={} is smaller than 2z+1={} for z={zmax}",
                self.side,
                2 * zmax as u64 + 1
            ));
        }
        if self.sigma_grid.is_empty() {
            return bad("sigma_grid is empty".into());
        }
        if let Some(s) = self.sigma_grid.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
            return bad(format!("sigma {s} outside (0, 1]"));
        }
        if self.sigma_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sigma_grid must be strictly increasing".into());
        }
        if self.realizations == 0 {
            return bad("realizations must be at least 1".into());
        }
        if self.mode == EnsembleMode::Trajectory && self.trajectory_stride == 0 {
            return bad("trajectory_stride must be at least 1".into());
        }
        Ok(())
    }

    fn lattice(&self, z: u32) -> Result<Arc<Lattice>> {
        Ok(Arc::new(Lattice::new(LatticeConfig::new(self.side, z)?)))
    }
}

const SWEEP_TAG: u64 = 0x0073_7765_6570;
const METRICS_TAG: u64 = 0x6d65_7472_6963;

/// Seed for all realizations at one `(z, σ-index)` of a sweep.
pub fn sweep_point_seed(seed: u64, z: u32, sigma_index: usize) -> u64 {
    derive_seed(seed, &[SWEEP_TAG, z as u64, sigma_index as u64])
}

fn metrics_point_seed(seed: u64, z: u32, sigma: f64) -> u64 {
    derive_seed(seed, &[METRICS_TAG, z as u64, sigma.to_bits()])
}

/// Placement followed by `warmup` exclusion-walk sweeps, drawn from the
/// realization's own streams.
pub fn prepare_realization(
    lattice: &Arc<Lattice>,
    sigma: f64,
    point_seed: u64,
    realization: u64,
    warmup: usize,
) -> Result<Configuration> {
    let mut placement = RngStream::new(
        point_seed,
        StreamId {
            realization,
            purpose: Purpose::Placement,
        },
    );
    let mut config = Configuration::random_placement(lattice.clone(), sigma, &mut placement)?;
    if warmup > 0 {
        let mut motion = RngStream::new(
            point_seed,
            StreamId {
                realization,
                purpose: Purpose::Motion,
            },
        );
        config.advance(warmup, &mut motion);
    }
    Ok(config)
}

/// Exact running totals of connectivity samples at one `(z, σ)`.
///
/// A sample is `largest / n0`; since `n0` is fixed at a grid point the
/// totals are kept as integer numerators over the common denominator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveAccumulator {
    pub z: u32,
    pub side: u32,
    pub sigma_bits: u64,
    denominator: u64,
    count: u64,
    sum: u64,
    sum_sq: u128,
}

impl CurveAccumulator {
    pub fn new(side: u32, z: u32, sigma: f64) -> Self {
        let n0 = node_count(sigma, side as usize * side as usize) as u64;
        Self {
            z,
            side,
            sigma_bits: sigma.to_bits(),
            denominator: n0.max(1),
            count: 0,
            sum: 0,
            sum_sq: 0,
        }
    }

    pub fn sigma(&self) -> f64 {
        f64::from_bits(self.sigma_bits)
    }

    /// Adds one sample given the largest component size and node count.
    pub fn push(&mut self, largest: usize, n0: usize) {
        debug_assert_eq!(n0.max(1) as u64, self.denominator);
        let x = if n0 <= 1 {
            self.denominator
        } else {
            largest as u64
        };
        self.count += 1;
        self.sum += x;
        self.sum_sq += x as u128 * x as u128;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        self.sum as f64 / (self.count as f64 * self.denominator as f64)
    }

    /// Standard error of the mean from the unbiased sample variance.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as u128;
        let s = self.sum as u128;
        // n·Σx² − (Σx)² ≥ 0 exactly
        let scaled = n * self.sum_sq - s * s;
        let d = self.denominator as f64;
        let var = scaled as f64 / (n as f64 * (n - 1) as f64) / (d * d);
        (var / n as f64).sqrt()
    }

    pub fn point(&self) -> CurvePoint {
        CurvePoint {
            sigma: self.sigma(),
            eta_mean: self.mean(),
            eta_stderr: self.stderr(),
            realizations: self.count as usize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sigma: f64,
    pub eta_mean: f64,
    pub eta_stderr: f64,
    pub realizations: usize,
}

/// Global connectivity `η(σ)` for one transmission range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityCurve {
    pub z: u32,
    pub points: Vec<CurvePoint>,
}

impl ConnectivityCurve {
    pub fn new(z: u32, points: Vec<CurvePoint>) -> Self {
        Self { z, points }
    }
}

/// Runs a block of independent realizations at grid point `(z, σ_i)`.
pub fn run_point_block(
    plan: &ExperimentPlan,
    z: u32,
    sigma_index: usize,
    realizations: Range<u64>,
) -> Result<CurveAccumulator> {
    plan.validate()?;
    let sigma = *plan
        .sigma_grid
        .get(sigma_index)
        .ok_or_else(|| Error::InvalidPlan(format!("sigma index {sigma_index} out of range")))?;
    let lattice = plan.lattice(z)?;
    let point_seed = sweep_point_seed(plan.seed, z, sigma_index);
    let samples: Vec<(usize, usize)> = realizations
        .into_par_iter()
        .map(|r| {
            let config = prepare_realization(&lattice, sigma, point_seed, r, plan.warmup_steps)?;
            let report = components_unionfind(&config);
            Ok((report.largest(), report.n0()))
        })
        .collect::<Result<_>>()?;
    let mut acc = CurveAccumulator::new(plan.side, z, sigma);
    for (largest, n0) in samples {
        acc.push(largest, n0);
    }
    Ok(acc)
}

fn run_point_trajectory(
    plan: &ExperimentPlan,
    z: u32,
    sigma_index: usize,
) -> Result<CurveAccumulator> {
    let sigma = plan.sigma_grid[sigma_index];
    let lattice = plan.lattice(z)?;
    let point_seed = sweep_point_seed(plan.seed, z, sigma_index);
    let mut config = prepare_realization(&lattice, sigma, point_seed, 0, 0)?;
    let mut motion = RngStream::new(
        point_seed,
        StreamId {
            realization: 0,
            purpose: Purpose::Motion,
        },
    );
    config.advance(plan.warmup_steps, &mut motion);
    let mut acc = CurveAccumulator::new(plan.side, z, sigma);
    for i in 0..plan.realizations {
        if i > 0 {
            config.advance(plan.trajectory_stride, &mut motion);
        }
        let report = components_unionfind(&config);
        acc.push(report.largest(), report.n0());
    }
    Ok(acc)
}

/// `η(σ)` with standard errors for every `z` in the plan.
pub fn run_connectivity_sweep(plan: &ExperimentPlan) -> Result<Vec<ConnectivityCurve>> {
    plan.validate()?;
    plan.z_list
        .iter()
        .map(|&z| {
            let points = (0..plan.sigma_grid.len())
                .map(|i| {
                    let acc = match plan.mode {
                        EnsembleMode::Independent => {
                            run_point_block(plan, z, i, 0..plan.realizations as u64)?
                        }
                        EnsembleMode::Trajectory => run_point_trajectory(plan, z, i)?,
                    };
                    Ok(acc.point())
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ConnectivityCurve::new(z, points))
        })
        .collect()
}

/// Metrics pooled over realizations whose connectivity sample reaches
/// `eta_threshold`. Rejected realizations are replaced by fresh ones, up to
/// 100 attempts per requested realization.
pub fn run_metrics(
    plan: &ExperimentPlan,
    sigma: f64,
    z: u32,
    eta_threshold: f64,
    epsilon: f64,
) -> Result<MetricsTable> {
    let mut probe = plan.clone();
    probe.z_list = vec![z];
    probe.sigma_grid = vec![sigma];
    probe.validate()?;
    if !(0.0..=1.0).contains(&eta_threshold) {
        return Err(Error::InvalidParameter(format!(
            "eta threshold {eta_threshold} outside [0, 1]"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} outside (0, 1)"
        )));
    }
    let lattice = plan.lattice(z)?;
    let point_seed = metrics_point_seed(plan.seed, z, sigma);
    let requested = plan.realizations;
    let cap = 100 * requested as u64;
    let mut table = MetricsTable::new(plan.side, z, sigma, epsilon, eta_threshold);
    let mut next = 0u64;
    while table.realizations() < requested as u64 && next < cap {
        let batch = next..(next + requested as u64).min(cap);
        let results: Vec<Option<MetricsAccumulator>> = batch
            .clone()
            .into_par_iter()
            .map(|r| {
                let config =
                    prepare_realization(&lattice, sigma, point_seed, r, plan.warmup_steps)?;
                if components_unionfind(&config).connectivity() < eta_threshold {
                    return Ok(None);
                }
                let mut acc = MetricsAccumulator::new(z);
                acc.observe(&config);
                Ok(Some(acc))
            })
            .collect::<Result<_>>()?;
        for (r, res) in batch.zip(results) {
            if table.realizations() == requested as u64 {
                break;
            }
            table.attempts = r + 1;
            if let Some(acc) = res {
                table.totals.absorb(&acc)?;
            }
        }
        next = table.attempts;
    }
    if table.realizations() < requested as u64 {
        return Err(Error::Infeasible {
            accepted: table.realizations() as usize,
            attempts: table.attempts as usize,
            requested,
            rate: table.acceptance_rate(),
        });
    }
    Ok(table)
}

/// Exact pooling of partial results.
pub trait Merge: Sized {
    fn merge(&self, other: &Self) -> Result<Self>;
}

impl Merge for MetricsTable {
    fn merge(&self, other: &Self) -> Result<Self> {
        self.merged(other)
    }
}

impl Merge for CurveAccumulator {
    fn merge(&self, other: &Self) -> Result<Self> {
        if (self.z, self.side, self.sigma_bits) != (other.z, other.side, other.sigma_bits) {
            return Err(Error::MergeConflict(format!(
                "curve points (L={}, z={}, sigma={}) and (L={}, z={}, sigma={})",
                self.side,
                self.z,
                self.sigma(),
                other.side,
                other.z,
                other.sigma()
            )));
        }
        let mut out = self.clone();
        out.count += other.count;
        out.sum += other.sum;
        out.sum_sq += other.sum_sq;
        Ok(out)
    }
}

/// Folds a non-empty list of partials.
pub fn merge<T: Merge + Clone>(partials: &[T]) -> Result<T> {
    let (first, rest) = partials
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("nothing to merge".into()))?;
    rest.iter().try_fold(first.clone(), |acc, p| acc.merge(p))
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Eight log-spaced occupancies covering mean degree 1 to 30 for range `z`,
/// clamped to the unit interval.
pub fn coarse_grid(z: u32) -> Vec<f64> {
    let s = 3.0 * z as f64 * (z as f64 + 1.0);
    let hi = (30.0 / s).min(1.0);
    log_spaced(1.0 / s, hi, 8)
}

/// Bracket of the transition on a coarse curve: from the last point with
/// `η < low` (or the first point) to the first later point with `η > high`
/// (or the last point).
pub fn transition_bracket(curve: &ConnectivityCurve, low: f64, high: f64) -> Option<(f64, f64)> {
    let pts = &curve.points;
    if pts.len() < 2 {
        return None;
    }
    let start = pts.iter().rposition(|p| p.eta_mean < low).unwrap_or(0);
    let end = pts[start..]
        .iter()
        .position(|p| p.eta_mean > high)
        .map_or(pts.len() - 1, |i| i + start);
    (end > start).then(|| (pts[start].sigma, pts[end].sigma))
}

/// Log-spaced grid with `per_decade` points per decade over `[lo, hi]`.
pub fn refined_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let count = ((decades * per_decade as f64).ceil() as usize + 1).max(2);
    log_spaced(lo, hi, count)
}

/// Locates the transition for each range with an 8-point coarse scan, then
/// returns a grid of 40 points per decade across the bracket.
pub fn adaptive_grid(plan: &ExperimentPlan, z: u32) -> Result<Vec<f64>> {
    let mut coarse = plan.clone();
    coarse.z_list = vec![z];
    coarse.sigma_grid = coarse_grid(z);
    coarse.realizations = plan.realizations.min(20);
    let curve = run_connectivity_sweep(&coarse)?.remove(0);
    let (lo, hi) = transition_bracket(&curve, 0.1, 0.9995).ok_or_else(|| {
        Error::InsufficientSpan(format!(
            "coarse scan for z={z} did not bracket the transition"
        ))
    })?;
    Ok(refined_grid(lo, hi, 40))
}

/// Curve CSV with columns `z,sigma,eta_mean,eta_stderr,realizations`, plus
/// an `eta_model` column when `model` is given.
pub fn curves_to_csv(
    curves: &[ConnectivityCurve],
    preamble: &[String],
    model: Option<&dyn Fn(u32, f64) -> Option<f64>>,
) -> String {
    let mut out = String::new();
    for line in preamble {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("z,sigma,eta_mean,eta_stderr,realizations");
    if model.is_some() {
        out.push_str(",eta_model");
    }
    out.push('\n');
    for c in curves {
        for p in &c.points {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                c.z, p.sigma, p.eta_mean, p.eta_stderr, p.realizations
            );
            if let Some(m) = model {
                out.push(',');
                if let Some(v) = m(c.z, p.sigma) {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
    }
    out
}
