//! Curve analysis: logistic fits of `η(σ)`, critical occupancies, the
//! scaling collapse in `R = z − 1`, and the `k_nn(k)` linearity check.

use serde::{Deserialize, Serialize};

use crate::ensemble::ConnectivityCurve;
use crate::error::{Error, Result};
use crate::netmetrics::MetricsTable;

/// `η(σ) = η0 / (η0 + (1 − η0)·exp(−g·σ))`.
pub fn logistic(eta0: f64, g: f64, sigma: f64) -> f64 {
    eta0 / (eta0 + (1.0 - eta0) * (-g * sigma).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub z: u32,
    pub eta0: f64,
    pub g: f64,
    /// Residual sum of squares, weighted by `1/stderr²` when `weighted`.
    pub rss: f64,
    pub weighted: bool,
    pub points: usize,
    /// Norm of the closed-form gradient of the objective at the optimum,
    /// in `(η0, g)` coordinates.
    pub gradient_norm: f64,
}

impl LogisticFit {
    pub fn predict(&self, sigma: f64) -> f64 {
        logistic(self.eta0, self.g, sigma)
    }

    /// `rss / (points − 2)`; the reduced chi-square when the fit is weighted.
    pub fn reduced_chi_square(&self) -> f64 {
        if self.points <= 2 {
            return f64::NAN;
        }
        self.rss / (self.points - 2) as f64
    }
}

/// Selection of curve points entering a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub eta_min: f64,
    pub eta_max: f64,
}

impl FitWindow {
    pub const ALL: FitWindow = FitWindow {
        eta_min: f64::NEG_INFINITY,
        eta_max: f64::INFINITY,
    };

    /// Skips the low-η tail, where finite lattices deviate from the
    /// homogeneous-mixing law, and the saturated top.
    pub const TRANSITION: FitWindow = FitWindow {
        eta_min: 0.1,
        eta_max: 0.95,
    };

    fn contains(&self, eta: f64) -> bool {
        eta >= self.eta_min && eta <= self.eta_max
    }
}

struct FitData {
    sigma: Vec<f64>,
    eta: Vec<f64>,
    weight: Vec<f64>,
}

impl FitData {
    fn objective(&self, eta0: f64, g: f64) -> f64 {
        self.sigma
            .iter()
            .zip(&self.eta)
            .zip(&self.weight)
            .map(|((&s, &e), &w)| {
                let d = logistic(eta0, g, s) - e;
                w * d * d
            })
            .sum()
    }

    fn gradient(&self, eta0: f64, g: f64) -> [f64; 2] {
        let mut grad = [0.0; 2];
        for ((&s, &e), &w) in self.sigma.iter().zip(&self.eta).zip(&self.weight) {
            let x = (-g * s).exp();
            let den = eta0 + (1.0 - eta0) * x;
            let m = eta0 / den;
            // ∂m/∂η0 = x / den², ∂m/∂g = η0 (1−η0) s x / den²
            let d_eta0 = x / (den * den);
            let d_g = eta0 * (1.0 - eta0) * s * x / (den * den);
            let r = 2.0 * w * (m - e);
            grad[0] += r * d_eta0;
            grad[1] += r * d_g;
        }
        grad
    }
}

fn expit(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Nelder–Mead minimisation. Returns the best vertex, its value, the
/// iteration count and whether the simplex collapsed below `tol`.
fn nelder_mead<F: Fn(&[f64; 2]) -> f64>(
    f: &F,
    start: [f64; 2],
    scale: [f64; 2],
    tol: f64,
    max_iter: usize,
) -> ([f64; 2], f64, usize, bool) {
    let mut simplex = [
        start,
        [start[0] + scale[0], start[1]],
        [start[0], start[1] + scale[1]],
    ];
    let mut values = simplex.map(|p| f(&p));
    for iter in 0..max_iter {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = idx.map(|i| simplex[i]);
        values = idx.map(|i| values[i]);

        let spread = (values[2] - values[0]).abs();
        let size = (1..3)
            .map(|i| {
                (simplex[i][0] - simplex[0][0])
                    .abs()
                    .max((simplex[i][1] - simplex[0][1]).abs())
            })
            .fold(0.0, f64::max);
        if size < tol && spread <= tol * (values[0].abs() + tol) {
            return (simplex[0], values[0], iter, true);
        }

        let centroid = [
            (simplex[0][0] + simplex[1][0]) / 2.0,
            (simplex[0][1] + simplex[1][1]) / 2.0,
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ]
        };
        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = if fr < values[2] {
                along(-0.5)
            } else {
                along(0.5)
            };
            let fc = f(&contracted);
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        simplex[0][0] + 0.5 * (simplex[i][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[i][1] - simplex[0][1]),
                    ];
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..3)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    (simplex[best], values[best], max_iter, false)
}

/// Least-squares fit of the logistic law to a whole curve.
pub fn fit_logistic(curve: &ConnectivityCurve) -> Result<LogisticFit> {
    fit_logistic_window(curve, FitWindow::ALL)
}

/// Least-squares fit of the logistic law to the curve points whose `η`
/// lies inside `window`.
///
/// Points are weighted by `1/stderr²` unless some stderr is zero, in which
/// case the fit is unweighted. The search starts from the best node of a
/// coarse `(η0, g)` grid and is refined by restarted Nelder–Mead in
/// `(logit η0, ln g)`.
pub fn fit_logistic_window(curve: &ConnectivityCurve, window: FitWindow) -> Result<LogisticFit> {
    let pts: Vec<_> = curve
        .points
        .iter()
        .filter(|p| window.contains(p.eta_mean))
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientSpan(format!(
            "z={}: {} points in the fit window, need at least 5",
            curve.z,
            pts.len()
        )));
    }
    let lo = pts.iter().map(|p| p.eta_mean).fold(f64::INFINITY, f64::min);
    let hi = pts
        .iter()
        .map(|p| p.eta_mean)
        .fold(f64::NEG_INFINITY, f64::max);
    if lo >= 0.2 || hi <= 0.8 {
        return Err(Error::InsufficientSpan(format!(
            "z={}: eta spans [{lo}, {hi}], need below 0.2 and above 0.8",
            curve.z
        )));
    }
    let weighted = pts.iter().all(|p| p.eta_stderr > 0.0);
    let data = FitData {
        sigma: pts.iter().map(|p| p.sigma).collect(),
        eta: pts.iter().map(|p| p.eta_mean).collect(),
        weight: pts
            .iter()
            .map(|p| {
                if weighted {
                    1.0 / (p.eta_stderr * p.eta_stderr)
                } else {
                    1.0
                }
            })
            .collect(),
    };
    let f = |x: &[f64; 2]| {
        let v = data.objective(expit(x[0]), x[1].exp());
        if v.is_finite() {
            v
        } else {
            f64::MAX
        }
    };

    let mut best = ([0.0, 0.0], f64::INFINITY);
    for i in 0..=40 {
        let u = -25.0 + 25.0 * i as f64 / 40.0;
        for j in 0..=48 {
            let v = (0.01f64).ln() + (1e6f64 / 0.01).ln() * j as f64 / 48.0;
            let val = f(&[u, v]);
            if val < best.1 {
                best = ([u, v], val);
            }
        }
    }

    let mut iterations = 0;
    let mut converged = false;
    let mut scale = [1.0, 0.5];
    for _ in 0..20 {
        let (x, val, it, ok) = nelder_mead(&f, best.0, scale, 1e-12, 4000);
        iterations += it;
        let improved = val < best.1 * (1.0 - 1e-14) || val < best.1 - 1e-300;
        if val <= best.1 {
            best = (x, val);
        }
        if ok && !improved {
            converged = true;
            break;
        }
        scale = [0.1, 0.05];
    }
    if !converged {
        return Err(Error::FitFailure {
            iterations,
            rss: best.1,
            reason: format!("z={}: simplex did not settle", curve.z),
        });
    }
    let eta0 = expit(best.0[0]);
    let g = best.0[1].exp();
    let grad = data.gradient(eta0, g);
    Ok(LogisticFit {
        z: curve.z,
        eta0,
        g,
        rss: data.objective(eta0, g),
        weighted,
        points: pts.len(),
        gradient_norm: grad[0].hypot(grad[1]),
    })
}

/// Critical occupancy estimates from a logistic fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaC {
    /// Inflection point, where the fitted `η = 1/2`.
    pub midpoint: f64,
    /// Where the fitted `η = 0.99`.
    pub sigma_99: f64,
}

pub fn estimate_sigma_c(fit: &LogisticFit) -> SigmaC {
    let odds = (1.0 - fit.eta0) / fit.eta0;
    SigmaC {
        midpoint: odds.ln() / fit.g,
        sigma_99: (99.0 * odds).ln() / fit.g,
    }
}

/// First occupancy at which the measured curve reaches `level`, linearly
/// interpolated between the bracketing grid points.
pub fn curve_crossing(curve: &ConnectivityCurve, level: f64) -> Option<f64> {
    let pts = &curve.points;
    let i = pts.iter().position(|p| p.eta_mean >= level)?;
    if i == 0 {
        return Some(pts[0].sigma);
    }
    let (a, b) = (pts[i - 1], pts[i]);
    let t = (level - a.eta_mean) / (b.eta_mean - a.eta_mean);
    Some(a.sigma + t * (b.sigma - a.sigma))
}

/// Smallest grid occupancy whose measured `η` reaches `level`.
pub fn first_sigma_reaching(curve: &ConnectivityCurve, level: f64) -> Option<f64> {
    curve
        .points
        .iter()
        .find(|p| p.eta_mean >= level)
        .map(|p| p.sigma)
}

/// Ratios `(dη/dσ) / (η(1 − η))` of a fitted curve, by central differences,
/// at `samples` occupancies where the model `η` lies in `[eta_lo, eta_hi]`.
pub fn mixing_law_ratios(fit: &LogisticFit, eta_lo: f64, eta_hi: f64, samples: usize) -> Vec<f64> {
    let odds = (1.0 - fit.eta0) / fit.eta0;
    // model η = e  ⇔  σ = ln(odds · e/(1−e)) / g
    let at = |e: f64| (odds * e / (1.0 - e)).ln() / fit.g;
    let (s_lo, s_hi) = (at(eta_lo), at(eta_hi));
    let h = (s_hi - s_lo) * 1e-4;
    (0..samples)
        .map(|i| {
            let s = s_lo + (s_hi - s_lo) * i as f64 / (samples.max(2) - 1) as f64;
            let d = (fit.predict(s + h) - fit.predict(s - h)) / (2.0 * h);
            let e = fit.predict(s);
            d / (e * (1.0 - e))
        })
        .collect()
}

/// The same ratio on the raw curve, by finite differences between adjacent
/// points whose midpoint `η` lies in `[eta_lo, eta_hi]`.
pub fn empirical_mixing_ratios(curve: &ConnectivityCurve, eta_lo: f64, eta_hi: f64) -> Vec<f64> {
    curve
        .points
        .windows(2)
        .filter_map(|w| {
            let e = 0.5 * (w[0].eta_mean + w[1].eta_mean);
            if e < eta_lo || e > eta_hi {
                return None;
            }
            let d = (w[1].eta_mean - w[0].eta_mean) / (w[1].sigma - w[0].sigma);
            Some(d / (e * (1.0 - e)))
        })
        .collect()
}

/// `(max − min) / mean` of a set of positive values.
pub fn relative_spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (max - min) / mean
}

/// Best fit `g = c·z` through the origin and the largest relative deviation
/// from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportionality {
    pub coefficient: f64,
    pub max_relative_deviation: f64,
}

pub fn proportionality(pairs: &[(f64, f64)]) -> Proportionality {
    let sxy: f64 = pairs.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = pairs.iter().map(|(x, _)| x * x).sum();
    let c = sxy / sxx;
    let dev = pairs
        .iter()
        .map(|(x, y)| ((y - c * x) / (c * x)).abs())
        .fold(0.0, f64::max);
    Proportionality {
        coefficient: c,
        max_relative_deviation: dev,
    }
}

/// Reduced transmission range `R = z − 1`.
pub fn reduced_range(z: u32) -> f64 {
    z as f64 - 1.0
}

pub const REFERENCE_Z: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub beta: f64,
    pub residual: f64,
    pub reference_z: u32,
    /// Objective on the coarse scan grid; `None` where curves do not overlap.
    pub profile: Vec<(f64, Option<f64>)>,
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v < x);
    if i == 0 {
        return ys[0];
    }
    if i == xs.len() {
        return ys[xs.len() - 1];
    }
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

fn split_reference(
    curves: &[ConnectivityCurve],
) -> Result<(&ConnectivityCurve, Vec<&ConnectivityCurve>)> {
    let ref_pos = curves
        .iter()
        .position(|c| c.z == REFERENCE_Z)
        .ok_or_else(|| {
            Error::InsufficientData(format!("no reference curve with z={REFERENCE_Z}"))
        })?;
    let others = curves
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != ref_pos)
        .map(|(_, c)| c)
        .collect();
    Ok((&curves[ref_pos], others))
}

/// Mean squared `η` mismatch after rescaling abscissae to
/// `x = ln(R^β·σ)`. Each non-reference curve is interpolated (linearly in
/// `x`) at the reference abscissae inside their overlap.
pub fn collapse_objective(beta: f64, curves: &[ConnectivityCurve]) -> Result<f64> {
    let (reference, others) = split_reference(curves)?;
    let rx: Vec<f64> = reference.points.iter().map(|p| p.sigma.ln()).collect();
    let ry: Vec<f64> = reference.points.iter().map(|p| p.eta_mean).collect();
    let mut total = 0.0;
    let mut count = 0usize;
    for c in others {
        let shift = beta * reduced_range(c.z).ln();
        let cx: Vec<f64> = c.points.iter().map(|p| p.sigma.ln() + shift).collect();
        let cy: Vec<f64> = c.points.iter().map(|p| p.eta_mean).collect();
        let (lo, hi) = match (cx.first(), cx.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::NoOverlap { z: c.z, beta }),
        };
        let mut used = 0;
        for (&x, &y) in rx.iter().zip(&ry) {
            if x >= lo && x <= hi {
                let d = interpolate(&cx, &cy, x) - y;
                total += d * d;
                used += 1;
            }
        }
        if used == 0 {
            return Err(Error::NoOverlap { z: c.z, beta });
        }
        count += used;
    }
    Ok(if count == 0 {
        0.0
    } else {
        total / count as f64
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSearch {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub tolerance: f64,
}

impl Default for BetaSearch {
    fn default() -> Self {
        Self {
            lo: -1.5,
            hi: 0.0,
            step: 0.01,
            tolerance: 1e-6,
        }
    }
}

/// Minimises the collapse objective over `β`: a grid scan at `search.step`,
/// then golden-section refinement between the grid neighbours of the best
/// grid point.
pub fn find_beta(curves: &[ConnectivityCurve], search: BetaSearch) -> Result<CollapseResult> {
    let (_, others) = split_reference(curves)?;
    if others.is_empty() {
        return Err(Error::InsufficientData(
            "collapse needs at least one curve besides the reference".into(),
        ));
    }
    let n = ((search.hi - search.lo) / search.step).round() as usize;
    let mut profile = Vec::with_capacity(n + 1);
    let mut first_err = None;
    for i in 0..=n {
        let beta = search.lo + search.step * i as f64;
        match collapse_objective(beta, curves) {
            Ok(v) => profile.push((beta, Some(v))),
            Err(e) => {
                first_err.get_or_insert(e);
                profile.push((beta, None));
            }
        }
    }
    let best = profile
        .iter()
        .enumerate()
        .filter_map(|(i, (_, v))| v.map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let (bi, bv) = match best {
        Some(b) => b,
        None => return Err(first_err.unwrap()),
    };
    let grid_beta = profile[bi].0;
    let f = |b: f64| collapse_objective(b, curves).unwrap_or(f64::INFINITY);
    let (mut a, mut b) = (
        (grid_beta - search.step).max(search.lo),
        (grid_beta + search.step).min(search.hi),
    );
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > search.tolerance {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let (beta, residual) = if fc.min(fd) < bv {
        if fc <= fd {
            (c, fc)
        } else {
            (d, fd)
        }
    } else {
        (grid_beta, bv)
    };
    Ok(CollapseResult {
        beta,
        residual,
        reference_z: REFERENCE_Z,
        profile,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnLinearity {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub degrees: usize,
}

/// Ordinary least squares of `(k, y)` pairs.
pub fn linear_regression(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (intercept, slope, r2)
}

/// Regresses `k_nn(k)` on `k` over `2 ≤ k ≤ k_c`.
pub fn check_knn_linearity(table: &MetricsTable) -> Result<KnnLinearity> {
    knn_linearity_upto(table, table.cutoff())
}

pub fn knn_linearity_upto(table: &MetricsTable, k_max: u32) -> Result<KnnLinearity> {
    let pts: Vec<(f64, f64)> = table
        .knn()
        .into_iter()
        .filter(|&(k, _)| k >= 2 && k <= k_max)
        .map(|(k, v)| (k as f64, v))
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} usable degrees in [2, {k_max}], need at least 4",
            pts.len()
        )));
    }
    let (intercept, slope, r_squared) = linear_regression(&pts);
    Ok(KnnLinearity {
        intercept,
        slope,
        r_squared,
        degrees: pts.len(),
    })
}

/// Node-weighted mean of `C(k)` over a degree range and the largest
/// deviation of any class from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub value: f64,
    pub max_deviation: f64,
    pub classes: usize,
}

pub fn clustering_plateau(table: &MetricsTable, k_lo: u32, k_hi: u32) -> Result<Plateau> {
    let counts = table.totals.degree_counts();
    let cl: Vec<(u32, f64)> = table
        .clustering()
        .into_iter()
        .filter(|&(k, _)| k >= k_lo && k <= k_hi)
        .collect();
    if cl.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no clustering data for k in [{k_lo}, {k_hi}]"
        )));
    }
    let (num, den) = cl.iter().fold((0.0, 0.0), |(n, d), &(k, c)| {
        let w = counts[k as usize] as f64;
        (n + w * c, d + w)
    });
    let value = num / den;
    let max_deviation = cl
        .iter()
        .map(|&(_, c)| (c - value).abs())
        .fold(0.0, f64::max);
    Ok(Plateau {
        value,
        max_deviation,
        classes: cl.len(),
    })
}
