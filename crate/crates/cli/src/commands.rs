//! The `sweep`, `collapse`, `metrics` and `replay` commands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context as _, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use manet_core::analysis::{
    check_knn_linearity, clustering_plateau, curve_crossing, estimate_sigma_c, find_beta,
    fit_logistic_window, proportionality, reduced_range, CollapseResult, FitWindow, LogisticFit,
};
use manet_core::ensemble::{
    adaptive_grid, curves_to_csv, log_spaced, run_connectivity_sweep, run_metrics,
    ConnectivityCurve,
};
use manet_core::netmetrics::{cutoff_degree, DegreeDistribution, MetricsTable};

use crate::config::{Settings, SigmaGrid, Targets};
use crate::csvio::{header_value, parse_curves};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Sweep,
    Collapse,
    Metrics,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Collapse => "collapse",
            Command::Metrics => "metrics",
        }
    }
}

/// Settings, destination and thread count for one invocation.
#[derive(Debug, Clone)]
pub struct Run {
    pub settings: Settings,
    pub output_dir: PathBuf,
    pub threads: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: Command,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_seconds: f64,
    pub outputs: Vec<String>,
    pub settings: Settings,
}

impl Run {
    fn preamble(&self, command: Command) -> Vec<String> {
        vec![format!(
            "manet {VERSION} {} config_hash={} seed={}",
            command.name(),
            self.settings.hash(),
            self.settings.seed
        )]
    }

    fn path(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    fn write(&self, name: &str, contents: &str, outputs: &mut Vec<String>) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        outputs.push(name.to_string());
        Ok(())
    }

    fn window(&self) -> FitWindow {
        FitWindow {
            eta_min: self.settings.fit_eta_min,
            eta_max: self.settings.fit_eta_max,
        }
    }
}

/// Runs a command on a dedicated thread pool and records a manifest.
pub fn execute(run: &Run, command: Command) -> Result<Vec<String>> {
    fs::create_dir_all(&run.output_dir)
        .with_context(|| format!("creating {}", run.output_dir.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.threads)
        .build()
        .context("building thread pool")?;
    let start = Instant::now();
    let mut outputs = pool.install(|| match command {
        Command::Sweep => sweep(run).map(|s| s.outputs),
        Command::Collapse => collapse(run).map(|c| c.outputs),
        Command::Metrics => metrics(run).map(|m| m.outputs),
    })?;
    let manifest = Manifest {
        command,
        version: VERSION.into(),
        config_hash: run.settings.hash(),
        seed: run.settings.seed,
        threads: run.threads,
        wall_seconds: start.elapsed().as_secs_f64(),
        outputs: outputs.clone(),
        settings: run.settings.clone(),
    };
    run.write(
        "manifest.json",
        &serde_json::to_string_pretty(&manifest)?,
        &mut outputs,
    )?;
    Ok(outputs)
}

/// Re-executes the command recorded in a manifest.
pub fn replay(manifest: &Path, output_dir: Option<PathBuf>, threads: usize) -> Result<Vec<String>> {
    let text =
        fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let m: Manifest =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", manifest.display()))?;
    m.settings
        .validate()
        .map_err(|inv| anyhow!("{}: {}: {}", manifest.display(), inv.key, inv.message))?;
    let output_dir = output_dir
        .or_else(|| manifest.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    let run = Run {
        settings: m.settings,
        output_dir,
        threads,
    };
    execute(&run, m.command)
}

pub struct SweepOutcome {
    pub curves: Vec<ConnectivityCurve>,
    pub fits: Vec<(u32, Result<LogisticFit, String>)>,
    pub outputs: Vec<String>,
}

/// Measures `η(σ)` for every range, fits the logistic law and writes
/// `curves.csv`, `fit_report.json` and a plotting script.
pub fn sweep(run: &Run) -> Result<SweepOutcome> {
    let s = &run.settings;
    let base = s.plan();
    let mut curves = Vec::new();
    for &z in &s.z_list {
        let mut plan = base.clone();
        plan.z_list = vec![z];
        if let SigmaGrid::Named(_) = s.sigma_grid {
            plan.sigma_grid = adaptive_grid(&plan, z)?;
        }
        curves.extend(run_connectivity_sweep(&plan)?);
    }
    let fits: Vec<(u32, Result<LogisticFit, String>)> = curves
        .iter()
        .map(|c| {
            (
                c.z,
                fit_logistic_window(c, run.window()).map_err(|e| e.to_string()),
            )
        })
        .collect();
    let model = |z: u32, sigma: f64| {
        fits.iter()
            .find(|(fz, _)| *fz == z)
            .and_then(|(_, f)| f.as_ref().ok())
            .map(|f| f.predict(sigma))
    };
    let mut outputs = Vec::new();
    let csv = curves_to_csv(&curves, &run.preamble(Command::Sweep), Some(&model));
    run.write("curves.csv", &csv, &mut outputs)?;
    let report = fit_report(run, &curves, &fits);
    run.write(
        "fit_report.json",
        &serde_json::to_string_pretty(&report)?,
        &mut outputs,
    )?;
    run.write("plot_curves.py", PLOT_CURVES, &mut outputs)?;
    Ok(SweepOutcome {
        curves,
        fits,
        outputs,
    })
}

fn fit_report(
    run: &Run,
    curves: &[ConnectivityCurve],
    fits: &[(u32, Result<LogisticFit, String>)],
) -> Value {
    let s = &run.settings;
    let ranges: Vec<Value> = curves
        .iter()
        .zip(fits)
        .map(|(c, (z, fit))| {
            let crossing = curve_crossing(c, s.eta_threshold);
            match fit {
                Ok(f) => {
                    let sc = estimate_sigma_c(f);
                    json!({
                        "z": z,
                        "eta0": f.eta0,
                        "g": f.g,
                        "rss": f.rss,
                        "weighted": f.weighted,
                        "points": f.points,
                        "reduced_chi_square": f.reduced_chi_square(),
                        "sigma_c_mid": sc.midpoint,
                        "sigma_c_99": sc.sigma_99,
                        "sigma_threshold_crossing": crossing,
                    })
                }
                Err(e) => json!({ "z": z, "error": e, "sigma_threshold_crossing": crossing }),
            }
        })
        .collect();
    let pairs: Vec<(f64, f64)> = fits
        .iter()
        .filter_map(|(z, f)| f.as_ref().ok().map(|f| (*z as f64, f.g)))
        .collect();
    let g_vs_z = if pairs.len() >= 2 {
        serde_json::to_value(proportionality(&pairs)).unwrap_or(Value::Null)
    } else {
        Value::Null
    };
    let collapse = match find_beta(curves, s.beta_search()) {
        Ok(c) => json!({ "beta": c.beta, "residual": c.residual }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    json!({
        "config_hash": s.hash(),
        "seed": s.seed,
        "fit_window": [s.fit_eta_min, s.fit_eta_max],
        "eta_threshold": s.eta_threshold,
        "ranges": ranges,
        "g_vs_z": g_vs_z,
        "collapse": collapse,
    })
}

/// Curves from `curves.csv` in the output directory when it was produced
/// by the same settings, otherwise from a fresh sweep.
fn curves_for(run: &Run, outputs: &mut Vec<String>) -> Result<Vec<ConnectivityCurve>> {
    let path = run.path("curves.csv");
    if let Ok(text) = fs::read_to_string(&path) {
        if header_value(&text, "config_hash") == Some(run.settings.hash().as_str()) {
            return parse_curves(&text, &path.display().to_string());
        }
    }
    let out = sweep(run)?;
    outputs.extend(out.outputs);
    Ok(out.curves)
}

pub struct CollapseOutcome {
    pub result: CollapseResult,
    pub outputs: Vec<String>,
}

/// Finds the exponent collapsing all curves onto the reference range and
/// writes the rescaled curves and the objective profile.
pub fn collapse(run: &Run) -> Result<CollapseOutcome> {
    let mut outputs = Vec::new();
    let curves = curves_for(run, &mut outputs)?;
    let result = find_beta(&curves, run.settings.beta_search())?;
    let preamble = run.preamble(Command::Collapse);
    let mut rescaled = header(&preamble);
    writeln_str(
        &mut rescaled,
        &format!(
            "# beta={} residual={} reference_z={}",
            result.beta, result.residual, result.reference_z
        ),
    );
    rescaled.push_str("z,R,sigma,x,eta_mean,eta_stderr\n");
    for c in &curves {
        let r = reduced_range(c.z);
        for p in &c.points {
            let x = result.beta * r.ln() + p.sigma.ln();
            writeln_str(
                &mut rescaled,
                &format!(
                    "{},{},{},{},{},{}",
                    c.z, r, p.sigma, x, p.eta_mean, p.eta_stderr
                ),
            );
        }
    }
    run.write("collapse.csv", &rescaled, &mut outputs)?;
    let mut profile = header(&preamble);
    profile.push_str("beta,objective\n");
    for (b, v) in &result.profile {
        let v = v.map(|v| v.to_string()).unwrap_or_default();
        writeln_str(&mut profile, &format!("{b},{v}"));
    }
    run.write("collapse_profile.csv", &profile, &mut outputs)?;
    let report = json!({
        "config_hash": run.settings.hash(),
        "seed": run.settings.seed,
        "beta": result.beta,
        "residual": result.residual,
        "reference_z": result.reference_z,
        "search": [run.settings.beta_min, run.settings.beta_max, run.settings.beta_step],
    });
    run.write(
        "beta_report.json",
        &serde_json::to_string_pretty(&report)?,
        &mut outputs,
    )?;
    run.write("plot_collapse.py", PLOT_COLLAPSE, &mut outputs)?;
    Ok(CollapseOutcome { result, outputs })
}

fn header(preamble: &[String]) -> String {
    preamble.iter().map(|l| format!("# {l}\n")).collect()
}

fn writeln_str(out: &mut String, line: &str) {
    out.push_str(line);
    out.push('\n');
}

/// Smallest swept occupancy at or above the fitted midpoint whose mean
/// connectivity reaches `threshold`.
pub fn operating_point(
    curve: &ConnectivityCurve,
    fit: Option<&LogisticFit>,
    threshold: f64,
) -> Option<f64> {
    let floor = fit.map_or(0.0, |f| estimate_sigma_c(f).midpoint);
    curve
        .points
        .iter()
        .find(|p| p.sigma >= floor && p.eta_mean >= threshold)
        .map(|p| p.sigma)
}

pub struct MetricsOutcome {
    pub tables: Vec<MetricsTable>,
    pub kc_sweep: Vec<MetricsTable>,
    pub outputs: Vec<String>,
}

fn metrics_file(z: u32, sigma: f64) -> String {
    format!("metrics_z{z}_sigma{sigma:.6}.csv")
}

/// Degree distribution, clustering and `k_nn` at each operating point, plus
/// the cutoff-degree sweep for one range.
pub fn metrics(run: &Run) -> Result<MetricsOutcome> {
    let s = &run.settings;
    let plan = s.plan();
    let mut outputs = Vec::new();
    let (targets, auto_points): (Vec<(u32, f64)>, Vec<(u32, f64)>) = match &s.metrics_targets {
        Targets::Explicit(ts) => (ts.iter().map(|t| (t.z, t.sigma)).collect(), Vec::new()),
        Targets::Named(_) => {
            let curves = curves_for(run, &mut outputs)?;
            let mut pts = Vec::new();
            for c in &curves {
                let fit = fit_logistic_window(c, run.window()).ok();
                let sigma = operating_point(c, fit.as_ref(), s.eta_threshold).ok_or_else(|| {
                    anyhow!(
                        "z={}: no swept occupancy reaches mean connectivity {}",
                        c.z,
                        s.eta_threshold
                    )
                })?;
                pts.push((c.z, sigma));
            }
            (pts.clone(), pts)
        }
    };
    let preamble = run.preamble(Command::Metrics);
    let mut tables = Vec::new();
    for &(z, sigma) in &targets {
        let table = run_metrics(&plan, sigma, z, s.eta_threshold, s.epsilon)?;
        run.write(
            &metrics_file(z, sigma),
            &table.to_csv(&preamble),
            &mut outputs,
        )?;
        tables.push(table);
    }

    let kc_sigmas: Vec<f64> = match (
        &s.kc_sweep_sigma,
        auto_points.iter().find(|(z, _)| *z == s.kc_sweep_z),
    ) {
        (Some(list), _) => list.clone(),
        (None, Some(&(_, start))) if start < 1.0 => log_spaced(start, (2.0 * start).min(1.0), 6),
        (None, Some(&(_, start))) => vec![start],
        (None, None) => Vec::new(),
    };
    let mut kc_sweep = Vec::new();
    for &sigma in &kc_sigmas {
        match tables
            .iter()
            .find(|t| t.z == s.kc_sweep_z && t.sigma.to_bits() == sigma.to_bits())
        {
            Some(t) => kc_sweep.push(t.clone()),
            None => kc_sweep.push(run_metrics(
                &plan,
                sigma,
                s.kc_sweep_z,
                s.eta_threshold,
                s.epsilon,
            )?),
        }
    }
    if !kc_sweep.is_empty() {
        let mut csv = header(&preamble);
        csv.push_str("z,sigma,mean_degree,k_c,acceptance_rate,realizations\n");
        for t in &kc_sweep {
            writeln_str(
                &mut csv,
                &format!(
                    "{},{},{},{},{},{}",
                    t.z,
                    t.sigma,
                    t.mean_degree(),
                    t.cutoff(),
                    t.acceptance_rate(),
                    t.realizations()
                ),
            );
        }
        run.write("kc_sweep.csv", &csv, &mut outputs)?;
    }

    let report = metrics_report(run, &tables, &kc_sweep);
    run.write(
        "metrics_report.json",
        &serde_json::to_string_pretty(&report)?,
        &mut outputs,
    )?;
    run.write("plot_metrics.py", PLOT_METRICS, &mut outputs)?;
    Ok(MetricsOutcome {
        tables,
        kc_sweep,
        outputs,
    })
}

/// Node-weighted pooling of degree distributions from several tables.
pub fn pooled_distribution(tables: &[MetricsTable]) -> DegreeDistribution {
    let len = tables
        .iter()
        .map(|t| t.totals.degree_counts().len())
        .max()
        .unwrap_or(0);
    let mut counts = vec![0u64; len];
    for t in tables {
        for (k, c) in t.totals.degree_counts().iter().enumerate() {
            counts[k] += c;
        }
    }
    DegreeDistribution::from_counts(&counts)
}

fn metrics_report(run: &Run, tables: &[MetricsTable], kc_sweep: &[MetricsTable]) -> Value {
    let s = &run.settings;
    let points: Vec<Value> = tables
        .iter()
        .map(|t| {
            let stencil = 3.0 * t.z as f64 * (t.z as f64 + 1.0);
            let kc = t.cutoff();
            let plateau = clustering_plateau(t, 4, kc)
                .map(|p| serde_json::to_value(p).unwrap_or(Value::Null))
                .unwrap_or_else(|e| json!({ "error": e.to_string() }));
            let knn = check_knn_linearity(t)
                .map(|k| serde_json::to_value(k).unwrap_or(Value::Null))
                .unwrap_or_else(|e| json!({ "error": e.to_string() }));
            json!({
                "z": t.z,
                "sigma": t.sigma,
                "file": metrics_file(t.z, t.sigma),
                "realizations": t.realizations(),
                "attempts": t.attempts,
                "acceptance_rate": t.acceptance_rate(),
                "mean_degree": t.mean_degree(),
                "mean_degree_uniform": stencil * t.sigma,
                "k_c": kc,
                "clustering_plateau": plateau,
                "knn_linearity": knn,
            })
        })
        .collect();
    let pooled = if tables.is_empty() {
        Value::Null
    } else {
        let d = pooled_distribution(tables);
        json!({ "mean_degree": d.mean(), "k_c": cutoff_degree(&d, s.epsilon) })
    };
    json!({
        "config_hash": s.hash(),
        "seed": s.seed,
        "epsilon": s.epsilon,
        "eta_threshold": s.eta_threshold,
        "points": points,
        "pooled": pooled,
        "kc_sweep": kc_sweep.iter().map(|t| json!({
            "z": t.z, "sigma": t.sigma, "mean_degree": t.mean_degree(), "k_c": t.cutoff(),
        })).collect::<Vec<_>>(),
    })
}

const PLOT_CURVES: &str = r##"import csv, sys
from collections import defaultdict
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "curves.csv"
rows = [r for r in csv.reader(l for l in open(path) if not l.startswith("#"))]
head, body = rows[0], rows[1:]
col = {name: i for i, name in enumerate(head)}
data = defaultdict(list)
for r in body:
    data[int(r[col["z"]])].append(r)
fig, ax = plt.subplots()
for z, rs in sorted(data.items()):
    s = [float(r[col["sigma"]]) for r in rs]
    e = [float(r[col["eta_mean"]]) for r in rs]
    err = [float(r[col["eta_stderr"]]) for r in rs]
    line = ax.errorbar(s, e, yerr=err, fmt="o", ms=3, label=f"z={z}")
    if "eta_model" in col:
        m = [(a, float(r[col["eta_model"]])) for a, r in zip(s, rs) if r[col["eta_model"]]]
        if m:
            ax.plot(*zip(*m), "-", color=line[0].get_color())
ax.set_xscale("log")
ax.set_xlabel("sigma")
ax.set_ylabel("eta")
ax.legend()
fig.savefig("curves.png", dpi=150)
"##;

const PLOT_COLLAPSE: &str = r##"import csv, sys
from collections import defaultdict
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "collapse.csv"
rows = [r for r in csv.reader(l for l in open(path) if not l.startswith("#"))]
head, body = rows[0], rows[1:]
col = {name: i for i, name in enumerate(head)}
data = defaultdict(list)
for r in body:
    data[int(r[col["z"]])].append((float(r[col["x"]]), float(r[col["eta_mean"]])))
fig, ax = plt.subplots()
for z, pts in sorted(data.items()):
    ax.plot(*zip(*pts), "o-", ms=3, label=f"z={z}")
ax.set_xlabel("ln(R^beta sigma)")
ax.set_ylabel("eta")
ax.legend()
fig.savefig("collapse.png", dpi=150)
"##;

const PLOT_METRICS: &str = r##"import csv, glob
import matplotlib.pyplot as plt

fig, (a, b, c) = plt.subplots(1, 3, figsize=(13, 4))
for path in sorted(glob.glob("metrics_z*_sigma*.csv")):
    rows = [r for r in csv.reader(l for l in open(path) if not l.startswith("#"))][1:]
    label = path[len("metrics_"):-len(".csv")]
    k = [int(r[0]) for r in rows]
    a.semilogy([x for x, r in zip(k, rows) if float(r[1]) > 0], [float(r[1]) for r in rows if float(r[1]) > 0], "o-", ms=3, label=label)
    b.plot([x for x, r in zip(k, rows) if r[2]], [float(r[2]) for r in rows if r[2]], "o", ms=3, label=label)
    c.plot([x for x, r in zip(k, rows) if r[3]], [float(r[3]) for r in rows if r[3]], "o", ms=3, label=label)
a.set_xlabel("k"); a.set_ylabel("P(k)")
b.set_xlabel("k"); b.set_ylabel("C(k)")
c.set_xlabel("k"); c.set_ylabel("k_nn(k)")
a.legend(fontsize=7)
fig.tight_layout()
fig.savefig("metrics.png", dpi=150)
"##;
