//! Run configuration: built-in defaults, named presets, a TOML file and
//! command-line flags, applied in that order.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context as _, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use manet_core::analysis::BetaSearch;
use manet_core::ensemble::{EnsembleMode, ExperimentPlan};

/// Either explicit occupancies or `"adaptive"` (coarse scan + 40 points per
/// decade across the transition).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaGrid {
    Explicit(Vec<f64>),
    Named(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub z: u32,
    pub sigma: f64,
}

/// Metrics operating points: explicit `(z, σ)` pairs or `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Targets {
    Explicit(Vec<Target>),
    Named(String),
}

/// One configuration layer; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub preset: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub side: Option<u32>,
    pub z_list: Option<Vec<u32>>,
    pub sigma_grid: Option<SigmaGrid>,
    pub realizations: Option<usize>,
    pub warmup_steps: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<EnsembleMode>,
    pub trajectory_stride: Option<usize>,
    pub eta_threshold: Option<f64>,
    pub epsilon: Option<f64>,
    pub fit_eta_min: Option<f64>,
    pub fit_eta_max: Option<f64>,
    pub metrics_targets: Option<Targets>,
    pub kc_sweep_z: Option<u32>,
    pub kc_sweep_sigma: Option<Vec<f64>>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub beta_step: Option<f64>,
}

impl Layer {
    /// Later layers win key by key.
    fn overlay(&mut self, other: &Layer) {
        macro_rules! take {
            ($($f:ident),*) => {
                $(if other.$f.is_some() { self.$f = other.$f.clone(); })*
            };
        }
        take!(
            preset,
            output_dir,
            side,
            z_list,
            sigma_grid,
            realizations,
            warmup_steps,
            seed,
            mode,
            trajectory_stride,
            eta_threshold,
            epsilon,
            fit_eta_min,
            fit_eta_max,
            metrics_targets,
            kc_sweep_z,
            kc_sweep_sigma,
            beta_min,
            beta_max,
            beta_step
        );
    }
}

pub const PRESETS: &[&str] = &[
    "desk",
    "paper-fig2",
    "paper-fig3",
    "paper-fig4",
    "paper-fig5",
    "paper-fig6",
];

/// Parameters pinned by a named preset.
pub fn preset(name: &str) -> Result<Layer> {
    let published = Layer {
        side: Some(200),
        z_list: Some(vec![2, 3, 4, 5, 6]),
        sigma_grid: Some(SigmaGrid::Named("adaptive".into())),
        realizations: Some(300),
        eta_threshold: Some(0.9995),
        epsilon: Some(1e-3),
        metrics_targets: Some(Targets::Named("auto".into())),
        kc_sweep_z: Some(4),
        ..Layer::default()
    };
    match name {
        "paper-fig2" | "paper-fig3" | "paper-fig4" | "paper-fig5" | "paper-fig6" => Ok(published),
        "desk" => Ok(Layer {
            side: Some(100),
            realizations: Some(100),
            ..published
        }),
        other => bail!("unknown preset {other:?} (known: {})", PRESETS.join(", ")),
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub side: u32,
    pub z_list: Vec<u32>,
    pub sigma_grid: SigmaGrid,
    pub realizations: usize,
    pub warmup_steps: usize,
    pub seed: u64,
    pub mode: EnsembleMode,
    pub trajectory_stride: usize,
    pub eta_threshold: f64,
    pub epsilon: f64,
    pub fit_eta_min: f64,
    pub fit_eta_max: f64,
    pub metrics_targets: Targets,
    pub kc_sweep_z: u32,
    pub kc_sweep_sigma: Option<Vec<f64>>,
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_step: f64,
}

/// A setting rejected by validation, named by its key.
#[derive(Debug, Clone, PartialEq)]
pub struct Invalid {
    pub key: &'static str,
    pub message: String,
}

impl Settings {
    fn from_layer(l: &Layer) -> Settings {
        let side = l.side.unwrap_or(100);
        let search = BetaSearch::default();
        Settings {
            side,
            z_list: l.z_list.clone().unwrap_or_else(|| vec![2, 3, 4, 5, 6]),
            sigma_grid: l
                .sigma_grid
                .clone()
                .unwrap_or(SigmaGrid::Named("adaptive".into())),
            realizations: l.realizations.unwrap_or(300),
            warmup_steps: l.warmup_steps.unwrap_or(side as usize),
            seed: l.seed.unwrap_or(1),
            mode: l.mode.unwrap_or(EnsembleMode::Independent),
            trajectory_stride: l.trajectory_stride.unwrap_or(side as usize),
            eta_threshold: l.eta_threshold.unwrap_or(0.9995),
            epsilon: l.epsilon.unwrap_or(1e-3),
            fit_eta_min: l.fit_eta_min.unwrap_or(0.1),
            fit_eta_max: l.fit_eta_max.unwrap_or(0.95),
            metrics_targets: l
                .metrics_targets
                .clone()
                .unwrap_or(Targets::Named("auto".into())),
            kc_sweep_z: l.kc_sweep_z.unwrap_or(4),
            kc_sweep_sigma: l.kc_sweep_sigma.clone(),
            beta_min: l.beta_min.unwrap_or(search.lo),
            beta_max: l.beta_max.unwrap_or(search.hi),
            beta_step: l.beta_step.unwrap_or(search.step),
        }
    }

    pub fn validate(&self) -> std::result::Result<(), Invalid> {
        let fail = |key, message: String| Err(Invalid { key, message });
        match &self.sigma_grid {
            SigmaGrid::Explicit(v) if v.is_empty() => {
                return fail("sigma_grid", "sigma_grid is empty".into())
            }
            SigmaGrid::Explicit(_) => {}
            SigmaGrid::Named(n) if n == "adaptive" => {}
            SigmaGrid::Named(n) => {
                return fail(
                    "sigma_grid",
                    format!("expected a list or \"adaptive\", got {n:?}"),
                )
            }
        }
        let mut plan = self.plan();
        if let SigmaGrid::Named(_) = self.sigma_grid {
            plan.sigma_grid = vec![1.0];
        }
        if let Err(e) = plan.validate() {
            let msg = e.to_string();
            let key = if msg.contains("sigma") {
                "sigma_grid"
            } else if msg.contains("z_list") || msg.contains("range z") {
                "z_list"
            } else if msg.contains("realizations") {
                "realizations"
            } else if msg.contains("trajectory_stride") {
                "trajectory_stride"
            } else {
                "side"
            };
            return fail(key, msg);
        }
        if !(self.eta_threshold >= 0.0 && self.eta_threshold <= 1.0) {
            return fail(
                "eta_threshold",
                format!("{} outside [0, 1]", self.eta_threshold),
            );
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail("epsilon", format!("{} outside (0, 1)", self.epsilon));
        }
        if !(self.fit_eta_min < self.fit_eta_max) {
            return fail(
                "fit_eta_min",
                "fit window must satisfy fit_eta_min < fit_eta_max".into(),
            );
        }
        match &self.metrics_targets {
            Targets::Named(n) if n == "auto" => {}
            Targets::Named(n) => {
                return fail(
                    "metrics_targets",
                    format!("expected a list or \"auto\", got {n:?}"),
                )
            }
            Targets::Explicit(ts) => {
                for t in ts {
                    if t.z == 0 || (self.side as u64) < 2 * t.z as u64 + 1 {
                        return fail(
                            "metrics_targets",
                            format!("target z={} invalid for L={}", t.z, self.side),
                        );
                    }
                    if !(t.sigma > 0.0 && t.sigma <= 1.0) {
                        return fail(
                            "metrics_targets",
                            format!("target sigma={} outside (0, 1]", t.sigma),
                        );
                    }
                }
            }
        }
        if let Some(s) = &self.kc_sweep_sigma {
            if s.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
                return fail("kc_sweep_sigma", "occupancies must lie in (0, 1]".into());
            }
        }
        if !(self.beta_min < self.beta_max) || !(self.beta_step > 0.0) {
            return fail(
                "beta_min",
                "beta search needs beta_min < beta_max and beta_step > 0".into(),
            );
        }
        Ok(())
    }

    /// Experiment plan; an adaptive grid is left empty for the caller to fill.
    pub fn plan(&self) -> ExperimentPlan {
        ExperimentPlan {
            side: self.side,
            z_list: self.z_list.clone(),
            sigma_grid: match &self.sigma_grid {
                SigmaGrid::Explicit(v) => v.clone(),
                SigmaGrid::Named(_) => Vec::new(),
            },
            realizations: self.realizations,
            warmup_steps: self.warmup_steps,
            seed: self.seed,
            mode: self.mode,
            trajectory_stride: self.trajectory_stride,
        }
    }

    pub fn beta_search(&self) -> BetaSearch {
        BetaSearch {
            lo: self.beta_min,
            hi: self.beta_max,
            step: self.beta_step,
            tolerance: 1e-6,
        }
    }

    /// SHA-256 of the canonical JSON form of the settings.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("settings serialise");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// 1-based line on which `key` is assigned in a TOML source, if any.
fn key_line(source: &str, key: &str) -> Option<usize> {
    source
        .lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .map(|rest| rest.trim_start().starts_with('='))
                .unwrap_or(false)
        })
        .map(|i| i + 1)
}

/// Parses a configuration file layer; errors carry line numbers.
pub fn parse_layer(source: &str, origin: &str) -> Result<Layer> {
    toml::from_str::<Layer>(source).map_err(|e| {
        let line = e
            .span()
            .map(|s| source[..s.start.min(source.len())].matches('\n').count() + 1);
        match line {
            Some(n) => anyhow!("{origin}:{n}: {}", e.message()),
            None => anyhow!("{origin}: {}", e.message()),
        }
    })
}

/// Output directory plus resolved settings.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub settings: Settings,
    pub output_dir: PathBuf,
}

/// Resolves defaults, then the preset (from flags, else file), then the
/// file, then flags.
pub fn resolve(file: Option<(&str, &str)>, flags: &Layer) -> Result<Resolved> {
    let file_layer = match file {
        Some((source, origin)) => parse_layer(source, origin)?,
        None => Layer::default(),
    };
    let preset_name = flags.preset.clone().or_else(|| file_layer.preset.clone());
    let mut layer = Layer::default();
    if let Some(name) = &preset_name {
        layer.overlay(&preset(name)?);
    }
    layer.overlay(&file_layer);
    layer.overlay(flags);
    let settings = Settings::from_layer(&layer);
    if let Err(inv) = settings.validate() {
        let from_flags = flag_is_set(flags, inv.key);
        return Err(match (file, from_flags) {
            (Some((source, origin)), false) => match key_line(source, inv.key) {
                Some(n) => anyhow!("{origin}:{n}: {}: {}", inv.key, inv.message),
                None => anyhow!("{origin}: {}: {}", inv.key, inv.message),
            },
            _ => anyhow!("{}: {}", inv.key, inv.message),
        });
    }
    Ok(Resolved {
        settings,
        output_dir: layer
            .output_dir
            .unwrap_or_else(|| PathBuf::from("manet-out")),
    })
}

fn flag_is_set(flags: &Layer, key: &str) -> bool {
    let v = serde_json::to_value(flags).unwrap_or_default();
    v.get(key).map(|x| !x.is_null()).unwrap_or(false)
}

/// Reads and resolves a configuration file from disk.
pub fn load(path: Option<&std::path::Path>, flags: &Layer) -> Result<Resolved> {
    match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            resolve(Some((&text, &p.display().to_string())), flags)
        }
        None => resolve(None, flags),
    }
}
