//! Lattice sweeps: one sink-creating perturbation per lattice window,
//! then sink counts over a parameter grid.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{push_perturbation, Construction, FamilyHandle, FamilyParams};
use crate::paratangency::{default_tolerance, greedy_code, paratangency_verdict, random_admissible_family};
use crate::sink_forge::{
    detect_sinks, flatten_perturbation, measure_critical, sink_translation_perturbation, tangency_normal_form,
    trapping_box_check, FlattenOptions, SearchBox, SinkOptions, SinkRecord, TangencyData, TangencyGuess,
};

mod export;
mod plot;

pub use export::{export_report, import_csv, import_json, write_csv, ExportFormat, GRID_HEADER_TAIL};
pub use plot::{emit_plots, render_svg};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("plot: {0}")]
    Plot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

/// `α·2^{-N+1}·(ℤ^k ∖ {0}) ∩ [-α, α]^k`, lexicographic in the integer labels.
pub fn lattice_points(alpha: f64, depth: usize, k: usize) -> Result<Vec<Vec<f64>>, SweepError> {
    if depth == 0 {
        return Err(SweepError::Config("lattice depth must be at least 1".into()));
    }
    if k == 0 || !(alpha > 0.0 && alpha.is_finite()) {
        return Err(SweepError::Config(format!("bad lattice: k = {k}, alpha = {alpha}")));
    }
    let step = alpha * 0.5f64.powi(depth as i32 - 1);
    let reach = 1i64 << (depth - 1);
    let mut labels = vec![vec![]];
    for _ in 0..k {
        labels = labels
            .into_iter()
            .flat_map(|l: Vec<i64>| {
                (-reach..=reach).map(move |m| {
                    let mut l = l.clone();
                    l.push(m);
                    l
                })
            })
            .collect();
    }
    let out: Vec<Vec<f64>> = labels
        .into_iter()
        .filter(|l| l.iter().any(|&m| m != 0))
        .map(|l| l.iter().map(|&m| m as f64 * step).collect())
        .collect();
    if out.is_empty() {
        return Err(SweepError::Config("empty lattice".into()));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub seeds: usize,
    pub max_period: usize,
    /// Seed half-width as a fraction of the trapping-box half-width.
    pub box_scale: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            seeds: 3,
            max_period: 20,
            box_scale: 0.5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub certificates: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub k: usize,
    pub d: usize,
    pub epsilon: f64,
    pub mu: Option<f64>,
    pub eta: Option<f64>,
    /// Lattice depth `N`.
    pub depth: usize,
    pub alpha: f64,
    /// Points per axis of the parameter grid; defaults to `2^{N+2} + 1`.
    pub grid: Option<usize>,
    /// Extra iterates near the saddle; sinks have period `2 + n`.
    pub n: usize,
    pub search: SearchConfig,
    /// Depth of the greedy paratangency trace recorded per lattice point.
    pub greedy_depth: usize,
    pub trapping: bool,
    /// Apply the perturbations; `false` gives the control run.
    pub perturb: bool,
    /// Lattice indices left unperturbed.
    pub disabled: Vec<usize>,
    pub seed: u64,
    pub output: OutputConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k: 1,
            d: 1,
            epsilon: 0.05,
            mu: None,
            eta: None,
            depth: 3,
            alpha: 1.0,
            grid: None,
            n: 12,
            search: SearchConfig::default(),
            greedy_depth: 40,
            trapping: true,
            perturb: true,
            disabled: Vec::new(),
            seed: 0,
            output: OutputConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, SweepError> {
        let cfg: SweepConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid_points(&self) -> usize {
        self.grid.unwrap_or((1usize << (self.depth + 2)) + 1)
    }

    /// Half-width of the parameter window owned by a lattice point.
    pub fn window(&self) -> f64 {
        self.alpha * 0.5f64.powi(self.depth as i32)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if !(1..=3).contains(&self.k) {
            return Err(SweepError::Config(format!("k = {} outside 1..=3", self.k)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(SweepError::Config(format!("alpha = {} must lie in (0, 1]", self.alpha)));
        }
        if self.depth == 0 || self.depth > 12 {
            return Err(SweepError::Config(format!("depth = {} outside 1..=12", self.depth)));
        }
        let g = self.grid_points();
        if g < 2 || 2.0 * self.alpha / (g - 1) as f64 > self.alpha / 4.0 {
            return Err(SweepError::Config(format!("grid of {g} points is coarser than alpha/4")));
        }
        if self.n == 0 {
            return Err(SweepError::Config("n must be positive".into()));
        }
        let count = lattice_points(self.alpha, self.depth, self.k)?.len();
        if self.disabled.iter().any(|&i| i >= count) {
            return Err(SweepError::Config("disabled index outside the lattice".into()));
        }
        Ok(())
    }

    pub fn family(&self) -> FamilyParams {
        let mut p = FamilyParams::new(Construction::Coupled, self.k, self.d).epsilon(self.epsilon);
        p.mu = self.mu;
        p.eta = self.eta;
        p
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedySummary {
    pub depth: usize,
    pub smallest_margin: f64,
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrappingSummary {
    pub norm: f64,
    pub bound: f64,
    pub constant: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSummary {
    pub index: usize,
    pub a0: Vec<f64>,
    pub window: f64,
    pub enabled: bool,
    pub shift: Option<f64>,
    pub period: Option<usize>,
    pub greedy: Option<GreedySummary>,
    pub trapping: Option<TrappingSummary>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub a: Vec<f64>,
    pub sinks: usize,
    pub min_period: Option<usize>,
    pub max_period: Option<usize>,
    #[serde(default)]
    pub records: Vec<SinkRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub k: usize,
    pub depth: usize,
    pub alpha: f64,
    pub lattice: Vec<LatticeSummary>,
    pub rows: Vec<GridRow>,
    /// `(m, fraction of grid points with at least m sinks)`.
    pub coverage: Vec<(usize, f64)>,
    /// Fraction of grid points in the thickened lattice carrying a sink.
    pub thickened_coverage: f64,
}

/// Parameter grid over `[-α, α]^k`, last axis fastest.
pub fn parameter_grid(alpha: f64, points: usize, k: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..points)
        .map(|i| alpha * (-1.0 + 2.0 * i as f64 / (points - 1) as f64))
        .collect();
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut p = p.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Greedy trace on a random admissible parabola family seeded by the lattice index.
fn greedy_summary(cfg: &SweepConfig, index: usize, a0: &[f64]) -> Result<GreedySummary, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let model = FamilyHandle::build(FamilyParams::new(Construction::Base, cfg.k, cfg.d).epsilon(cfg.epsilon))
        .map_err(|e| e.to_string())?;
    let family = random_admissible_family(cfg.k, cfg.d, model.epsilon(), a0, &mut rng);
    let trace = greedy_code(&model, &family, cfg.greedy_depth).map_err(|e| e.to_string())?;
    let verdict = trace
        .eta
        .as_ref()
        .map(|eta| paratangency_verdict(eta, |_| default_tolerance(cfg.greedy_depth)).iter().all(|&b| b))
        .unwrap_or(false);
    Ok(GreedySummary {
        depth: cfg.greedy_depth,
        smallest_margin: trace.smallest_margin(),
        verdict,
    })
}

struct WindowOutcome {
    summary: LatticeSummary,
    layers: Vec<crate::dynamics::Perturbation>,
}

fn run_window(cfg: &SweepConfig, base: &FamilyHandle, index: usize, a0: &[f64]) -> WindowOutcome {
    let enabled = cfg.perturb && !cfg.disabled.contains(&index);
    let mut summary = LatticeSummary {
        index,
        a0: a0.to_vec(),
        window: cfg.window(),
        enabled,
        shift: None,
        period: None,
        greedy: None,
        trapping: None,
        error: None,
    };
    if cfg.greedy_depth > 0 {
        match greedy_summary(cfg, index, a0) {
            Ok(g) => summary.greedy = Some(g),
            Err(e) => summary.error = Some(format!("greedy: {e}")),
        }
    }
    let mut layers = Vec::new();
    if !enabled {
        return WindowOutcome { summary, layers };
    }
    let staged = (|| -> Result<(FamilyHandle, TangencyData, f64, usize), crate::sink_forge::SinkError> {
        let td = tangency_normal_form(base, &TangencyGuess::coupled(base), a0, cfg.d)?;
        // Layers vanish for |a - a0| ≥ 2·(window/2).
        let alpha = 0.5 * cfg.window();
        let (flat, _) = flatten_perturbation(base, &td, alpha, &FlattenOptions::default())?;
        let (g, plan) = sink_translation_perturbation(&flat, &td, alpha, cfg.n, &SinkOptions::default())?;
        Ok((g, td, plan.shift, plan.period))
    })();
    match staged {
        Ok((g, td, shift, period)) => {
            summary.shift = Some(shift);
            summary.period = Some(period);
            if cfg.trapping {
                match trapping_box_check(&g, &td, cfg.n, a0) {
                    Ok(c) => {
                        summary.trapping = Some(TrappingSummary {
                            norm: c.norm,
                            bound: c.bound,
                            constant: c.constant,
                            holds: c.holds(),
                        })
                    }
                    Err(e) => summary.error = Some(format!("trapping: {e}")),
                }
            }
            layers = g.layers()[base.layers().len()..].iter().map(|l| (**l).clone()).collect();
        }
        Err(e) => summary.error = Some(e.to_string()),
    }
    WindowOutcome { summary, layers }
}

/// Seed box around `P + c` sized by the trapping box.
pub fn search_box(base: &FamilyHandle, cfg: &SweepConfig) -> Result<SearchBox, SweepError> {
    let a0 = vec![0.0; cfg.k];
    let td = tangency_normal_form(base, &TangencyGuess::coupled(base), &a0, 0)
        .map_err(|e| SweepError::Config(format!("no tangency to seed from: {e}")))?;
    let c = measure_critical(base, &td.geometry, &a0, 0)
        .map_err(|e| SweepError::Config(e.to_string()))?
        .critical
        .value();
    let sigma = td.omega.unstable_multiplier.value().abs();
    let lambda = td.omega.stable_multiplier.value().abs();
    let kappa = 1.05f64.min((sigma * lambda).powf(-0.25));
    let half = (kappa * kappa * sigma).powi(-(cfg.n as i32));
    Ok(SearchBox {
        center: td.geometry.source_plane(c, 0.0),
        half_x: cfg.search.box_scale * half,
        half_y: 0.0,
        seeds: cfg.search.seeds,
    })
}

/// Perturbed handle with every enabled window stacked, plus the per-window summaries.
pub fn build_swept_family(cfg: &SweepConfig) -> Result<(FamilyHandle, Vec<LatticeSummary>), SweepError> {
    cfg.validate()?;
    let base = FamilyHandle::build(cfg.family()).map_err(|e| SweepError::Config(e.to_string()))?;
    let lattice = lattice_points(cfg.alpha, cfg.depth, cfg.k)?;
    let outcomes: Vec<WindowOutcome> = lattice
        .par_iter()
        .enumerate()
        .map(|(i, a0)| run_window(cfg, &base, i, a0))
        .collect();
    let mut h = base;
    let mut summaries = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        for layer in o.layers {
            h = push_perturbation(&h, layer).map_err(|e| SweepError::Config(e.to_string()))?;
        }
        summaries.push(o.summary);
    }
    Ok((h, summaries))
}

fn in_thickened_lattice(a: &[f64], alpha: f64, depth: usize) -> bool {
    let step = alpha * 0.5f64.powi(depth as i32 - 1);
    let labels: Vec<f64> = a.iter().map(|v| v / step).collect();
    let near = labels.iter().all(|l| (l - l.round()).abs() <= 0.25);
    near && labels.iter().any(|l| l.round() != 0.0)
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport, SweepError> {
    let (h, lattice) = build_swept_family(cfg)?;
    let region = search_box(&h, cfg)?;
    let grid = parameter_grid(cfg.alpha, cfg.grid_points(), cfg.k);
    let rows: Vec<GridRow> = grid
        .par_iter()
        .map(|a| {
            let records = detect_sinks(&h, &region, std::slice::from_ref(a), cfg.search.max_period);
            GridRow {
                a: a.clone(),
                sinks: records.len(),
                min_period: records.iter().map(|r| r.period).min(),
                max_period: records.iter().map(|r| r.period).max(),
                records,
            }
        })
        .collect();
    let max_count = rows.iter().map(|r| r.sinks).max().unwrap_or(0);
    let total = rows.len().max(1) as f64;
    let coverage = (1..=max_count.max(1))
        .map(|m| (m, rows.iter().filter(|r| r.sinks >= m).count() as f64 / total))
        .collect();
    let thick: Vec<&GridRow> = rows
        .iter()
        .filter(|r| in_thickened_lattice(&r.a, cfg.alpha, cfg.depth))
        .collect();
    let thickened_coverage = if thick.is_empty() {
        0.0
    } else {
        thick.iter().filter(|r| r.sinks > 0).count() as f64 / thick.len() as f64
    };
    Ok(SweepReport {
        k: cfg.k,
        depth: cfg.depth,
        alpha: cfg.alpha,
        lattice,
        rows,
        coverage,
        thickened_coverage,
    })
}
