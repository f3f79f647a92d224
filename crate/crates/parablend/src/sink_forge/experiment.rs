//! End-to-end runs of the flattening and sink pipelines on the coupled construction.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    coupled_sink_pipeline, detect_sinks, flatten_perturbation, trapping_box_check, tangency_normal_form,
    FlattenOptions, FlattenReport, SearchBox, SinkError, SinkPlan, SinkRecord, TangencyGuess, TrappingCertificate,
};
use crate::dynamics::{push_perturbation, FamilyHandle, FamilyParams, Perturbation, PlanePoint, PolynomialAmplitude};

/// `h` with an extra shift `coef·a_1^power` along x at the fold, so that `C(a) = coef·a_1^power`.
pub fn unfolded_family(h: &FamilyHandle, power: u32, coef: f64) -> Result<FamilyHandle, SinkError> {
    let layer = Perturbation::additive(
        "unfold",
        PlanePoint::new(0.0, 0.0),
        h.eta() / 2.0,
        vec![0.0; h.k()],
        1.0,
        [1.0, 0.0],
        Arc::new(PolynomialAmplitude::power(h.k(), power, coef)),
    );
    Ok(push_perturbation(h, layer)?)
}

/// Points `α(-1 + 2(i+1)/(m+1))`, strictly inside `(-α, α)`.
pub fn interior_grid(alpha: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| alpha * (-1.0 + 2.0 * (i + 1) as f64 / (m + 1) as f64))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlattenExperiment {
    pub report: FlattenReport,
    /// `(a, |C(a)|)` after flattening.
    pub residuals: Vec<(f64, f64)>,
    /// Evaluations at `|a| ≥ 2α` match the input bit for bit.
    pub outside_identical: bool,
}

impl FlattenExperiment {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.outside_identical && self.max_residual() <= 1e-7
    }
}

/// Flatten the surrogate `C(a) = a^power` on the coupled construction (`k = 1`).
pub fn flatten_experiment(d: usize, power: u32, alpha: f64, samples: usize) -> Result<FlattenExperiment, SinkError> {
    let base = FamilyHandle::build(FamilyParams::new(crate::dynamics::Construction::Coupled, 1, d))?;
    let h = unfolded_family(&base, power, 1.0)?;
    let td = tangency_normal_form(&h, &TangencyGuess::coupled(&h), &[0.0], d)?;
    let (g, report) = flatten_perturbation(&h, &td, alpha, &FlattenOptions::default())?;
    let residuals = interior_grid(alpha, samples)
        .into_iter()
        .map(|a| Ok((a, td.tangency_residual(&g, &[a])?)))
        .collect::<Result<Vec<_>, SinkError>>()?;
    let probes = [
        report.center,
        PlanePoint::new(report.center.x.value() + 0.3 * td.theta, report.center.y - 0.2 * td.theta),
        td.geometry.source,
    ];
    let mut outside_identical = true;
    for a in [2.0 * alpha, -2.0 * alpha, 3.0 * alpha, -0.9] {
        for z in &probes {
            outside_identical &= h.eval_point(z, &[a])? == g.eval_point(z, &[a])?;
        }
    }
    Ok(FlattenExperiment {
        report,
        residuals,
        outside_identical,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSinks {
    pub a: f64,
    pub sinks: Vec<SinkRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinkExperiment {
    pub plan: SinkPlan,
    pub grid: Vec<GridSinks>,
    pub certificates: Vec<TrappingCertificate>,
}

impl SinkExperiment {
    /// Every grid point carries an attracting orbit of the planned period avoiding the strip,
    /// and every sampled box certificate holds.
    pub fn passed(&self) -> bool {
        let sinks_ok = self.grid.iter().all(|g| {
            g.sinks.iter().any(|s| {
                s.period == self.plan.period && s.avoids_strip && s.moduli().iter().all(|m| *m < 1.0 - 1e-6)
            })
        });
        sinks_ok && !self.certificates.is_empty() && self.certificates.iter().all(TrappingCertificate::holds)
    }
}

/// Full pipeline at `a0 = 0` (`k = 1`), detection on `grid` interior points and
/// box certificates on `boxes` of them.
pub fn sink_experiment(
    d: usize,
    n: usize,
    alpha: f64,
    grid: usize,
    boxes: usize,
    max_period: usize,
) -> Result<SinkExperiment, SinkError> {
    let params = FamilyParams::new(crate::dynamics::Construction::Coupled, 1, d);
    let (g, td, plan) = coupled_sink_pipeline(params, &[0.0], alpha, n)?;
    let points = interior_grid(alpha, grid);
    let stride = points.len().checked_div(boxes).unwrap_or(1).max(1);
    let certificates = points
        .iter()
        .enumerate()
        .filter(|(i, _)| boxes > 0 && i % stride == stride / 2)
        .take(boxes)
        .map(|(_, &a)| trapping_box_check(&g, &td, n, &[a]))
        .collect::<Result<Vec<_>, _>>()?;
    let half = certificates.first().map_or(0.0, |c| 0.5 * c.half_x);
    let grid = points
        .iter()
        .map(|&a| {
            let c = super::measure_critical(&g, &td.geometry, &[a], 0)?.critical.value();
            let region = SearchBox {
                center: td.geometry.source_plane(c, 0.0),
                half_x: half,
                half_y: 0.0,
                seeds: 3,
            };
            Ok(GridSinks {
                a,
                sinks: detect_sinks(&g, &region, &[vec![a]], max_period),
            })
        })
        .collect::<Result<Vec<_>, SinkError>>()?;
    Ok(SinkExperiment {
        plan,
        grid,
        certificates,
    })
}
