//! Tangency normal forms, the flattening and sink-creating perturbations,
//! sink detection and the trapping-box certificate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{Construction, DynamicsError, FamilyHandle, PlanePoint, PointJet};
use crate::hyperbolic::{
    continue_fixed_point, graph_transform_with, iterate_jet, AdaptedChart, GraphAxis, GraphOptions,
    HyperbolicError, HyperbolicPointData, ManifoldBase, Side,
};
use crate::jets::{Jet, JetError};

mod detect;
mod experiment;
mod perturb;

pub use detect::{
    detect_sinks, in_excluded_strip, return_map, trapping_box_check, DetectionMethod, SearchBox, SinkRecord, TrappingCertificate,
};
pub use experiment::{
    flatten_experiment, interior_grid, sink_experiment, unfolded_family, FlattenExperiment, GridSinks, SinkExperiment,
};
pub use perturb::{
    alpha_max, flatten_perturbation, parameter_norm, quasi_snap_perturbation, shift_amplitude,
    sink_translation_perturbation, unstable_preimage, CriticalValueAmplitude, FlattenOptions, FlattenReport, ShiftAmplitude,
    SinkOptions, SinkPlan, SnapReport,
};

#[derive(Debug, Error)]
pub enum SinkError {
    #[error("no tangency near the guess: critical value {0:e}")]
    NoTangency(f64),
    #[error("tangency is not quadratic: second derivative {0:e}")]
    NonQuadratic(f64),
    #[error("critical point search failed: {0}")]
    Critical(String),
    #[error("alpha {alpha} exceeds the admissible {alpha0}")]
    AlphaTooLarge { alpha: f64, alpha0: f64 },
    #[error("shift amplitude norm {norm:e} exceeds {mu:e}; increase n")]
    NTooSmall { norm: f64, mu: f64 },
    #[error("dissipation condition fails: {0}")]
    NotDissipative(String),
    #[error("manifolds too far apart: {distance:e} > {limit:e}")]
    DistanceTooLarge { distance: f64, limit: f64 },
    #[error("certificate precondition: {0}")]
    Precondition(String),
    #[error("line field: {0}")]
    LineField(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Hyperbolic(#[from] HyperbolicError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

impl From<SinkError> for DynamicsError {
    fn from(e: SinkError) -> Self {
        match e {
            SinkError::Dynamics(inner) => inner,
            other => DynamicsError::Amplitude(other.to_string()),
        }
    }
}

/// Where to look for the tangency: the fixed point, a point `P` on its local
/// unstable manifold and the number of steps carrying `P` onto the stable one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangencyGuess {
    pub omega: PlanePoint,
    pub source: PlanePoint,
    pub steps: usize,
    /// Radius of the perturbation ball around `F^{N-1}(P)`.
    pub theta: f64,
}

impl TangencyGuess {
    /// `P = (3 - 3/σ, 0)` is sent to the fold at the origin and then to `(3, 1)`.
    pub fn coupled(h: &FamilyHandle) -> Self {
        Self {
            omega: PlanePoint::new(3.0, 0.0),
            source: PlanePoint::new(3.0 - 3.0 / h.sigma(), 0.0),
            steps: 2,
            theta: h.eta() / 2.0,
        }
    }
}

/// Charts around `Ω` and `P` and the transition between them.
#[derive(Clone, Debug)]
pub struct TangencyGeometry {
    pub source: PlanePoint,
    pub steps: usize,
    pub theta: f64,
    /// Chart at `Ω` straightening both local manifolds.
    pub chart: AdaptedChart,
    /// Height of `F^N(P)` along the stable axis.
    pub q0: f64,
    /// Offset of `P` from `Ω` along the unstable graph variable.
    source_offset: f64,
}

/// Chart data re-expanded at a parameter point and embedded in a jet space.
struct LocalGraphs {
    center: PointJet,
    unstable: Vec<Jet>,
    stable: Vec<Jet>,
}

fn poly(coeffs: &[Jet], t: &Jet) -> Jet {
    let mut acc = Jet::zero(t.k(), t.d());
    for c in coeffs.iter().rev() {
        acc = &(&acc * t) + c;
    }
    acc
}

impl TangencyGeometry {
    fn local(&self, a: &[Jet]) -> LocalGraphs {
        let shift: Vec<f64> = a
            .iter()
            .zip(&self.chart.unstable.a0)
            .map(|(v, c)| v.value() - c)
            .collect();
        let embed = |j: &Jet| -> Jet { j.recenter(&shift).substitute(a) };
        let c = &self.chart.center;
        LocalGraphs {
            center: PointJet {
                anchor: c.anchor,
                x: embed(&c.x),
                y: embed(&c.y),
            },
            unstable: self.chart.unstable.coeffs.iter().map(&embed).collect(),
            stable: self.chart.stable.coeffs.iter().map(&embed).collect(),
        }
    }

    fn source_with(&self, g: &LocalGraphs, x: &Jet, y: &Jet) -> PointJet {
        let t = x.add_scalar(self.source_offset);
        let h = poly(&g.unstable, &t);
        PointJet {
            anchor: g.center.anchor,
            x: &g.center.x + &t,
            y: &(&g.center.y + &h) + y,
        }
        .renormalized()
    }

    /// Plane point of the source chart coordinates `(x, y)`: `x` runs along `W^u_loc(Ω)`.
    pub fn source_point(&self, x: &Jet, y: &Jet, a: &[Jet]) -> PointJet {
        self.source_with(&self.local(a), x, y)
    }

    pub fn source_plane(&self, x: f64, y: f64) -> PlanePoint {
        let c = self.chart.unstable.center.point();
        let t = x + self.source_offset;
        let g = self.chart.unstable.eval(t);
        PlanePoint::from_parts(c.x.anchor(), c.x.offset() + t, c.y + g + y)
    }

    pub fn to_source(&self, p: &PlanePoint) -> (f64, f64) {
        let c = self.chart.unstable.center.point();
        let t = p.x.diff(&c.x);
        (t - self.source_offset, p.y - c.y - self.chart.unstable.eval(t))
    }

    pub fn to_source_jet(&self, p: &PointJet, a: &[Jet]) -> (Jet, Jet) {
        let g = self.local(a);
        let t = p.x_diff(g.center.anchor, &g.center.x);
        let y = &(&p.y - &g.center.y) - &poly(&g.unstable, &t);
        (t.add_scalar(-self.source_offset), y)
    }

    fn chart_with(&self, g: &LocalGraphs, p: &PointJet) -> (Jet, Jet) {
        let dx = p.x_diff(g.center.anchor, &g.center.x);
        let dy = &p.y - &g.center.y;
        (&dx - &poly(&g.stable, &dy), &dy - &poly(&g.unstable, &dx))
    }

    pub fn to_chart_jet(&self, p: &PointJet, a: &[Jet]) -> (Jet, Jet) {
        self.chart_with(&self.local(a), p)
    }

    /// `(A, B)` with `F^N(source(x, y)) = chart^{-1}(A, q0 + B)`.
    pub fn transition(&self, h: &FamilyHandle, x: &Jet, y: &Jet, a: &[Jet]) -> Result<(Jet, Jet), SinkError> {
        let g = self.local(a);
        let z = self.source_with(&g, x, y);
        let img = iterate_jet(h, &z, a, self.steps)?;
        let (u, v) = self.chart_with(&g, &img);
        Ok((u, v.add_scalar(-self.q0)))
    }

    /// Plane point where the flattening and sink layers sit.
    pub fn perturbation_center(&self, h: &FamilyHandle, critical: f64, a0: &[f64]) -> Result<PlanePoint, SinkError> {
        let z = self.source_plane(critical, 0.0);
        let mut p = z;
        for _ in 0..self.steps - 1 {
            p = h.eval_point(&p, a0)?;
        }
        Ok(p)
    }

    /// Plane direction moving the image along the chart's `u` axis at unit rate.
    pub fn shift_direction(&self) -> [f64; 2] {
        let slope_u = self.chart.unstable.slope(0.0);
        let slope_s = self.chart.stable.slope(self.q0);
        let t = 1.0 / (1.0 - slope_s * slope_u);
        [t, t * slope_u]
    }
}

/// Critical point `c_a` of `x ↦ A_a(x, 0)` and the values there.
#[derive(Clone, Debug)]
pub struct CriticalData {
    pub critical: Jet,
    /// `C(a) = A_a(c_a, 0)`.
    pub value: Jet,
    /// `B_a(c_a, 0)`.
    pub height: Jet,
    /// `∂²_x A` at the critical point, working parameter.
    pub curvature: f64,
    /// `∂_x A_a(c_a, 0)` as a jet; vanishes through the computed order.
    pub slope: Jet,
}

fn constant_params(k_space: usize, d: usize, a0: &[f64]) -> Vec<Jet> {
    a0.iter().map(|&v| Jet::constant(k_space, d, v)).collect()
}

fn space_params(k_space: usize, d: usize, a0: &[f64]) -> Vec<Jet> {
    a0.iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(k_space, d, i, v))
        .collect()
}

/// Newton at the working parameter, then jet refinement with the frozen curvature.
pub fn measure_critical(
    h: &FamilyHandle,
    geom: &TangencyGeometry,
    a0: &[f64],
    order: usize,
) -> Result<CriticalData, SinkError> {
    let k = a0.len();
    let kk = k + 1;
    let a_real = constant_params(kk, 2, a0);
    let zero2 = Jet::zero(kk, 2);
    let mut c = 0.0f64;
    let mut curvature = f64::NAN;
    for it in 0..60 {
        let x = Jet::variable(kk, 2, k, c);
        let (a_map, _) = geom.transition(h, &x, &zero2, &a_real)?;
        let d1 = a_map.split_coefficient(k, &[1], 0).value();
        let d2 = 2.0 * a_map.split_coefficient(k, &[2], 0).value();
        curvature = d2;
        if !(d2.abs() > 1e-3) {
            return Err(SinkError::NonQuadratic(d2));
        }
        let step = d1 / d2;
        c -= step;
        if !c.is_finite() || c.abs() > geom.theta {
            return Err(SinkError::Critical(format!("left the chart at iteration {it}")));
        }
        if step.abs() <= 1e-18 + 1e-16 * c.abs() {
            break;
        }
    }
    let dd = order + 1;
    let a_comb = space_params(kk, dd, a0);
    let zero = Jet::zero(kk, dd);
    let mut cj = Jet::constant(k, order, c);
    let mut slope = Jet::zero(k, order);
    for _ in 0..=order {
        let x = &cj.lift(kk, dd) + &Jet::variable(kk, dd, k, 0.0);
        let (a_map, _) = geom.transition(h, &x, &zero, &a_comb)?;
        slope = a_map.split_coefficient(k, &[1], order);
        cj = &cj - &slope.scale(1.0 / curvature);
    }
    let a = Jet::parameters(order, a0);
    let (value, height) = geom.transition(h, &cj, &Jet::zero(k, order), &a)?;
    Ok(CriticalData {
        critical: cj,
        value,
        height,
        curvature,
        slope,
    })
}

/// Residuals of the normal-form conditions at the working parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormResiduals {
    pub a_origin: f64,
    pub b_origin: f64,
    pub dx_a_origin: f64,
    pub dxx_a_origin: f64,
    /// Largest coefficient of `∂_x A_a(c_a, 0)` below the top order.
    pub slope_at_critical: f64,
}

impl NormalFormResiduals {
    pub fn holds(&self) -> bool {
        self.a_origin.abs() <= 1e-8
            && self.b_origin.abs() <= 1e-8
            && self.dx_a_origin.abs() <= 1e-8
            && self.dxx_a_origin.abs() >= 1e-3
            && self.slope_at_critical <= 1e-8
    }
}

#[derive(Clone, Debug)]
pub struct TangencyData {
    pub a0: Vec<f64>,
    pub order: usize,
    pub omega: HyperbolicPointData,
    pub geometry: Arc<TangencyGeometry>,
    pub critical: CriticalData,
    /// Separation radius `θ`.
    pub theta: f64,
    /// Bound `U` on the transition Jacobian over the source box.
    pub norm_bound: f64,
    /// Sampled envelope `(a, |∂_a^d C(a)|)` along each parameter axis.
    pub nu: Vec<(Vec<f64>, f64)>,
    pub residuals: NormalFormResiduals,
}

impl TangencyData {
    pub fn critical_value(&self) -> &Jet {
        &self.critical.value
    }

    pub fn nu_max(&self) -> f64 {
        self.nu.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }

    /// `|C(a)|` for the handle `h` at the real parameter `a`.
    pub fn tangency_residual(&self, h: &FamilyHandle, a: &[f64]) -> Result<f64, SinkError> {
        Ok(measure_critical(h, &self.geometry, a, 0)?.value.value().abs())
    }
}

/// Build the normal form of the transition through the tangency.
pub fn tangency_normal_form(
    h: &FamilyHandle,
    guess: &TangencyGuess,
    a0: &[f64],
    order: usize,
) -> Result<TangencyData, SinkError> {
    if guess.steps == 0 {
        return Err(SinkError::Precondition("the transition needs at least one step".into()));
    }
    let omega = continue_fixed_point(h, &guess.omega, a0, order)?;
    let offset = guess.source.x.diff(&omega.point().x);
    let wu = graph_transform_with(
        h,
        ManifoldBase::Fixed(&omega),
        Side::Unstable,
        order,
        GraphOptions {
            half_width: 0.2f64.max(1.2 * offset.abs()),
            ..GraphOptions::default()
        },
    )?;
    if wu.axis != GraphAxis::OverX {
        return Err(SinkError::Precondition("unstable manifold is not a graph over x".into()));
    }
    let k = a0.len();
    let a_real = constant_params(k, 0, a0);
    let p_plane = wu.point_at(offset);
    let target = iterate_jet(h, &PointJet::constant(&p_plane, k, 0), &a_real, guess.steps)?.point();
    let q_guess = target.y - omega.point().y;
    let ws = graph_transform_with(
        h,
        ManifoldBase::Fixed(&omega),
        Side::Stable,
        order,
        GraphOptions {
            half_width: 0.2f64.max(1.2 * q_guess.abs()),
            ..GraphOptions::default()
        },
    )?;
    let chart = AdaptedChart::new(wu, ws)?;
    let q0 = chart.to_chart(&target).1;
    let geometry = Arc::new(TangencyGeometry {
        source: p_plane,
        steps: guess.steps,
        theta: guess.theta,
        chart,
        q0,
        source_offset: offset,
    });
    let critical = measure_critical(h, &geometry, a0, order)?;
    let c_value = critical.value.value();
    if c_value.abs() > 1e-6 {
        return Err(SinkError::NoTangency(c_value));
    }

    // Residuals at the origin of the source chart.
    let kk = k + 2;
    let a2 = constant_params(kk, 2, a0);
    let (am, bm) = geometry.transition(h, &Jet::variable(kk, 2, k, 0.0), &Jet::variable(kk, 2, k + 1, 0.0), &a2)?;
    let residuals = NormalFormResiduals {
        a_origin: am.value(),
        b_origin: bm.value(),
        dx_a_origin: am.split_coefficient(k, &[1, 0], 0).value(),
        dxx_a_origin: 2.0 * am.split_coefficient(k, &[2, 0], 0).value(),
        slope_at_critical: {
            let ds = critical.slope.derivatives();
            let top = crate::jets::graded_monomials(k, order);
            ds.iter()
                .zip(&top)
                .filter(|(_, m)| (m.order() as usize) < order.max(1))
                .map(|(v, _)| v.abs())
                .fold(0.0, f64::max)
        },
    };

    // Jacobian bound on the source box.
    let c0 = critical.critical.value();
    let gain = h.jacobian_at(&geometry.source, a0)?[0][0].abs().max(1.0);
    let r_src = guess.theta / gain.powi(guess.steps as i32 - 1).max(1.0);
    let a1 = constant_params(kk, 1, a0);
    let mut norm_bound = 0.0f64;
    for i in 0..5 {
        for j in 0..5 {
            let dx = c0 + r_src * (-1.0 + i as f64 / 2.0);
            let dy = r_src * (-1.0 + j as f64 / 2.0);
            let (am, bm) = geometry.transition(
                h,
                &Jet::variable(kk, 1, k, dx),
                &Jet::variable(kk, 1, k + 1, dy),
                &a1,
            )?;
            let row = |m: &Jet| m.split_coefficient(k, &[1, 0], 0).value().abs() + m.split_coefficient(k, &[0, 1], 0).value().abs();
            norm_bound = norm_bound.max(row(&am)).max(row(&bm));
        }
    }

    let nu = sample_nu(h, &geometry, a0, order)?;
    Ok(TangencyData {
        a0: a0.to_vec(),
        order,
        omega,
        geometry,
        critical,
        theta: guess.theta,
        norm_bound,
        nu,
        residuals,
    })
}

/// Radius of the parameter window sampled for `ν`.
pub const NU_RADIUS: f64 = 0.25;

fn sample_nu(
    h: &FamilyHandle,
    geom: &TangencyGeometry,
    a0: &[f64],
    order: usize,
) -> Result<Vec<(Vec<f64>, f64)>, SinkError> {
    let mut out = Vec::new();
    for axis in 0..a0.len() {
        for i in 0..101 {
            let mut a = a0.to_vec();
            a[axis] += NU_RADIUS * (-1.0 + 2.0 * i as f64 / 100.0);
            let cd = measure_critical(h, geom, &a, order)?;
            let top = crate::jets::graded_monomials(a0.len(), order);
            let v = cd
                .value
                .derivatives()
                .iter()
                .zip(&top)
                .filter(|(_, m)| m.order() as usize == order)
                .map(|(v, _)| v.abs())
                .fold(0.0, f64::max);
            out.push((a, v));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    pub determinant: f64,
    pub determinant_margin: f64,
    /// `|λ|·|σ|^{d-1}`.
    pub line_field_product: f64,
    pub line_field_margin: f64,
}

impl DissipationReport {
    pub fn holds(&self) -> bool {
        self.determinant_margin > 0.0 && self.line_field_margin > 0.0
    }
}

pub fn dissipation_check(omega: &HyperbolicPointData, d: usize) -> DissipationReport {
    let sigma = omega.unstable_multiplier.value().abs();
    let lambda = omega.stable_multiplier.value().abs();
    dissipation_from_multipliers(sigma, lambda, d)
}

pub fn dissipation_from_multipliers(sigma: f64, lambda: f64, d: usize) -> DissipationReport {
    let determinant = sigma * lambda;
    let product = lambda * sigma.powi(d as i32 - 1);
    DissipationReport {
        determinant,
        determinant_margin: 1.0 - determinant,
        line_field_product: product,
        line_field_margin: 1.0 - product,
    }
}

/// Coupled construction, flattened and shifted so that a sink of period `2 + n`
/// appears for `|a - a0| ≤ alpha`.
pub fn coupled_sink_pipeline(
    params: crate::dynamics::FamilyParams,
    a0: &[f64],
    alpha: f64,
    n: usize,
) -> Result<(FamilyHandle, TangencyData, SinkPlan), SinkError> {
    let h = FamilyHandle::build(params)?;
    let td = tangency_normal_form(&h, &TangencyGuess::coupled(&h), a0, h.d())?;
    let (flat, _) = flatten_perturbation(&h, &td, alpha, &FlattenOptions::default())?;
    let (g, plan) = sink_translation_perturbation(&flat, &td, alpha, n, &SinkOptions::default())?;
    Ok((g, td, plan))
}

/// Whether the handle carries the fold used by the built-in tangency.
pub fn has_fold(h: &FamilyHandle) -> bool {
    h.construction() == Construction::Coupled
}
