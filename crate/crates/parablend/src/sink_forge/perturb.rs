//! The flattening, sink-creating and snap perturbations.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{dissipation_check, measure_critical, SinkError, TangencyData, TangencyGeometry};
use crate::dynamics::{
    push_perturbation, BumpProfile, DynamicsError, FamilyHandle, GraphPolynomial, ParamFunction, Perturbation,
    PerturbationKind, PlanePoint, PointJet,
};
use crate::hyperbolic::{line_field_at, ChartBox, GraphAxis, LocalManifold};
use crate::jets::Jet;

type Memo = Mutex<HashMap<(Vec<u64>, usize), Jet>>;

fn memo_key(a0: &[f64], order: usize) -> (Vec<u64>, usize) {
    (a0.iter().map(|v| v.to_bits()).collect(), order)
}

fn memoized(
    memo: &Memo,
    a0: &[f64],
    order: usize,
    compute: impl FnOnce() -> Result<Jet, SinkError>,
) -> Result<Jet, DynamicsError> {
    let key = memo_key(a0, order);
    if let Some(j) = memo.lock().expect("memo lock").get(&key) {
        return Ok(j.clone());
    }
    let j = compute()?;
    memo.lock().expect("memo lock").insert(key, j.clone());
    Ok(j)
}

/// `sign · C(a)` measured on a fixed handle.
#[derive(Debug)]
pub struct CriticalValueAmplitude {
    handle: FamilyHandle,
    geometry: Arc<TangencyGeometry>,
    sign: f64,
    memo: Memo,
}

impl CriticalValueAmplitude {
    pub fn new(h: &FamilyHandle, td: &TangencyData, sign: f64) -> Self {
        Self {
            handle: h.clone(),
            geometry: td.geometry.clone(),
            sign,
            memo: Mutex::new(HashMap::new()),
        }
    }
}

impl ParamFunction for CriticalValueAmplitude {
    fn k(&self) -> usize {
        self.handle.k()
    }

    fn jet_at(&self, a0: &[f64], order: usize) -> Result<Jet, DynamicsError> {
        memoized(&self.memo, a0, order, || {
            Ok(measure_critical(&self.handle, &self.geometry, a0, order)?
                .value
                .scale(self.sign))
        })
    }

    fn describe(&self) -> String {
        format!("{:+}·critical value", self.sign)
    }
}

/// `C^d` norm of `a ↦ ρ((a - a_c)/2α)·f(a)`, sampled along each parameter axis.
pub fn parameter_norm(
    f: &dyn ParamFunction,
    a_center: &[f64],
    alpha: f64,
    order: usize,
    samples: usize,
) -> Result<f64, DynamicsError> {
    let bump = BumpProfile::plateau();
    let k = a_center.len();
    let samples = samples.max(2);
    let mut norm = 0.0f64;
    for axis in 0..k {
        for i in 0..samples {
            let mut a = a_center.to_vec();
            a[axis] += 2.0 * alpha * (-1.0 + 2.0 * i as f64 / (samples - 1) as f64);
            let aj = Jet::parameters(order, &a);
            let mut w = f.eval(&aj)?;
            for (j, c) in a_center.iter().enumerate() {
                let t = aj[j].add_scalar(-c).scale(0.5 / alpha);
                w = &w * &bump.jet(&t);
            }
            norm = w.derivatives().iter().fold(norm, |m, v| m.max(v.abs()));
        }
    }
    Ok(norm)
}

/// Largest dyadic `α ≤ 1/4` whose localized amplitude has norm at most `μ/2`.
pub fn alpha_max(
    f: &dyn ParamFunction,
    a_center: &[f64],
    order: usize,
    mu: f64,
    samples: usize,
) -> Result<f64, SinkError> {
    for j in 2..=40 {
        let alpha = 0.5f64.powi(j);
        if parameter_norm(f, a_center, alpha, order, samples)? <= 0.5 * mu {
            return Ok(alpha);
        }
    }
    Err(SinkError::Precondition(format!("no dyadic alpha reaches norm {:e}", 0.5 * mu)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlattenOptions {
    pub mu: f64,
    pub samples: usize,
}

impl Default for FlattenOptions {
    fn default() -> Self {
        Self { mu: 2.0, samples: 101 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlattenReport {
    pub alpha: f64,
    pub alpha0: f64,
    /// Measured `C^d` norm of the localized amplitude.
    pub norm: f64,
    pub center: PlanePoint,
    pub direction: [f64; 2],
}

/// Cancel the critical value near `a0` with an additive layer.
pub fn flatten_perturbation(
    h: &FamilyHandle,
    td: &TangencyData,
    alpha: f64,
    opts: &FlattenOptions,
) -> Result<(FamilyHandle, FlattenReport), SinkError> {
    let amp = Arc::new(CriticalValueAmplitude::new(h, td, -1.0));
    let alpha0 = alpha_max(amp.as_ref(), &td.a0, td.order, opts.mu, opts.samples)?;
    if alpha > alpha0 {
        return Err(SinkError::AlphaTooLarge { alpha, alpha0 });
    }
    let norm = parameter_norm(amp.as_ref(), &td.a0, alpha, td.order, opts.samples)?;
    let center = td
        .geometry
        .perturbation_center(h, td.critical.critical.value(), &td.a0)?;
    let direction = td.geometry.shift_direction();
    let pert = Perturbation::additive("flatten", center, td.theta, td.a0.clone(), alpha, direction, amp);
    let out = push_perturbation(h, pert)?;
    Ok((
        out,
        FlattenReport {
            alpha,
            alpha0,
            norm,
            center,
            direction,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinkOptions {
    /// Bound on the `C^d` norm of the localized shift.
    pub mu: f64,
    pub samples: usize,
    pub rk_steps: usize,
}

impl Default for SinkOptions {
    fn default() -> Self {
        Self {
            mu: 1e-3,
            samples: 21,
            rk_steps: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinkPlan {
    pub n: usize,
    pub period: usize,
    /// Point of `W^u_loc(Ω)` sent onto `P` by `F^n`.
    pub preimage: PlanePoint,
    /// Shift at the working parameter.
    pub shift: f64,
    pub norm: f64,
    pub alpha: f64,
    pub center: PlanePoint,
    pub direction: [f64; 2],
}

/// Shift along the chart's `u` axis placing the image of `c_a` on the leaf through `p^n`.
#[derive(Debug)]
pub struct ShiftAmplitude {
    handle: FamilyHandle,
    geometry: Arc<TangencyGeometry>,
    preimage: PlanePoint,
    rk_steps: usize,
    memo: Memo,
}

impl ParamFunction for ShiftAmplitude {
    fn k(&self) -> usize {
        self.handle.k()
    }

    fn jet_at(&self, a0: &[f64], order: usize) -> Result<Jet, DynamicsError> {
        memoized(&self.memo, a0, order, || {
            shift_amplitude(&self.handle, &self.geometry, &self.preimage, a0, order, self.rk_steps)
        })
    }

    fn describe(&self) -> String {
        "shift onto the stable leaf".into()
    }
}

fn line_field_domain(geom: &TangencyGeometry) -> ChartBox {
    ChartBox {
        center: geom.chart.center.point(),
        half_x: 0.25f64.max(1.3 * geom.source_offset.abs()),
        half_y: 1.5f64.max(1.2 * geom.q0.abs() + 0.1),
    }
}

fn leaf_slope(
    h: &FamilyHandle,
    domain: &ChartBox,
    anchor: &PlanePoint,
    x: f64,
    y: f64,
    a: &[Jet],
) -> Result<Jet, SinkError> {
    let z = PlanePoint::from_parts(anchor.x.anchor(), anchor.x.offset() + x, y);
    let s = line_field_at(h, domain, &z, a)?;
    if s.exited && s.steps <= 1 {
        return Err(SinkError::LineField(format!("no settled slope at {z:?}")));
    }
    Ok(s.slope)
}

/// `u`-coordinate of the leaf through `preimage` at the image height, minus the current `C(a)`.
pub fn shift_amplitude(
    h: &FamilyHandle,
    geom: &TangencyGeometry,
    preimage: &PlanePoint,
    a0: &[f64],
    order: usize,
    rk_steps: usize,
) -> Result<Jet, SinkError> {
    let crit = measure_critical(h, geom, a0, order)?;
    let a = Jet::parameters(order, a0);
    let k = a0.len();
    let omega = geom.chart.center.point();
    let domain = line_field_domain(geom);
    let x0 = preimage.x.diff(&omega.x);
    let v_star = crit.height.add_scalar(geom.q0);
    let y_end = omega.y + v_star.value() + geom.chart.unstable.eval(x0);
    let y_start = preimage.y;
    let steps = rk_steps.max(1);
    let dy = (y_end - y_start) / steps as f64;
    let mut x = Jet::constant(k, order, x0);
    let mut y = y_start;
    let slope = |x: &Jet, y: f64| leaf_slope(h, &domain, &omega, x.value(), y, &a);
    if dy != 0.0 {
        for _ in 0..steps {
            let k1 = slope(&x, y)?;
            let k2 = slope(&(&x + &k1.scale(0.5 * dy)), y + 0.5 * dy)?;
            let k3 = slope(&(&x + &k2.scale(0.5 * dy)), y + 0.5 * dy)?;
            let k4 = slope(&(&x + &k3.scale(dy)), y + dy)?;
            let incr = &(&(&k1 + &k2.scale(2.0)) + &(&k3.scale(2.0) + &k4)) * &Jet::constant(k, order, dy / 6.0);
            x = &x + &incr;
            y += dy;
        }
    }
    // Follow the parameter motion of the target height to first order along the leaf.
    let end_slope = slope(&x, y_end)?;
    let y_jet = v_star.add_scalar(omega.y + geom.chart.unstable.eval(x0));
    let x_jet = &x + &(&end_slope * &v_star.with_value(0.0));
    let c = &geom.chart.center;
    let p = PointJet {
        anchor: c.anchor,
        x: &c.x.with_order(order) + &x_jet,
        y: y_jet,
    };
    let (u, _) = geom.to_chart_jet(&p, &a);
    Ok(&u - &crit.value)
}

/// Point of `W^u_loc(Ω)` mapped onto the source point by `F^n`.
pub fn unstable_preimage(
    h: &FamilyHandle,
    td: &TangencyData,
    n: usize,
) -> Result<PlanePoint, SinkError> {
    let geom = &td.geometry;
    let sigma = td.omega.unstable_multiplier.value();
    let target = geom.chart.to_chart(&geom.source).0;
    let mut t = target / sigma.powi(n as i32);
    for _ in 0..60 {
        let mut p = geom.chart.unstable.point_at(t);
        for _ in 0..n {
            p = h.eval_point(&p, &td.a0)?;
        }
        let r = geom.chart.to_chart(&p).0 - target;
        let step = r / sigma.powi(n as i32);
        t -= step;
        if r == 0.0 || step.abs() <= 1e-17 * t.abs() {
            break;
        }
    }
    Ok(geom.chart.unstable.point_at(t))
}

/// Add the shift sending the tangency image onto the leaf through `p^n`.
pub fn sink_translation_perturbation(
    h: &FamilyHandle,
    td: &TangencyData,
    alpha: f64,
    n: usize,
    opts: &SinkOptions,
) -> Result<(FamilyHandle, SinkPlan), SinkError> {
    if n == 0 {
        return Err(SinkError::Precondition("n must be positive".into()));
    }
    let diss = dissipation_check(&td.omega, h.d());
    if !diss.holds() {
        return Err(SinkError::NotDissipative(format!(
            "det margin {:e}, line-field margin {:e}",
            diss.determinant_margin, diss.line_field_margin
        )));
    }
    let preimage = unstable_preimage(h, td, n)?;
    let amp = Arc::new(ShiftAmplitude {
        handle: h.clone(),
        geometry: td.geometry.clone(),
        preimage,
        rk_steps: opts.rk_steps,
        memo: Mutex::new(HashMap::new()),
    });
    let norm = parameter_norm(amp.as_ref(), &td.a0, alpha, td.order, opts.samples)?;
    if norm > opts.mu {
        return Err(SinkError::NTooSmall { norm, mu: opts.mu });
    }
    let shift = amp.jet_at(&td.a0, 0)?.value();
    let critical = measure_critical(h, &td.geometry, &td.a0, 0)?.critical.value();
    let center = td.geometry.perturbation_center(h, critical, &td.a0)?;
    let direction = td.geometry.shift_direction();
    let pert = Perturbation::additive("sink", center, td.theta, td.a0.clone(), alpha, direction, amp);
    let out = push_perturbation(h, pert)?;
    Ok((
        out,
        SinkPlan {
            n,
            period: td.geometry.steps + n,
            preimage,
            shift,
            norm,
            alpha,
            center,
            direction,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapReport {
    pub distance: f64,
    /// `2 · distance · L` with `L` the largest vertical Lipschitz factor near the centre.
    pub size_bound: f64,
    /// Largest sampled `|f∘τ - f|`.
    pub size: f64,
    pub identity: bool,
}

/// Coefficients of `t ↦ p(t + delta)`.
fn shift_polynomial(coeffs: &[f64], delta: f64) -> Vec<f64> {
    let mut out = coeffs.to_vec();
    let n = out.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            out[j] += delta * out[j + 1];
        }
    }
    out
}

fn absolute_graph(m: &LocalManifold, center: &PlanePoint) -> GraphPolynomial {
    let own = m.center.point();
    let mut coeffs: Vec<f64> = m.coeffs.iter().map(Jet::value).collect();
    coeffs[0] += own.y;
    GraphPolynomial {
        coeffs: shift_polynomial(&coeffs, center.x.diff(&own.x)),
    }
}

/// Snap `source` onto `target` inside the `θ`-ball around the source centre.
pub fn quasi_snap_perturbation(
    h: &FamilyHandle,
    source: &LocalManifold,
    target: &LocalManifold,
    theta: f64,
    alpha: f64,
    a0: &[f64],
) -> Result<(FamilyHandle, SnapReport), SinkError> {
    if source.axis != GraphAxis::OverX || target.axis != GraphAxis::OverX {
        return Err(SinkError::Precondition("snap needs graphs over x".into()));
    }
    let dist = source.distance(target, 32);
    let distance = dist.jet.max(dist.c1);
    let limit = 0.1 * theta;
    if distance > limit {
        return Err(SinkError::DistanceTooLarge { distance, limit });
    }
    if distance == 0.0 {
        return Ok((
            h.clone(),
            SnapReport {
                distance,
                size_bound: 0.0,
                size: 0.0,
                identity: true,
            },
        ));
    }
    let center = source.center.point();
    let src = absolute_graph(source, &center);
    let tgt = absolute_graph(target, &center);
    let mut lip = 0.0f64;
    let mut size = 0.0f64;
    for i in 0..5 {
        let dx = theta * (-0.5 + 0.25 * i as f64);
        let z = PlanePoint::from_parts(center.x.anchor(), center.x.offset() + dx, src.eval(dx));
        let jac = h.jacobian_at(&z, a0)?;
        lip = lip.max(jac[0][1].abs() + jac[1][1].abs());
        let moved = PlanePoint::from_parts(z.x.anchor(), z.x.offset(), tgt.eval(dx));
        size = size.max(h.eval_point(&moved, a0)?.distance(&h.eval_point(&z, a0)?));
    }
    let pert = Perturbation {
        label: "snap".into(),
        center,
        radius: theta,
        a_center: a0.to_vec(),
        alpha,
        kind: PerturbationKind::Snap { source: src, target: tgt },
    };
    let out = push_perturbation(h, pert)?;
    Ok((
        out,
        SnapReport {
            distance,
            size_bound: 2.0 * distance * lip.max(1.0),
            size,
            identity: false,
        },
    ))
}
