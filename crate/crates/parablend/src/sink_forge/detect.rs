//! Sink search by iteration and the trapping-box certificate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{measure_critical, SinkError, TangencyData};
use crate::dynamics::{jacobian_along, FamilyHandle, PlanePoint, PointJet};
use crate::hyperbolic::iterate_jet;
use crate::jets::Jet;
use crate::linalg::mat2_eigenvalues;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMethod {
    Iteration,
    TrappingBox,
}

/// Seed rectangle `center ± (half_x, half_y)` sampled on a `seeds × seeds` grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub center: PlanePoint,
    pub half_x: f64,
    pub half_y: f64,
    pub seeds: usize,
}

impl SearchBox {
    /// Grid seeds; a zero half-width collapses that axis to the centre line.
    pub fn seeds(&self) -> Vec<PlanePoint> {
        let n = self.seeds.max(1);
        let axis = |half: f64| -> Vec<f64> {
            if n == 1 || half == 0.0 {
                vec![0.0]
            } else {
                (0..n).map(|m| half * (-1.0 + 2.0 * m as f64 / (n - 1) as f64)).collect()
            }
        };
        let mut out = Vec::new();
        for dx in axis(self.half_x) {
            for dy in axis(self.half_y) {
                out.push(PlanePoint::from_parts(
                    self.center.x.anchor(),
                    self.center.x.offset() + dx,
                    self.center.y + dy,
                ));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinkRecord {
    pub period: usize,
    pub point: PlanePoint,
    pub orbit: Vec<PlanePoint>,
    /// Eigenvalues of the period map as `(re, im)`.
    pub multipliers: [(f64, f64); 2],
    pub a_box: Vec<(f64, f64)>,
    pub method: DetectionMethod,
    pub determinant: f64,
    /// No orbit point has angular coordinate in the strip `[3.5, 4.5]` (mod 6).
    pub avoids_strip: bool,
}

impl SinkRecord {
    pub fn moduli(&self) -> [f64; 2] {
        self.multipliers.map(|(re, im)| re.hypot(im))
    }
}

/// Whether the angular coordinate lies in `[3.5, 4.5]` on `ℝ/6ℤ`.
pub fn in_excluded_strip(p: &PlanePoint) -> bool {
    let v = p.x.value();
    (-2.5..=-1.5).contains(&v)
}

fn period_map(h: &FamilyHandle, z: &PlanePoint, a: &[f64], p: usize) -> Result<(PlanePoint, [[f64; 2]; 2]), SinkError> {
    let k = a.len();
    let aj: Vec<Jet> = a.iter().map(|&v| Jet::constant(k, 0, v)).collect();
    let mut orbit = PointJet::constant(z, k, 0);
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for _ in 0..p {
        let jac = jacobian_along(h, &orbit, &aj, 1)?;
        let s = jac.matrix();
        m = [
            [s[0][0] * m[0][0] + s[0][1] * m[1][0], s[0][0] * m[0][1] + s[0][1] * m[1][1]],
            [s[1][0] * m[0][0] + s[1][1] * m[1][0], s[1][0] * m[0][1] + s[1][1] * m[1][1]],
        ];
        orbit = jac.image;
    }
    Ok((orbit.point(), m))
}

fn refine(h: &FamilyHandle, z: &PlanePoint, a: &[f64], p: usize) -> Result<(PlanePoint, [[f64; 2]; 2]), SinkError> {
    let mut z = *z;
    let (mut img, mut m) = period_map(h, &z, a, p)?;
    let mut res = img.distance(&z);
    for _ in 0..8 {
        if res <= 1e-16 {
            break;
        }
        let rx = img.x.diff(&z.x);
        let ry = img.y - z.y;
        let b = [[m[0][0] - 1.0, m[0][1]], [m[1][0], m[1][1] - 1.0]];
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = -(b[1][1] * rx - b[0][1] * ry) / det;
        let dy = -(b[0][0] * ry - b[1][0] * rx) / det;
        let cand = PlanePoint::from_parts(z.x.anchor(), z.x.offset() + dx, z.y + dy);
        let Ok((ci, cm)) = period_map(h, &cand, a, p) else { break };
        let cres = ci.distance(&cand);
        if !(cres < res) {
            break;
        }
        z = cand;
        img = ci;
        m = cm;
        res = cres;
    }
    if res > 1e-9 {
        return Err(SinkError::Precondition(format!("period-{p} orbit does not close: {res:e}")));
    }
    Ok((z, m))
}

fn orbit_of(h: &FamilyHandle, z: &PlanePoint, a: &[f64], p: usize) -> Result<Vec<PlanePoint>, SinkError> {
    let mut out = Vec::with_capacity(p);
    let mut w = *z;
    for _ in 0..p {
        out.push(w);
        w = h.eval_point(&w, a)?;
    }
    Ok(out)
}

fn lexicographic(p: &PlanePoint, q: &PlanePoint) -> std::cmp::Ordering {
    p.x.value()
        .total_cmp(&q.x.value())
        .then(p.y.total_cmp(&q.y))
}

enum Candidate {
    Sink(SinkRecord),
    /// Closed orbit that is not attracting.
    Rejected(usize, Vec<PlanePoint>),
}

fn classify(h: &FamilyHandle, z: &PlanePoint, a: &[f64], p: usize) -> Result<Candidate, SinkError> {
    let (z, m) = refine(h, z, a, p)?;
    let ev = mat2_eigenvalues(&m);
    let multipliers = [ev[0], ev[1]];
    let orbit = orbit_of(h, &z, a, p)?;
    if multipliers.iter().any(|(re, im)| re.hypot(*im) >= 1.0 - 1e-6) {
        return Ok(Candidate::Rejected(p, orbit));
    }
    let point = *orbit.iter().min_by(|p, q| lexicographic(p, q)).expect("nonempty orbit");
    let avoids_strip = !orbit.iter().any(in_excluded_strip);
    Ok(Candidate::Sink(SinkRecord {
        period: p,
        point,
        orbit,
        multipliers,
        a_box: a.iter().map(|&v| (v, v)).collect(),
        method: DetectionMethod::Iteration,
        determinant: m[0][0] * m[1][1] - m[0][1] * m[1][0],
        avoids_strip,
    }))
}

const MAX_STEPS: usize = 10_000;
const CLOSE: f64 = 1e-9;
/// Steps spent on a rejected cycle before the seed is abandoned.
const PARKED: usize = 200;

fn near_cycle(z: &PlanePoint, cycle: &[PlanePoint], tol: f64) -> bool {
    cycle.iter().any(|c| z.distance(c) < tol)
}

fn follow_seed(h: &FamilyHandle, seed: &PlanePoint, a: &[f64], max_period: usize) -> Option<SinkRecord> {
    let mut history: Vec<PlanePoint> = Vec::with_capacity(MAX_STEPS);
    let mut rejected: Vec<(usize, Vec<PlanePoint>)> = Vec::new();
    let mut parked = 0usize;
    let mut z = *seed;
    history.push(z);
    for _ in 0..MAX_STEPS {
        z = h.eval_point(&z, a).ok()?;
        if !z.is_finite() {
            return None;
        }
        if rejected.iter().any(|(_, c)| near_cycle(&z, c, 1e-12)) {
            parked += 1;
            if parked > PARKED {
                return None;
            }
        } else {
            parked = 0;
        }
        for p in 1..=max_period.min(history.len()) {
            if z.distance(&history[history.len() - p]) >= CLOSE {
                continue;
            }
            if rejected.iter().any(|(rp, c)| p % rp == 0 && near_cycle(&z, c, CLOSE)) {
                continue;
            }
            match classify(h, &z, a, p) {
                Ok(Candidate::Sink(r)) => return Some(r),
                Ok(Candidate::Rejected(rp, c)) => rejected.push((rp, c)),
                Err(_) => {}
            }
        }
        history.push(z);
    }
    None
}

fn same_cycle(r: &SinkRecord, s: &SinkRecord) -> bool {
    r.period == s.period && r.orbit.iter().any(|p| p.distance(&s.point) < 1e-7)
}

/// Sinks of period at most `max_period` attracting seeds of `region`, for each parameter in `a_grid`.
pub fn detect_sinks(h: &FamilyHandle, region: &SearchBox, a_grid: &[Vec<f64>], max_period: usize) -> Vec<SinkRecord> {
    let seeds = region.seeds();
    a_grid
        .par_iter()
        .map(|a| {
            let mut found: Vec<SinkRecord> = Vec::new();
            for s in &seeds {
                if let Some(r) = follow_seed(h, s, a, max_period) {
                    if !found.iter().any(|f| same_cycle(f, &r)) {
                        found.push(r);
                    }
                }
            }
            found
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// `φ_{a,n}` in the source chart: `F^{N+n}` read back at the source point.
pub fn return_map(h: &FamilyHandle, td: &TangencyData, n: usize, a: &[f64], x: &Jet, y: &Jet) -> Result<(Jet, Jet), SinkError> {
    let (k, d) = (x.k(), x.d());
    let aj: Vec<Jet> = a.iter().map(|&v| Jet::constant(k, d, v)).collect();
    let geom = &td.geometry;
    let z = geom.source_point(x, y, &aj);
    let img = iterate_jet(h, &z, &aj, geom.steps + n)?;
    Ok(geom.to_source_jet(&img, &aj))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrappingCertificate {
    pub n: usize,
    pub a: Vec<f64>,
    pub kappa: f64,
    pub sigma_prime: f64,
    pub lambda_prime: f64,
    /// Box centre in source-chart coordinates.
    pub center: (f64, f64),
    pub half_x: f64,
    pub half_y: f64,
    /// Smallest `C` with every sampled entry below `C` times the reference matrix.
    pub constant: f64,
    /// Largest per-entry ratio to the reference matrix.
    pub entry_constants: [[f64; 2]; 2],
    /// `C κ^{-n} (1 + C n |σ'λ'|^n)`.
    pub bound: f64,
    /// Largest sampled operator norm in `N(u, v) = |u| + |σ'^n v|`.
    pub norm: f64,
    pub maps_into: bool,
    /// Fixed point of the return map in source-chart coordinates.
    pub fixed_point: (f64, f64),
    pub fixed_point_plane: PlanePoint,
    pub fixed_point_in_box: bool,
}

impl TrappingCertificate {
    pub fn holds(&self) -> bool {
        self.norm < 1.0 && self.maps_into && self.fixed_point_in_box
    }
}

const GRID: usize = 9;

/// Sample the return map on the trapping box around `P + c_a`.
pub fn trapping_box_check(h: &FamilyHandle, td: &TangencyData, n: usize, a0: &[f64]) -> Result<TrappingCertificate, SinkError> {
    if n == 0 {
        return Err(SinkError::Precondition("the trapping box needs n ≥ 1".into()));
    }
    let sigma = td.omega.unstable_multiplier.value().abs();
    let lambda = td.omega.stable_multiplier.value().abs();
    let kappa = 1.05f64.min((sigma * lambda).powf(-0.25));
    let sigma_p = kappa * kappa * sigma;
    let lambda_p = kappa * kappa * lambda;
    if !(sigma_p * lambda_p < 1.0) {
        return Err(SinkError::Precondition(format!("|σ'λ'| = {} is not below one", sigma_p * lambda_p)));
    }
    let ni = n as i32;
    let sn = sigma_p.powi(ni);
    let half_x = sn.recip();
    let half_y = sigma_p.powi(-3 * ni);
    let c = measure_critical(h, &td.geometry, a0, 0)?.critical.value();
    let center = (c, 0.0);
    let k = a0.len();
    let kk = k + 2;
    let var = |x: f64, y: f64| (Jet::variable(kk, 1, k, x), Jet::variable(kk, 1, k + 1, y));

    let kn = kappa.powi(-ni);
    let reference = |dx: f64, spacing: f64| {
        let lower = n as f64 * lambda_p.powi(ni);
        [[kn * sn * dx.abs().max(spacing), kn * sn], [kn * lower, kn * lower]]
    };
    let spacing_x = 2.0 * half_x / (GRID - 1) as f64;
    let spacing_y = 2.0 * half_y / (GRID - 1) as f64;
    let mut entry_constants = [[0.0f64; 2]; 2];
    let mut norm = 0.0f64;
    let mut lip = [[0.0f64; 2]; 2];
    let mut reach = [0.0f64; 2];
    let mut worst: Option<(usize, usize, (f64, f64), f64)> = None;
    for i in 0..GRID {
        for j in 0..GRID {
            let dx = -half_x + spacing_x * i as f64;
            let dy = -half_y + spacing_y * j as f64;
            let (x, y) = var(center.0 + dx, center.1 + dy);
            let (u, v) = return_map(h, td, n, a0, &x, &y)?;
            let m = [
                [u.split_coefficient(k, &[1, 0], 0).value(), u.split_coefficient(k, &[0, 1], 0).value()],
                [v.split_coefficient(k, &[1, 0], 0).value(), v.split_coefficient(k, &[0, 1], 0).value()],
            ];
            let r = reference(dx, spacing_x);
            for (a, row) in m.iter().enumerate() {
                for (b, e) in row.iter().enumerate() {
                    entry_constants[a][b] = entry_constants[a][b].max(e.abs() / r[a][b]);
                    lip[a][b] = lip[a][b].max(e.abs());
                }
            }
            let col1 = m[0][0].abs() + sn * m[1][0].abs();
            let col2 = m[0][1].abs() / sn + m[1][1].abs();
            let here = col1.max(col2);
            if here >= 1.0 && worst.is_none_or(|w| here > w.3) {
                worst = Some((if col1 >= col2 { 0 } else { 1 }, 0, (dx, dy), here));
            }
            norm = norm.max(here);
            reach[0] = reach[0].max((u.value() - center.0).abs());
            reach[1] = reach[1].max((v.value() - center.1).abs());
        }
    }
    if let Some((col, _, point, value)) = worst {
        return Err(SinkError::Precondition(format!(
            "column {} of the return-map Jacobian has N-norm {value:e} at offset {point:?}",
            col + 1
        )));
    }
    let constant = entry_constants.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
    let bound = constant * kn * (1.0 + constant * n as f64 * (sigma_p * lambda_p).powi(ni));
    let slack_x = 0.5 * (lip[0][0] * spacing_x + lip[0][1] * spacing_y);
    let slack_y = 0.5 * (lip[1][0] * spacing_x + lip[1][1] * spacing_y);
    let maps_into = reach[0] + slack_x <= half_x && reach[1] + slack_y <= half_y;

    // Newton on φ(z) = z from the box centre.
    let mut fx = center;
    for _ in 0..20 {
        let (x, y) = var(fx.0, fx.1);
        let (u, v) = return_map(h, td, n, a0, &x, &y)?;
        let r = (u.value() - fx.0, v.value() - fx.1);
        if r.0 == 0.0 && r.1 == 0.0 {
            break;
        }
        let b = [
            [u.split_coefficient(k, &[1, 0], 0).value() - 1.0, u.split_coefficient(k, &[0, 1], 0).value()],
            [v.split_coefficient(k, &[1, 0], 0).value(), v.split_coefficient(k, &[0, 1], 0).value() - 1.0],
        ];
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let step = ((b[1][1] * r.0 - b[0][1] * r.1) / det, (b[0][0] * r.1 - b[1][0] * r.0) / det);
        fx = (fx.0 - step.0, fx.1 - step.1);
        if step.0.abs() <= 1e-3 * half_x && step.1.abs() <= 1e-3 * half_y {
            break;
        }
    }
    let fixed_point_in_box = (fx.0 - center.0).abs() <= half_x && (fx.1 - center.1).abs() <= half_y;
    Ok(TrappingCertificate {
        n,
        a: a0.to_vec(),
        kappa,
        sigma_prime: sigma_p,
        lambda_prime: lambda_p,
        center,
        half_x,
        half_y,
        constant,
        entry_constants,
        bound,
        norm,
        maps_into,
        fixed_point: fx,
        fixed_point_plane: td.geometry.source_plane(fx.0, fx.1),
        fixed_point_in_box,
    })
}
