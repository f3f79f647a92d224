//! Saddle continuation, local invariant manifolds, coded orbits, line fields and charts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    jacobian, jacobian_along, q_branch_inverse, DynamicsError, FamilyHandle, PlanePoint, PointJet,
};
use crate::ifs_blender::SymbolWord;
use crate::jets::{Jet, JetError};
use crate::linalg::{chebyshev_nodes, mat2_eigenvalues, mat2_identity, mat2_mul, polyfit_operator, Lu, Mat2};

#[derive(Debug, Error)]
pub enum HyperbolicError {
    #[error("Newton iteration diverged: {0}")]
    NewtonDivergence(String),
    #[error("multipliers {0} and {1} are not hyperbolic")]
    NonHyperbolic(f64, f64),
    #[error("graph transform is not contracting (coefficient growth over {0} iterations)")]
    NonContraction(usize),
    #[error("graph transform did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("coded orbit continuation failed: {0}")]
    Coding(String),
    #[error("line field iteration failed: {0}")]
    LineField(String),
    #[error("seed left the region table: {0}")]
    LeftDomain(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

pub(crate) fn constant_params(a0: &[f64]) -> Vec<Jet> {
    a0.iter().map(|&v| Jet::constant(a0.len(), 0, v)).collect()
}

/// Image and Jacobian at a real point.
pub fn step_with_jacobian(h: &FamilyHandle, z: &PlanePoint, a0: &[f64]) -> Result<(PlanePoint, Mat2), HyperbolicError> {
    let jac = jacobian(h, z, &constant_params(a0), 1)?;
    Ok((jac.image.point(), jac.matrix()))
}

/// `F^steps(z)` and the product of Jacobians along the way.
pub fn iterate_with_jacobian(
    h: &FamilyHandle,
    z: &PlanePoint,
    a0: &[f64],
    steps: usize,
) -> Result<(PlanePoint, Mat2), HyperbolicError> {
    let mut p = *z;
    let mut m = mat2_identity();
    for _ in 0..steps {
        let (q, j) = step_with_jacobian(h, &p, a0)?;
        m = mat2_mul(&j, &m);
        p = q;
    }
    Ok((p, m))
}

pub fn iterate_jet(h: &FamilyHandle, z: &PointJet, a: &[Jet], steps: usize) -> Result<PointJet, HyperbolicError> {
    let mut p = z.clone();
    for _ in 0..steps {
        p = h.eval(&p, a)?;
    }
    Ok(p)
}

fn displace(p: &PlanePoint, dx: f64, dy: f64) -> PlanePoint {
    PlanePoint {
        x: p.x.shifted(dx),
        y: p.y + dy,
    }
}

fn jet_displace(p: &PointJet, dx: &Jet, dy: &Jet) -> PointJet {
    PointJet {
        anchor: p.anchor,
        x: &p.x + dx,
        y: &p.y + dy,
    }
    .renormalized()
}

/// Saddle data with parameter jets.
#[derive(Clone, Debug)]
pub struct HyperbolicPointData {
    pub a0: Vec<f64>,
    pub location: PointJet,
    pub unstable_multiplier: Jet,
    pub stable_multiplier: Jet,
    /// Unit vector, positive x-component.
    pub unstable_direction: [Jet; 2],
    /// Unit vector, positive y-component.
    pub stable_direction: [Jet; 2],
    pub jacobian: [[Jet; 2]; 2],
    pub chart_size: f64,
}

impl HyperbolicPointData {
    pub fn determinant(&self) -> Jet {
        let j = &self.jacobian;
        &(&j[0][0] * &j[1][1]) - &(&j[0][1] * &j[1][0])
    }

    pub fn point(&self) -> PlanePoint {
        self.location.point()
    }
}

fn eigen_data(j: &[[Jet; 2]; 2]) -> Result<(Jet, Jet, [Jet; 2], [Jet; 2]), HyperbolicError> {
    let tr = &j[0][0] + &j[1][1];
    let det = &(&j[0][0] * &j[1][1]) - &(&j[0][1] * &j[1][0]);
    let half = tr.scale(0.5);
    let disc = &(&half * &half) - &det;
    if disc.value() <= 0.0 {
        return Err(HyperbolicError::NonHyperbolic(half.value(), half.value()));
    }
    let root = disc.sqrt();
    let big = if half.value() >= 0.0 { &half + &root } else { &half - &root };
    let small = &det * &big.recip();
    if !(big.value().abs() > 1.0 + 1e-6 && small.value().abs() < 1.0 - 1e-6) {
        return Err(HyperbolicError::NonHyperbolic(big.value(), small.value()));
    }
    let vector = |mu: &Jet, positive_x: bool| -> [Jet; 2] {
        let v1 = [j[0][1].clone(), mu - &j[0][0]];
        let v2 = [mu - &j[1][1], j[1][0].clone()];
        let n1 = v1[0].value().hypot(v1[1].value());
        let n2 = v2[0].value().hypot(v2[1].value());
        let v = if n1 >= n2 { v1 } else { v2 };
        let norm = (&(&v[0] * &v[0]) + &(&v[1] * &v[1])).sqrt().recip();
        let mut out = [&v[0] * &norm, &v[1] * &norm];
        let flip = if positive_x { out[0].value() < 0.0 } else { out[1].value() < 0.0 };
        if flip {
            out = [-&out[0], -&out[1]];
        }
        out
    };
    let unstable_dir = vector(&big, true);
    let stable_dir = vector(&small, false);
    Ok((big, small, unstable_dir, stable_dir))
}

/// Newton at constant order, then jet refinement with the frozen Jacobian.
pub fn continue_fixed_point(
    h: &FamilyHandle,
    guess: &PlanePoint,
    a0: &[f64],
    order: usize,
) -> Result<HyperbolicPointData, HyperbolicError> {
    let mut z = *guess;
    let mut converged = false;
    for _ in 0..80 {
        let (img, j) = step_with_jacobian(h, &z, a0)?;
        let r = [img.x.diff(&z.x), img.y - z.y];
        if r[0].abs().max(r[1].abs()) <= 1e-15 {
            converged = true;
            break;
        }
        let m = [[j[0][0] - 1.0, j[0][1]], [j[1][0], j[1][1] - 1.0]];
        let lu = Lu::factor(&[m[0].to_vec(), m[1].to_vec()])
            .ok_or_else(|| HyperbolicError::NewtonDivergence("singular Jacobian".into()))?;
        let dz = lu.solve(&[-r[0], -r[1]]);
        if !dz.iter().all(|v| v.is_finite()) || dz[0].abs().max(dz[1].abs()) > 10.0 {
            return Err(HyperbolicError::NewtonDivergence(format!("step {dz:?} from {z:?}")));
        }
        z = displace(&z, dz[0], dz[1]);
        if dz[0].abs().max(dz[1].abs()) <= 1e-17 {
            converged = true;
            break;
        }
    }
    let (img, j) = step_with_jacobian(h, &z, a0)?;
    let resid = img.x.diff(&z.x).abs().max((img.y - z.y).abs());
    if !converged && resid > 1e-12 {
        return Err(HyperbolicError::NewtonDivergence(format!("residual {resid:e}")));
    }
    let a = Jet::parameters(order, a0);
    let lu = Lu::factor(&[vec![j[0][0] - 1.0, j[0][1]], vec![j[1][0], j[1][1] - 1.0]])
        .ok_or_else(|| HyperbolicError::NewtonDivergence("singular Jacobian".into()))?;
    let mut zj = PointJet::constant(&z, a0.len(), order);
    for _ in 0..=order {
        let img = h.eval(&zj, &a)?;
        let r = [img.x_diff(zj.anchor, &zj.x), &img.y - &zj.y];
        let dz = lu.solve_jets(&r);
        zj = jet_displace(&zj, &-&dz[0], &-&dz[1]);
    }
    let jac = jacobian_along(h, &zj, &a, 1)?;
    let (big, small, ud, sd) = eigen_data(&jac.first)?;
    Ok(HyperbolicPointData {
        a0: a0.to_vec(),
        location: zj,
        unstable_multiplier: big,
        stable_multiplier: small,
        unstable_direction: ud,
        stable_direction: sd,
        jacobian: jac.first,
        chart_size: 0.2,
    })
}

/// Periodic orbit `u_0, …, u_{p-1}` with `u_j ∈ Ỹ_{δ_{-(p-j)}}` and `F(u_{p-1}) = u_0`.
#[derive(Clone, Debug)]
pub struct CodedOrbit {
    /// One period, most recent letter first.
    pub word: SymbolWord,
    pub a0: Vec<f64>,
    pub points: Vec<PointJet>,
}

impl CodedOrbit {
    pub fn period(&self) -> usize {
        self.points.len()
    }

    /// The point whose backward coding is the word.
    pub fn point(&self) -> &PointJet {
        &self.points[0]
    }

    /// Letter of the region containing `u_j`.
    pub fn letter_at(&self, j: usize) -> &[i8] {
        let p = self.period();
        &self.word.letters()[p - 1 - j]
    }
}

fn letter_inverse(letter: &[i8], x: f64) -> f64 {
    letter.iter().rev().fold(x, |acc, &s| q_branch_inverse(s, acc))
}

/// Hyperbolic continuation of the periodic coding by Newton on the period-`p` system.
pub fn continue_coded_orbit(
    h: &FamilyHandle,
    word: &SymbolWord,
    a0: &[f64],
    order: usize,
) -> Result<CodedOrbit, HyperbolicError> {
    let p = word.depth();
    if p == 0 {
        return Err(HyperbolicError::Coding("empty word".into()));
    }
    if word.letter_len() != h.letters() {
        return Err(HyperbolicError::Coding(format!(
            "letters have {} signs, the family uses {}",
            word.letter_len(),
            h.letters()
        )));
    }
    let letter = |j: usize| &word.letters()[p - 1 - j];
    let mut xs = vec![0.0; p];
    for _ in 0..60 {
        for j in (0..p).rev() {
            let next = xs[(j + 1) % p];
            xs[j] = letter_inverse(letter(j), next);
        }
    }
    let mut u: Vec<PlanePoint> = xs.iter().map(|&x| PlanePoint::new(x, 0.0)).collect();
    let n = 2 * p;
    let mut factor = None;
    for iter in 0..60 {
        let mut rows = vec![vec![0.0; n]; n];
        let mut rhs = vec![0.0; n];
        let mut worst = 0.0f64;
        for j in 0..p {
            let (img, jm) = step_with_jacobian(h, &u[j], a0)?;
            let nxt = &u[(j + 1) % p];
            let r = [img.x.diff(&nxt.x), img.y - nxt.y];
            worst = worst.max(r[0].abs()).max(r[1].abs());
            for a in 0..2 {
                for b in 0..2 {
                    rows[2 * j + a][2 * j + b] += jm[a][b];
                }
                rows[2 * j + a][2 * ((j + 1) % p) + a] -= 1.0;
                rhs[2 * j + a] = -r[a];
            }
        }
        let lu = Lu::factor(&rows).ok_or_else(|| HyperbolicError::Coding("singular orbit system".into()))?;
        if worst <= 1e-15 || iter == 59 {
            factor = Some(lu);
            if worst > 1e-11 {
                return Err(HyperbolicError::Coding(format!("residual {worst:e}")));
            }
            break;
        }
        let dz = lu.solve(&rhs);
        if !dz.iter().all(|v| v.is_finite()) {
            return Err(HyperbolicError::Coding("non-finite Newton step".into()));
        }
        for j in 0..p {
            u[j] = displace(&u[j], dz[2 * j], dz[2 * j + 1]);
        }
    }
    let lu = factor.expect("factor set on exit");
    for (j, pt) in u.iter().enumerate() {
        let r = h
            .region_at(pt.x.value(), pt.y)
            .map(|i| h.regions()[i].delta.clone());
        if r.as_deref() != Some(letter(j)) {
            return Err(HyperbolicError::Coding(format!(
                "orbit point {j} at {:?} is not in region {:?}",
                pt,
                letter(j)
            )));
        }
    }
    let k = a0.len();
    let a = Jet::parameters(order, a0);
    let mut uj: Vec<PointJet> = u.iter().map(|pt| PointJet::constant(pt, k, order)).collect();
    for _ in 0..=order {
        let mut res = Vec::with_capacity(n);
        for j in 0..p {
            let img = h.eval(&uj[j], &a)?;
            let nxt = &uj[(j + 1) % p];
            res.push(img.x_diff(nxt.anchor, &nxt.x));
            res.push(&img.y - &nxt.y);
        }
        let dz = lu.solve_jets(&res);
        for j in 0..p {
            uj[j] = jet_displace(&uj[j], &-&dz[2 * j], &-&dz[2 * j + 1]);
        }
    }
    Ok(CodedOrbit {
        word: word.clone(),
        a0: a0.to_vec(),
        points: uj,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Stable,
    Unstable,
}

/// Graph variable of a local manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphAxis {
    /// `y - y_c = g(x - x_c)`.
    OverX,
    /// `x - x_c = g(y - y_c)`.
    OverY,
}

#[derive(Clone, Copy, Debug)]
pub enum ManifoldBase<'a> {
    Fixed(&'a HyperbolicPointData),
    Coded(&'a CodedOrbit),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphOptions {
    pub degree: usize,
    pub half_width: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self {
            degree: 5,
            half_width: 0.2,
            tolerance: 1e-12,
            max_iterations: 500,
        }
    }
}

/// Polynomial graph with jet coefficients through a base point.
#[derive(Clone, Debug)]
pub struct LocalManifold {
    pub side: Side,
    pub axis: GraphAxis,
    pub center: PointJet,
    pub coeffs: Vec<Jet>,
    pub half_width: f64,
    pub a0: Vec<f64>,
    /// Number of map applications per graph-transform step.
    pub period: usize,
    pub iterations: usize,
}

fn poly_eval(coeffs: &[Jet], t: &Jet) -> Jet {
    let mut acc = Jet::zero(t.k(), t.d());
    for c in coeffs.iter().rev() {
        acc = &(&acc * t) + c;
    }
    acc
}

impl LocalManifold {
    pub fn order(&self) -> usize {
        self.coeffs[0].d()
    }

    /// Offset of the dependent coordinate at graph variable `t`, constant order.
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c.value())
    }

    pub fn slope(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, c)| acc * t + i as f64 * c.value())
    }

    pub fn eval_jet(&self, t: &Jet) -> Jet {
        poly_eval(&self.coeffs, t)
    }

    pub fn point_jet(&self, t: &Jet) -> PointJet {
        let g = self.eval_jet(t);
        let (dx, dy) = match self.axis {
            GraphAxis::OverX => (t.clone(), g),
            GraphAxis::OverY => (g, t.clone()),
        };
        jet_displace(&self.center, &dx, &dy)
    }

    pub fn point_at(&self, t: f64) -> PlanePoint {
        let c = self.center.point();
        let g = self.eval(t);
        match self.axis {
            GraphAxis::OverX => displace(&c, t, g),
            GraphAxis::OverY => displace(&c, g, t),
        }
    }

    /// Offsets `(along, across)` of a point relative to the centre.
    pub fn split(&self, p: &PlanePoint) -> (f64, f64) {
        let c = self.center.point();
        let dx = p.x.diff(&c.x);
        let dy = p.y - c.y;
        match self.axis {
            GraphAxis::OverX => (dx, dy),
            GraphAxis::OverY => (dy, dx),
        }
    }

    fn split_jet(&self, p: &PointJet) -> (Jet, Jet) {
        let dx = p.x_diff(self.center.anchor, &self.center.x);
        let dy = &p.y - &self.center.y;
        match self.axis {
            GraphAxis::OverX => (dx, dy),
            GraphAxis::OverY => (dy, dx),
        }
    }

    /// Height of a horizontal-ish graph at the centre as a jet.
    pub fn height(&self) -> Jet {
        match self.axis {
            GraphAxis::OverX => &self.center.y + &self.coeffs[0],
            GraphAxis::OverY => self.center.x_value() + &self.coeffs[0],
        }
    }

    /// Largest distance between graph values of `self` and `other` on the nodes.
    pub fn distance(&self, other: &LocalManifold, nodes: usize) -> ManifoldDistance {
        let w = self.half_width.min(other.half_width);
        let mut c0 = 0.0f64;
        let mut c1 = 0.0f64;
        for t in chebyshev_nodes(nodes) {
            let t = t * w;
            c0 = c0.max((self.eval(t) - other.eval(t)).abs());
            c1 = c1.max((self.slope(t) - other.slope(t)).abs());
        }
        let mut jet = 0.0f64;
        for (i, (a, b)) in self.coeffs.iter().zip(&other.coeffs).enumerate() {
            let diff = (a - b).max_abs() * w.powi(i as i32);
            jet = jet.max(diff);
        }
        ManifoldDistance { c0, c1: c0.max(c1), jet }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldDistance {
    pub c0: f64,
    pub c1: f64,
    pub jet: f64,
}

fn solve_scalar<F, D>(mut f: F, mut df: D, start: f64, what: &str) -> Result<f64, HyperbolicError>
where
    F: FnMut(f64) -> Result<f64, HyperbolicError>,
    D: FnMut(f64) -> Result<f64, HyperbolicError>,
{
    let mut s = start;
    for _ in 0..60 {
        let r = f(s)?;
        let dr = df(s)?;
        if dr == 0.0 || !dr.is_finite() {
            return Err(HyperbolicError::NewtonDivergence(format!("{what}: zero derivative")));
        }
        let step = r / dr;
        s -= step;
        if !s.is_finite() {
            return Err(HyperbolicError::NewtonDivergence(what.into()));
        }
        if step.abs() <= 1e-17 + 1e-15 * s.abs() {
            return Ok(s);
        }
    }
    let r = f(s)?;
    if r.abs() < 1e-12 {
        Ok(s)
    } else {
        Err(HyperbolicError::NewtonDivergence(format!("{what}: residual {r:e}")))
    }
}

/// One graph-transform step evaluated at the node `t`; returns the new graph value as a jet.
fn transform_node(
    h: &FamilyHandle,
    m: &LocalManifold,
    t: f64,
    a0: &[f64],
    a: &[Jet],
) -> Result<Jet, HyperbolicError> {
    let k = a0.len();
    let order = a[0].d();
    let p = m.period;
    let c0 = m.center.point();
    let real_graph = |s: f64| m.eval(s);
    match m.side {
        Side::Unstable => {
            // Find s with (F^p(graph(s)))_along = t.
            let image_along = |s: f64| -> Result<(f64, f64, Mat2), HyperbolicError> {
                let (q, jm) = iterate_with_jacobian(h, &m.point_at(s), a0, p)?;
                let (along, _) = m.split(&q);
                Ok((along, real_graph(s), jm))
            };
            let deriv = |s: f64| -> Result<f64, HyperbolicError> {
                let (_, _, jm) = image_along(s)?;
                let g1 = m.slope(s);
                Ok(match m.axis {
                    GraphAxis::OverX => jm[0][0] + jm[0][1] * g1,
                    GraphAxis::OverY => jm[1][1] + jm[1][0] * g1,
                })
            };
            let guess = {
                let (_, _, jm) = image_along(0.0)?;
                let gain = match m.axis {
                    GraphAxis::OverX => jm[0][0],
                    GraphAxis::OverY => jm[1][1],
                };
                t / gain
            };
            let s = solve_scalar(|s| Ok(image_along(s)?.0 - t), deriv, guess, "unstable node")?;
            let d0 = deriv(s)?;
            let mut sj = Jet::constant(k, order, s);
            let mut across = Jet::zero(k, order);
            for _ in 0..=order {
                let img = iterate_jet(h, &m.point_jet(&sj), a, p)?;
                let (along, acr) = m.split_jet(&img);
                across = acr;
                sj = &sj - &along.add_scalar(-t).scale(1.0 / d0);
            }
            let img = iterate_jet(h, &m.point_jet(&sj), a, p)?;
            let _ = across;
            Ok(m.split_jet(&img).1)
        }
        Side::Stable => {
            // Find u with F^p(centre + (u, t)) on the current graph.
            let point = |u: f64| match m.axis {
                GraphAxis::OverY => displace(&c0, u, t),
                GraphAxis::OverX => displace(&c0, t, u),
            };
            let resid = |u: f64| -> Result<(f64, f64, Mat2, f64), HyperbolicError> {
                let (q, jm) = iterate_with_jacobian(h, &point(u), a0, p)?;
                let (along, across) = m.split(&q);
                Ok((across - real_graph(along), m.slope(along), jm, along))
            };
            let deriv = |u: f64| -> Result<f64, HyperbolicError> {
                let (_, g1, jm, _) = resid(u)?;
                Ok(match m.axis {
                    GraphAxis::OverY => jm[0][0] - g1 * jm[1][0],
                    GraphAxis::OverX => jm[1][1] - g1 * jm[0][1],
                })
            };
            let u = solve_scalar(|u| Ok(resid(u)?.0), deriv, m.eval(t), "stable node")?;
            let d0 = deriv(u)?;
            let mut uj = Jet::constant(k, order, u);
            let tj = Jet::constant(k, order, t);
            for _ in 0..=order {
                let start = match m.axis {
                    GraphAxis::OverY => jet_displace(&m.center, &uj, &tj),
                    GraphAxis::OverX => jet_displace(&m.center, &tj, &uj),
                };
                let img = iterate_jet(h, &start, a, p)?;
                let (along, across) = m.split_jet(&img);
                let r = &across - &m.eval_jet(&along);
                uj = &uj - &r.scale(1.0 / d0);
            }
            Ok(uj)
        }
    }
}

fn graph_step(
    h: &FamilyHandle,
    m: &LocalManifold,
    nodes: &[f64],
    op: &[Vec<f64>],
) -> Result<Vec<Jet>, HyperbolicError> {
    let a = Jet::parameters(m.order(), &m.a0);
    let w = m.half_width;
    let values: Result<Vec<Jet>, HyperbolicError> = nodes
        .par_iter()
        .map(|tau| transform_node(h, m, tau * w, &m.a0, &a))
        .collect();
    let values = values?;
    let k = m.a0.len();
    let order = m.order();
    Ok(op
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut c = Jet::zero(k, order);
            for (wgt, v) in row.iter().zip(&values) {
                c = &c + &v.scale(*wgt);
            }
            c.scale(w.powi(-(i as i32)))
        })
        .collect())
}

fn coefficient_change(a: &[Jet], b: &[Jet], w: f64) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| (x - y).max_abs() * w.powi(i as i32))
        .fold(0.0, f64::max)
}

/// Largest offset at `u_0` whose backward orbit stays in the region cores along the coding.
fn core_reach(h: &FamilyHandle, orbit: &CodedOrbit) -> Result<f64, HyperbolicError> {
    let mut gain = 1.0;
    let mut reach = f64::INFINITY;
    for j in (0..orbit.period()).rev() {
        let q = orbit.points[j].point();
        let region = h
            .region_of(orbit.letter_at(j))
            .ok_or_else(|| HyperbolicError::Coding(format!("unknown letter {:?}", orbit.letter_at(j))))?;
        let x = q.x.value();
        let margin = (x - region.core.0).min(region.core.1 - x).max(0.0);
        gain *= h.jacobian_at(&q, &orbit.a0)?[0][0].abs();
        reach = reach.min(margin * gain);
    }
    Ok(reach)
}

/// Local stable or unstable manifold by iterating the graph transform.
pub fn graph_transform_manifold(
    h: &FamilyHandle,
    base: ManifoldBase<'_>,
    side: Side,
    order: usize,
) -> Result<LocalManifold, HyperbolicError> {
    graph_transform_with(h, base, side, order, GraphOptions::default())
}

pub fn graph_transform_with(
    h: &FamilyHandle,
    base: ManifoldBase<'_>,
    side: Side,
    order: usize,
    opts: GraphOptions,
) -> Result<LocalManifold, HyperbolicError> {
    let (center, a0, period) = match base {
        ManifoldBase::Fixed(data) => (data.location.clone(), data.a0.clone(), 1),
        ManifoldBase::Coded(orbit) => (orbit.point().clone(), orbit.a0.clone(), orbit.period()),
    };
    if center.x.d() < order {
        return Err(HyperbolicError::Coding("base point carries fewer jet orders than requested".into()));
    }
    let center = PointJet {
        anchor: center.anchor,
        x: center.x.with_order(order),
        y: center.y.with_order(order),
    };
    let (_, jm) = iterate_with_jacobian(h, &center.point(), &a0, period)?;
    let ev = mat2_eigenvalues(&jm);
    if ev[0].1 != 0.0 || !(ev[0].0.abs() > 1.05 && ev[1].0.abs() < 0.95) {
        return Err(HyperbolicError::NonHyperbolic(ev[0].0, ev[1].0));
    }
    let mu = match side {
        Side::Unstable => ev[0].0,
        Side::Stable => ev[1].0,
    };
    let v = if (jm[0][1]).hypot(mu - jm[0][0]) >= (mu - jm[1][1]).hypot(jm[1][0]) {
        [jm[0][1], mu - jm[0][0]]
    } else {
        [mu - jm[1][1], jm[1][0]]
    };
    let axis = if v[0].abs() >= v[1].abs() { GraphAxis::OverX } else { GraphAxis::OverY };
    let slope = match axis {
        GraphAxis::OverX => v[1] / v[0],
        GraphAxis::OverY => v[0] / v[1],
    };
    let k = a0.len();
    let mut coeffs = vec![Jet::zero(k, order); opts.degree + 1];
    if opts.degree >= 1 {
        coeffs[1] = Jet::constant(k, order, slope);
    }
    let nodes = chebyshev_nodes(2 * opts.degree + 3);
    let op = polyfit_operator(&nodes, opts.degree)
        .ok_or_else(|| HyperbolicError::Coding("degenerate fitting nodes".into()))?;
    let half_width = match (base, side) {
        (ManifoldBase::Coded(orbit), Side::Unstable) => opts.half_width.min(0.9 * core_reach(h, orbit)?),
        _ => opts.half_width,
    };
    let mut m = LocalManifold {
        side,
        axis,
        center,
        coeffs,
        half_width,
        a0,
        period,
        iterations: 0,
    };
    let mut prev_change = f64::INFINITY;
    let mut growth = 0usize;
    for it in 1..=opts.max_iterations {
        let next = graph_step(h, &m, &nodes, &op)?;
        let change = coefficient_change(&next, &m.coeffs, m.half_width);
        m.coeffs = next;
        m.iterations = it;
        if change <= opts.tolerance {
            return Ok(m);
        }
        if change > prev_change {
            growth += 1;
            if growth >= 10 {
                return Err(HyperbolicError::NonContraction(10));
            }
        } else {
            growth = 0;
        }
        prev_change = change;
    }
    Err(HyperbolicError::NoConvergence(opts.max_iterations))
}

/// Largest distance between the image (preimage for the stable side) of graph points and the graph.
pub fn conjugation_residual(h: &FamilyHandle, m: &LocalManifold, samples: usize) -> Result<f64, HyperbolicError> {
    let mut worst = 0.0f64;
    let w = m.half_width;
    let (_, jm) = iterate_with_jacobian(h, &m.center.point(), &m.a0, m.period)?;
    let gain = match m.axis {
        GraphAxis::OverX => jm[0][0].abs(),
        GraphAxis::OverY => jm[1][1].abs(),
    };
    for tau in chebyshev_nodes(samples) {
        let t = match m.side {
            Side::Unstable => tau * w / gain.max(1.0),
            Side::Stable => tau * w,
        };
        let (q, _) = iterate_with_jacobian(h, &m.point_at(t), &m.a0, m.period)?;
        let (along, across) = m.split(&q);
        if along.abs() <= w {
            worst = worst.max((across - m.eval(along)).abs());
        }
    }
    Ok(worst)
}

/// Rectangle around a base point used as the domain of chart-local constructions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartBox {
    pub center: PlanePoint,
    pub half_x: f64,
    pub half_y: f64,
}

impl ChartBox {
    pub fn contains(&self, p: &PlanePoint) -> bool {
        p.x.diff(&self.center.x).abs() <= self.half_x && (p.y - self.center.y).abs() <= self.half_y
    }

    pub fn grid(&self, n: usize) -> Vec<PlanePoint> {
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let u = if n == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (n - 1) as f64 };
                let v = if n == 1 { 0.0 } else { -1.0 + 2.0 * j as f64 / (n - 1) as f64 };
                out.push(displace(&self.center, u * self.half_x, v * self.half_y));
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct LineFieldSample {
    pub point: PlanePoint,
    /// `dx/dy` of the line through `point`.
    pub slope: Jet,
    pub steps: usize,
    /// The forward orbit left the chart box before the slope settled.
    pub exited: bool,
}

fn pull_back(j: &[[Jet; 2]; 2], s: &Jet) -> Jet {
    let num = &(&j[1][1] * s) - &j[0][1];
    let den = &j[0][0] - &(&j[1][0] * s);
    &num * &den.recip()
}

/// Backward power iteration of the projective action along the forward orbit of `z`.
pub fn line_field_at(
    h: &FamilyHandle,
    domain: &ChartBox,
    z: &PlanePoint,
    a: &[Jet],
) -> Result<LineFieldSample, HyperbolicError> {
    let k = a.len();
    let order = a[0].d();
    let mut orbit = PointJet::constant(z, k, order);
    let mut jacs: Vec<[[Jet; 2]; 2]> = Vec::new();
    let mut prev: Option<Jet> = None;
    for m in 1..=10_000usize {
        let jac = jacobian_along(h, &orbit, a, 1)?;
        jacs.push(jac.first.clone());
        orbit = jac.image;
        let mut s = Jet::zero(k, order);
        for j in jacs.iter().rev() {
            s = pull_back(j, &s);
        }
        if !s.is_finite() {
            return Err(HyperbolicError::LineField(format!("non-finite slope at {z:?}")));
        }
        let settled = prev.as_ref().map(|p| (&s - p).max_abs() <= 1e-10).unwrap_or(false);
        if settled {
            return Ok(LineFieldSample { point: *z, slope: s, steps: m, exited: false });
        }
        if !domain.contains(&orbit.point()) {
            return Ok(LineFieldSample { point: *z, slope: s, steps: m, exited: true });
        }
        prev = Some(s);
    }
    Err(HyperbolicError::LineField(format!("no convergence within 10^4 steps at {z:?}")))
}

/// The invariant line field on an `n × n` grid of the chart box.
pub fn invariant_line_field(
    h: &FamilyHandle,
    domain: &ChartBox,
    n: usize,
    a: &[Jet],
) -> Result<Vec<LineFieldSample>, HyperbolicError> {
    domain
        .grid(n)
        .par_iter()
        .map(|z| line_field_at(h, domain, z, a))
        .collect()
}

/// Angle between `Df(z)·e(z)` and `e(f(z))` at constant order.
pub fn line_field_residual(
    h: &FamilyHandle,
    domain: &ChartBox,
    z: &PlanePoint,
    a0: &[f64],
) -> Result<f64, HyperbolicError> {
    let a = constant_params(a0);
    let here = line_field_at(h, domain, z, &a)?;
    let (img, jm) = step_with_jacobian(h, z, a0)?;
    let there = line_field_at(h, domain, &img, &a)?;
    let s = here.slope.value();
    let v = [jm[0][0] * s + jm[0][1], jm[1][0] * s + jm[1][1]];
    let t = there.slope.value();
    let cross = v[0] - t * v[1];
    Ok((cross / (v[0].hypot(v[1]) * t.hypot(1.0))).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclinationStep {
    pub iterate: usize,
    pub distance: ManifoldDistance,
}

/// Push a transversal seed forward and record its distance to the target unstable manifold.
pub fn inclination_test(
    h: &FamilyHandle,
    seed: &LocalManifold,
    target: &LocalManifold,
    n: usize,
) -> Result<Vec<InclinationStep>, HyperbolicError> {
    let nodes = chebyshev_nodes(2 * (seed.coeffs.len() - 1) + 3);
    let op = polyfit_operator(&nodes, seed.coeffs.len() - 1)
        .ok_or_else(|| HyperbolicError::Coding("degenerate fitting nodes".into()))?;
    let mut curve = seed.clone();
    curve.side = Side::Unstable;
    let mut out = vec![InclinationStep {
        iterate: 0,
        distance: curve.distance(target, 33),
    }];
    for i in 1..=n {
        curve.coeffs = graph_step(h, &curve, &nodes, &op).map_err(|e| match e {
            HyperbolicError::Dynamics(err) => HyperbolicError::LeftDomain(err.to_string()),
            other => other,
        })?;
        for tau in [-1.0, 0.0, 1.0] {
            let p = curve.point_at(tau * curve.half_width);
            if !p.is_finite() {
                return Err(HyperbolicError::LeftDomain(format!("iterate {i}")));
            }
        }
        out.push(InclinationStep {
            iterate: i,
            distance: curve.distance(target, 33),
        });
    }
    Ok(out)
}

/// Coordinates `u = Δx - S(Δy)`, `v = Δy - U(Δx)` straightening both local manifolds.
#[derive(Clone, Debug)]
pub struct AdaptedChart {
    pub center: PointJet,
    pub unstable: LocalManifold,
    pub stable: LocalManifold,
}

impl AdaptedChart {
    pub fn new(unstable: LocalManifold, stable: LocalManifold) -> Result<Self, HyperbolicError> {
        if unstable.axis != GraphAxis::OverX || stable.axis != GraphAxis::OverY {
            return Err(HyperbolicError::Coding(
                "adapted chart needs a horizontal unstable and a vertical stable graph".into(),
            ));
        }
        Ok(Self {
            center: unstable.center.clone(),
            unstable,
            stable,
        })
    }

    pub fn to_chart(&self, p: &PlanePoint) -> (f64, f64) {
        let c = self.center.point();
        let dx = p.x.diff(&c.x);
        let dy = p.y - c.y;
        (dx - self.stable.eval(dy), dy - self.unstable.eval(dx))
    }

    pub fn to_chart_jet(&self, p: &PointJet) -> (Jet, Jet) {
        let dx = p.x_diff(self.center.anchor, &self.center.x);
        let dy = &p.y - &self.center.y;
        let u = &dx - &self.stable.eval_jet(&dy);
        let v = &dy - &self.unstable.eval_jet(&dx);
        (u, v)
    }

    pub fn from_chart(&self, u: f64, v: f64) -> Result<PlanePoint, HyperbolicError> {
        let mut dx = u;
        let mut dy = v;
        for _ in 0..100 {
            let r0 = dx - self.stable.eval(dy) - u;
            let r1 = dy - self.unstable.eval(dx) - v;
            if r0.abs().max(r1.abs()) <= 1e-15 {
                break;
            }
            let m = [[1.0, -self.stable.slope(dy)], [-self.unstable.slope(dx), 1.0]];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            dx -= (m[1][1] * r0 - m[0][1] * r1) / det;
            dy -= (m[0][0] * r1 - m[1][0] * r0) / det;
        }
        let r0 = dx - self.stable.eval(dy) - u;
        let r1 = dy - self.unstable.eval(dx) - v;
        if r0.abs().max(r1.abs()) > 1e-12 {
            return Err(HyperbolicError::NewtonDivergence("chart inverse".into()));
        }
        Ok(displace(&self.center.point(), dx, dy))
    }
}

#[cfg(test)]
mod tests;
