//! Parabola families, their minimum jets and the greedy symbol selection
//! that makes a parabola family paratangent to a coded unstable manifold.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{q_branch_inverse, CircleValue, Construction, DynamicsError, FamilyHandle, PlanePoint, PointJet};
use crate::hyperbolic::{continue_coded_orbit, graph_transform_manifold, HyperbolicError, ManifoldBase, Side};
use crate::ifs_blender::{y_series, IfsError, SymbolWord};
use crate::jets::{Jet, JetError};

/// Interpolation nodes used for families without a closed form.
pub const SAMPLE_NODES: usize = 64;
/// Slack used when checking the parabola inequalities on the grid.
pub const CERTIFY_SLACK: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ParatangencyError {
    #[error("Newton for the critical point failed: {0}")]
    Newton(String),
    #[error("minimum at the boundary of the domain (tau = {0})")]
    BoundaryMinimum(f64),
    #[error("image containment failed: {0}")]
    Containment(String),
    #[error("parabola certification failed: {0}")]
    Certification(String),
    #[error("invariant violated at step {step}: {detail}")]
    Invariant { step: usize, detail: String },
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<ParatangencyError>,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error("domain below floating resolution at depth {0}")]
    Resolution(usize),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Hyperbolic(#[from] HyperbolicError),
    #[error(transparent)]
    Ifs(#[from] IfsError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

fn chebyshev_points(n: usize) -> Vec<f64> {
    (0..n).map(|j| (PI * (j as f64 + 0.5) / n as f64).cos()).collect()
}

fn chebyshev_fit(values: &[Jet]) -> Vec<Jet> {
    let n = values.len();
    let (k, d) = (values[0].k(), values[0].d());
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let mut c = Jet::zero(k, d);
        for (j, v) in values.iter().enumerate() {
            let w = (PI * m as f64 * (j as f64 + 0.5) / n as f64).cos();
            c = &c + &v.scale(w);
        }
        let norm = if m == 0 { 1.0 / n as f64 } else { 2.0 / n as f64 };
        out.push(c.scale(norm));
    }
    trim(out)
}

fn trim(mut coeffs: Vec<Jet>) -> Vec<Jet> {
    let scale = coeffs.iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    while coeffs.len() > 1 && coeffs.last().map(|c| c.max_abs() <= 1e-13 * scale).unwrap_or(false) {
        coeffs.pop();
    }
    coeffs
}

fn chebyshev_derivative(coeffs: &[Jet]) -> Vec<Jet> {
    let n = coeffs.len();
    let (k, d) = (coeffs[0].k(), coeffs[0].d());
    if n == 1 {
        return vec![Jet::zero(k, d)];
    }
    let mut out = vec![Jet::zero(k, d); n + 1];
    for m in (1..n).rev() {
        out[m - 1] = &out[m + 1] + &coeffs[m].scale(2.0 * m as f64);
    }
    out[0] = out[0].scale(0.5);
    out.truncate(n - 1);
    out
}

fn clenshaw(coeffs: &[Jet], tau: &Jet) -> Jet {
    let (k, d) = (tau.k(), tau.d());
    let mut b1 = Jet::zero(k, d);
    let mut b2 = Jet::zero(k, d);
    for c in coeffs.iter().skip(1).rev() {
        let b0 = &(&(tau * &b1).scale(2.0) - &b2) + c;
        b2 = b1;
        b1 = b0;
    }
    &(&(tau * &b1) - &b2) + &coeffs[0]
}

fn clenshaw_real(coeffs: &[Jet], tau: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * tau * b1 - b2 + c.value();
        b2 = b1;
        b1 = b0;
    }
    tau * b1 - b2 + coeffs[0].value()
}

/// Outcome of checking the three parabola inequalities at the working parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolaCertificate {
    pub endpoint_min: f64,
    pub min_value: f64,
    pub curvature_min: f64,
    pub violations: Vec<String>,
}

impl ParabolaCertificate {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A parameter family of convex graphs `t ↦ γ_a(t)` over `[center - w, center + w]`,
/// stored as a Chebyshev series in `τ = (t - center) / w` with jet coefficients at `a0`.
#[derive(Clone, Debug)]
pub struct ParabolaFamily {
    pub center: f64,
    pub half_width: f64,
    pub a0: Vec<f64>,
    pub coeffs: Vec<Jet>,
    /// Pullbacks applied so far.
    pub depth: usize,
}

impl ParabolaFamily {
    /// Sample `f(t, a)` on the Chebyshev grid of `[lo, hi]`.
    pub fn from_fn<F>(lo: f64, hi: f64, a0: &[f64], order: usize, f: F) -> Self
    where
        F: Fn(f64, &[Jet]) -> Jet,
    {
        let center = 0.5 * (lo + hi);
        let half_width = 0.5 * (hi - lo);
        let a = Jet::parameters(order, a0);
        let values: Vec<Jet> = chebyshev_points(SAMPLE_NODES)
            .into_iter()
            .map(|tau| f(center + half_width * tau, &a))
            .collect();
        Self {
            center,
            half_width,
            a0: a0.to_vec(),
            coeffs: chebyshev_fit(&values),
            depth: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.a0.len()
    }

    pub fn order(&self) -> usize {
        self.coeffs[0].d()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    /// Value at normalized position `tau`, at the working parameter.
    pub fn value_at(&self, tau: f64) -> f64 {
        clenshaw_real(&self.coeffs, tau)
    }

    /// Parameter jet at the absolute position `t`.
    pub fn eval(&self, t: f64) -> Jet {
        let tau = Jet::constant(self.k(), self.order(), (t - self.center) / self.half_width);
        clenshaw(&self.coeffs, &tau)
    }

    pub fn eval_tau(&self, tau: &Jet) -> Jet {
        clenshaw(&self.coeffs, tau)
    }

    pub fn certify(&self) -> ParabolaCertificate {
        let d2 = chebyshev_derivative(&chebyshev_derivative(&self.coeffs));
        let scale = self.half_width.powi(-2);
        let mut grid = chebyshev_points(SAMPLE_NODES);
        grid.extend([-1.0, 1.0]);
        let curvature_min = grid
            .iter()
            .map(|&tau| clenshaw_real(&d2, tau) * scale)
            .fold(f64::INFINITY, f64::min);
        let endpoint_min = self.value_at(-1.0).min(self.value_at(1.0));
        let grid_min = grid.iter().map(|&tau| self.value_at(tau)).fold(f64::INFINITY, f64::min);
        let min_value = min_gamma_jet(self).map(|m| m.value.value()).unwrap_or(grid_min).min(grid_min);
        let mut violations = Vec::new();
        if endpoint_min < 1.5 - CERTIFY_SLACK {
            violations.push(format!("endpoint value {endpoint_min} < 3/2"));
        }
        if curvature_min < 1.0 - CERTIFY_SLACK {
            violations.push(format!("second derivative {curvature_min} < 1"));
        }
        if min_value.abs() > 2.0 / 3.0 + CERTIFY_SLACK {
            violations.push(format!("|min| = {} > 2/3", min_value.abs()));
        }
        ParabolaCertificate {
            endpoint_min,
            min_value,
            curvature_min,
            violations,
        }
    }
}

/// Critical point and the parameter jet of the minimum value.
#[derive(Clone, Debug)]
pub struct MinJet {
    /// Absolute position of the critical point at `a0`.
    pub critical: f64,
    /// Same, normalized to the domain.
    pub tau: f64,
    /// Jet of `min_t γ_a(t)`.
    pub value: Jet,
    /// `|∂_t γ|` at the critical point.
    pub residual: f64,
}

impl MinJet {
    /// Derivatives `∂_a^α min γ` in graded order, the constant term first.
    pub fn derivatives(&self) -> Vec<f64> {
        self.value.derivatives()
    }
}

/// Minimum of the family through the envelope identity `∂_t γ(c_a, a) = 0`.
pub fn min_gamma_jet(p: &ParabolaFamily) -> Result<MinJet, ParatangencyError> {
    let d1 = chebyshev_derivative(&p.coeffs);
    let d2 = chebyshev_derivative(&d1);
    let grid = chebyshev_points(SAMPLE_NODES);
    let mut tau = grid
        .iter()
        .copied()
        .min_by(|a, b| p.value_at(*a).total_cmp(&p.value_at(*b)))
        .unwrap_or(0.0);
    let mut converged = false;
    for _ in 0..100 {
        let g1 = clenshaw_real(&d1, tau);
        let g2 = clenshaw_real(&d2, tau);
        if !(g2 > 0.0) {
            return Err(ParatangencyError::Newton(format!("non-convex at tau = {tau}")));
        }
        let step = g1 / g2;
        tau -= step;
        if tau.abs() > 1.5 || !tau.is_finite() {
            return Err(ParatangencyError::BoundaryMinimum(tau));
        }
        if step.abs() <= 1e-16 {
            converged = true;
            break;
        }
    }
    let residual = clenshaw_real(&d1, tau).abs() / p.half_width;
    if !converged && residual > 1e-10 {
        return Err(ParatangencyError::Newton(format!("residual {residual:e}")));
    }
    if tau.abs() >= 1.0 {
        return Err(ParatangencyError::BoundaryMinimum(tau));
    }
    let (k, order) = (p.k(), p.order());
    let curvature = clenshaw_real(&d2, tau);
    let mut tj = Jet::constant(k, order, tau);
    for _ in 0..order {
        let g1 = clenshaw(&d1, &tj);
        tj = &tj - &g1.scale(1.0 / curvature);
    }
    Ok(MinJet {
        critical: p.center + p.half_width * tau,
        tau,
        value: clenshaw(&p.coeffs, &tj),
        residual,
    })
}

/// Distances to the bounds `|m_0| < 2/3` and `|m_i| ≤ 2ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaggerMargins {
    pub value: f64,
    pub derivatives: Vec<f64>,
}

impl DaggerMargins {
    pub fn of(m: &MinJet, eps: f64) -> Self {
        let ds = m.derivatives();
        Self {
            value: 2.0 / 3.0 - ds[0].abs(),
            derivatives: ds[1..].iter().map(|v| 2.0 * eps - v.abs()).collect(),
        }
    }

    pub fn holds(&self) -> bool {
        self.value > 0.0 && self.derivatives.iter().all(|&m| m >= -1e-15)
    }
}

/// Sign readout of the minimum jet with `sign(0) = +1`.
pub fn greedy_step(m: &MinJet, eps: f64) -> Result<Vec<i8>, ParatangencyError> {
    let margins = DaggerMargins::of(m, eps);
    if !margins.holds() {
        return Err(ParatangencyError::Invariant {
            step: 0,
            detail: format!("minimum jet outside the greedy bounds: {margins:?}"),
        });
    }
    Ok(m.derivatives().iter().map(|&v| if v < 0.0 { -1 } else { 1 }).collect())
}

fn model_family(h: &FamilyHandle) -> bool {
    h.construction() == Construction::Base && h.layers().is_empty()
}

fn branch_inverse(letter: &[i8], x: f64) -> f64 {
    letter.iter().rev().fold(x, |acc, &s| q_branch_inverse(s, acc))
}

/// Pullback of the graph of `p` by the branch of `h` on the region of `letter`.
pub fn parabola_preimage(
    h: &FamilyHandle,
    p: &ParabolaFamily,
    letter: &[i8],
) -> Result<ParabolaFamily, ParatangencyError> {
    if h.region_of(letter).is_none() {
        return Err(ParatangencyError::Config(format!("no region for letter {letter:?}")));
    }
    let (lo, hi) = p.domain();
    if p.depth == 0 && (lo < -1.0 - 1e-12 || hi > 1.0 + 1e-12) {
        return Err(ParatangencyError::Containment(format!(
            "domain [{lo}, {hi}] leaves the branch image [-1, 1]"
        )));
    }
    let next = if model_family(h) {
        model_preimage(h, p, letter)?
    } else {
        sampled_preimage(h, p, letter)?
    };
    let cert = next.certify();
    if !cert.holds() {
        return Err(ParatangencyError::Certification(cert.violations.join("; ")));
    }
    Ok(next)
}

/// Exact pullback for the unperturbed construction, where the branch is affine in both coordinates.
fn model_preimage(h: &FamilyHandle, p: &ParabolaFamily, letter: &[i8]) -> Result<ParabolaFamily, ParatangencyError> {
    let poly = &h.region_of(letter).expect("checked by caller").poly;
    let a = Jet::parameters(p.order(), &p.a0);
    let shift = poly.eval_jet(&a)?.scale(h.epsilon()).add_scalar(letter[0] as f64 / 3.0);
    let mut coeffs: Vec<Jet> = p.coeffs.iter().map(|c| c.scale(1.5)).collect();
    coeffs[0] = &coeffs[0] - &shift.scale(1.5);
    Ok(ParabolaFamily {
        center: branch_inverse(letter, p.center),
        half_width: p.half_width / h.sigma(),
        a0: p.a0.clone(),
        coeffs,
        depth: p.depth + 1,
    })
}

/// Pointwise pullback: at each node solve `F_y(t, y) = γ(F_x(t, y))` for `y`, then refit.
/// The domain is cut where the pulled-back graph leaves the region vertically.
fn sampled_preimage(h: &FamilyHandle, p: &ParabolaFamily, letter: &[i8]) -> Result<ParabolaFamily, ParatangencyError> {
    let (lo, hi) = p.domain();
    let (full_lo, full_hi) = (branch_inverse(letter, lo), branch_inverse(letter, hi));
    if 0.5 * (full_hi - full_lo) < 1e-10 * full_lo.abs().max(1.0) {
        return Err(ParatangencyError::Resolution(p.depth + 1));
    }
    let (k, order) = (p.k(), p.order());
    let d1 = chebyshev_derivative(&p.coeffs);
    let parent_tau = |x: &CircleValue| -> Result<f64, ParatangencyError> {
        let tau = x.diff(&CircleValue::new(p.center)) / p.half_width;
        if tau.abs() > 1.0 + 1e-3 {
            return Err(ParatangencyError::Containment(format!("image at tau = {tau} outside the parent domain")));
        }
        Ok(tau)
    };
    let residual = |t: f64, y: f64| -> Result<(f64, f64), ParatangencyError> {
        let z = PlanePoint::new(t, y);
        let img = h.eval_point(&z, &p.a0)?;
        let jac = h.jacobian_at(&z, &p.a0)?;
        let tau = parent_tau(&img.x)?;
        let g1 = clenshaw_real(&d1, tau) / p.half_width;
        Ok((img.y - p.value_at(tau), jac[1][1] - g1 * jac[0][1]))
    };
    let solve = |t: f64| -> Result<(f64, f64), ParatangencyError> {
        let tau_guess = ((t - full_lo) / (full_hi - full_lo) * 2.0 - 1.0).clamp(-1.0, 1.0);
        let mut y = (1.5 * (p.value_at(tau_guess) - letter[0] as f64 / 3.0)).clamp(-h.y_half(), h.y_half());
        let mut slope = 1.0;
        for _ in 0..60 {
            let (r, dr) = residual(t, y)?;
            slope = dr;
            let step = r / dr;
            y -= step;
            if step.abs() <= 1e-16 * y.abs().max(1.0) {
                break;
            }
        }
        if residual(t, y)?.0.abs() > 1e-11 {
            return Err(ParatangencyError::Newton(format!("pullback at t = {t}")));
        }
        Ok((y, slope))
    };
    let top = h.y_half() - 1e-9;
    let inside = |t: f64| -> Result<bool, ParatangencyError> { Ok(solve(t)?.0.abs() <= top) };
    let probe: Vec<f64> = (0..=64).map(|i| full_lo + (full_hi - full_lo) * i as f64 / 64.0).collect();
    let mut flags = Vec::with_capacity(probe.len());
    for &t in &probe {
        flags.push(inside(t).unwrap_or(false));
    }
    let first = flags
        .iter()
        .position(|&f| f)
        .ok_or_else(|| ParatangencyError::Containment("pulled-back graph misses the region".into()))?;
    let last = flags.iter().rposition(|&f| f).expect("some flag set");
    let edge = |mut inner: f64, mut outer: f64| -> Result<f64, ParatangencyError> {
        for _ in 0..80 {
            let mid = 0.5 * (inner + outer);
            if inside(mid).unwrap_or(false) {
                inner = mid;
            } else {
                outer = mid;
            }
        }
        Ok(inner)
    };
    let new_lo = if first == 0 { full_lo } else { edge(probe[first], probe[first - 1])? };
    let new_hi = if last == probe.len() - 1 { full_hi } else { edge(probe[last], probe[last + 1])? };
    let center = 0.5 * (new_lo + new_hi);
    let half_width = 0.5 * (new_hi - new_lo);
    let a = Jet::parameters(order, &p.a0);
    let mut values = Vec::with_capacity(SAMPLE_NODES);
    for tau_new in chebyshev_points(SAMPLE_NODES) {
        let t = center + half_width * tau_new;
        let (y, slope) = solve(t)?;
        let mut yj = Jet::constant(k, order, y);
        for _ in 0..order {
            let z = PointJet {
                anchor: 0.0,
                x: Jet::constant(k, order, t),
                y: yj.clone(),
            }
            .renormalized();
            let img = h.eval(&z, &a)?;
            let base = parent_tau(&img.point().x)?;
            let tau = img.x_diff(0.0, &Jet::constant(k, order, p.center)).scale(1.0 / p.half_width);
            let tau = tau.with_value(base);
            let r = &img.y - &p.eval_tau(&tau);
            yj = &yj - &r.scale(1.0 / slope);
        }
        values.push(yj);
    }
    Ok(ParabolaFamily {
        center,
        half_width,
        a0: p.a0.clone(),
        coeffs: chebyshev_fit(&values),
        depth: p.depth + 1,
    })
}

#[derive(Clone, Debug)]
pub struct GreedyStep {
    pub letter: Vec<i8>,
    pub min: MinJet,
    pub margins: DaggerMargins,
}

#[derive(Clone, Debug)]
pub struct GreedyTrace {
    /// Chosen letters, most recent first.
    pub word: Vec<Vec<i8>>,
    pub steps: Vec<GreedyStep>,
    pub eta: Option<Jet>,
}

impl GreedyTrace {
    pub fn symbol_word(&self) -> Result<SymbolWord, ParatangencyError> {
        Ok(SymbolWord::new(self.word.clone())?)
    }

    pub fn smallest_margin(&self) -> f64 {
        self.steps
            .iter()
            .flat_map(|s| std::iter::once(s.margins.value).chain(s.margins.derivatives.iter().copied()))
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_smoothness(h: &FamilyHandle) -> Result<(), ParatangencyError> {
    if h.d() >= 1 && h.smoothness() < 2 {
        return Err(ParatangencyError::Config(format!(
            "spatial smoothness {} is too low for parameter order {}",
            h.smoothness(),
            h.d()
        )));
    }
    Ok(())
}

/// Greedy induction: minimum jet, sign readout, pullback, `depth` times.
pub fn greedy_code(h: &FamilyHandle, p: &ParabolaFamily, depth: usize) -> Result<GreedyTrace, ParatangencyError> {
    check_smoothness(h)?;
    if p.k() != h.k() || p.order() != h.d() {
        return Err(ParatangencyError::Config(format!(
            "parabola jets are (k={}, d={}), the family uses (k={}, d={})",
            p.k(),
            p.order(),
            h.k(),
            h.d()
        )));
    }
    let eps = h.epsilon();
    let mut current = p.clone();
    let mut trace = GreedyTrace {
        word: Vec::with_capacity(depth),
        steps: Vec::with_capacity(depth),
        eta: None,
    };
    for step in 0..depth {
        let wrap = |e: ParatangencyError| match e {
            ParatangencyError::Invariant { detail, .. } => ParatangencyError::Invariant { step, detail },
            other => ParatangencyError::Step {
                step,
                source: Box::new(other),
            },
        };
        let min = min_gamma_jet(&current).map_err(wrap)?;
        let letter = greedy_step(&min, eps).map_err(wrap)?;
        let margins = DaggerMargins::of(&min, eps);
        current = parabola_preimage(h, &current, &letter).map_err(wrap)?;
        trace.word.push(letter.clone());
        trace.steps.push(GreedyStep { letter, min, margins });
    }
    if depth > 0 {
        trace.eta = Some(eta_jet(h, p, &trace.symbol_word()?)?);
    }
    Ok(trace)
}

/// Height jet of the local unstable manifold coded by `word`.
pub fn unstable_height(h: &FamilyHandle, word: &SymbolWord, a0: &[f64], order: usize) -> Result<Jet, ParatangencyError> {
    if model_family(h) {
        let a = Jet::parameters(order, a0);
        return Ok(y_series(word, h.epsilon(), &a)?.jet);
    }
    let orbit = continue_coded_orbit(h, word, a0, order)?;
    let m = graph_transform_manifold(h, ManifoldBase::Coded(&orbit), Side::Unstable, order)?;
    Ok(m.height())
}

/// Offset `η(a) = min γ_a - y_a` between the parabola and the coded unstable manifold.
pub fn eta_jet(h: &FamilyHandle, p: &ParabolaFamily, word: &SymbolWord) -> Result<Jet, ParatangencyError> {
    let min = min_gamma_jet(p)?;
    let height = unstable_height(h, word, &p.a0, p.order())?;
    Ok(&min.value - &height)
}

/// `4·(2/3)^N`.
pub fn default_tolerance(depth: usize) -> f64 {
    4.0 * (2.0f64 / 3.0).powi(depth as i32)
}

/// Per total order `i`, whether every `|∂_a^α η|` with `|α| = i` is within `tol(i)`.
pub fn paratangency_verdict(eta: &Jet, tol: impl Fn(usize) -> f64) -> Vec<bool> {
    let ds = eta.derivatives();
    let mut out = vec![true; eta.d() + 1];
    for (m, v) in crate::jets::graded_monomials(eta.k(), eta.d()).iter().zip(ds) {
        let i = m.order() as usize;
        if !(v.abs() <= tol(i)) {
            out[i] = false;
        }
    }
    out
}

/// `c(t - t0)² + h0 + ε Σ s_i (a_i - a0_i)` with `c`, `t0`, `h0`, `s` drawn from `rng`.
/// The ranges keep the endpoint values above `1.7`, the minimum below `1/2` in size
/// and the parameter slopes below `ε/2`, so every draw certifies.
pub fn random_admissible_family<R: Rng>(k: usize, d: usize, eps: f64, a0: &[f64], rng: &mut R) -> ParabolaFamily {
    let c: f64 = rng.gen_range(3.0..4.0);
    let t0: f64 = rng.gen_range(-0.15..0.15);
    let h0: f64 = rng.gen_range(-0.45..0.45);
    let slopes: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.5..0.5)).collect();
    ParabolaFamily::from_fn(-1.0, 1.0, a0, d, |t, a: &[Jet]| {
        let mut v = Jet::constant(a[0].k(), a[0].d(), c * (t - t0) * (t - t0) + h0);
        for (ai, s) in a.iter().zip(&slopes) {
            v = &v + &ai.add_scalar(-ai.value()).scale(s * eps);
        }
        v
    })
}

/// Verdicts after rescaling the vertical coordinate by `1 + ε² s`, for the identity and 8 random charts.
pub fn sampled_chart_verdicts(eta: &Jet, tol: impl Fn(usize) -> f64 + Copy, eps: f64, seed: u64) -> Vec<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![paratangency_verdict(eta, tol)];
    for _ in 0..8 {
        let s: f64 = rng.gen_range(-1.0..1.0);
        let scaled = eta.scale(1.0 + eps * eps * s);
        out.push(paratangency_verdict(&scaled, tol));
    }
    out
}
