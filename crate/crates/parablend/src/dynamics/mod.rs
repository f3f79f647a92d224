//! The explicit skew-product maps on `ℝ/6ℤ × ℝ` and their parameter families.

mod bump;
mod circle;
mod perturbation;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bump::{smoothstep_derivatives, BumpKind, BumpProfile, BUMP_SMOOTHNESS};
pub use circle::{eval_q, reduce, renormalize, CircleValue, PlanePoint, PointJet};
pub use perturbation::{
    AmplitudeConfig, GraphPolynomial, ParamFunction, Perturbation, PerturbationConfig,
    PerturbationKind, PolynomialAmplitude,
};

use crate::jets::{dprime, Jet, JetError, SignedPolynomial};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("point outside the domain of the construction: {0}")]
    Domain(String),
    #[error("point lies on a region seam: {0}")]
    Seam(String),
    #[error("perturbation support violation: {0}")]
    Support(String),
    #[error("invalid construction parameters: {0}")]
    Config(String),
    #[error("amplitude evaluation failed: {0}")]
    Amplitude(String),
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// `(Q^{d'+1} x, 2y/3 + ρ(x)/3)`.
    Base,
    /// Base map with the vertical factor near `x = 3` replaced by a strong contraction.
    Dissipative,
    /// Dissipative map with a quadratic fold sending `(0, 0)` to `(3, 1)`.
    Coupled,
}

/// One branch region `Ỹ_δ` of the parablender.
#[derive(Clone, Debug)]
pub struct Region {
    pub delta: Vec<i8>,
    pub poly: SignedPolynomial,
    /// `I_δ`.
    pub core: (f64, f64),
    /// `Ĩ_δ`, the `μ`-neighbourhood of `I_δ`.
    pub wide: (f64, f64),
}

impl Region {
    pub fn contains(&self, x: f64, y: f64, y_half: f64) -> bool {
        x >= self.wide.0 && x <= self.wide.1 && y.abs() <= y_half
    }
}

/// Inverse of `Q` restricted to `I_{+1}` (`sign = 1`) or `I_{-1}`.
pub fn q_branch_inverse(sign: i8, y: f64) -> f64 {
    (y + 3.0 * sign as f64) / 4.0
}

/// `I_δ` for a letter of length `n`.
pub fn letter_interval(delta: &[i8]) -> (f64, f64) {
    let mut lo = -1.0;
    let mut hi = 1.0;
    for &s in delta.iter().rev() {
        lo = q_branch_inverse(s, lo);
        hi = q_branch_inverse(s, hi);
    }
    (lo, hi)
}

/// All letters of `{-1, +1}^n` in lexicographic order.
pub fn alphabet(n: usize) -> Vec<Vec<i8>> {
    (0..1usize << n)
        .map(|i| {
            (0..n)
                .map(|j| if i >> (n - 1 - j) & 1 == 1 { 1 } else { -1 })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyParams {
    pub construction: Construction,
    pub k: usize,
    pub d: usize,
    pub epsilon: f64,
    /// Whether the `εP_δ(a)` term is active.
    pub parametrized: bool,
    pub mu: Option<f64>,
    pub eta: Option<f64>,
    /// Spatial smoothness order `r` of the construction.
    pub smoothness: usize,
    /// Slope of the fold's vertical image near `(0, 0)`.
    pub fold_slope: f64,
}

impl Default for FamilyParams {
    fn default() -> Self {
        Self {
            construction: Construction::Base,
            k: 1,
            d: 1,
            epsilon: 0.05,
            parametrized: true,
            mu: None,
            eta: None,
            smoothness: BUMP_SMOOTHNESS,
            fold_slope: 1.0,
        }
    }
}

impl FamilyParams {
    pub fn new(construction: Construction, k: usize, d: usize) -> Self {
        Self {
            construction,
            k,
            d,
            ..Self::default()
        }
    }

    pub fn epsilon(mut self, eps: f64) -> Self {
        self.epsilon = eps;
        self
    }

    pub fn unparametrized(mut self) -> Self {
        self.parametrized = false;
        self
    }
}

/// Immutable description of a family `(f_a)_a` with its perturbation stack.
#[derive(Clone, Debug)]
pub struct FamilyHandle {
    params: FamilyParams,
    dprime: usize,
    sigma: f64,
    lambda: f64,
    mu: f64,
    eta: f64,
    coupling_gain: f64,
    regions: Arc<Vec<Region>>,
    layers: Vec<Arc<Perturbation>>,
}

/// Spatial derivatives of the image, entries are jets in the parameter.
#[derive(Clone, Debug)]
pub struct SpatialJacobian {
    pub image: PointJet,
    /// `first[i][j] = ∂_{z_j} F_i`.
    pub first: [[Jet; 2]; 2],
    /// `second[i][j][l] = ∂_{z_j} ∂_{z_l} F_i`.
    pub second: Option<[[[Jet; 2]; 2]; 2]>,
}

impl SpatialJacobian {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [
            [self.first[0][0].value(), self.first[0][1].value()],
            [self.first[1][0].value(), self.first[1][1].value()],
        ]
    }
}

impl FamilyHandle {
    pub fn build(params: FamilyParams) -> Result<Self, DynamicsError> {
        if params.k == 0 {
            return Err(DynamicsError::Config("k must be at least 1".into()));
        }
        let dprime = dprime(params.k, params.d);
        let letters = dprime + 1;
        if letters > 12 {
            return Err(DynamicsError::Config(format!(
                "{letters} sign entries per letter is beyond the supported range"
            )));
        }
        let sigma = 4f64.powi(letters as i32);
        let lambda = 4f64.powi(-((dprime as i32 + 2).pow(2)));
        let gap = 4f64.powi(-(dprime as i32));
        let mu = params.mu.unwrap_or_else(|| 0.02f64.min(gap / 4.0));
        if !(mu > 0.0 && mu < gap / 2.0) {
            return Err(DynamicsError::Config(format!(
                "mu = {mu} must lie in (0, {}) so the regions stay disjoint",
                gap / 2.0
            )));
        }
        let eta_max = 4f64.powi(-(dprime as i32) - 2);
        let eta = params.eta.unwrap_or(eta_max / 2.0);
        if !(eta > 0.0 && eta < eta_max) {
            return Err(DynamicsError::Config(format!(
                "eta = {eta} must lie in (0, {eta_max})"
            )));
        }
        if !(params.epsilon.is_finite() && params.epsilon >= 0.0) {
            return Err(DynamicsError::Config("epsilon must be finite and non-negative".into()));
        }
        let mut regions = Vec::with_capacity(1 << letters);
        for delta in alphabet(letters) {
            let poly = SignedPolynomial::new(params.k, params.d, delta.clone())?;
            let core = letter_interval(&delta);
            regions.push(Region {
                delta,
                poly,
                core,
                wide: (core.0 - mu, core.1 + mu),
            });
        }
        if params.parametrized {
            let bound = regions[0].poly.sup_bound(1.0);
            if params.epsilon * bound >= 1.0 / 6.0 {
                return Err(DynamicsError::Config(format!(
                    "epsilon·max|P_δ| = {} pushes images out of the vertical range",
                    params.epsilon * bound
                )));
            }
        }
        Ok(Self {
            coupling_gain: 1.0 / (4.0 * sigma * sigma),
            params,
            dprime,
            sigma,
            lambda,
            mu,
            eta,
            regions: Arc::new(regions),
            layers: Vec::new(),
        })
    }

    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    pub fn construction(&self) -> Construction {
        self.params.construction
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn d(&self) -> usize {
        self.params.d
    }

    pub fn dprime(&self) -> usize {
        self.dprime
    }

    /// Number of sign entries per letter, `d' + 1`.
    pub fn letters(&self) -> usize {
        self.dprime + 1
    }

    pub fn epsilon(&self) -> f64 {
        if self.params.parametrized {
            self.params.epsilon
        } else {
            0.0
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Expansion `4^{d'+1}` of the circle factor.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Vertical factor `4^{-(d'+2)^2}` at the saddle of the dissipative maps.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn coupling_gain(&self) -> f64 {
        self.coupling_gain
    }

    pub fn smoothness(&self) -> usize {
        self.params.smoothness
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn layers(&self) -> &[Arc<Perturbation>] {
        &self.layers
    }

    pub fn y_half(&self) -> f64 {
        1.5 + self.mu
    }

    /// Index of the region used at `(x, y)`; ties go to the lexicographically lower letter.
    pub fn region_at(&self, x: f64, y: f64) -> Option<usize> {
        let half = self.y_half();
        self.regions.iter().position(|r| r.contains(x, y, half))
    }

    pub fn region_of(&self, delta: &[i8]) -> Option<&Region> {
        self.regions.iter().find(|r| r.delta == delta)
    }

    /// The saddle `Ω̊ = (3, 0)`.
    pub fn saddle(&self) -> PlanePoint {
        PlanePoint::new(3.0, 0.0)
    }

    /// Evaluate with real parameters.
    pub fn eval_point(&self, z: &PlanePoint, a: &[f64]) -> Result<PlanePoint, DynamicsError> {
        let params: Vec<Jet> = a.iter().map(|&v| Jet::constant(a.len(), 0, v)).collect();
        let zj = PointJet::constant(z, a.len(), 0);
        Ok(self.eval(&zj, &params)?.point())
    }

    /// Real Jacobian `[[∂x'/∂x, ∂x'/∂y], [∂y'/∂x, ∂y'/∂y]]`.
    pub fn jacobian_at(&self, z: &PlanePoint, a: &[f64]) -> Result<[[f64; 2]; 2], DynamicsError> {
        let params: Vec<Jet> = a.iter().map(|&v| Jet::constant(a.len(), 0, v)).collect();
        Ok(jacobian(self, z, &params, 1)?.matrix())
    }

    /// Image of a jet-valued point; all jets must share one space.
    pub fn eval(&self, z: &PointJet, a: &[Jet]) -> Result<PointJet, DynamicsError> {
        if a.len() != self.params.k {
            return Err(DynamicsError::Config(format!(
                "expected {} parameters, got {}",
                self.params.k,
                a.len()
            )));
        }
        for j in a.iter().chain([&z.x, &z.y]) {
            if !j.same_space(&a[0]) {
                return Err(JetError::DimensionMismatch(a[0].k(), a[0].d(), j.k(), j.d()).into());
            }
        }
        if !z.is_finite() {
            return Err(DynamicsError::Domain(format!("{:?}", z.point())));
        }
        self.eval_layers(z, a, self.layers.len())
    }

    fn eval_layers(&self, z: &PointJet, a: &[Jet], depth: usize) -> Result<PointJet, DynamicsError> {
        if depth == 0 {
            return self.eval_base(z, a);
        }
        let image = self.eval_layers(z, a, depth - 1)?;
        let layer = &self.layers[depth - 1];
        let a_vals: Vec<f64> = a.iter().map(Jet::value).collect();
        if layer.parameter_inactive(&a_vals) {
            return Ok(image);
        }
        let dx = z.x_diff(layer.center.x.anchor(), &Jet::constant(a[0].k(), a[0].d(), layer.center.x.offset()));
        let dy = z.y.add_scalar(-layer.center.y);
        if dx.value().abs() >= layer.radius || dy.value().abs() >= layer.radius {
            return Ok(image);
        }
        let phi = BumpProfile::plateau();
        let mut param_factor = Jet::constant(a[0].k(), a[0].d(), 1.0);
        for (ai, ci) in a.iter().zip(&layer.a_center) {
            let u = ai.add_scalar(-ci).scale(1.0 / (2.0 * layer.alpha));
            param_factor = &param_factor * &phi.jet(&u);
        }
        let spatial = &phi.jet(&dx.scale(1.0 / layer.radius)) * &phi.jet(&dy.scale(1.0 / layer.radius));
        match &layer.kind {
            PerturbationKind::Additive {
                direction,
                amplitude,
            } => {
                let amp = amplitude.eval(a)?;
                let term = &(&spatial * &param_factor) * &amp;
                let mut out = image;
                if direction[0] != 0.0 {
                    out.x = &out.x + &term.scale(direction[0]);
                }
                if direction[1] != 0.0 {
                    out.y = &out.y + &term.scale(direction[1]);
                }
                Ok(out.renormalized())
            }
            PerturbationKind::Snap { source, target } => {
                let shift = &target.eval_jet(&dx) - &source.eval_jet(&dx);
                let tau = PointJet {
                    anchor: z.anchor,
                    x: z.x.clone(),
                    y: &z.y + &(&spatial * &shift),
                };
                let moved = self.eval_layers(&tau, a, depth - 1)?;
                let ddx = moved.x_diff(image.anchor, &image.x);
                let ddy = &moved.y - &image.y;
                let mut out = image;
                out.x = &out.x + &(&param_factor * &ddx);
                out.y = &out.y + &(&param_factor * &ddy);
                Ok(out.renormalized())
            }
        }
    }

    fn eval_base(&self, z: &PointJet, a: &[Jet]) -> Result<PointJet, DynamicsError> {
        let xv = z.x_value();
        let xval = xv.value();
        let yval = z.y.value();
        let sigma = self.sigma;

        let mut anchor = reduce(3.0 + sigma * z.anchor);
        let mut xoff = z.x.scale(sigma);

        let rho = BumpProfile::signed_step();
        let mut y_img = &z.y.scale(2.0 / 3.0) + &rho.jet(&xv).scale(1.0 / 3.0);

        if self.params.construction != Construction::Base {
            let t = z.x.with_value(reduce(z.anchor - 3.0) + z.x.value());
            if t.value().abs() < 1.0 {
                let phi = BumpProfile::plateau().jet(&t);
                let one_minus = (-&phi) + 1.0;
                y_img = &(&one_minus * &y_img) + &(&phi * &z.y.scale(self.lambda));
            }
        }

        if self.params.construction == Construction::Coupled && xval.abs() < 2.0 * self.eta {
            let b = BumpProfile::plateau().jet(&xv.scale(1.0 / (2.0 * self.eta)));
            let one_minus = (-&b) + 1.0;
            let fold = &z.y - &(&xv * &xv).scale(2.0);
            xoff = &(&one_minus * &xv.scale(sigma)) + &(&b * &fold.scale(self.coupling_gain));
            anchor = reduce(3.0);
            let lift = &xv.scale(self.params.fold_slope) + 1.0;
            y_img = &y_img + &(&b * &lift);
        }

        if self.params.parametrized && self.params.epsilon != 0.0 {
            if let Some(i) = self.region_at(xval, yval) {
                let p = self.regions[i].poly.eval_jet(a)?;
                y_img = &y_img + &p.scale(self.params.epsilon);
            }
        }

        Ok(PointJet {
            anchor,
            x: xoff,
            y: y_img,
        }
        .renormalized())
    }

    /// Distance from `(x, y)` to the nearest edge of a parameter region, if inside one.
    pub fn seam_distance(&self, x: f64, y: f64) -> f64 {
        if !self.params.parametrized || self.params.epsilon == 0.0 {
            return f64::INFINITY;
        }
        let half = self.y_half();
        self.regions
            .iter()
            .map(|r| {
                let dx = (x - r.wide.0).abs().min((x - r.wide.1).abs());
                let dy = (y.abs() - half).abs();
                let inside_x = x >= r.wide.0 - 1e-9 && x <= r.wide.1 + 1e-9;
                let inside_y = y.abs() <= half + 1e-9;
                match (inside_x, inside_y) {
                    (true, true) => dx.min(dy),
                    (true, false) => dy,
                    (false, true) => dx,
                    (false, false) => f64::INFINITY,
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `f_a(z)` as a jet in `a`.
pub fn eval_family(h: &FamilyHandle, z: &PlanePoint, a: &[Jet]) -> Result<PointJet, DynamicsError> {
    let zj = PointJet::constant(z, a[0].k(), a[0].d());
    h.eval(&zj, a)
}

/// First and optionally second spatial derivatives with jet entries.
pub fn jacobian(
    h: &FamilyHandle,
    z: &PlanePoint,
    a: &[Jet],
    spatial_order: usize,
) -> Result<SpatialJacobian, DynamicsError> {
    let zj = PointJet::constant(z, a[0].k(), a[0].d());
    jacobian_along(h, &zj, a, spatial_order)
}

/// Spatial derivatives at a base point that itself moves with the parameter.
pub fn jacobian_along(
    h: &FamilyHandle,
    z: &PointJet,
    a: &[Jet],
    spatial_order: usize,
) -> Result<SpatialJacobian, DynamicsError> {
    if !(1..=2).contains(&spatial_order) {
        return Err(DynamicsError::Config("spatial order must be 1 or 2".into()));
    }
    let base = z.point();
    let seam = h.seam_distance(base.x.value(), base.y);
    if seam < 1e-12 {
        return Err(DynamicsError::Seam(format!(
            "({}, {}) is {seam:e} from a region edge",
            base.x.value(),
            base.y
        )));
    }
    let k = a.len();
    let d = a[0].d();
    let total = k + 2;
    let order = d + spatial_order;
    let lifted: Vec<Jet> = a.iter().map(|v| v.lift(total, order)).collect();
    let zj = PointJet {
        anchor: z.anchor,
        x: &z.x.lift(total, order) + &Jet::variable(total, order, k, 0.0),
        y: &z.y.lift(total, order) + &Jet::variable(total, order, k + 1, 0.0),
    };
    let img = h.eval(&zj, &lifted)?;
    let comps = [&img.x, &img.y];
    let first = |i: usize, j: usize| {
        let mut e = [0u32; 2];
        e[j] = 1;
        comps[i].split_coefficient(k, &e, d)
    };
    let firsts = [[first(0, 0), first(0, 1)], [first(1, 0), first(1, 1)]];
    let second = if spatial_order == 2 {
        let sec = |i: usize, j: usize, l: usize| {
            let mut e = [0u32; 2];
            e[j] += 1;
            e[l] += 1;
            let scale = if j == l { 2.0 } else { 1.0 };
            comps[i].split_coefficient(k, &e, d).scale(scale)
        };
        Some([
            [[sec(0, 0, 0), sec(0, 0, 1)], [sec(0, 1, 0), sec(0, 1, 1)]],
            [[sec(1, 0, 0), sec(1, 0, 1)], [sec(1, 1, 0), sec(1, 1, 1)]],
        ])
    } else {
        None
    };
    let image = PointJet {
        anchor: img.anchor,
        x: img.x.split_coefficient(k, &[0, 0], d),
        y: img.y.split_coefficient(k, &[0, 0], d),
    };
    Ok(SpatialJacobian {
        image,
        first: firsts,
        second,
    })
}

/// New handle with `pert` stacked on top; `h` is left unchanged.
pub fn push_perturbation(h: &FamilyHandle, pert: Perturbation) -> Result<FamilyHandle, DynamicsError> {
    if !(pert.radius > 0.0 && pert.radius.is_finite()) {
        return Err(DynamicsError::Support("spatial radius must be positive".into()));
    }
    if !(pert.alpha > 0.0 && pert.alpha.is_finite()) {
        return Err(DynamicsError::Support("alpha must be positive".into()));
    }
    if pert.a_center.len() != h.k() {
        return Err(DynamicsError::Support(format!(
            "parameter centre has {} entries, expected {}",
            pert.a_center.len(),
            h.k()
        )));
    }
    if h.params.parametrized && h.params.epsilon != 0.0 {
        let cx = pert.center.x.value();
        let (x0, x1) = (cx - pert.radius, cx + pert.radius);
        let (y0, y1) = (pert.center.y - pert.radius, pert.center.y + pert.radius);
        let half = h.y_half();
        for r in h.regions.iter() {
            let meets = x1 > r.wide.0 && x0 < r.wide.1 && y1 > -half && y0 < half;
            let inside = x0 >= r.wide.0 && x1 <= r.wide.1 && y0 >= -half && y1 <= half;
            if meets && !inside {
                return Err(DynamicsError::Support(format!(
                    "support of '{}' crosses the edge of region {:?}",
                    pert.label, r.delta
                )));
            }
        }
    }
    let mut out = h.clone();
    out.layers.push(Arc::new(pert));
    Ok(out)
}

/// Declarative description of a family, loadable from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    #[serde(flatten)]
    pub params: FamilyParams,
    #[serde(default)]
    pub perturbations: Vec<PerturbationConfig>,
}

impl FamilyConfig {
    pub fn from_toml(text: &str) -> Result<Self, DynamicsError> {
        toml::from_str(text).map_err(|e| DynamicsError::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<FamilyHandle, DynamicsError> {
        let mut h = FamilyHandle::build(self.params.clone())?;
        for p in &self.perturbations {
            h = push_perturbation(&h, p.build(h.k())?)?;
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests;
