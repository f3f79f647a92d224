//! Localized additive perturbations stacked on top of a construction.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::circle::PlanePoint;
use super::DynamicsError;
use crate::jets::{monomial_jet, Jet, MultiIndex};

/// A scalar function of the parameter, evaluated on jets.
pub trait ParamFunction: Send + Sync + fmt::Debug {
    fn k(&self) -> usize;

    /// Expansion of order `order` at the real point `a0`.
    fn jet_at(&self, a0: &[f64], order: usize) -> Result<Jet, DynamicsError>;

    fn describe(&self) -> String;

    fn eval(&self, a: &[Jet]) -> Result<Jet, DynamicsError> {
        let a0: Vec<f64> = a.iter().map(Jet::value).collect();
        let local = self.jet_at(&a0, a[0].d())?;
        Ok(local.substitute(a))
    }
}

/// `Σ c_m a^m` in absolute parameter coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialAmplitude {
    pub k: usize,
    pub terms: Vec<(MultiIndex, f64)>,
}

impl PolynomialAmplitude {
    pub fn constant(k: usize, c: f64) -> Self {
        Self {
            k,
            terms: vec![(MultiIndex::zero(k), c)],
        }
    }

    /// `c · a_1^power`.
    pub fn power(k: usize, power: u32, c: f64) -> Self {
        let mut e = vec![0; k];
        e[0] = power;
        Self {
            k,
            terms: vec![(MultiIndex::new(e), c)],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(_, c)| *c == 0.0)
    }
}

impl ParamFunction for PolynomialAmplitude {
    fn k(&self) -> usize {
        self.k
    }

    fn jet_at(&self, a0: &[f64], order: usize) -> Result<Jet, DynamicsError> {
        self.eval(&Jet::parameters(order, a0))
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| format!("{c}*a^{m}"))
            .collect();
        format!("polynomial[{}]", parts.join(" + "))
    }

    fn eval(&self, a: &[Jet]) -> Result<Jet, DynamicsError> {
        if a.len() != self.k {
            return Err(DynamicsError::Config(format!(
                "amplitude expects {} parameters, got {}",
                self.k,
                a.len()
            )));
        }
        let mut out = Jet::zero(a[0].k(), a[0].d());
        for (m, c) in &self.terms {
            out = &out + &monomial_jet(m, a).scale(*c);
        }
        Ok(out)
    }
}

/// Polynomial graph `y = Σ c_i (x - x_c)^i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphPolynomial {
    pub coeffs: Vec<f64>,
}

impl GraphPolynomial {
    pub fn eval_jet(&self, t: &Jet) -> Jet {
        let mut acc = Jet::zero(t.k(), t.d());
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * t) + *c;
        }
        acc
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

#[derive(Clone, Debug)]
pub enum PerturbationKind {
    /// Adds `bump · amplitude(a) · direction` to the image.
    Additive {
        direction: [f64; 2],
        amplitude: Arc<dyn ParamFunction>,
    },
    /// `f + ρ_a (f∘τ - f)` with `τ` a vertical shift carrying `source` onto `target`.
    Snap {
        source: GraphPolynomial,
        target: GraphPolynomial,
    },
}

#[derive(Clone, Debug)]
pub struct Perturbation {
    pub label: String,
    pub center: PlanePoint,
    /// Spatial half-width `θ` of the product bump.
    pub radius: f64,
    pub a_center: Vec<f64>,
    /// Parameter localization: vanishes for `|a_i - a_center_i| ≥ 2α`.
    pub alpha: f64,
    pub kind: PerturbationKind,
}

impl Perturbation {
    pub fn additive(
        label: impl Into<String>,
        center: PlanePoint,
        radius: f64,
        a_center: Vec<f64>,
        alpha: f64,
        direction: [f64; 2],
        amplitude: Arc<dyn ParamFunction>,
    ) -> Self {
        Self {
            label: label.into(),
            center,
            radius,
            a_center,
            alpha,
            kind: PerturbationKind::Additive {
                direction,
                amplitude,
            },
        }
    }

    /// True when the parameter factor is identically zero at the real point `a`.
    pub fn parameter_inactive(&self, a: &[f64]) -> bool {
        a.iter()
            .zip(&self.a_center)
            .any(|(v, c)| ((v - c) / (2.0 * self.alpha)).abs() >= 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmplitudeConfig {
    Constant { value: f64 },
    Polynomial { terms: Vec<(Vec<u32>, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    #[serde(default)]
    pub label: String,
    pub center: [f64; 2],
    pub radius: f64,
    pub a_center: Vec<f64>,
    pub alpha: f64,
    pub direction: [f64; 2],
    pub amplitude: AmplitudeConfig,
}

impl PerturbationConfig {
    pub fn build(&self, k: usize) -> Result<Perturbation, DynamicsError> {
        let amplitude = match &self.amplitude {
            AmplitudeConfig::Constant { value } => PolynomialAmplitude::constant(k, *value),
            AmplitudeConfig::Polynomial { terms } => {
                if terms.iter().any(|(e, _)| e.len() != k) {
                    return Err(DynamicsError::Config(
                        "amplitude exponent length differs from k".into(),
                    ));
                }
                PolynomialAmplitude {
                    k,
                    terms: terms
                        .iter()
                        .map(|(e, c)| (MultiIndex::new(e.clone()), *c))
                        .collect(),
                }
            }
        };
        Ok(Perturbation::additive(
            self.label.clone(),
            PlanePoint::new(self.center[0], self.center[1]),
            self.radius,
            self.a_center.clone(),
            self.alpha,
            self.direction,
            Arc::new(amplitude),
        ))
    }
}
