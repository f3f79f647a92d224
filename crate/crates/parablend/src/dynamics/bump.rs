//! Piecewise polynomial plateau functions.
//!
//! The transition bands use the degree 7 smoothstep, which is `C^3` at the knots.

use serde::{Deserialize, Serialize};

use crate::jets::Jet;

/// Smoothness order of the bump profiles.
pub const BUMP_SMOOTHNESS: usize = 3;

const SMOOTHSTEP: [f64; 8] = [0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0];

/// Derivatives `S^{(0..=order)}(u)` of the smoothstep clamped to `[0, 1]`.
pub fn smoothstep_derivatives(u: f64, order: usize) -> Vec<f64> {
    let mut out = vec![0.0; order + 1];
    if u <= 0.0 {
        return out;
    }
    if u >= 1.0 {
        out[0] = 1.0;
        return out;
    }
    let mut coeffs = SMOOTHSTEP.to_vec();
    for slot in out.iter_mut() {
        *slot = coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c);
        coeffs = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * i as f64)
            .collect();
        if coeffs.is_empty() {
            break;
        }
    }
    out
}

/// Derivatives of `t ↦ S(scale·t + shift)`.
fn affine_step(t: f64, scale: f64, shift: f64, order: usize) -> Vec<f64> {
    let s = smoothstep_derivatives(scale * t + shift, order);
    let mut f = 1.0;
    s.into_iter()
        .map(|v| {
            let r = v * f;
            f *= scale;
            r
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BumpKind {
    /// Support `[-1, 1]`, equal to 1 on `[-1/2, 1/2]`.
    Plateau,
    /// Equal to `±1` on `±[1/2, 1]`, support in `±[1/4, 3/2]`.
    SignedStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub kind: BumpKind,
}

impl BumpProfile {
    pub const fn plateau() -> Self {
        Self {
            kind: BumpKind::Plateau,
        }
    }

    pub const fn signed_step() -> Self {
        Self {
            kind: BumpKind::SignedStep,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            BumpKind::Plateau => (-1.0, 1.0),
            BumpKind::SignedStep => (-1.5, 1.5),
        }
    }

    pub fn plateau_interval(&self) -> (f64, f64) {
        match self.kind {
            BumpKind::Plateau => (-0.5, 0.5),
            BumpKind::SignedStep => (0.5, 1.0),
        }
    }

    pub fn derivatives(&self, t: f64, order: usize) -> Vec<f64> {
        match self.kind {
            BumpKind::Plateau => {
                if t >= 0.0 {
                    affine_step(t, -2.0, 2.0, order)
                } else {
                    affine_step(t, 2.0, 2.0, order)
                }
            }
            BumpKind::SignedStep => {
                let right = rising_hat(t, order);
                let left = rising_hat(-t, order);
                right
                    .iter()
                    .zip(&left)
                    .enumerate()
                    .map(|(n, (r, l))| if n % 2 == 0 { r - l } else { r + l })
                    .collect()
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivatives(t, 0)[0]
    }

    pub fn jet(&self, t: &Jet) -> Jet {
        t.compose(&self.derivatives(t.value(), t.d()))
            .expect("derivative list sized to order")
    }
}

/// `R` with plateau `[1/2, 1]` and support `[1/4, 3/2]`.
fn rising_hat(x: f64, order: usize) -> Vec<f64> {
    if x <= 0.75 {
        affine_step(x, 4.0, -1.0, order)
    } else {
        affine_step(x, -2.0, 3.0, order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_values() {
        let phi = BumpProfile::plateau();
        assert_eq!(phi.value(0.0), 1.0);
        assert_eq!(phi.value(0.5), 1.0);
        assert_eq!(phi.value(-0.5), 1.0);
        assert_eq!(phi.value(1.0), 0.0);
        assert_eq!(phi.value(-1.3), 0.0);
        assert!((phi.value(0.75) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn signed_step_values() {
        let rho = BumpProfile::signed_step();
        assert_eq!(rho.value(0.7), 1.0);
        assert_eq!(rho.value(-0.7), -1.0);
        assert_eq!(rho.value(0.0), 0.0);
        assert_eq!(rho.value(0.2), 0.0);
        assert_eq!(rho.value(3.0), 0.0);
        assert_eq!(rho.value(-3.0), 0.0);
    }

    #[test]
    fn monotone_bands() {
        let phi = BumpProfile::plateau();
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = phi.value(0.5 + 0.005 * i as f64);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn derivatives_continuous_at_knots() {
        for bump in [BumpProfile::plateau(), BumpProfile::signed_step()] {
            for knot in [-1.5, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 1.5] {
                let lo = bump.derivatives(knot - 1e-12, 3);
                let hi = bump.derivatives(knot + 1e-12, 3);
                for n in 0..=BUMP_SMOOTHNESS {
                    assert!((lo[n] - hi[n]).abs() < 1e-4, "{knot} order {n} {lo:?} {hi:?}");
                }
            }
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let phi = BumpProfile::plateau();
        let t = 0.63;
        let h = 1e-6;
        let fd = (phi.value(t + h) - phi.value(t - h)) / (2.0 * h);
        assert!((phi.derivatives(t, 1)[1] - fd).abs() < 1e-6);
    }
}
