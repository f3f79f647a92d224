//! Points of the annulus `ℝ/6ℤ × ℝ`.
//!
//! The angular coordinate is split into a quarter-integer `anchor` and a
//! small `offset`. Multiplying by four and shifting by three acts exactly on
//! both parts, which keeps orbits near the saddle resolvable far below the
//! spacing of doubles around 3.

use serde::{Deserialize, Serialize};

use crate::jets::Jet;

pub const CIRCLE_LENGTH: f64 = 6.0;

/// Reduce into `[-3, 3)`.
pub fn reduce(v: f64) -> f64 {
    let r = v - CIRCLE_LENGTH * ((v + 3.0) / CIRCLE_LENGTH).floor();
    if r >= 3.0 {
        r - CIRCLE_LENGTH
    } else {
        r
    }
}

fn split(x: f64) -> (f64, f64) {
    let x = reduce(x);
    let anchor = (4.0 * x).round() / 4.0;
    (reduce(anchor), x - anchor)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleValue {
    anchor: f64,
    offset: f64,
}

impl CircleValue {
    pub fn new(x: f64) -> Self {
        let (anchor, offset) = split(x);
        Self { anchor, offset }
    }

    /// `anchor` must be a multiple of 1/4; the offset is renormalised.
    pub fn from_parts(anchor: f64, offset: f64) -> Self {
        let (anchor, offset) = renormalize(anchor, offset);
        Self { anchor, offset }
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Canonical representative in `[-3, 3)`.
    pub fn value(&self) -> f64 {
        reduce(self.anchor + self.offset)
    }

    /// `Q(x) = 4x - 3 mod 6`.
    pub fn q(&self) -> Self {
        Self::from_parts(reduce(4.0 * self.anchor - 3.0), 4.0 * self.offset)
    }

    pub fn shifted(&self, delta: f64) -> Self {
        Self::from_parts(self.anchor, self.offset + delta)
    }

    /// Signed difference `self - other`, reduced into `[-3, 3)`.
    pub fn diff(&self, other: &CircleValue) -> f64 {
        let a = reduce(self.anchor - other.anchor);
        let d = a + (self.offset - other.offset);
        if d >= 3.0 {
            d - CIRCLE_LENGTH
        } else if d < -3.0 {
            d + CIRCLE_LENGTH
        } else {
            d
        }
    }

    pub fn distance(&self, other: &CircleValue) -> f64 {
        self.diff(other).abs()
    }
}

/// Move whole quarters from the offset into the anchor. Exact in floating point.
pub fn renormalize(anchor: f64, offset: f64) -> (f64, f64) {
    let shift = (4.0 * offset).round() / 4.0;
    if shift == 0.0 {
        (reduce(anchor), offset)
    } else {
        (reduce(anchor + shift), offset - shift)
    }
}

/// `Q^power`, reduced mod 6.
pub fn eval_q(x: CircleValue, power: usize) -> CircleValue {
    (0..power).fold(x, |acc, _| acc.q())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: CircleValue,
    pub y: f64,
}

impl PlanePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self {
            x: CircleValue::new(x),
            y,
        }
    }

    pub fn from_parts(anchor: f64, offset: f64, y: f64) -> Self {
        Self {
            x: CircleValue::from_parts(anchor, offset),
            y,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.anchor.is_finite() && self.x.offset.is_finite() && self.y.is_finite()
    }

    /// Sup distance on the annulus.
    pub fn distance(&self, other: &PlanePoint) -> f64 {
        self.x.distance(&other.x).max((self.y - other.y).abs())
    }
}

/// A point whose angular offset and height are jets sharing one space.
#[derive(Clone, Debug, PartialEq)]
pub struct PointJet {
    pub anchor: f64,
    pub x: Jet,
    pub y: Jet,
}

impl PointJet {
    pub fn constant(p: &PlanePoint, k: usize, d: usize) -> Self {
        Self {
            anchor: p.x.anchor,
            x: Jet::constant(k, d, p.x.offset),
            y: Jet::constant(k, d, p.y),
        }
    }

    pub fn point(&self) -> PlanePoint {
        PlanePoint::from_parts(self.anchor, self.x.value(), self.y.value())
    }

    /// Canonical angular coordinate as a jet.
    pub fn x_value(&self) -> Jet {
        let v = self.point().x.value();
        self.x.with_value(v)
    }

    pub fn renormalized(mut self) -> Self {
        let (anchor, off) = renormalize(self.anchor, self.x.value());
        self.anchor = anchor;
        self.x = self.x.with_value(off);
        self
    }

    /// Jet of `self.x - other.x` on the circle.
    pub fn x_diff(&self, other_anchor: f64, other_offset: &Jet) -> Jet {
        let base = CircleValue::from_parts(self.anchor, self.x.value())
            .diff(&CircleValue::from_parts(other_anchor, other_offset.value()));
        (&self.x - other_offset).with_value(base)
    }

    pub fn is_finite(&self) -> bool {
        self.anchor.is_finite() && self.x.is_finite() && self.y.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_examples() {
        assert_eq!(eval_q(CircleValue::new(3.0), 1).value(), -3.0);
        assert_eq!(CircleValue::new(3.0).value(), -3.0);
        assert_eq!(eval_q(CircleValue::new(0.5), 1).value(), -1.0);
        assert_eq!(eval_q(CircleValue::new(-1.0), 1).value(), -1.0);
        assert_eq!(eval_q(CircleValue::new(0.0), 3).value(), -3.0);
    }

    #[test]
    fn reduction_is_idempotent() {
        for v in [-17.3, -3.0, -0.1, 2.999, 3.0, 8.5, 100.25] {
            let r = reduce(v);
            assert!((-3.0..3.0).contains(&r));
            assert_eq!(reduce(r), r);
        }
    }

    #[test]
    fn tiny_offsets_survive_expansion() {
        let defect = 2f64.powi(-50);
        let p = CircleValue::from_parts(2.75, 0.0625 - defect);
        let img = eval_q(p, 2);
        // Q²(2.8125) = 0 and the defect is multiplied by 16.
        assert_eq!(img.anchor(), 0.0);
        assert_eq!(img.offset(), -16.0 * defect);
    }

    #[test]
    fn circle_distance_wraps() {
        let a = CircleValue::new(2.9);
        let b = CircleValue::new(-2.9);
        assert!((a.distance(&b) - 0.2).abs() < 1e-12);
        assert!((b.diff(&a) - 0.2).abs() < 1e-12);
    }
}
