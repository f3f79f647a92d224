//! Parablender constructions on the annulus `ℝ/6ℤ × ℝ`: parameter jets,
//! the explicit skew-product maps, greedy paratangency coding and
//! sink-creating perturbations.

// `!(x <= bound)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod hyperbolic;
pub mod ifs_blender;
pub mod jets;
pub mod linalg;
pub mod paratangency;
pub mod sink_forge;
pub mod sweep;
