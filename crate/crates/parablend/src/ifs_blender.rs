//! One-dimensional blender and parablender iterated function systems.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::alphabet;
use crate::jets::{dprime, graded_monomials, Jet, JetError, SignedPolynomial};

/// Largest number of words enumerated explicitly.
pub const ENUMERATION_BUDGET: u64 = 1 << 24;

const CONTRACTION: f64 = 2.0 / 3.0;
/// Absolute slack standing in for directed rounding in every certificate comparison.
pub const ROUNDING_SLACK: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum IfsError {
    #[error("enumeration of 2^{exponent} words exceeds the budget of 2^24")]
    BudgetExceeded { exponent: u32 },
    #[error("invalid word: {0}")]
    Word(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Letters `δ_{-1}, δ_{-2}, …`, most recent first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolWord {
    letters: Vec<Vec<i8>>,
}

impl SymbolWord {
    pub fn new(letters: Vec<Vec<i8>>) -> Result<Self, IfsError> {
        let len = letters.first().map(Vec::len).unwrap_or(0);
        if letters.iter().any(|l| l.len() != len || l.is_empty()) {
            return Err(IfsError::Word("letters must share a non-zero length".into()));
        }
        if letters.iter().flatten().any(|&s| s != 1 && s != -1) {
            return Err(IfsError::Word("sign entries must be +1 or -1".into()));
        }
        Ok(Self { letters })
    }

    pub fn constant(letter: Vec<i8>, depth: usize) -> Result<Self, IfsError> {
        Self::new(vec![letter; depth])
    }

    /// Repeat `period` until `depth` letters.
    pub fn periodic(period: &[Vec<i8>], depth: usize) -> Result<Self, IfsError> {
        Self::new((0..depth).map(|i| period[i % period.len()].clone()).collect())
    }

    pub fn depth(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letter_len(&self) -> usize {
        self.letters.first().map(Vec::len).unwrap_or(0)
    }

    pub fn letters(&self) -> &[Vec<i8>] {
        &self.letters
    }

    /// `δ · w`: `letter` becomes the most recent.
    pub fn prepend(&self, letter: Vec<i8>) -> Result<Self, IfsError> {
        let mut letters = Vec::with_capacity(self.letters.len() + 1);
        letters.push(letter);
        letters.extend(self.letters.iter().cloned());
        Self::new(letters)
    }
}

/// Degree `d` with `dprime(k, d) + 1 == letter_len`.
pub fn degree_for(k: usize, letter_len: usize) -> Result<usize, IfsError> {
    (0..64)
        .find(|&d| dprime(k, d) + 1 == letter_len)
        .ok_or_else(|| IfsError::Word(format!("no degree fits letters of length {letter_len} with k={k}")))
}

/// Partial sum of the unstable height with per-coordinate tail bounds.
#[derive(Clone, Debug)]
pub struct JetPoint {
    pub jet: Jet,
    /// Bounds on the tail, one per graded derivative coordinate.
    pub remainder: Vec<f64>,
}

impl JetPoint {
    /// `(y, ∂y, …)` in graded order.
    pub fn coordinates(&self) -> Vec<f64> {
        self.jet.derivatives()
    }
}

/// Tail bounds after `depth` letters at a base point of sup-norm `radius`.
pub fn remainder_bounds(k: usize, d: usize, eps: f64, depth: usize, radius: f64) -> Vec<f64> {
    let geo = CONTRACTION.powi(depth as i32);
    let basis_bound = SignedPolynomial::new(k, d, vec![1; dprime(k, d) + 1])
        .map(|p| p.sup_bound(radius))
        .unwrap_or(0.0);
    graded_monomials(k, d)
        .iter()
        .map(|m| {
            if m.order() == 0 {
                geo * (1.0 + 3.0 * eps * basis_bound)
            } else {
                3.0 * eps * geo * (1.0 + basis_bound)
            }
        })
        .collect()
}

/// `y(δ̲, a) = Σ (2/3)^{i-1} (δ_{-i}(0)/3 + ε P_{δ_{-i}}(a))` truncated at the word's depth.
pub fn y_series(word: &SymbolWord, eps: f64, a: &[Jet]) -> Result<JetPoint, IfsError> {
    if word.is_empty() {
        return Err(IfsError::Word("empty word".into()));
    }
    let k = a.len();
    let d = degree_for(k, word.letter_len())?;
    let space_k = a[0].k();
    let order = a[0].d();
    let mut y = Jet::zero(space_k, order);
    let mut cache: Vec<(Vec<i8>, Jet)> = Vec::new();
    for letter in word.letters().iter().rev() {
        let term = match cache.iter().find(|(l, _)| l == letter) {
            Some((_, t)) => t.clone(),
            None => {
                let p = SignedPolynomial::new(k, d, letter.clone())?;
                let t = p.eval_jet(a)?.scale(eps).add_scalar(letter[0] as f64 / 3.0);
                cache.push((letter.clone(), t.clone()));
                t
            }
        };
        y = &y.scale(CONTRACTION) + &term;
    }
    let radius = a.iter().map(|v| v.value().abs()).fold(0.0, f64::max);
    let remainder = if order == d && space_k == k {
        remainder_bounds(k, d, eps, word.depth(), radius)
    } else {
        vec![remainder_bounds(k, d, eps, word.depth(), radius)[0]; y.len()]
    };
    Ok(JetPoint { jet: y, remainder })
}

/// A monotone branch `y ↦ 2y/3 + s/3 + c + A sin(ω y + φ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlenderBranch {
    pub sign: f64,
    pub shift: f64,
    pub wobble: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl BlenderBranch {
    pub fn affine(sign: f64) -> Self {
        Self {
            sign,
            shift: 0.0,
            wobble: 0.0,
            frequency: 0.0,
            phase: 0.0,
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        CONTRACTION * y + self.sign / 3.0 + self.shift + self.wobble * (self.frequency * y + self.phase).sin()
    }

    /// Upper bound on `|f'|`.
    pub fn lipschitz(&self) -> f64 {
        CONTRACTION + (self.wobble * self.frequency).abs()
    }

    /// `C¹` distance to the unperturbed affine branch.
    pub fn c1_size(&self) -> f64 {
        (self.shift.abs() + self.wobble.abs()).max((self.wobble * self.frequency).abs())
    }

    pub fn is_increasing(&self) -> bool {
        CONTRACTION > (self.wobble * self.frequency).abs()
    }
}

/// The standard pair `y ↦ 2y/3 ± 1/3`.
pub fn standard_blender() -> Vec<BlenderBranch> {
    vec![BlenderBranch::affine(1.0), BlenderBranch::affine(-1.0)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub depth: usize,
    /// Merged union of depth-`N` cylinder images of the trapping interval.
    pub intervals: Vec<(f64, f64)>,
    /// Largest cylinder diameter.
    pub cylinder_diameter: f64,
    /// Hausdorff distance from the union to `[-1, 1]`.
    pub union_distance: f64,
    /// Rigorous bound on the Hausdorff distance from the limit set to `[-1, 1]`.
    pub hausdorff_bound: f64,
}

impl CoverReport {
    /// Whether the Hausdorff bound is at most `limit`, up to [`ROUNDING_SLACK`].
    pub fn within(&self, limit: f64) -> bool {
        self.hausdorff_bound <= limit + ROUNDING_SLACK
    }
}

fn merge(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for (lo, hi) in iv {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

fn hausdorff_to_interval(union: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let mut worst = 0.0f64;
    for &(a, b) in union {
        worst = worst.max(lo - a).max(b - hi);
    }
    // Points of the target far from the union.
    let mut probe = vec![lo, hi];
    for w in union.windows(2) {
        probe.push(0.5 * (w[0].1 + w[1].0));
    }
    for p in probe {
        if p < lo || p > hi {
            continue;
        }
        let gap = union
            .iter()
            .map(|&(a, b)| if p < a { a - p } else if p > b { p - b } else { 0.0 })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(gap);
    }
    worst
}

/// Symmetric interval `[-R, R]` mapped into itself by every branch.
fn trapping_radius(branches: &[BlenderBranch]) -> Result<f64, IfsError> {
    let mut r = 4.0f64;
    for _ in 0..400 {
        r = branches
            .iter()
            .map(|b| b.eval(r).abs().max(b.eval(-r).abs()))
            .fold(0.0, f64::max);
    }
    let traps = |r: f64| branches.iter().all(|b| b.eval(r) <= r && b.eval(-r) >= -r);
    [r, r * (1.0 + 1e-12) + 1e-12]
        .into_iter()
        .find(|&r| traps(r))
        .ok_or_else(|| IfsError::Input("branches admit no trapping interval".into()))
}

/// Interval cover of the limit set of monotone branches at depth `depth`.
pub fn limit_set_cover(branches: &[BlenderBranch], depth: usize) -> Result<CoverReport, IfsError> {
    if branches.is_empty() || branches.iter().any(|b| !b.is_increasing()) {
        return Err(IfsError::Input("branches must be increasing".into()));
    }
    if depth > 40 {
        return Err(IfsError::BudgetExceeded {
            exponent: depth as u32,
        });
    }
    let r = trapping_radius(branches)?;
    let mut union = vec![(-r, r)];
    for _ in 0..depth {
        let images: Vec<(f64, f64)> = branches
            .iter()
            .flat_map(|b| union.iter().map(move |&(lo, hi)| (b.eval(lo), b.eval(hi))))
            .collect();
        union = merge(images);
        if union.len() as u64 > ENUMERATION_BUDGET {
            return Err(IfsError::BudgetExceeded { exponent: 24 });
        }
    }
    let lip = branches.iter().map(BlenderBranch::lipschitz).fold(0.0, f64::max);
    let cylinder_diameter = lip.powi(depth as i32) * 2.0 * r;
    let union_distance = hausdorff_to_interval(&union, -1.0, 1.0);
    Ok(CoverReport {
        depth,
        intervals: union,
        cylinder_diameter,
        union_distance,
        hausdorff_bound: union_distance + cylinder_diameter,
    })
}

/// Depth-`N` cylinder images `f_w([-1, 1])` listed explicitly.
pub fn cylinder_intervals(branches: &[BlenderBranch], depth: usize) -> Result<Vec<(f64, f64)>, IfsError> {
    let exponent = depth as u32 * (branches.len() as f64).log2().ceil() as u32;
    if exponent > 24 {
        return Err(IfsError::BudgetExceeded { exponent });
    }
    let mut cyl = vec![(-1.0, 1.0)];
    for _ in 0..depth {
        cyl = branches
            .iter()
            .flat_map(|b| cyl.iter().map(move |&(lo, hi)| (b.eval(lo), b.eval(hi))))
            .collect();
    }
    Ok(cyl)
}

/// The parablender IFS `y ↦ 2y/3 + δ(0)/3 + c_δ + εP_δ(a)` read in jet coordinates at `a₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parablender {
    pub k: usize,
    pub d: usize,
    pub eps: f64,
    pub a0: Vec<f64>,
    /// Extra additive constant per letter, lexicographic order.
    pub offsets: Vec<f64>,
}

impl Parablender {
    pub fn new(k: usize, d: usize, eps: f64) -> Self {
        let n = dprime(k, d) + 1;
        Self {
            k,
            d,
            eps,
            a0: vec![0.0; k],
            offsets: vec![0.0; 1 << n],
        }
    }

    pub fn letter_len(&self) -> usize {
        dprime(self.k, self.d) + 1
    }

    pub fn coordinates(&self) -> usize {
        dprime(self.k, self.d) + 1
    }

    /// Jet coordinates of each letter's translation.
    pub fn letter_vectors(&self) -> Result<Vec<Vec<f64>>, IfsError> {
        let params = Jet::parameters(self.d, &self.a0);
        alphabet(self.letter_len())
            .into_iter()
            .zip(&self.offsets)
            .map(|(delta, off)| {
                let p = SignedPolynomial::new(self.k, self.d, delta.clone())?;
                let t = p
                    .eval_jet(&params)?
                    .scale(self.eps)
                    .add_scalar(delta[0] as f64 / 3.0 + off);
                Ok(t.derivatives())
            })
            .collect()
    }

    pub fn remainder(&self, depth: usize) -> Vec<f64> {
        let radius = self.a0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let extra = self.offsets.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut r = remainder_bounds(self.k, self.d, self.eps, depth, radius);
        r[0] += 3.0 * CONTRACTION.powi(depth as i32) * extra;
        r
    }
}

/// Partial sums `Σ_{i<N} (2/3)^i v(δ_{-i-1})` for every word.
fn enumerate(vectors: &[Vec<f64>], depth: usize) -> Vec<Vec<f64>> {
    let mut set: Vec<Vec<f64>> = vec![vec![0.0; vectors[0].len()]];
    for i in 0..depth {
        let scale = CONTRACTION.powi(i as i32);
        set = set
            .par_iter()
            .flat_map_iter(|p| {
                vectors.iter().map(move |v| {
                    p.iter().zip(v).map(|(a, b)| a + scale * b).collect::<Vec<f64>>()
                })
            })
            .collect();
    }
    set
}

fn dedup(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut seen = HashSet::new();
    points
        .into_iter()
        .filter(|p| seen.insert(p.iter().map(|v| (v * 1e12).round() as i64).collect::<Vec<i64>>()))
        .collect()
}

/// Reachable partial-sum jets, possibly stored as a Minkowski sum `head ⊕ scale·tail`.
#[derive(Clone, Debug)]
pub struct ReachableSet {
    pub depth: usize,
    pub head: Vec<Vec<f64>>,
    pub tail: Vec<Vec<f64>>,
    pub tail_scale: f64,
    pub remainder: Vec<f64>,
    /// Number of words before deduplication.
    pub words: u128,
}

impl ReachableSet {
    pub fn dimension(&self) -> usize {
        self.remainder.len()
    }

    /// Every reachable point, materialised.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.head.len() * self.tail.len());
        for h in &self.head {
            for t in &self.tail {
                out.push(h.iter().zip(t).map(|(a, b)| a + self.tail_scale * b).collect());
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.head.len() * self.tail.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// All depth-`N` partial sums in jet coordinates, enumerated exhaustively.
pub fn jet_reachable_set(ifs: &Parablender, depth: usize) -> Result<ReachableSet, IfsError> {
    let exponent = (depth * ifs.letter_len()) as u32;
    if exponent > 24 {
        return Err(IfsError::BudgetExceeded { exponent });
    }
    let vectors = ifs.letter_vectors()?;
    let points = dedup(enumerate(&vectors, depth));
    let dim = vectors[0].len();
    Ok(ReachableSet {
        depth,
        head: points,
        tail: vec![vec![0.0; dim]],
        tail_scale: 1.0,
        remainder: ifs.remainder(depth),
        words: 1u128 << exponent,
    })
}

/// Exhaustive reachable set split into two halves of at most `2^24` words each.
pub fn factorized_reachable_set(ifs: &Parablender, depth: usize) -> Result<ReachableSet, IfsError> {
    let head_depth = depth.div_ceil(2);
    let tail_depth = depth - head_depth;
    let letter = ifs.letter_len();
    for part in [head_depth, tail_depth] {
        let exponent = (part * letter) as u32;
        if exponent > 24 {
            return Err(IfsError::BudgetExceeded { exponent });
        }
    }
    let vectors = ifs.letter_vectors()?;
    Ok(ReachableSet {
        depth,
        head: dedup(enumerate(&vectors, head_depth)),
        tail: dedup(enumerate(&vectors, tail_depth)),
        tail_scale: CONTRACTION.powi(head_depth as i32),
        remainder: ifs.remainder(depth),
        words: 1u128 << (depth * letter),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Cell side per coordinate; defaults to four remainder radii.
    pub resolution: Option<Vec<f64>>,
}

impl TargetBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            lower,
            upper,
            resolution: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Coverage {
    Covered { cells: usize },
    Gap { witness: Vec<f64>, cells: usize, missing: usize },
    Inconclusive { reason: String },
}

impl Coverage {
    pub fn is_covered(&self) -> bool {
        matches!(self, Coverage::Covered { .. })
    }
}

/// Each grid cell must contain, with its whole remainder box, some reachable point;
/// then every cell meets the limit set.
pub fn jet_coverage_certificate(set: &ReachableSet, target: &TargetBox) -> Coverage {
    let dim = set.dimension();
    if target.lower.len() != dim || target.upper.len() != dim {
        return Coverage::Inconclusive {
            reason: format!("target box must have {dim} coordinates"),
        };
    }
    let width: Vec<f64> = match &target.resolution {
        Some(w) => w.clone(),
        None => set.remainder.iter().map(|r| 4.0 * r.max(1e-15)).collect(),
    };
    if width.iter().zip(&set.remainder).any(|(w, r)| *w <= 2.0 * r) {
        return Coverage::Inconclusive {
            reason: "grid resolution finer than the remainder bounds support".into(),
        };
    }
    let counts: Vec<usize> = (0..dim)
        .map(|c| (((target.upper[c] - target.lower[c]) / width[c]).ceil() as usize).max(1))
        .collect();
    let total: usize = counts.iter().product();
    if total > 1 << 26 {
        return Coverage::Inconclusive {
            reason: format!("{total} cells exceed the grid budget"),
        };
    }
    let slack: Vec<f64> = width
        .iter()
        .zip(&set.remainder)
        .map(|(w, r)| 0.5 * w - r - ROUNDING_SLACK)
        .collect();
    let locate = |p: &[f64]| -> Option<usize> {
        let mut idx = 0usize;
        for c in 0..dim {
            let u = (p[c] - target.lower[c]) / width[c] - 0.5;
            let i = u.round();
            if i < 0.0 || i >= counts[c] as f64 {
                return None;
            }
            let centre = target.lower[c] + (i + 0.5) * width[c];
            if (p[c] - centre).abs() > slack[c] {
                return None;
            }
            idx = idx * counts[c] + i as usize;
        }
        Some(idx)
    };
    let hit = set
        .head
        .par_iter()
        .fold(
            || vec![false; total],
            |mut acc, h| {
                let mut p = vec![0.0; dim];
                for t in &set.tail {
                    for c in 0..dim {
                        p[c] = h[c] + set.tail_scale * t[c];
                    }
                    if let Some(i) = locate(&p) {
                        acc[i] = true;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![false; total],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x |= y;
                }
                a
            },
        );
    let missing = hit.iter().filter(|h| !**h).count();
    match hit.iter().position(|h| !*h) {
        None => Coverage::Covered { cells: total },
        Some(mut i) => {
            let mut witness = vec![0.0; dim];
            for c in (0..dim).rev() {
                let j = i % counts[c];
                i /= counts[c];
                witness[c] = target.lower[c] + (j as f64 + 0.5) * width[c];
            }
            Coverage::Gap {
                witness,
                cells: total,
                missing,
            }
        }
    }
}

/// Exportable summary of a coverage run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub depth: usize,
    pub eps: f64,
    pub passed: bool,
    pub witness: Option<Vec<f64>>,
}

impl CoverageRecord {
    pub fn new(target: &TargetBox, depth: usize, eps: f64, outcome: &Coverage) -> Self {
        Self {
            lower: target.lower.clone(),
            upper: target.upper.clone(),
            depth,
            eps,
            passed: outcome.is_covered(),
            witness: match outcome {
                Coverage::Gap { witness, .. } => Some(witness.clone()),
                _ => None,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a0(d: usize) -> Vec<Jet> {
        Jet::parameters(d, &[0.0])
    }

    #[test]
    fn constant_positive_word_tends_to_one() {
        let w = SymbolWord::constant(vec![1, 1], 200).unwrap();
        let p = y_series(&w, 0.0, &a0(1)).unwrap();
        assert!((p.jet.value() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn alternating_word_tends_to_one_fifth() {
        let w = SymbolWord::periodic(&[vec![1], vec![-1]], 200).unwrap();
        let p = y_series(&w, 0.0, &Jet::parameters(0, &[0.0])).unwrap();
        assert!((p.jet.value() - 0.2).abs() < 1e-14);
    }

    #[test]
    fn derivative_of_constant_word() {
        let eps = 0.1;
        let w = SymbolWord::constant(vec![1, 1], 200).unwrap();
        let p = y_series(&w, eps, &a0(1)).unwrap();
        assert!((p.jet.derivatives()[1] - 3.0 * eps).abs() < 1e-13);
    }

    #[test]
    fn recursion_holds_coefficientwise() {
        let eps = 0.07;
        let a = Jet::parameters(2, &[0.3]);
        let w = SymbolWord::new(vec![vec![1, -1, 1], vec![-1, -1, 1], vec![1, 1, -1]]).unwrap();
        let letter = vec![-1, 1, 1];
        let lhs = y_series(&w.prepend(letter.clone()).unwrap(), eps, &a).unwrap().jet;
        let p = SignedPolynomial::new(1, 2, letter).unwrap();
        let rhs = &(&y_series(&w, eps, &a).unwrap().jet.scale(2.0 / 3.0) + &p.eval_jet(&a).unwrap().scale(eps))
            + (-1.0 / 3.0);
        for (u, v) in lhs.taylor().iter().zip(rhs.taylor()) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn one_step_cover() {
        let cyl = cylinder_intervals(&standard_blender(), 1).unwrap();
        let expected = [(-1.0 / 3.0, 1.0), (-1.0, 1.0 / 3.0)];
        for ((lo, hi), (elo, ehi)) in cyl.iter().zip(expected) {
            assert!((lo - elo).abs() < 1e-15 && (hi - ehi).abs() < 1e-15);
            assert!(((hi - lo) / 2.0 - 2.0 / 3.0).abs() < 1e-15);
        }
        let rep = limit_set_cover(&standard_blender(), 1).unwrap();
        assert_eq!(rep.intervals.len(), 1);
        assert!(rep.union_distance < 1e-10);
    }

    #[test]
    fn depth_twenty_cover() {
        let rep = limit_set_cover(&standard_blender(), 20).unwrap();
        assert!(rep.hausdorff_bound <= 2.0 * (2.0f64 / 3.0).powi(20) + 1e-9);
        for (lo, hi) in cylinder_intervals(&standard_blender(), 8).unwrap() {
            let c = 0.5 * (lo + hi);
            assert!((-1.0..=1.0).contains(&c));
        }
    }

    #[test]
    fn derivative_range_for_depth_ten() {
        let ifs = Parablender::new(1, 1, 0.1);
        let set = jet_reachable_set(&ifs, 10).unwrap();
        assert_eq!(set.words, 1 << 20);
        let (lo, hi) = set
            .points()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[1]), h.max(p[1])));
        assert!(lo >= -0.3 && hi <= 0.3);
        let tol = 0.3 * (2.0f64 / 3.0).powi(10);
        assert!(hi >= 0.3 - tol && lo <= -0.3 + tol);
    }

    #[test]
    fn order_zero_matches_interval_cover() {
        let ifs = Parablender::new(1, 0, 0.1);
        let set = jet_reachable_set(&ifs, 6).unwrap();
        let cyl = cylinder_intervals(&standard_blender(), 6).unwrap();
        let mut a: Vec<f64> = set.points().iter().map(|p| p[0]).collect();
        let mut b: Vec<f64> = cyl.iter().map(|(l, h)| 0.5 * (l + h)).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        b.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let ifs = Parablender::new(1, 1, 0.1);
        assert!(matches!(jet_reachable_set(&ifs, 13), Err(IfsError::BudgetExceeded { exponent: 26 })));
    }

    #[test]
    fn single_cell_is_covered_and_outside_is_gap() {
        let ifs = Parablender::new(1, 1, 0.1);
        let set = jet_reachable_set(&ifs, 8).unwrap();
        let p = set.points()[17].clone();
        let r = &set.remainder;
        let target = TargetBox::new(vec![p[0] - 2.0 * r[0], p[1] - 2.0 * r[1]], vec![p[0] + 2.0 * r[0], p[1] + 2.0 * r[1]]);
        assert!(jet_coverage_certificate(&set, &target).is_covered());
        let wide = TargetBox::new(vec![-1.5, -0.05], vec![1.5, 0.05]);
        assert!(matches!(jet_coverage_certificate(&set, &wide), Coverage::Gap { .. }));
        let mut fine = wide.clone();
        fine.resolution = Some(vec![r[0], r[1]]);
        assert!(matches!(jet_coverage_certificate(&set, &fine), Coverage::Inconclusive { .. }));
    }
}
