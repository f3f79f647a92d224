//! Truncated multivariate Taylor jets in the parameter `a ∈ ℝ^k`.
//!
//! A [`Jet`] stores Taylor coefficients `c_α = ∂^α f / α!` for every
//! multi-index of total order at most `d`, in graded lexicographic order.
//! [`Jet::derivative`] converts back to plain partial derivatives.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("jet spaces differ: (k={0}, d={1}) vs (k={2}, d={3})")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("sign vector has length {got}, expected {expected}")]
    SignLength { got: usize, expected: usize },
    #[error("sign entries must be +1 or -1")]
    BadSign,
    #[error("expected at least {expected} derivative values, got {got}")]
    DerivativeCount { got: usize, expected: usize },
    #[error("expected {expected} parameter jets, got {got}")]
    ParameterCount { got: usize, expected: usize },
}

/// Exponent vector of a monomial `a_1^{e_1} ⋯ a_k^{e_k}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    pub fn zero(k: usize) -> Self {
        Self { exponents: vec![0; k] }
    }

    pub fn unit(k: usize, i: usize) -> Self {
        let mut exponents = vec![0; k];
        exponents[i] = 1;
        Self { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn k(&self) -> usize {
        self.exponents.len()
    }

    pub fn order(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// `α! = α_1! ⋯ α_k!`
    pub fn factorial(&self) -> f64 {
        self.exponents.iter().map(|&e| factorial(e)).product()
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex::new(
            self.exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// `x^α` for a real point.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .map(|(&e, &v)| v.powi(e as i32))
            .product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.exponents.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

pub fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc = 1usize;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of non-constant monomials of degree at most `d` in `k` variables.
pub fn dprime(k: usize, d: usize) -> usize {
    binomial(k + d, d) - 1
}

/// Monomials of total order `order`, lexicographically descending in the exponent vector.
fn monomials_of_order(k: usize, order: u32) -> Vec<MultiIndex> {
    fn rec(k: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == k {
            prefix.push(left);
            out.push(MultiIndex::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(k, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        if order == 0 {
            out.push(MultiIndex::new(Vec::new()));
        }
        return out;
    }
    rec(k, order, &mut Vec::new(), &mut out);
    out
}

/// All monomials of order `0..=d` in graded lexicographic order.
pub fn graded_monomials(k: usize, d: usize) -> Vec<MultiIndex> {
    (0..=d as u32).flat_map(|o| monomials_of_order(k, o)).collect()
}

/// Index tables shared by all jets with the same `(k, d)`.
#[derive(Debug)]
pub struct JetSpace {
    k: usize,
    d: usize,
    monomials: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    products: Vec<(u32, u32, u32)>,
}

type SpaceCache = HashMap<(usize, usize), Arc<JetSpace>>;

impl JetSpace {
    fn build(k: usize, d: usize) -> Self {
        let monomials = graded_monomials(k, d);
        let lookup: HashMap<MultiIndex, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let mut products = Vec::new();
        for (i, mi) in monomials.iter().enumerate() {
            for (j, mj) in monomials.iter().enumerate() {
                if mi.order() + mj.order() <= d as u32 {
                    let t = lookup[&mi.plus(mj)];
                    products.push((i as u32, j as u32, t as u32));
                }
            }
        }
        Self {
            k,
            d,
            monomials,
            lookup,
            products,
        }
    }

    pub fn get(k: usize, d: usize) -> Arc<JetSpace> {
        static CACHE: OnceLock<Mutex<SpaceCache>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet space cache poisoned");
        guard
            .entry((k, d))
            .or_insert_with(|| Arc::new(JetSpace::build(k, d)))
            .clone()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }

    pub fn index_of(&self, m: &MultiIndex) -> Option<usize> {
        self.lookup.get(m).copied()
    }
}

/// Truncated Taylor expansion around some base point `a₀`.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(k={}, d={}, {:?})", self.k(), self.d(), self.coeffs)
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.k() == other.k() && self.d() == other.d() && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn zero(k: usize, d: usize) -> Self {
        let space = JetSpace::get(k, d);
        let n = space.len();
        Self {
            space,
            coeffs: vec![0.0; n],
        }
    }

    pub fn constant(k: usize, d: usize, c: f64) -> Self {
        let mut j = Self::zero(k, d);
        j.coeffs[0] = c;
        j
    }

    /// The coordinate function `a_i` expanded at `a_i = at`.
    pub fn variable(k: usize, d: usize, i: usize, at: f64) -> Self {
        let mut j = Self::constant(k, d, at);
        if d >= 1 {
            let idx = j.space.index_of(&MultiIndex::unit(k, i)).expect("unit index");
            j.coeffs[idx] = 1.0;
        }
        j
    }

    /// Coordinate jets `(a_1, …, a_k)` at the base point `a0`.
    pub fn parameters(d: usize, a0: &[f64]) -> Vec<Jet> {
        let k = a0.len();
        (0..k).map(|i| Jet::variable(k, d, i, a0[i])).collect()
    }

    pub fn from_taylor(k: usize, d: usize, coeffs: Vec<f64>) -> Result<Self, JetError> {
        let space = JetSpace::get(k, d);
        if coeffs.len() != space.len() {
            return Err(JetError::DerivativeCount {
                got: coeffs.len(),
                expected: space.len(),
            });
        }
        Ok(Self { space, coeffs })
    }

    /// Build from partial derivatives `∂^α f` listed in graded order.
    pub fn from_derivatives(k: usize, d: usize, derivs: &[f64]) -> Result<Self, JetError> {
        let space = JetSpace::get(k, d);
        if derivs.len() != space.len() {
            return Err(JetError::DerivativeCount {
                got: derivs.len(),
                expected: space.len(),
            });
        }
        let coeffs = space
            .monomials
            .iter()
            .zip(derivs)
            .map(|(m, v)| v / m.factorial())
            .collect();
        Ok(Self { space, coeffs })
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn k(&self) -> usize {
        self.space.k
    }

    pub fn d(&self) -> usize {
        self.space.d
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn taylor(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn taylor_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, m: &MultiIndex) -> Option<f64> {
        self.space.index_of(m).map(|i| self.coeffs[i])
    }

    /// `∂^α f` at the base point.
    pub fn derivative(&self, m: &MultiIndex) -> Option<f64> {
        self.coeff(m).map(|c| c * m.factorial())
    }

    /// All partial derivatives in graded order.
    pub fn derivatives(&self) -> Vec<f64> {
        self.space
            .monomials
            .iter()
            .zip(&self.coeffs)
            .map(|(m, c)| c * m.factorial())
            .collect()
    }

    /// Largest `|∂^α f|` over multi-indices of the given order.
    pub fn max_derivative_of_order(&self, order: u32) -> f64 {
        self.space
            .monomials
            .iter()
            .zip(&self.coeffs)
            .filter(|(m, _)| m.order() == order)
            .map(|(m, c)| (c * m.factorial()).abs())
            .fold(0.0, f64::max)
    }

    pub fn same_space(&self, other: &Jet) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
            || (self.k() == other.k() && self.d() == other.d())
    }

    fn check(&self, other: &Jet) -> Result<(), JetError> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(JetError::DimensionMismatch(
                self.k(),
                self.d(),
                other.k(),
                other.d(),
            ))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Jet {
            space: self.space.clone(),
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Jet {
            space: self.space.clone(),
            coeffs,
        })
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, t) in &self.space.products {
            coeffs[t as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Ok(Jet {
            space: self.space.clone(),
            coeffs,
        })
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Same expansion with the constant term replaced.
    pub fn with_value(&self, v: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] = v;
        out
    }

    /// Jet of `f ∘ self` from `f(x₀), f′(x₀), …, f^{(d)}(x₀)` at `x₀ = self.value()`.
    pub fn compose(&self, f_derivs: &[f64]) -> Result<Jet, JetError> {
        let d = self.d();
        if f_derivs.len() < d + 1 {
            return Err(JetError::DerivativeCount {
                got: f_derivs.len(),
                expected: d + 1,
            });
        }
        let h = self.with_value(0.0);
        let mut acc = Jet::constant(self.k(), d, f_derivs[d] / factorial(d as u32));
        for n in (0..d).rev() {
            acc = acc.try_mul(&h)?;
            acc.coeffs[0] += f_derivs[n] / factorial(n as u32);
        }
        Ok(acc)
    }

    fn compose_with(&self, derivs: impl Fn(f64, usize) -> Vec<f64>) -> Jet {
        let ds = derivs(self.value(), self.d());
        self.compose(&ds).expect("derivative list sized to order")
    }

    pub fn recip(&self) -> Jet {
        self.compose_with(|x, d| {
            (0..=d)
                .map(|n| {
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    sign * factorial(n as u32) / x.powi(n as i32 + 1)
                })
                .collect()
        })
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.try_mul(&other.recip())
    }

    pub fn powf(&self, p: f64) -> Jet {
        self.compose_with(|x, d| {
            let mut out = Vec::with_capacity(d + 1);
            let mut c = 1.0;
            for n in 0..=d {
                out.push(c * x.powf(p - n as f64));
                c *= p - n as f64;
            }
            out
        })
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut acc = Jet::constant(self.k(), self.d(), 1.0);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn sin(&self) -> Jet {
        self.compose_with(|x, d| {
            (0..=d)
                .map(|n| match n % 4 {
                    0 => x.sin(),
                    1 => x.cos(),
                    2 => -x.sin(),
                    _ => -x.cos(),
                })
                .collect()
        })
    }

    pub fn cos(&self) -> Jet {
        self.compose_with(|x, d| {
            (0..=d)
                .map(|n| match n % 4 {
                    0 => x.cos(),
                    1 => -x.sin(),
                    2 => -x.cos(),
                    _ => x.sin(),
                })
                .collect()
        })
    }

    pub fn exp(&self) -> Jet {
        self.compose_with(|x, d| vec![x.exp(); d + 1])
    }

    pub fn ln(&self) -> Jet {
        self.compose_with(|x, d| {
            (0..=d)
                .map(|n| {
                    if n == 0 {
                        x.ln()
                    } else {
                        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                        sign * factorial(n as u32 - 1) / x.powi(n as i32)
                    }
                })
                .collect()
        })
    }

    /// Evaluate the truncated Taylor polynomial at offset `h = a - a₀`.
    pub fn eval_offset(&self, h: &[f64]) -> f64 {
        self.space
            .monomials
            .iter()
            .zip(&self.coeffs)
            .map(|(m, c)| c * m.monomial(h))
            .sum()
    }

    /// Re-expand the truncated polynomial at `a₀ + h`, giving a jet there.
    pub fn recenter(&self, h: &[f64]) -> Jet {
        let k = self.k();
        let d = self.d();
        let vars: Vec<Jet> = (0..k).map(|i| Jet::variable(k, d, i, h[i])).collect();
        let mut out = Jet::zero(k, d);
        for (m, c) in self.space.monomials.iter().zip(&self.coeffs) {
            if *c == 0.0 {
                continue;
            }
            out = &out + &monomial_jet(m, &vars).scale(*c);
        }
        out
    }

    /// Embed into a space with `k_total ≥ k` variables (the new ones appended)
    /// and order `d_total`. Coefficients beyond the source order are set to zero.
    pub fn lift(&self, k_total: usize, d_total: usize) -> Jet {
        let mut out = Jet::zero(k_total, d_total);
        for (m, c) in self.space.monomials.iter().zip(&self.coeffs) {
            if m.order() as usize > d_total {
                continue;
            }
            let mut e = m.exponents().to_vec();
            e.resize(k_total, 0);
            let idx = out.space.index_of(&MultiIndex::new(e)).expect("lifted index");
            out.coeffs[idx] = *c;
        }
        out
    }

    /// Taylor coefficient of `b^tail` where `b` are the trailing variables,
    /// as a jet of order `d_out` in the leading `k_keep` variables.
    pub fn split_coefficient(&self, k_keep: usize, tail: &[u32], d_out: usize) -> Jet {
        let mut out = Jet::zero(k_keep, d_out);
        for (i, m) in out.space.monomials.clone().iter().enumerate() {
            let mut e = m.exponents().to_vec();
            e.extend_from_slice(tail);
            if let Some(idx) = self.space.index_of(&MultiIndex::new(e)) {
                out.coeffs[i] = self.coeffs[idx];
            }
        }
        out
    }

    /// Treat `self` as the expansion of some `F` at `args[i].value()` and
    /// return the jet of `a ↦ F(args(a))` in the space of `args`.
    pub fn substitute(&self, args: &[Jet]) -> Jet {
        let target = &args[0];
        let d = target.d();
        let offsets: Vec<Jet> = args.iter().map(|v| v.with_value(0.0)).collect();
        let mut powers: Vec<Vec<Jet>> = Vec::with_capacity(offsets.len());
        for h in &offsets {
            let mut p = vec![Jet::constant(target.k(), d, 1.0)];
            for e in 1..=d.min(self.d()) {
                let next = &p[e - 1] * h;
                p.push(next);
            }
            powers.push(p);
        }
        let mut out = Jet::zero(target.k(), d);
        for (m, c) in self.space.monomials.iter().zip(&self.coeffs) {
            if *c == 0.0 || m.order() as usize > d {
                continue;
            }
            let mut term = Jet::constant(target.k(), d, *c);
            for (i, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    term = &term * &powers[i][e as usize];
                }
            }
            out = &out + &term;
        }
        out
    }

    /// Drop or zero-extend orders to `d_new`.
    pub fn with_order(&self, d_new: usize) -> Jet {
        self.lift(self.k(), d_new)
    }
}

/// `∏ vars_i^{m_i}` as a jet.
pub fn monomial_jet(m: &MultiIndex, vars: &[Jet]) -> Jet {
    let mut acc = Jet::constant(vars[0].k(), vars[0].d(), 1.0);
    for (e, v) in m.exponents().iter().zip(vars) {
        for _ in 0..*e {
            acc = &acc * v;
        }
    }
    acc
}

pub fn jet_add(x: &Jet, y: &Jet) -> Result<Jet, JetError> {
    x.try_add(y)
}

pub fn jet_mul(x: &Jet, y: &Jet) -> Result<Jet, JetError> {
    x.try_mul(y)
}

pub fn jet_compose_scalar(f_derivs: &[f64], x: &Jet) -> Result<Jet, JetError> {
    x.compose(f_derivs)
}

macro_rules! binop {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                self.$inner(rhs).expect("jet operands live in different spaces")
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.add_scalar(rhs)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self.add_scalar(-rhs)
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// `P_δ(X) = Σ δ(i)/α_i! X^{α_i}` over the non-constant monomials `α_i`
/// of degree at most `d`; `δ(0)` is carried along as the offset sign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedPolynomial {
    k: usize,
    d: usize,
    delta: Vec<i8>,
    basis: Vec<MultiIndex>,
}

/// The non-constant monomials of degree `≤ d`, graded lexicographic.
pub fn polynomial_basis(k: usize, d: usize) -> Vec<MultiIndex> {
    graded_monomials(k, d).into_iter().skip(1).collect()
}

impl SignedPolynomial {
    pub fn new(k: usize, d: usize, delta: Vec<i8>) -> Result<Self, JetError> {
        let basis = polynomial_basis(k, d);
        if delta.len() != basis.len() + 1 {
            return Err(JetError::SignLength {
                got: delta.len(),
                expected: basis.len() + 1,
            });
        }
        if delta.iter().any(|&s| s != 1 && s != -1) {
            return Err(JetError::BadSign);
        }
        Ok(Self { k, d, delta, basis })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn delta(&self) -> &[i8] {
        &self.delta
    }

    pub fn offset_sign(&self) -> f64 {
        self.delta[0] as f64
    }

    pub fn basis(&self) -> &[MultiIndex] {
        &self.basis
    }

    pub fn eval(&self, a: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.delta[1..])
            .map(|(m, &s)| s as f64 * m.monomial(a) / m.factorial())
            .sum()
    }

    pub fn eval_jet(&self, a: &[Jet]) -> Result<Jet, JetError> {
        if a.len() != self.k {
            return Err(JetError::ParameterCount {
                got: a.len(),
                expected: self.k,
            });
        }
        for v in &a[1..] {
            a[0].check(v)?;
        }
        let mut out = Jet::zero(a[0].k(), a[0].d());
        for (m, &s) in self.basis.iter().zip(&self.delta[1..]) {
            out = &out + &monomial_jet(m, a).scale(s as f64 / m.factorial());
        }
        Ok(out)
    }

    /// Upper bound of `|P_δ(a)|` for `‖a‖_∞ ≤ radius`.
    pub fn sup_bound(&self, radius: f64) -> f64 {
        self.basis
            .iter()
            .map(|m| radius.powi(m.order() as i32) / m.factorial())
            .sum()
    }
}

pub fn eval_p_delta(p: &SignedPolynomial, at: &[Jet]) -> Result<Jet, JetError> {
    p.eval_jet(at)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a1(d: usize) -> Jet {
        Jet::variable(1, d, 0, 0.0)
    }

    #[test]
    fn graded_order_is_lexicographic_within_degree() {
        let ms = graded_monomials(2, 2);
        let e: Vec<Vec<u32>> = ms.iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(
            e,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
        assert_eq!(dprime(2, 1), 2);
        assert_eq!(dprime(1, 3), 3);
        assert_eq!(dprime(2, 2), 5);
    }

    #[test]
    fn cancellation_and_identity() {
        let a = a1(2);
        let s = (&a + 1.0) + (-&a + 1.0);
        assert_eq!(s.taylor(), &[2.0, 0.0, 0.0]);
        let z = Jet::zero(1, 2);
        assert_eq!(&a + &z, a);
    }

    #[test]
    fn product_of_conjugates() {
        let a = a1(2);
        let p = (&a + 1.0) * (-&a + 1.0);
        assert_eq!(p.taylor(), &[1.0, 0.0, -1.0]);
        let one = Jet::constant(1, 2, 1.0);
        assert_eq!(&p * &one, p);
    }

    #[test]
    fn mismatch_is_an_error() {
        let x = Jet::zero(1, 2);
        let y = Jet::zero(1, 3);
        assert!(matches!(jet_add(&x, &y), Err(JetError::DimensionMismatch(1, 2, 1, 3))));
        assert!(jet_mul(&x, &y).is_err());
    }

    #[test]
    fn compose_identity_and_square() {
        let x = Jet::from_taylor(1, 3, vec![0.3, 1.2, -0.4, 0.7]).unwrap();
        let id = jet_compose_scalar(&[0.3, 1.0, 0.0, 0.0], &x).unwrap();
        for (u, v) in id.taylor().iter().zip(x.taylor()) {
            assert!((u - v).abs() < 1e-15);
        }
        let sq = jet_compose_scalar(&[0.0, 0.0, 2.0], &a1(2)).unwrap();
        assert_eq!(sq.taylor(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn sine_against_closed_form() {
        let x = Jet::variable(1, 3, 0, 0.4);
        let s = x.sin();
        let d = s.derivatives();
        assert!((d[0] - 0.4f64.sin()).abs() < 1e-15);
        assert!((d[1] - 0.4f64.cos()).abs() < 1e-15);
        assert!((d[2] + 0.4f64.sin()).abs() < 1e-15);
        assert!((d[3] + 0.4f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn p_delta_one_parameter() {
        let p = SignedPolynomial::new(1, 2, vec![1, -1, 1]).unwrap();
        let j = p.eval_jet(&[a1(2)]).unwrap();
        assert_eq!(j.derivatives(), vec![0.0, -1.0, 1.0]);
        assert!((p.eval(&[0.5]) - (-0.5 + 0.125)).abs() < 1e-15);
    }

    #[test]
    fn p_delta_two_parameters_degree_one() {
        let p = SignedPolynomial::new(2, 1, vec![1, -1, 1]).unwrap();
        let vars = Jet::parameters(1, &[0.0, 0.0]);
        let j = p.eval_jet(&vars).unwrap();
        assert_eq!(j.derivatives(), vec![0.0, -1.0, 1.0]);
        assert!((p.eval(&[0.3, 0.7]) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn p_delta_vanishes_at_origin() {
        for delta in [vec![1, 1, 1, 1], vec![-1, -1, 1, -1], vec![1, -1, -1, 1]] {
            let p = SignedPolynomial::new(1, 3, delta).unwrap();
            assert_eq!(p.eval_jet(&[a1(3)]).unwrap().value(), 0.0);
        }
        assert!(SignedPolynomial::new(1, 2, vec![1, 1]).is_err());
        assert!(SignedPolynomial::new(1, 1, vec![1, 0]).is_err());
    }

    #[test]
    fn recenter_matches_polynomial_shift() {
        let x = Jet::from_taylor(1, 2, vec![1.0, 2.0, 3.0]).unwrap();
        let y = x.recenter(&[0.5]);
        assert!((y.value() - (1.0 + 1.0 + 0.75)).abs() < 1e-15);
        assert!((y.taylor()[1] - (2.0 + 3.0)).abs() < 1e-15);
        assert!((y.taylor()[2] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn split_extracts_mixed_coefficient() {
        // f(a, b) = a * b + b^2 in a space with one parameter and one extra variable.
        let a = Jet::variable(2, 3, 0, 0.0);
        let b = Jet::variable(2, 3, 1, 0.0);
        let f = &(&a * &b) + &(&b * &b);
        let db = f.split_coefficient(1, &[1], 2);
        assert_eq!(db.taylor(), &[0.0, 1.0, 0.0]);
        let dbb = f.split_coefficient(1, &[2], 1);
        assert_eq!(dbb.taylor(), &[1.0, 0.0]);
    }
}
