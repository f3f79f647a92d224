//! Random expression trees evaluated both on floats and on jets.

#![allow(dead_code)]

use parablend::jets::Jet;
use rand::Rng;

#[derive(Clone, Debug)]
pub enum Expr {
    Var(usize),
    Const(f64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// `l / (1 + r²)`, kept away from poles.
    Div(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    /// `exp(e / 2)`.
    Exp(Box<Expr>),
    /// `sqrt(1 + e²)`.
    Hypot(Box<Expr>),
}

pub fn random_expr<R: Rng>(rng: &mut R, vars: usize, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.7) {
            Expr::Var(rng.gen_range(0..vars))
        } else {
            Expr::Const(rng.gen_range(-1.5..1.5))
        };
    }
    let op = rng.gen_range(0..8);
    let mut sub = || Box::new(random_expr(rng, vars, depth - 1));
    match op {
        0 => Expr::Add(sub(), sub()),
        1 => Expr::Sub(sub(), sub()),
        2 => Expr::Mul(sub(), sub()),
        3 => Expr::Div(sub(), sub()),
        4 => Expr::Sin(sub()),
        5 => Expr::Cos(sub()),
        6 => Expr::Exp(sub()),
        _ => Expr::Hypot(sub()),
    }
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Var(i) => x[*i],
            Expr::Const(c) => *c,
            Expr::Add(l, r) => l.eval(x) + r.eval(x),
            Expr::Sub(l, r) => l.eval(x) - r.eval(x),
            Expr::Mul(l, r) => l.eval(x) * r.eval(x),
            Expr::Div(l, r) => {
                let d = r.eval(x);
                l.eval(x) / (1.0 + d * d)
            }
            Expr::Sin(e) => e.eval(x).sin(),
            Expr::Cos(e) => e.eval(x).cos(),
            Expr::Exp(e) => (0.5 * e.eval(x)).exp(),
            Expr::Hypot(e) => e.eval(x).hypot(1.0),
        }
    }

    pub fn eval_jet(&self, x: &[Jet]) -> Jet {
        let k = x[0].k();
        let d = x[0].d();
        match self {
            Expr::Var(i) => x[*i].clone(),
            Expr::Const(c) => Jet::constant(k, d, *c),
            Expr::Add(l, r) => &l.eval_jet(x) + &r.eval_jet(x),
            Expr::Sub(l, r) => &l.eval_jet(x) - &r.eval_jet(x),
            Expr::Mul(l, r) => &l.eval_jet(x) * &r.eval_jet(x),
            Expr::Div(l, r) => {
                let d = r.eval_jet(x);
                let den = (&d * &d).add_scalar(1.0);
                l.eval_jet(x).try_div(&den).expect("same space")
            }
            Expr::Sin(e) => e.eval_jet(x).sin(),
            Expr::Cos(e) => e.eval_jet(x).cos(),
            Expr::Exp(e) => e.eval_jet(x).scale(0.5).exp(),
            Expr::Hypot(e) => {
                let v = e.eval_jet(x);
                (&v * &v).add_scalar(1.0).sqrt()
            }
        }
    }
}

/// Largest relative mismatch between jet first and pure second partials and central differences.
pub fn finite_difference_error(e: &Expr, x: &[f64], step: f64) -> f64 {
    let k = x.len();
    let jet = e.eval_jet(&Jet::parameters(2, x));
    let ds = jet.derivatives();
    let f0 = e.eval(x);
    let mut worst = 0.0f64;
    for i in 0..k {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[i] += step;
        minus[i] -= step;
        let (fp, fm) = (e.eval(&plus), e.eval(&minus));
        let first = (fp - fm) / (2.0 * step);
        let second = (fp - 2.0 * f0 + fm) / (step * step);
        let jet_first = ds[1 + i];
        let pure = parablend::jets::MultiIndex::new((0..k).map(|j| if j == i { 2 } else { 0 }).collect());
        let jet_second = jet.derivative(&pure).expect("order two");
        worst = worst.max((jet_first - first).abs() / first.abs().max(1.0));
        worst = worst.max((jet_second - second).abs() / second.abs().max(1.0));
    }
    worst
}
