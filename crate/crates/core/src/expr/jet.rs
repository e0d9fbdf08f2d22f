use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::ast::{BinOp, Expr, Func, Node};

/// Value, gradient and Hessian of a scalar at a point.
///
/// The Hessian is stored row-major and only ever written through
/// [`Jet2::set_hess`], which mirrors the upper triangle, so it is exactly
/// symmetric.
#[derive(Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet2")
            .field("value", &self.value)
            .field("grad", &self.grad)
            .field("hess", &self.hess)
            .finish()
    }
}

impl Jet2 {
    pub fn constant(value: f64, dim: usize) -> Jet2 {
        Jet2 {
            value,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }

    /// The coordinate function `x_index` seeded at `value`.
    pub fn variable(value: f64, index: usize, dim: usize) -> Jet2 {
        let mut j = Jet2::constant(value, dim);
        j.grad[index] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn d(&self, i: usize) -> f64 {
        self.grad[i]
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    fn set_hess(&mut self, i: usize, j: usize, v: f64) {
        let n = self.dim();
        self.hess[i * n + j] = v;
        self.hess[j * n + i] = v;
    }

    /// Compose with a scalar function given its value and first two
    /// derivatives at `self.value`.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let n = self.dim();
        let mut out = Jet2::constant(f0, n);
        for i in 0..n {
            out.grad[i] = f1 * self.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                out.set_hess(i, j, f1 * self.hess(i, j) + f2 * self.grad[i] * self.grad[j]);
            }
        }
        out
    }

    pub fn add(&self, other: &Jet2) -> Jet2 {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Jet2) -> Jet2 {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Jet2, op: impl Fn(f64, f64) -> f64) -> Jet2 {
        let n = self.dim();
        let mut out = Jet2::constant(op(self.value, other.value), n);
        for i in 0..n {
            out.grad[i] = op(self.grad[i], other.grad[i]);
        }
        for i in 0..n {
            for j in i..n {
                out.set_hess(i, j, op(self.hess(i, j), other.hess(i, j)));
            }
        }
        out
    }

    pub fn neg(&self) -> Jet2 {
        self.chain(-self.value, -1.0, 0.0)
    }

    pub fn mul(&self, other: &Jet2) -> Jet2 {
        let n = self.dim();
        let (a, b) = (self.value, other.value);
        let mut out = Jet2::constant(a * b, n);
        for i in 0..n {
            out.grad[i] = a * other.grad[i] + b * self.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                let v = a * other.hess(i, j)
                    + b * self.hess(i, j)
                    + self.grad[i] * other.grad[j]
                    + other.grad[i] * self.grad[j];
                out.set_hess(i, j, v);
            }
        }
        out
    }

    /// `1/self`; the caller checks for a zero value.
    pub fn recip(&self) -> Jet2 {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    /// Integer power via the chain rule; no sign restriction on the base.
    pub fn powi(&self, n: i32) -> Jet2 {
        let v = self.value;
        match n {
            0 => Jet2::constant(1.0, self.dim()),
            1 => self.clone(),
            _ => {
                let nf = n as f64;
                let f1 = nf * v.powi(n - 1);
                let f2 = if n == 2 { 2.0 } else { nf * (nf - 1.0) * v.powi(n - 2) };
                self.chain(v.powi(n), f1, f2)
            }
        }
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().all(|g| g.is_finite()) && self.hess.iter().all(|h| h.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogNonPositive,
    SqrtNonPositive,
    DivisionByZero,
    PowNonPositiveBase,
    NonFinite,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::LogNonPositive => "log of a non-positive value",
            DomainKind::SqrtNonPositive => "sqrt of a non-positive value",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::PowNonPositiveBase => "non-integer power of a non-positive base",
            DomainKind::NonFinite => "non-finite result",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{kind} in `{subexpr}`")]
    Domain { kind: DomainKind, subexpr: String },
    #[error("expression references coordinate {index} but the point has {len} entries")]
    PointTooShort { index: usize, len: usize },
}

fn domain(kind: DomainKind, e: &Expr) -> EvalError {
    EvalError::Domain {
        kind,
        subexpr: e.to_string(),
    }
}

/// Values shared by the jet and plain evaluators.
trait Scalar: Clone {
    fn constant(c: f64, dim: usize) -> Self;
    fn variable(v: f64, index: usize, dim: usize) -> Self;
    fn value(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn recip(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self;
    fn finite(&self) -> bool;
}

impl Scalar for Jet2 {
    fn constant(c: f64, dim: usize) -> Self {
        Jet2::constant(c, dim)
    }
    fn variable(v: f64, index: usize, dim: usize) -> Self {
        Jet2::variable(v, index, dim)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn add(&self, o: &Self) -> Self {
        Jet2::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Jet2::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Jet2::mul(self, o)
    }
    fn neg(&self) -> Self {
        Jet2::neg(self)
    }
    fn recip(&self) -> Self {
        Jet2::recip(self)
    }
    fn powi(&self, n: i32) -> Self {
        Jet2::powi(self, n)
    }
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        Jet2::chain(self, f0, f1, f2)
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f64 {
    fn constant(c: f64, _dim: usize) -> Self {
        c
    }
    fn variable(v: f64, _index: usize, _dim: usize) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn chain(&self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

/// Value and first two derivatives of `func` at `v`, with domain checks.
fn func_derivs(func: Func, v: f64) -> Result<(f64, f64, f64), DomainKind> {
    Ok(match func {
        Func::Sin => (v.sin(), v.cos(), -v.sin()),
        Func::Cos => (v.cos(), -v.sin(), -v.cos()),
        Func::Tan => {
            let t = v.tan();
            let s = 1.0 + t * t;
            (t, s, 2.0 * t * s)
        }
        Func::Sinh => (v.sinh(), v.cosh(), v.sinh()),
        Func::Cosh => (v.cosh(), v.sinh(), v.cosh()),
        Func::Tanh => {
            let t = v.tanh();
            let s = 1.0 - t * t;
            (t, s, -2.0 * t * s)
        }
        Func::Exp => {
            let e = v.exp();
            (e, e, e)
        }
        Func::Log => {
            if v <= 0.0 {
                return Err(DomainKind::LogNonPositive);
            }
            (v.ln(), 1.0 / v, -1.0 / (v * v))
        }
        Func::Sqrt => {
            // derivatives blow up at 0, so 0 is excluded too
            if v <= 0.0 {
                return Err(DomainKind::SqrtNonPositive);
            }
            let s = v.sqrt();
            (s, 0.5 / s, -0.25 / (s * v))
        }
    })
}

struct Evaluator<'p, S> {
    point: &'p [f64],
    memo: HashMap<*const Node, S>,
}

impl<S: Scalar> Evaluator<'_, S> {
    fn eval(&mut self, e: &Expr) -> Result<S, EvalError> {
        let shared = e.is_shared();
        if shared {
            if let Some(v) = self.memo.get(&e.ptr()) {
                return Ok(v.clone());
            }
        }
        let out = self.eval_node(e)?;
        if !out.finite() {
            return Err(domain(DomainKind::NonFinite, e));
        }
        if shared {
            self.memo.insert(e.ptr(), out.clone());
        }
        Ok(out)
    }

    fn eval_node(&mut self, e: &Expr) -> Result<S, EvalError> {
        let dim = self.point.len();
        Ok(match e.node() {
            Node::Const(c) => S::constant(*c, dim),
            Node::Var { index, .. } => {
                let v = *self.point.get(*index).ok_or(EvalError::PointTooShort {
                    index: *index,
                    len: dim,
                })?;
                S::variable(v, *index, dim)
            }
            Node::Neg(a) => self.eval(a)?.neg(),
            Node::Call(func, a) => {
                let x = self.eval(a)?;
                let (f0, f1, f2) = func_derivs(*func, x.value()).map_err(|k| domain(k, e))?;
                x.chain(f0, f1, f2)
            }
            Node::Binary(op, a, b) => {
                let x = self.eval(a)?;
                match op {
                    BinOp::Add => x.add(&self.eval(b)?),
                    BinOp::Sub => x.sub(&self.eval(b)?),
                    BinOp::Mul => x.mul(&self.eval(b)?),
                    BinOp::Div => {
                        let y = self.eval(b)?;
                        if y.value() == 0.0 {
                            return Err(domain(DomainKind::DivisionByZero, e));
                        }
                        x.mul(&y.recip())
                    }
                    BinOp::Pow => self.power(e, x, b)?,
                }
            }
        })
    }

    fn power(&mut self, e: &Expr, base: S, exponent: &Expr) -> Result<S, EvalError> {
        let a = base.value();
        if exponent.is_constant() {
            let p = self.eval(exponent)?.value();
            if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                let n = p as i32;
                if n < 0 && a == 0.0 {
                    return Err(domain(DomainKind::DivisionByZero, e));
                }
                return Ok(base.powi(n));
            }
            if a <= 0.0 {
                return Err(domain(DomainKind::PowNonPositiveBase, e));
            }
            let f0 = a.powf(p);
            return Ok(base.chain(f0, p * a.powf(p - 1.0), p * (p - 1.0) * a.powf(p - 2.0)));
        }
        if a <= 0.0 {
            return Err(domain(DomainKind::PowNonPositiveBase, e));
        }
        // a^b = exp(b log a)
        let log_a = base.chain(a.ln(), 1.0 / a, -1.0 / (a * a));
        let prod = self.eval(exponent)?.mul(&log_a);
        let ev = prod.value().exp();
        Ok(prod.chain(ev, ev, ev))
    }
}

impl Expr {
    /// Exact value, gradient and Hessian at `point`; every coordinate of the
    /// point is an active variable.
    pub fn eval_jet2(&self, point: &[f64]) -> Result<Jet2, EvalError> {
        Evaluator {
            point,
            memo: HashMap::new(),
        }
        .eval(self)
    }

    /// Value only.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        Evaluator {
            point,
            memo: HashMap::new(),
        }
        .eval(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    const SYMS: [&str; 3] = ["x1", "x2", "x3"];

    fn jet(src: &str, p: &[f64]) -> Jet2 {
        parse_expression(src, &SYMS).unwrap().eval_jet2(p).unwrap()
    }

    #[test]
    fn exp_at_zero() {
        let j = jet("exp(x3)", &[0.0, 0.0, 0.0]);
        assert_eq!(j.value, 1.0);
        assert_eq!(j.d(2), 1.0);
        assert_eq!(j.hess(2, 2), 1.0);
        assert_eq!(j.d(0), 0.0);
    }

    #[test]
    fn bilinear_form() {
        let j = jet("x1*x2", &[2.0, 3.0, 0.0]);
        assert_eq!(j.value, 6.0);
        assert_eq!(j.grad(), &[3.0, 2.0, 0.0]);
        assert_eq!(j.hess(0, 1), 1.0);
        assert_eq!(j.hess(1, 0), 1.0);
        assert_eq!(j.hess(0, 0), 0.0);
    }

    #[test]
    fn cosh_is_even() {
        let j = jet("cosh(x2)", &[0.0, 0.0, 0.0]);
        assert_eq!((j.value, j.d(1), j.hess(1, 1)), (1.0, 0.0, 1.0));
    }

    #[test]
    fn integer_powers_accept_negative_bases() {
        let j = jet("x1^3", &[-2.0, 0.0, 0.0]);
        assert_eq!((j.value, j.d(0), j.hess(0, 0)), (-8.0, 12.0, -12.0));
        let j = jet("x1^-1", &[-2.0, 0.0, 0.0]);
        assert_eq!((j.value, j.d(0), j.hess(0, 0)), (-0.5, -0.25, -0.25));
        let j = jet("x1^2", &[0.0, 0.0, 0.0]);
        assert_eq!((j.value, j.d(0), j.hess(0, 0)), (0.0, 0.0, 2.0));
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let e = parse_expression("1 + log(x1 - 1)", &SYMS).unwrap();
        match e.eval_jet2(&[0.5, 0.0, 0.0]) {
            Err(EvalError::Domain { kind, subexpr }) => {
                assert_eq!(kind, DomainKind::LogNonPositive);
                assert_eq!(subexpr, "log(x1-1)");
            }
            other => panic!("{:?}", other),
        }
        let e = parse_expression("x2/x1", &SYMS).unwrap();
        assert!(matches!(
            e.eval(&[0.0, 1.0, 0.0]),
            Err(EvalError::Domain {
                kind: DomainKind::DivisionByZero,
                ..
            })
        ));
        let e = parse_expression("sqrt(x1)", &SYMS).unwrap();
        assert!(e.eval_jet2(&[-1.0, 0.0, 0.0]).is_err());
        let e = parse_expression("x1^0.5", &SYMS).unwrap();
        assert!(matches!(
            e.eval(&[-1.0, 0.0, 0.0]),
            Err(EvalError::Domain {
                kind: DomainKind::PowNonPositiveBase,
                ..
            })
        ));
        let e = parse_expression("x1^x2", &SYMS).unwrap();
        assert!(e.eval(&[-1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn short_point_is_an_error() {
        let e = parse_expression("x3", &SYMS).unwrap();
        assert_eq!(e.eval(&[1.0]), Err(EvalError::PointTooShort { index: 2, len: 1 }));
    }

    #[test]
    fn shared_subtrees_evaluate_once_and_agree() {
        let a = parse_expression("sin(x1)*x2", &SYMS).unwrap();
        let mut e = a.clone();
        for _ in 0..40 {
            e = Expr::add(&Expr::mul(&e, &a), &e);
        }
        // without memoization this would take 2^40 visits
        let j = e.eval_jet2(&[0.3, 0.2, 0.1]).unwrap();
        assert!(j.value.is_finite());
    }

    #[test]
    fn symbolic_derivative_matches_jet() {
        let p = [0.4, -0.3, 0.7];
        for src in [
            "exp(x3)*x1^2 - cosh(x2)/x3",
            "tan(x1*x2) + tanh(x3)^3",
            "sqrt(x3 + 2)*log(x1 + 1)",
            "x3^x1",
            "sin(x1)*cos(x2)*sinh(x3)",
        ] {
            let e = parse_expression(src, &SYMS).unwrap();
            let j = e.eval_jet2(&p).unwrap();
            for i in 0..3 {
                let d = e.derivative(i);
                let dj = d.eval_jet2(&p).unwrap();
                assert!((dj.value - j.d(i)).abs() < 1e-12, "{} d{}", src, i);
                for k in 0..3 {
                    assert!((dj.d(k) - j.hess(i, k)).abs() < 1e-11, "{} d{}{}", src, i, k);
                }
            }
        }
    }
}
