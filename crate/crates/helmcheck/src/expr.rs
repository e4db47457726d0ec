//! Expression language for scalar fields on the slit tangent bundle.
//!
//! A [`ScalarField`] is an immutable expression tree over the coordinates
//! `x1..xn, y1..yn`, supporting exact symbolic partial differentiation,
//! best-effort simplification and IEEE double evaluation at a [`PhasePoint`].

use std::fmt;
use std::sync::Arc;

use crate::error::SymError;

/// Default lower bound on |y|; keeps points away from the zero section.
pub const DEFAULT_Y_MIN: f64 = 0.1;

/// Which of the two coordinate groups a variable belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoordKind {
    /// Base coordinates `x1..xn`.
    Base,
    /// Fiber coordinates `y1..yn`.
    Fiber,
}

/// A coordinate variable, 1-based within its group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoordIndex {
    pub kind: CoordKind,
    pub index: usize,
}

impl CoordIndex {
    pub fn base(index: usize) -> Self {
        CoordIndex { kind: CoordKind::Base, index }
    }

    pub fn fiber(index: usize) -> Self {
        CoordIndex { kind: CoordKind::Fiber, index }
    }

    /// Flat frame index in `0..2n`: base coordinates first, then fiber.
    pub fn flat(&self, n: usize) -> usize {
        match self.kind {
            CoordKind::Base => self.index - 1,
            CoordKind::Fiber => n + self.index - 1,
        }
    }

    /// Inverse of [`CoordIndex::flat`].
    pub fn from_flat(a: usize, n: usize) -> Self {
        if a < n {
            CoordIndex::base(a + 1)
        } else {
            CoordIndex::fiber(a - n + 1)
        }
    }
}

impl fmt::Display for CoordIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CoordKind::Base => write!(f, "x{}", self.index),
            CoordKind::Fiber => write!(f, "y{}", self.index),
        }
    }
}

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub fn name(&self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        match s {
            "sqrt" => Some(Func::Sqrt),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            _ => None,
        }
    }
}

/// Expression tree node. Subtrees are shared via `Arc`, never mutated.
#[derive(Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(CoordIndex),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Call(Func, Arc<Expr>),
}

/// A point of `TM \ {0}`: base coordinates `x` and nonzero fiber `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PhasePoint {
    /// Builds a point, enforcing `|y| >= y_min`.
    pub fn new(x: Vec<f64>, y: Vec<f64>, y_min: f64) -> Result<Self, SymError> {
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < y_min {
            return Err(SymError::ZeroSection { norm, y_min });
        }
        Ok(PhasePoint { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn coord(&self, v: CoordIndex) -> f64 {
        match v.kind {
            CoordKind::Base => self.x[v.index - 1],
            CoordKind::Fiber => self.y[v.index - 1],
        }
    }

    /// Same point with the fiber scaled by `lambda`.
    pub fn scale_fiber(&self, lambda: f64) -> PhasePoint {
        PhasePoint {
            x: self.x.clone(),
            y: self.y.iter().map(|v| v * lambda).collect(),
        }
    }

    /// Point shifted by `h` in coordinate `v`; used by finite-difference oracles.
    pub fn shifted(&self, v: CoordIndex, h: f64) -> PhasePoint {
        let mut p = self.clone();
        match v.kind {
            CoordKind::Base => p.x[v.index - 1] += h,
            CoordKind::Fiber => p.y[v.index - 1] += h,
        }
        p
    }
}

impl fmt::Display for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_vec = |v: &[f64]| {
            v.iter()
                .map(|c| format!("{c}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "(x=({}), y=({}))", fmt_vec(&self.x), fmt_vec(&self.y))
    }
}

/// An immutable scalar field on `TM \ {0}` in dimension `n`.
#[derive(Debug, Clone)]
pub struct ScalarField {
    expr: Arc<Expr>,
    dim: usize,
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.expr == other.expr
    }
}

fn as_num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        _ => None,
    }
}

impl ScalarField {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn constant(n: usize, value: f64) -> ScalarField {
        ScalarField { expr: Arc::new(Expr::Num(value)), dim: n }
    }

    pub fn zero(n: usize) -> ScalarField {
        ScalarField::constant(n, 0.0)
    }

    pub fn one(n: usize) -> ScalarField {
        ScalarField::constant(n, 1.0)
    }

    pub fn var(n: usize, v: CoordIndex) -> ScalarField {
        assert!(v.index >= 1 && v.index <= n, "variable index out of range");
        ScalarField { expr: Arc::new(Expr::Var(v)), dim: n }
    }

    pub fn is_zero(&self) -> bool {
        as_num(&self.expr) == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        as_num(&self.expr) == Some(1.0)
    }

    fn wrap(&self, expr: Arc<Expr>) -> ScalarField {
        ScalarField { expr, dim: self.dim }
    }

    // Peephole-simplifying constructors. Every derived operation goes
    // through these, which keeps expression swell in check without a
    // separate canonicalization pass.

    pub fn add(&self, rhs: &ScalarField) -> ScalarField {
        debug_assert_eq!(self.dim, rhs.dim);
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if let (Some(a), Some(b)) = (as_num(&self.expr), as_num(&rhs.expr)) {
            return ScalarField::constant(self.dim, a + b);
        }
        self.wrap(Arc::new(Expr::Add(self.expr.clone(), rhs.expr.clone())))
    }

    pub fn sub(&self, rhs: &ScalarField) -> ScalarField {
        debug_assert_eq!(self.dim, rhs.dim);
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.neg();
        }
        if self.expr == rhs.expr {
            return ScalarField::zero(self.dim);
        }
        if let (Some(a), Some(b)) = (as_num(&self.expr), as_num(&rhs.expr)) {
            return ScalarField::constant(self.dim, a - b);
        }
        self.wrap(Arc::new(Expr::Sub(self.expr.clone(), rhs.expr.clone())))
    }

    pub fn mul(&self, rhs: &ScalarField) -> ScalarField {
        debug_assert_eq!(self.dim, rhs.dim);
        if self.is_zero() || rhs.is_zero() {
            return ScalarField::zero(self.dim);
        }
        if self.is_one() {
            return rhs.clone();
        }
        if rhs.is_one() {
            return self.clone();
        }
        if let (Some(a), Some(b)) = (as_num(&self.expr), as_num(&rhs.expr)) {
            return ScalarField::constant(self.dim, a * b);
        }
        self.wrap(Arc::new(Expr::Mul(self.expr.clone(), rhs.expr.clone())))
    }

    pub fn div(&self, rhs: &ScalarField) -> ScalarField {
        debug_assert_eq!(self.dim, rhs.dim);
        if self.is_zero() && !rhs.is_zero() {
            return ScalarField::zero(self.dim);
        }
        if rhs.is_one() {
            return self.clone();
        }
        if let (Some(a), Some(b)) = (as_num(&self.expr), as_num(&rhs.expr)) {
            if b != 0.0 {
                return ScalarField::constant(self.dim, a / b);
            }
        }
        self.wrap(Arc::new(Expr::Div(self.expr.clone(), rhs.expr.clone())))
    }

    pub fn pow(&self, rhs: &ScalarField) -> ScalarField {
        debug_assert_eq!(self.dim, rhs.dim);
        if let Some(b) = as_num(&rhs.expr) {
            if b == 0.0 {
                return ScalarField::one(self.dim);
            }
            if b == 1.0 {
                return self.clone();
            }
            if let Some(a) = as_num(&self.expr) {
                let v = a.powf(b);
                if v.is_finite() {
                    return ScalarField::constant(self.dim, v);
                }
            }
        }
        self.wrap(Arc::new(Expr::Pow(self.expr.clone(), rhs.expr.clone())))
    }

    pub fn powi(&self, k: i32) -> ScalarField {
        self.pow(&ScalarField::constant(self.dim, k as f64))
    }

    pub fn neg(&self) -> ScalarField {
        if let Some(a) = as_num(&self.expr) {
            return ScalarField::constant(self.dim, -a);
        }
        if let Expr::Neg(inner) = &*self.expr {
            return self.wrap(inner.clone());
        }
        self.wrap(Arc::new(Expr::Neg(self.expr.clone())))
    }

    pub fn call(&self, f: Func) -> ScalarField {
        if let Some(a) = as_num(&self.expr) {
            let v = eval_func(f, a);
            if v.is_finite() {
                return ScalarField::constant(self.dim, v);
            }
        }
        self.wrap(Arc::new(Expr::Call(f, self.expr.clone())))
    }

    pub fn sqrt(&self) -> ScalarField {
        self.call(Func::Sqrt)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        ScalarField::constant(self.dim, c).mul(self)
    }

    /// Evaluates at `p`, flagging singular sub-expressions.
    pub fn eval(&self, p: &PhasePoint) -> Result<f64, SymError> {
        eval_expr(&self.expr, p)
    }

    /// Exact symbolic partial derivative with respect to `v`.
    pub fn diff(&self, v: CoordIndex) -> ScalarField {
        ScalarField { expr: diff_expr(&self.expr, v, self.dim), dim: self.dim }
    }

    /// Value-preserving rewrite. Not a canonical form.
    pub fn simplify(&self) -> ScalarField {
        simplify_field(self)
    }
}

fn eval_func(f: Func, a: f64) -> f64 {
    match f {
        Func::Sqrt => a.sqrt(),
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Exp => a.exp(),
        Func::Log => a.ln(),
    }
}

fn eval_expr(e: &Expr, p: &PhasePoint) -> Result<f64, SymError> {
    let singular = |what: &Expr| SymError::DomainError {
        expr: format!("{}", DisplayExpr(what)),
        point: format!("{p}"),
    };
    match e {
        Expr::Num(v) => Ok(*v),
        Expr::Var(v) => Ok(p.coord(*v)),
        Expr::Add(a, b) => Ok(eval_expr(a, p)? + eval_expr(b, p)?),
        Expr::Sub(a, b) => Ok(eval_expr(a, p)? - eval_expr(b, p)?),
        Expr::Mul(a, b) => Ok(eval_expr(a, p)? * eval_expr(b, p)?),
        Expr::Div(a, b) => {
            let d = eval_expr(b, p)?;
            if d == 0.0 {
                return Err(singular(e));
            }
            Ok(eval_expr(a, p)? / d)
        }
        Expr::Pow(a, b) => {
            let v = eval_expr(a, p)?.powf(eval_expr(b, p)?);
            if !v.is_finite() {
                return Err(singular(e));
            }
            Ok(v)
        }
        Expr::Neg(a) => Ok(-eval_expr(a, p)?),
        Expr::Call(f, a) => {
            let v = eval_func(*f, eval_expr(a, p)?);
            if !v.is_finite() {
                return Err(singular(e));
            }
            Ok(v)
        }
    }
}

fn diff_expr(e: &Expr, v: CoordIndex, n: usize) -> Arc<Expr> {
    let field = |expr: Arc<Expr>| ScalarField { expr, dim: n };
    let d = |sub: &Arc<Expr>| field(diff_expr(sub, v, n));
    let f = |sub: &Arc<Expr>| field(sub.clone());
    let out = match e {
        Expr::Num(_) => ScalarField::zero(n),
        Expr::Var(w) => {
            if *w == v {
                ScalarField::one(n)
            } else {
                ScalarField::zero(n)
            }
        }
        Expr::Add(a, b) => d(a).add(&d(b)),
        Expr::Sub(a, b) => d(a).sub(&d(b)),
        Expr::Mul(a, b) => d(a).mul(&f(b)).add(&f(a).mul(&d(b))),
        Expr::Div(a, b) => {
            // (a/b)' = (a'b - ab') / b^2
            let num = d(a).mul(&f(b)).sub(&f(a).mul(&d(b)));
            num.div(&f(b).powi(2))
        }
        Expr::Pow(a, b) => {
            if let Some(k) = as_num(b) {
                // constant exponent: k * a^(k-1) * a'
                f(a).pow(&ScalarField::constant(n, k - 1.0))
                    .scale(k)
                    .mul(&d(a))
            } else {
                // a^b * (b' log a + b a'/a)
                let t1 = d(b).mul(&f(a).call(Func::Log));
                let t2 = f(b).mul(&d(a)).div(&f(a));
                f(a).pow(&f(b)).mul(&t1.add(&t2))
            }
        }
        Expr::Neg(a) => d(a).neg(),
        Expr::Call(func, a) => {
            let inner = d(a);
            let outer = match func {
                Func::Sqrt => {
                    // 1 / (2 sqrt a)
                    ScalarField::constant(n, 0.5).div(&f(a).call(Func::Sqrt))
                }
                Func::Sin => f(a).call(Func::Cos),
                Func::Cos => f(a).call(Func::Sin).neg(),
                Func::Exp => f(a).call(Func::Exp),
                Func::Log => ScalarField::one(n).div(&f(a)),
            };
            outer.mul(&inner)
        }
    };
    out.expr
}

fn simplify_field(field: &ScalarField) -> ScalarField {
    let n = field.dim;
    let wrap = |expr: Arc<Expr>| ScalarField { expr, dim: n };
    match field.expr() {
        Expr::Num(_) | Expr::Var(_) => field.clone(),
        Expr::Add(a, b) => wrap(a.clone()).simplify().add(&wrap(b.clone()).simplify()),
        Expr::Sub(a, b) => wrap(a.clone()).simplify().sub(&wrap(b.clone()).simplify()),
        Expr::Mul(a, b) => wrap(a.clone()).simplify().mul(&wrap(b.clone()).simplify()),
        Expr::Div(a, b) => wrap(a.clone()).simplify().div(&wrap(b.clone()).simplify()),
        Expr::Pow(a, b) => wrap(a.clone()).simplify().pow(&wrap(b.clone()).simplify()),
        Expr::Neg(a) => wrap(a.clone()).simplify().neg(),
        Expr::Call(f, a) => wrap(a.clone()).simplify().call(*f),
    }
}

// Precedence levels for printing: Add/Sub 1, Mul/Div 2, unary minus 3, Pow 4.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        Expr::Num(v) if *v < 0.0 => 3,
        _ => 5,
    }
}

struct DisplayExpr<'a>(&'a Expr);

impl fmt::Display for DisplayExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn sub(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if prec(e) < min {
                write!(f, "(")?;
                go(f, e)?;
                write!(f, ")")
            } else {
                go(f, e)
            }
        }
        // A right operand that starts with a minus sign must always be
        // parenthesized, or the printed string re-parses differently.
        fn sub_rhs(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            let leading_minus =
                matches!(e, Expr::Neg(..)) || matches!(e, Expr::Num(v) if *v < 0.0);
            if leading_minus || prec(e) < min {
                write!(f, "(")?;
                go(f, e)?;
                write!(f, ")")
            } else {
                go(f, e)
            }
        }
        fn go(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
            match e {
                Expr::Num(v) => write!(f, "{v}"),
                Expr::Var(v) => write!(f, "{v}"),
                Expr::Add(a, b) => {
                    sub(f, a, 1)?;
                    write!(f, "+")?;
                    sub_rhs(f, b, 2)
                }
                Expr::Sub(a, b) => {
                    sub(f, a, 1)?;
                    write!(f, "-")?;
                    sub_rhs(f, b, 2)
                }
                Expr::Mul(a, b) => {
                    sub(f, a, 2)?;
                    write!(f, "*")?;
                    sub_rhs(f, b, 3)
                }
                Expr::Div(a, b) => {
                    sub(f, a, 2)?;
                    write!(f, "/")?;
                    sub_rhs(f, b, 3)
                }
                Expr::Pow(a, b) => {
                    sub(f, a, 5)?;
                    write!(f, "^")?;
                    sub(f, b, 4)
                }
                Expr::Neg(a) => {
                    write!(f, "-")?;
                    sub(f, a, 3)
                }
                Expr::Call(func, a) => {
                    write!(f, "{}(", func.name())?;
                    go(f, a)?;
                    write!(f, ")")
                }
            }
        }
        go(f, self.0)
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        DisplayExpr(&self.expr).fmt(f)
    }
}

/// Exact rational number with small denominator; used for homogeneity degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Rational {
        assert!(den > 0);
        Rational { num, den }
    }

    pub fn integer(k: i64) -> Rational {
        Rational { num: k, den: 1 }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Nearest rational with denominator `<= max_den`, if within `tol`.
    pub fn approximate(v: f64, max_den: i64, tol: f64) -> Option<Rational> {
        let mut best: Option<(f64, Rational)> = None;
        for den in 1..=max_den {
            let num = (v * den as f64).round();
            if num.abs() > 1e6 {
                continue;
            }
            let err = (v - num / den as f64).abs();
            if err <= tol && best.map_or(true, |(e, _)| err < e) {
                best = Some((err, Rational::new(num as i64, den)));
            }
        }
        best.map(|(_, r)| r)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Detects the positive homogeneity degree of `f` in the fiber variables.
///
/// Computes the Euler ratio `(sum_i y_i df/dy_i) / f` at every admissible
/// sample point and accepts only if all ratios agree, round to a rational
/// with denominator at most 4, and the direct scaling law
/// `f(x, 2y) = 2^k f(x, y)` holds.
pub fn homogeneity_degree(
    f: &ScalarField,
    points: &[PhasePoint],
) -> Result<Option<Rational>, SymError> {
    let n = f.dim();
    let euler: Vec<ScalarField> = (1..=n).map(|i| f.diff(CoordIndex::fiber(i))).collect();

    let mut ratios: Vec<(f64, PhasePoint)> = Vec::new();
    for p in points {
        let fv = match f.eval(p) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if fv.abs() <= 1e-8 {
            continue;
        }
        let mut cf = 0.0;
        let mut ok = true;
        for (i, df) in euler.iter().enumerate() {
            match df.eval(p) {
                Ok(v) => cf += p.y[i] * v,
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            ratios.push((cf / fv, p.clone()));
        }
    }
    if ratios.len() < 8 {
        return Err(SymError::InsufficientSamples {
            needed: 8,
            got: ratios.len(),
        });
    }

    let k0 = ratios[0].0;
    if ratios.iter().any(|(k, _)| (k - k0).abs() > 1e-7) {
        return Ok(None);
    }
    let rat = match Rational::approximate(k0, 4, 1e-7) {
        Some(r) => r,
        None => return Ok(None),
    };

    // Direct scaling cross-check at 8 points.
    let k = rat.value();
    let mut checked = 0;
    for (_, p) in &ratios {
        if checked >= 8 {
            break;
        }
        let p2 = p.scale_fiber(2.0);
        let (f1, f2) = match (f.eval(p), f.eval(&p2)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        let expect = 2f64.powf(k) * f1;
        if (f2 - expect).abs() > 1e-8 * (1.0 + expect.abs()) {
            return Ok(None);
        }
        checked += 1;
    }
    Ok(Some(rat))
}

/// True when `f` evaluates below `eps` in absolute value at every point
/// where it is defined.
pub fn is_numerically_zero(f: &ScalarField, points: &[PhasePoint], eps: f64) -> bool {
    points
        .iter()
        .filter_map(|p| f.eval(p).ok())
        .all(|v| v.abs() <= eps)
}

mod parser;
pub use parser::parse_expr;
