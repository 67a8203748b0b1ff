//! Expression trees for the kinetic and potential terms of a Hamiltonian:
//! parsing, checked evaluation, exact symbolic differentiation and a
//! compiled form for evaluating the same expression over whole grids.
//!
//! The reserved variable names are `x`, `p`, `t` and `E` (energy coordinate
//! of the extended phase space). Every other identifier is a parameter and
//! must be bound before evaluation.

mod compile;
mod model;
mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use compile::CompiledExpr;
pub use model::{HamiltonianModel, ModelFunctions};

/// Parameter values by name.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { offset: usize, name: String },

    #[error("unbound name `{0}`")]
    Unbound(String),

    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    X,
    P,
    T,
    E,
}

impl Variable {
    pub const ALL: [Variable; 4] = [Variable::X, Variable::P, Variable::T, Variable::E];

    pub fn name(self) -> &'static str {
        match self {
            Variable::X => "x",
            Variable::P => "p",
            Variable::T => "t",
            Variable::E => "E",
        }
    }

    pub fn from_name(s: &str) -> Option<Variable> {
        Variable::ALL.into_iter().find(|v| v.name() == s)
    }

    /// Slot in the value array passed to [`CompiledExpr::eval`].
    pub fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Tanh,
    Ln,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Ln => "ln",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        [Func::Exp, Func::Sin, Func::Cos, Func::Sqrt, Func::Tanh, Func::Ln].into_iter().find(|f| f.name() == s)
    }

    #[inline]
    pub(crate) fn apply(self, a: f64) -> f64 {
        match self {
            Func::Exp => a.exp(),
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Sqrt => a.sqrt(),
            Func::Tanh => a.tanh(),
            Func::Ln => a.ln(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Variable),
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Parses an expression. Unknown identifiers are accepted here as
/// parameters and reported when the expression is validated or evaluated.
pub fn parse(text: &str) -> Result<Expr, ExprError> {
    parser::parse(text)
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(v: Variable) -> Expr {
        Expr::Var(v)
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(name.to_string())
    }

    pub fn literal(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.literal() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.literal() == Some(1.0)
    }

    pub fn variables(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Var(v) = e {
                out.insert(*v);
            }
        });
        out
    }

    pub fn parameters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Param(n) = e {
                out.insert(n.clone());
            }
        });
        out
    }

    pub fn depends_on(&self, v: Variable) -> bool {
        self.variables().contains(&v)
    }

    fn visit<F: FnMut(&Expr)>(&self, f: &mut F) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::Call(_, a) => a.visit(f),
            Expr::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    /// Checked evaluation. Every variable and parameter that occurs must be
    /// present in `bindings`.
    pub fn eval(&self, bindings: &BTreeMap<String, f64>) -> Result<f64, ExprError> {
        self.eval_with(&|name| bindings.get(name).copied())
    }

    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, ExprError> {
        let v = self.eval_inner(lookup)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain(format!("`{self}` evaluates to a non-finite value")))
        }
    }

    fn eval_inner(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(v) => lookup(v.name()).ok_or_else(|| ExprError::Unbound(v.name().into()))?,
            Expr::Param(n) => lookup(n).ok_or_else(|| ExprError::Unbound(n.clone()))?,
            Expr::Neg(a) => -a.eval_inner(lookup)?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval_inner(lookup)?, b.eval_inner(lookup)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(ExprError::Domain("division by zero".into()));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(ExprError::Domain(format!(
                                "negative base {a} raised to non-integer power {b}"
                            )));
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(ExprError::Domain("zero raised to a negative power".into()));
                        }
                        pow(a, b)
                    }
                }
            }
            Expr::Call(f, a) => {
                let a = a.eval_inner(lookup)?;
                match f {
                    Func::Sqrt if a < 0.0 => return Err(ExprError::Domain(format!("sqrt of negative value {a}"))),
                    Func::Ln if a <= 0.0 => return Err(ExprError::Domain(format!("ln of non-positive value {a}"))),
                    _ => f.apply(a),
                }
            }
        })
    }

    /// Exact symbolic derivative with respect to `var`. Literal-only
    /// subtrees are folded; no other simplification is attempted.
    pub fn diff(&self, var: Variable) -> Expr {
        match self {
            Expr::Num(_) | Expr::Param(_) => Expr::Num(0.0),
            Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(var)),
            Expr::Binary(op, a, b) => {
                let (da, db) = (a.diff(var), b.diff(var));
                let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
                match op {
                    BinOp::Add => add(da, db),
                    BinOp::Sub => sub(da, db),
                    BinOp::Mul => add(mul(da, b.clone()), mul(a, db)),
                    BinOp::Div => sub(div(da, b.clone()), div(mul(a, db), pow_expr(b, Expr::Num(2.0)))),
                    BinOp::Pow => {
                        if b.variables().is_empty() {
                            // d(a^c) = c a^(c-1) a'
                            let reduced = sub(b.clone(), Expr::Num(1.0));
                            mul(mul(b, pow_expr(a, reduced)), da)
                        } else if a.variables().is_empty() {
                            // d(c^b) = c^b ln(c) b'
                            mul(mul(pow_expr(a.clone(), b), call(Func::Ln, a)), db)
                        } else {
                            let whole = pow_expr(a.clone(), b.clone());
                            let inner = add(mul(db, call(Func::Ln, a.clone())), div(mul(b, da), a));
                            mul(whole, inner)
                        }
                    }
                }
            }
            Expr::Call(f, a) => {
                let da = a.diff(var);
                let a = a.as_ref().clone();
                let outer = match f {
                    Func::Exp => call(Func::Exp, a),
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Sqrt => div(Expr::Num(1.0), mul(Expr::Num(2.0), call(Func::Sqrt, a))),
                    Func::Tanh => sub(Expr::Num(1.0), pow_expr(call(Func::Tanh, a), Expr::Num(2.0))),
                    Func::Ln => div(Expr::Num(1.0), a),
                };
                mul(outer, da)
            }
        }
    }

    /// Replaces parameters by their values and folds literal subtrees.
    pub fn substitute_params(&self, params: &Params) -> Result<Expr, ExprError> {
        Ok(match self {
            Expr::Param(n) => Expr::Num(*params.get(n).ok_or_else(|| ExprError::Unbound(n.clone()))?),
            Expr::Num(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => neg(a.substitute_params(params)?),
            Expr::Binary(op, a, b) => binary(*op, a.substitute_params(params)?, b.substitute_params(params)?),
            Expr::Call(f, a) => call(*f, a.substitute_params(params)?),
        })
    }

    pub fn compile(&self, params: &Params) -> Result<CompiledExpr, ExprError> {
        CompiledExpr::new(self, params)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 3,
            _ => 5,
        }
    }
}

#[inline]
pub(crate) fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn fold_binary(op: BinOp, a: f64, b: f64) -> Option<f64> {
    let v = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => a / b,
        BinOp::Pow => pow(a, b),
    };
    v.is_finite().then_some(v)
}

pub(crate) fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
    match op {
        BinOp::Add => add(a, b),
        BinOp::Sub => sub(a, b),
        BinOp::Mul => mul(a, b),
        BinOp::Div => div(a, b),
        BinOp::Pow => pow_expr(a, b),
    }
}

fn raw(op: BinOp, a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.literal(), b.literal()) {
        if let Some(v) = fold_binary(op, x, y) {
            return Expr::Num(v);
        }
    }
    Expr::Binary(op, Box::new(a), Box::new(b))
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        b
    } else if b.is_zero() {
        a
    } else {
        raw(BinOp::Add, a, b)
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        a
    } else if a.is_zero() {
        neg(b)
    } else {
        raw(BinOp::Sub, a, b)
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        Expr::Num(0.0)
    } else if a.is_one() {
        b
    } else if b.is_one() {
        a
    } else {
        raw(BinOp::Mul, a, b)
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        Expr::Num(0.0)
    } else if b.is_one() {
        a
    } else {
        raw(BinOp::Div, a, b)
    }
}

pub(crate) fn pow_expr(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        Expr::Num(1.0)
    } else if b.is_one() {
        a
    } else {
        raw(BinOp::Pow, a, b)
    }
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub(crate) fn call(f: Func, a: Expr) -> Expr {
    if let Some(v) = a.literal() {
        let r = f.apply(v);
        if r.is_finite() && !(f == Func::Sqrt && v < 0.0) && !(f == Func::Ln && v <= 0.0) {
            return Expr::Num(r);
        }
    }
    Expr::Call(f, Box::new(a))
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        mul(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints in the parse grammar; the printed text parses back to the same
/// tree shape.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    write!(f, "({v:?})")
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Param(n) => f.write_str(n),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_operand(f, a, a.precedence() < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => {
                let own = self.precedence();
                let (sym, left_parens, right_parens) = match op {
                    BinOp::Add => (" + ", a.precedence() < own, b.precedence() <= own),
                    BinOp::Sub => (" - ", a.precedence() < own, b.precedence() <= own),
                    BinOp::Mul => ("*", a.precedence() < own, b.precedence() <= own),
                    BinOp::Div => ("/", a.precedence() < own, b.precedence() <= own),
                    BinOp::Pow => ("^", a.precedence() <= own, b.precedence() < 3),
                };
                write_operand(f, a, left_parens)?;
                f.write_str(sym)?;
                write_operand(f, b, right_parens)
            }
        }
    }
}
