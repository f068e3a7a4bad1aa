//! Small arithmetic-expression language used for Young functions, weights
//! and corpus coefficient fields.
//!
//! Grammar (usual precedence, `^` right-associative and binding tighter than
//! unary minus):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?
//! atom  := number | 't' | 'x1'..'x8' | 'pi' | 'e'
//!        | func '(' expr ')' | '(' expr ')' | '|' expr '|' | '|x|'
//! func  := log | ln | exp | sqrt | sin | cos | tan | abs
//! ```
//!
//! `|x|` is the Euclidean norm of the position vector; any other `|…|` is
//! the absolute value. Expressions are differentiated symbolically, so
//! fields built from them carry analytic partials of every order.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    Exp,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Abs,
    Sign,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "log" | "ln" => Func::Log,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }

    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Log => v.ln(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Abs => v.abs(),
            Func::Sign => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Variable an expression is differentiated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    /// Zero-based coordinate index.
    Coord(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    T,
    Coord(usize),
    Norm,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

use Expr::*;

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Const(v)
    }

    pub fn coord(k: usize) -> Expr {
        Coord(k)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Const(v) => Const(-v),
            Neg(inner) => *inner,
            other => Neg(Box::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Const(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Const(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Const(x * y),
            (Some(x), _) if x == 0.0 => Const(0.0),
            (_, Some(y)) if y == 0.0 => Const(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Const(x / y),
            (Some(x), _) if x == 0.0 => Const(0.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Const(x.powf(y)),
            (_, Some(y)) if y == 0.0 => Const(1.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Pow(Box::new(a), Box::new(b)),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        match a.as_const() {
            Some(v) => Const(f.apply(v)),
            None => Call(f, Box::new(a)),
        }
    }

    /// Parse an expression over the coordinate variables `x1..x{dims}`
    /// (and `|x|`). Pass `dims = 0` to allow only `t`.
    pub fn parse(src: &str, vars: Vars) -> Result<Expr> {
        Parser::new(src, vars)?.parse_all()
    }

    /// Symbolic partial derivative.
    pub fn derivative(&self, var: Var) -> Expr {
        match self {
            Const(_) => Const(0.0),
            T => Const(if var == Var::T { 1.0 } else { 0.0 }),
            Coord(k) => Const(if var == Var::Coord(*k) { 1.0 } else { 0.0 }),
            Norm => match var {
                Var::T => Const(0.0),
                Var::Coord(k) => Expr::div(Coord(k), Norm),
            },
            Neg(a) => Expr::neg(a.derivative(var)),
            Add(a, b) => Expr::add(a.derivative(var), b.derivative(var)),
            Sub(a, b) => Expr::sub(a.derivative(var), b.derivative(var)),
            Mul(a, b) => Expr::add(
                Expr::mul(a.derivative(var), (**b).clone()),
                Expr::mul((**a).clone(), b.derivative(var)),
            ),
            Div(a, b) => {
                let da = a.derivative(var);
                let db = b.derivative(var);
                if db.is_zero() {
                    Expr::div(da, (**b).clone())
                } else {
                    Expr::div(
                        Expr::sub(
                            Expr::mul(da, (**b).clone()),
                            Expr::mul((**a).clone(), db),
                        ),
                        Expr::pow((**b).clone(), Const(2.0)),
                    )
                }
            }
            Pow(a, b) => {
                let da = a.derivative(var);
                let db = b.derivative(var);
                if let Some(c) = b.as_const() {
                    Expr::mul(
                        Expr::mul(Const(c), Expr::pow((**a).clone(), Const(c - 1.0))),
                        da,
                    )
                } else if db.is_zero() {
                    // exponent independent of var but not a literal constant
                    Expr::mul(
                        Expr::mul(
                            (**b).clone(),
                            Expr::pow((**a).clone(), Expr::sub((**b).clone(), Const(1.0))),
                        ),
                        da,
                    )
                } else {
                    let log_a = Expr::call(Func::Log, (**a).clone());
                    Expr::mul(
                        self.clone(),
                        Expr::add(
                            Expr::mul(db, log_a),
                            Expr::div(Expr::mul((**b).clone(), da), (**a).clone()),
                        ),
                    )
                }
            }
            Call(f, a) => {
                let da = a.derivative(var);
                if da.is_zero() {
                    return Const(0.0);
                }
                let inner = (**a).clone();
                let outer = match f {
                    Func::Log => Expr::div(Const(1.0), inner),
                    Func::Exp => Expr::call(Func::Exp, inner),
                    Func::Sqrt => Expr::div(Const(0.5), Expr::call(Func::Sqrt, inner)),
                    Func::Sin => Expr::call(Func::Cos, inner),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, inner)),
                    Func::Tan => Expr::div(
                        Const(1.0),
                        Expr::pow(Expr::call(Func::Cos, inner), Const(2.0)),
                    ),
                    Func::Abs => Expr::call(Func::Sign, inner),
                    Func::Sign => Const(0.0),
                };
                Expr::mul(outer, da)
            }
        }
    }

    /// Substitute constants for coordinate offsets, `x_k ↦ x_k − c_k`.
    pub fn shifted(&self, offset: &[f64]) -> Expr {
        match self {
            Coord(k) => Expr::sub(Coord(*k), Const(offset.get(*k).copied().unwrap_or(0.0))),
            Norm => {
                let sum = (0..offset.len()).fold(Const(0.0), |acc, k| {
                    Expr::add(acc, Expr::pow(Expr::sub(Coord(k), Const(offset[k])), Const(2.0)))
                });
                Expr::call(Func::Sqrt, sum)
            }
            Const(_) | T => self.clone(),
            Neg(a) => Expr::neg(a.shifted(offset)),
            Add(a, b) => Expr::add(a.shifted(offset), b.shifted(offset)),
            Sub(a, b) => Expr::sub(a.shifted(offset), b.shifted(offset)),
            Mul(a, b) => Expr::mul(a.shifted(offset), b.shifted(offset)),
            Div(a, b) => Expr::div(a.shifted(offset), b.shifted(offset)),
            Pow(a, b) => Expr::pow(a.shifted(offset), b.shifted(offset)),
            Call(f, a) => Expr::call(*f, a.shifted(offset)),
        }
    }

    pub fn compile(&self) -> Compiled {
        let mut ops = Vec::new();
        emit(self, &mut ops);
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::T | Op::Coord(_) | Op::Norm => depth += 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => depth -= 1,
                _ => {}
            }
            max_depth = max_depth.max(depth);
        }
        Compiled { ops, max_depth }
    }

    /// Tree-walking evaluation; `Compiled::eval` is the fast path.
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            Const(v) => *v,
            T => t,
            Coord(k) => x[*k],
            Norm => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Neg(a) => -a.eval(t, x),
            Add(a, b) => a.eval(t, x) + b.eval(t, x),
            Sub(a, b) => a.eval(t, x) - b.eval(t, x),
            Mul(a, b) => a.eval(t, x) * b.eval(t, x),
            Div(a, b) => a.eval(t, x) / b.eval(t, x),
            Pow(a, b) => pow(a.eval(t, x), b.eval(t, x)),
            Call(f, a) => f.apply(a.eval(t, x)),
        }
    }

    /// Highest coordinate index referenced plus one (0 if none).
    pub fn coord_span(&self) -> usize {
        match self {
            Coord(k) => k + 1,
            Const(_) | T | Norm => 0,
            Neg(a) | Call(_, a) => a.coord_span(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => {
                a.coord_span().max(b.coord_span())
            }
        }
    }
}

#[inline]
fn pow(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const(v) => {
                if *v < 0.0 {
                    write!(f, "({v})")
                } else {
                    write!(f, "{v}")
                }
            }
            T => write!(f, "t"),
            Coord(k) => write!(f, "x{}", k + 1),
            Norm => write!(f, "|x|"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a}^{b})"),
            Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    T,
    Coord(usize),
    Norm,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    PowI(i32),
    PowF(f64),
    Call(Func),
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    match e {
        Const(v) => ops.push(Op::Const(*v)),
        T => ops.push(Op::T),
        Coord(k) => ops.push(Op::Coord(*k)),
        Norm => ops.push(Op::Norm),
        Neg(a) => {
            emit(a, ops);
            ops.push(Op::Neg);
        }
        Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(match e {
                Add(..) => Op::Add,
                Sub(..) => Op::Sub,
                Mul(..) => Op::Mul,
                _ => Op::Div,
            });
        }
        Pow(a, b) => {
            emit(a, ops);
            match b.as_const() {
                Some(c) if c.fract() == 0.0 && c.abs() <= 64.0 => ops.push(Op::PowI(c as i32)),
                Some(c) => ops.push(Op::PowF(c)),
                None => {
                    emit(b, ops);
                    ops.push(Op::Pow);
                }
            }
        }
        Call(f, a) => {
            emit(a, ops);
            ops.push(Op::Call(*f));
        }
    }
}

/// Postfix form of an [`Expr`] evaluated on a small stack.
#[derive(Debug, Clone)]
pub struct Compiled {
    ops: Vec<Op>,
    max_depth: usize,
}

const STACK: usize = 48;

impl Compiled {
    #[inline]
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        if self.max_depth <= STACK {
            let mut stack = [0.0f64; STACK];
            self.run(t, x, &mut stack)
        } else {
            let mut stack = vec![0.0; self.max_depth];
            self.run(t, x, &mut stack)
        }
    }

    #[inline]
    fn run(&self, t: f64, x: &[f64], stack: &mut [f64]) -> f64 {
        let mut sp = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(v) => {
                    stack[sp] = v;
                    sp += 1;
                }
                Op::T => {
                    stack[sp] = t;
                    sp += 1;
                }
                Op::Coord(k) => {
                    stack[sp] = x[k];
                    sp += 1;
                }
                Op::Norm => {
                    stack[sp] = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    sp += 1;
                }
                Op::Neg => stack[sp - 1] = -stack[sp - 1],
                Op::Add => {
                    sp -= 1;
                    stack[sp - 1] += stack[sp];
                }
                Op::Sub => {
                    sp -= 1;
                    stack[sp - 1] -= stack[sp];
                }
                Op::Mul => {
                    sp -= 1;
                    stack[sp - 1] *= stack[sp];
                }
                Op::Div => {
                    sp -= 1;
                    stack[sp - 1] /= stack[sp];
                }
                Op::Pow => {
                    sp -= 1;
                    stack[sp - 1] = pow(stack[sp - 1], stack[sp]);
                }
                Op::PowI(k) => stack[sp - 1] = stack[sp - 1].powi(k),
                Op::PowF(c) => stack[sp - 1] = stack[sp - 1].powf(c),
                Op::Call(f) => stack[sp - 1] = f.apply(stack[sp - 1]),
            }
        }
        stack[0]
    }
}

/// Which variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vars {
    pub t: bool,
    pub dims: usize,
}

impl Vars {
    pub const YOUNG: Vars = Vars { t: true, dims: 0 };

    pub fn space(dims: usize) -> Vars {
        Vars { t: false, dims }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: Vars,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v = text.parse::<f64>().map_err(|_| Error::Parse {
                offset: start,
                message: format!("bad number '{text}'"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if "+-*/^()|".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            return Err(Error::Parse { offset: i, message: format!("unexpected character '{c}'") });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

impl Parser {
    fn new(src: &str, vars: Vars) -> Result<Parser> {
        Ok(Parser { toks: tokenize(src)?, pos: 0, vars })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { offset: self.offset(), message: message.into() })
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected '{c}'"))
        }
    }

    fn parse_all(mut self) -> Result<Expr> {
        let e = self.expr()?;
        if *self.peek() != Tok::End {
            return self.fail("unexpected trailing input");
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    lhs = Expr::add(lhs, self.term()?);
                }
                Tok::Sym('-') => {
                    self.bump();
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    lhs = Expr::mul(lhs, self.unary()?);
                }
                Tok::Sym('/') => {
                    self.bump();
                    lhs = Expr::div(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Sym('-') => {
                self.bump();
                Ok(Expr::neg(self.unary()?))
            }
            Tok::Sym('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Const(v))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Sym('|') => {
                self.bump();
                if *self.peek() == Tok::Ident("x".into()) && *self.peek_at(1) == Tok::Sym('|') {
                    if self.vars.dims == 0 {
                        return self.fail("|x| is not available here");
                    }
                    self.bump();
                    self.bump();
                    return Ok(Norm);
                }
                let e = self.expr()?;
                self.expect('|')?;
                Ok(Expr::call(Func::Abs, e))
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(f) = Func::from_name(&name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::call(f, arg));
                }
                match name.as_str() {
                    "pi" => Ok(Const(std::f64::consts::PI)),
                    "e" => Ok(Const(std::f64::consts::E)),
                    "t" if self.vars.t => Ok(T),
                    _ => {
                        if let Some(k) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
                            if k >= 1 && k <= self.vars.dims {
                                return Ok(Coord(k - 1));
                            }
                        }
                        self.pos -= 1;
                        self.fail(format!("unknown identifier '{name}'"))
                    }
                }
            }
            Tok::End => self.fail("unexpected end of expression"),
            Tok::Sym(c) => self.fail(format!("unexpected '{c}'")),
        }
    }
}
