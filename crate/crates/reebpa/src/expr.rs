//! Scalar expression DSL for chart-coordinate functions.
//!
//! Form components and user vector fields arrive in config files as strings
//! like `"2*r^2*cos(2*th)^2"`. This module parses them into small ASTs and
//! evaluates them as IEEE doubles. The grammar is a fixed calculator subset:
//! variables `t, r, th, x, y`, the constant `pi`, functions
//! `sin, cos, exp, sqrt, abs`, binary `+ - * / ^` and unary minus.
//! `^` is right-associative and binds tighter than unary minus, so `-2^2`
//! is `-(2^2)` and `2^3^2` is `2^(3^2)`.
//!
//! Parse errors carry the byte offset of the offending token. Evaluation is
//! total on its domain: division by zero, square roots of negative numbers
//! and non-finite intermediate results are reported, never silently produced.

use serde::{Deserialize, Serialize};
use std::fmt;

/// The five chart/plane variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    T,
    R,
    Th,
    X,
    Y,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::T, Var::R, Var::Th, Var::X, Var::Y];

    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::R => "r",
            Var::Th => "th",
            Var::X => "x",
            Var::Y => "y",
        }
    }

    fn index(self) -> usize {
        match self {
            Var::T => 0,
            Var::R => 1,
            Var::Th => 2,
            Var::X => 3,
            Var::Y => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Parsed expression tree.
///
/// Serializes as its source text so forms embed naturally in JSON configs
/// and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Expression {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expression>),
    Bin(BinOp, Box<Expression>, Box<Expression>),
    Call(Func, Box<Expression>),
}

impl TryFrom<String> for Expression {
    type Error = ParseError;
    fn try_from(s: String) -> Result<Self, ParseError> {
        parse(&s)
    }
}

impl From<Expression> for String {
    fn from(e: Expression) -> String {
        e.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected end of input at byte {0}")]
    UnexpectedEnd(usize),
    #[error("unexpected character {1:?} at byte {0}")]
    UnexpectedChar(usize, char),
    #[error("unknown identifier {1:?} at byte {0}")]
    UnknownIdent(usize, String),
    #[error("expected '(' after function name at byte {0}")]
    MissingCallParen(usize),
    #[error("unbalanced parenthesis at byte {0}")]
    UnbalancedParen(usize),
    #[error("invalid number literal at byte {0}")]
    InvalidNumber(usize),
    #[error("trailing tokens at byte {0}")]
    TrailingTokens(usize),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("variable {} is unbound", .0.name())]
    UnboundVariable(Var),
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(&'static str),
}

/// Values for the variables an evaluation may read.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Binding {
    slots: [Option<f64>; 5],
}

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    /// Chart coordinates (t, r, th).
    pub fn chart(t: f64, r: f64, th: f64) -> Self {
        Self::new().with(Var::T, t).with(Var::R, r).with(Var::Th, th)
    }

    /// Plane coordinates (x, y).
    pub fn plane(x: f64, y: f64) -> Self {
        Self::new().with(Var::X, x).with(Var::Y, y)
    }

    pub fn with(mut self, v: Var, val: f64) -> Self {
        self.slots[v.index()] = Some(val);
        self
    }

    pub fn get(&self, v: Var) -> Option<f64> {
        self.slots[v.index()]
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                out.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                out.push((i, Tok::Star));
                i += 1;
            }
            '/' => {
                out.push((i, Tok::Slash));
                i += 1;
            }
            '^' => {
                out.push((i, Tok::Caret));
                i += 1;
            }
            '(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
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
                let val: f64 = text.parse().map_err(|_| ParseError::InvalidNumber(start))?;
                out.push((start, Tok::Num(val)));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
            }
            _ => return Err(ParseError::UnexpectedChar(i, c)),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expression::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expression::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // term := unary (('*'|'/') unary)*
    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expression::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expression::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<Expression, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expression::Neg(Box::new(inner)));
        }
        self.power()
    }

    // power := atom ('^' unary)?   -- right-associative, binds above unary minus
    fn power(&mut self) -> Result<Expression, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expression::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expression, ParseError> {
        let off = self.offset();
        match self.bump() {
            None => Err(ParseError::UnexpectedEnd(off)),
            Some((_, Tok::Num(v))) => Ok(Expression::Num(v)),
            Some((o, Tok::Ident(name))) => match name.as_str() {
                "pi" => Ok(Expression::Pi),
                "t" => Ok(Expression::Var(Var::T)),
                "r" => Ok(Expression::Var(Var::R)),
                "th" => Ok(Expression::Var(Var::Th)),
                "x" => Ok(Expression::Var(Var::X)),
                "y" => Ok(Expression::Var(Var::Y)),
                "sin" | "cos" | "exp" | "sqrt" | "abs" => {
                    let f = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "exp" => Func::Exp,
                        "sqrt" => Func::Sqrt,
                        _ => Func::Abs,
                    };
                    match self.bump() {
                        Some((_, Tok::LParen)) => {}
                        Some((o2, _)) => return Err(ParseError::MissingCallParen(o2)),
                        None => return Err(ParseError::MissingCallParen(self.end)),
                    }
                    let arg = self.expr()?;
                    match self.bump() {
                        Some((_, Tok::RParen)) => Ok(Expression::Call(f, Box::new(arg))),
                        Some((o2, _)) => Err(ParseError::UnbalancedParen(o2)),
                        None => Err(ParseError::UnbalancedParen(self.end)),
                    }
                }
                _ => Err(ParseError::UnknownIdent(o, name)),
            },
            Some((_, Tok::LParen)) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some((_, Tok::RParen)) => Ok(inner),
                    Some((o2, _)) => Err(ParseError::UnbalancedParen(o2)),
                    None => Err(ParseError::UnbalancedParen(self.end)),
                }
            }
            Some((o, t)) => Err(ParseError::UnexpectedChar(o, tok_char(&t))),
        }
    }
}

fn tok_char(t: &Tok) -> char {
    match t {
        Tok::Plus => '+',
        Tok::Minus => '-',
        Tok::Star => '*',
        Tok::Slash => '/',
        Tok::Caret => '^',
        Tok::LParen => '(',
        Tok::RParen => ')',
        _ => '?',
    }
}

/// Parse a source string into an expression tree.
pub fn parse(src: &str) -> Result<Expression, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: src.len(),
    };
    let e = p.expr()?;
    if p.pos < toks.len() {
        return Err(ParseError::TrailingTokens(p.offset()));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

impl Expression {
    /// Evaluate under the given variable binding.
    pub fn eval(&self, b: &Binding) -> Result<f64, EvalError> {
        match self {
            Expression::Num(v) => Ok(*v),
            Expression::Pi => Ok(std::f64::consts::PI),
            Expression::Var(v) => b.get(*v).ok_or(EvalError::UnboundVariable(*v)),
            Expression::Neg(e) => Ok(-e.eval(b)?),
            Expression::Bin(op, l, r) => {
                let a = l.eval(b)?;
                let c = r.eval(b)?;
                let v = match op {
                    BinOp::Add => a + c,
                    BinOp::Sub => a - c,
                    BinOp::Mul => a * c,
                    BinOp::Div => {
                        if c == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / c
                    }
                    BinOp::Pow => a.powf(c),
                };
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(EvalError::Domain("non-finite result"))
                }
            }
            Expression::Call(f, e) => {
                let a = e.eval(b)?;
                let v = match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::Domain("sqrt of negative value"));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                };
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(EvalError::Domain("non-finite result"))
                }
            }
        }
    }

    /// Variables the expression reads.
    pub fn free_vars(&self) -> Vec<Var> {
        let mut seen = [false; 5];
        self.collect_vars(&mut seen);
        Var::ALL
            .iter()
            .copied()
            .filter(|v| seen[v.index()])
            .collect()
    }

    fn collect_vars(&self, seen: &mut [bool; 5]) {
        match self {
            Expression::Var(v) => seen[v.index()] = true,
            Expression::Neg(e) | Expression::Call(_, e) => e.collect_vars(seen),
            Expression::Bin(_, l, r) => {
                l.collect_vars(seen);
                r.collect_vars(seen);
            }
            _ => {}
        }
    }
}

// Fully parenthesized printing; reparsing the output reproduces the tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Num(v) => write!(f, "{}", v),
            Expression::Pi => write!(f, "pi"),
            Expression::Var(v) => write!(f, "{}", v.name()),
            Expression::Neg(e) => write!(f, "(-{})", e),
            Expression::Bin(op, l, r) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({}{}{})", l, s, r)
            }
            Expression::Call(g, e) => write!(f, "{}({})", g.name(), e),
        }
    }
}

// ---------------------------------------------------------------------------
// Numeric differentiation
// ---------------------------------------------------------------------------

/// Central difference with one Richardson extrapolation step.
///
/// Exact for polynomials up to degree four (modulo rounding); the error of
/// the extrapolated stencil is O(h^4 f^(5)).
pub fn num_deriv(e: &Expression, var: Var, b: &Binding, h: f64) -> Result<f64, EvalError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(EvalError::Domain("step size must be positive"));
    }
    let x = b.get(var).ok_or(EvalError::UnboundVariable(var))?;
    let f = |xx: f64| e.eval(&b.with(var, xx));
    let d = |hh: f64| -> Result<f64, EvalError> { Ok((f(x + hh)? - f(x - hh)?) / (2.0 * hh)) };
    let coarse = d(h)?;
    let fine = d(h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Same stencil applied to a plain closure; used where components are not
/// expression trees (pullbacks, smoothed forms).
pub fn num_deriv_fn<E>(
    f: impl Fn(f64) -> Result<f64, E>,
    x: f64,
    h: f64,
) -> Result<f64, E> {
    let d = |hh: f64| -> Result<f64, E> { Ok((f(x + hh)? - f(x - hh)?) / (2.0 * hh)) };
    let coarse = d(h)?;
    let fine = d(h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}
