//! A small expression language for force and stress fields on ℝ³.
//!
//! Grammar (right-associative `^`; a leading minus belongs to the base of
//! `^`, see [`parse`]):
//!
//! ```text
//!   expr   := term (('+' | '-') term)*
//!   term   := factor (('*' | '/') factor)*
//!   factor := unary ('^' factor)?
//!   unary  := '-' unary | atom
//!   atom   := number | var | func '(' expr ')' | '(' expr ')'
//!   var    := x1 | x2 | x3
//!   func   := sin | cos | exp | tanh | sqrt
//! ```
//!
//! The minus sign may be written as ASCII `-` or as U+2212 `−`.  Division by
//! zero, square roots of negative numbers and non-real powers are evaluation
//! errors that carry the byte offset of the offending operator.

use std::fmt;

use thiserror::Error;

/// Syntax error with the byte offset at which it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {offset}: expected one of {{{}}}, found {found}", expected.join(", "))]
pub struct ParseError {
    /// Byte offset into the source.
    pub offset: usize,
    /// Tokens that would have been accepted.
    pub expected: Vec<String>,
    /// Description of what was found instead.
    pub found: String,
}

/// Domain error raised while evaluating an expression.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("evaluation error at offset {offset}: {message} (point {point:?})")]
pub struct EvalError {
    /// Byte offset of the operator that failed.
    pub offset: usize,
    /// What went wrong.
    pub message: String,
    /// Evaluation point.
    pub point: [f64; 3],
}

/// Built-in functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    /// `sin`
    Sin,
    /// `cos`
    Cos,
    /// `exp`
    Exp,
    /// `tanh`
    Tanh,
    /// `sqrt`
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// Binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    /// `+`
    Add,
    /// `-`
    Sub,
    /// `*`
    Mul,
    /// `/`
    Div,
    /// `^`
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Abstract syntax tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Numeric literal.
    Num(f64),
    /// Coordinate `x1`, `x2` or `x3` (stored as 1, 2, 3).
    Var(u8),
    /// Unary minus.
    Neg(Box<Expr>),
    /// Binary operation; `offset` locates the operator in the source.
    Bin {
        /// Operator.
        op: BinOp,
        /// Left operand.
        lhs: Box<Expr>,
        /// Right operand.
        rhs: Box<Expr>,
        /// Byte offset of the operator.
        offset: usize,
    },
    /// Function call; `offset` locates the function name.
    Call {
        /// Function.
        func: Func,
        /// Argument.
        arg: Box<Expr>,
        /// Byte offset of the name.
        offset: usize,
    },
}

/// A parsed field expression.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldExpr {
    root: Expr,
}

impl FieldExpr {
    /// Parses `src`; see [`parse`].
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        parse(src)
    }

    /// The constant expression `c`.
    pub fn constant(c: f64) -> Self {
        Self { root: Expr::Num(c) }
    }

    /// The product `c · self` (returns the literal `0` when `c = 0`).
    pub fn scaled(&self, c: f64) -> Self {
        if c == 0.0 || self.is_zero() {
            return Self::constant(0.0);
        }
        if c == 1.0 {
            return self.clone();
        }
        Self {
            root: Expr::Bin { op: BinOp::Mul, lhs: Box::new(Expr::Num(c)), rhs: Box::new(self.root.clone()), offset: 0 },
        }
    }

    /// Root node of the syntax tree.
    pub fn ast(&self) -> &Expr {
        &self.root
    }

    /// Whether the expression is the literal `0`.
    pub fn is_zero(&self) -> bool {
        matches!(self.root, Expr::Num(v) if v == 0.0)
    }

    /// Evaluates at `point = (x1, x2, x3)`.
    pub fn eval(&self, point: [f64; 3]) -> Result<f64, EvalError> {
        eval_node(&self.root, point)
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized form; literals use the shortest round-trip
    /// representation so that printing then parsing is exact.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    write!(f, "(-{:?})", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin { op, lhs, rhs, .. } => write!(f, "({lhs}{}{rhs})", op.symbol()),
            Expr::Call { func, arg, .. } => write!(f, "{}({arg})", func.name()),
        }
    }
}

fn eval_node(e: &Expr, p: [f64; 3]) -> Result<f64, EvalError> {
    let err = |offset: usize, message: &str| EvalError { offset, message: message.to_string(), point: p };
    Ok(match e {
        Expr::Num(v) => *v,
        Expr::Var(i) => p[(*i - 1) as usize],
        Expr::Neg(a) => -eval_node(a, p)?,
        Expr::Bin { op, lhs, rhs, offset } => {
            let a = eval_node(lhs, p)?;
            let b = eval_node(rhs, p)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(err(*offset, "division by zero"));
                    }
                    a / b
                }
                BinOp::Pow => {
                    let v = a.powf(b);
                    if v.is_nan() && !a.is_nan() && !b.is_nan() {
                        return Err(err(*offset, "non-real power"));
                    }
                    v
                }
            }
        }
        Expr::Call { func, arg, offset } => {
            let a = eval_node(arg, p)?;
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Tanh => a.tanh(),
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(err(*offset, "square root of a negative number"));
                    }
                    a.sqrt()
                }
            }
        }
    })
}

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
    End,
    Bad(char),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v:?}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
            Tok::Bad(c) => format!("character {c:?}"),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Returns the next token and its starting offset.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((Tok::End, start));
        };
        let single = |t: Tok, me: &mut Self| {
            me.pos += c.len_utf8();
            Ok((t, start))
        };
        match c {
            '+' => single(Tok::Plus, self),
            '-' | '\u{2212}' => single(Tok::Minus, self),
            '*' => single(Tok::Star, self),
            '/' => single(Tok::Slash, self),
            '^' => single(Tok::Caret, self),
            '(' => single(Tok::LParen, self),
            ')' => single(Tok::RParen, self),
            '0'..='9' | '.' => self.number(start),
            c if c.is_ascii_alphabetic() => {
                let len = rest.bytes().take_while(|b| b.is_ascii_alphanumeric() || *b == b'_').count();
                self.pos += len;
                Ok((Tok::Ident(rest[..len].to_string()), start))
            }
            other => single(Tok::Bad(other), self),
        }
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        let mut i = start;
        let digits = |i: &mut usize| {
            let s = *i;
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
            *i - s
        };
        let mut n = digits(&mut i);
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            n += digits(&mut i);
        }
        if n == 0 {
            return Err(ParseError { offset: start, expected: vec!["digit".into()], found: "'.'".into() });
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if digits(&mut j) == 0 {
                let found = self.src[j..].chars().next().map_or("end of input".to_string(), |c| format!("character {c:?}"));
                return Err(ParseError { offset: j, expected: vec!["exponent digit".into()], found });
            }
            i = j;
        }
        self.pos = i;
        let v: f64 = self.src[start..i].parse().map_err(|_| ParseError {
            offset: start,
            expected: vec!["number".into()],
            found: self.src[start..i].to_string(),
        })?;
        Ok((Tok::Num(v), start))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
    depth: usize,
}

const MAX_DEPTH: usize = 256;

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (t, o) = self.lex.next()?;
        self.tok = t;
        self.at = o;
        Ok(())
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.at,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.tok.describe(),
        })
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError {
                offset: self.at,
                expected: vec![format!("nesting depth at most {MAX_DEPTH}")],
                found: "deeper nesting".into(),
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            let offset = self.at;
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::Bin { op, lhs: Box::new(lhs), rhs: Box::new(rhs), offset };
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            let offset = self.at;
            self.bump()?;
            let rhs = self.factor()?;
            lhs = Expr::Bin { op, lhs: Box::new(lhs), rhs: Box::new(rhs), offset };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let base = self.unary()?;
        let out = if self.tok == Tok::Caret {
            let offset = self.at;
            self.bump()?;
            let exp = self.factor()?;
            Expr::Bin { op: BinOp::Pow, lhs: Box::new(base), rhs: Box::new(exp), offset }
        } else {
            base
        };
        self.depth -= 1;
        Ok(out)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Minus {
            self.enter()?;
            self.bump()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        const ATOM: &[&str] = &["number", "x1", "x2", "x3", "function", "'('", "'-'"];
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                let offset = self.at;
                match name.as_str() {
                    "x1" | "x2" | "x3" => {
                        self.bump()?;
                        Ok(Expr::Var(name.as_bytes()[1] - b'0'))
                    }
                    _ => match Func::from_name(&name) {
                        Some(func) => {
                            self.bump()?;
                            if self.tok != Tok::LParen {
                                return self.fail(&["'('"]);
                            }
                            self.bump()?;
                            let arg = self.expr()?;
                            if self.tok != Tok::RParen {
                                return self.fail(&["')'", "'+'", "'-'", "'*'", "'/'", "'^'"]);
                            }
                            self.bump()?;
                            Ok(Expr::Call { func, arg: Box::new(arg), offset })
                        }
                        None => Err(ParseError {
                            offset,
                            expected: vec!["x1".into(), "x2".into(), "x3".into(), "sin".into(), "cos".into(), "exp".into(), "tanh".into(), "sqrt".into()],
                            found: format!("identifier '{name}'"),
                        }),
                    },
                }
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                if self.tok != Tok::RParen {
                    return self.fail(&["')'", "'+'", "'-'", "'*'", "'/'", "'^'"]);
                }
                self.bump()?;
                Ok(e)
            }
            _ => self.fail(ATOM),
        }
    }
}

/// Parses a field expression.
///
/// Following the grammar literally, a leading minus is part of the `unary`
/// operand of `^`, so `-x1^2` parses as `(-x1)^2`.  Write `-(x1^2)` or
/// `0-x1^2` for the negated square.
pub fn parse(src: &str) -> Result<FieldExpr, ParseError> {
    let mut p = Parser { lex: Lexer { src, pos: 0 }, tok: Tok::End, at: 0, depth: 0 };
    p.bump()?;
    let root = p.expr()?;
    if p.tok != Tok::End {
        return p.fail(&["end of input", "'+'", "'-'", "'*'", "'/'", "'^'"]);
    }
    Ok(FieldExpr { root })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, p: [f64; 3]) -> f64 {
        parse(s).unwrap().eval(p).unwrap()
    }

    #[test]
    fn variables_and_literals() {
        assert_eq!(parse("x3").unwrap().ast(), &Expr::Var(3));
        assert_eq!(ev("x3", [0.0, 0.0, 1.0]), 1.0);
        assert_eq!(ev("2.5e1 + .5", [0.0; 3]), 25.5);
    }

    #[test]
    fn gaussian_value() {
        let v = ev("exp(-(x1^2+x2^2+(x3-1)^2))", [0.0; 3]);
        assert!((v - (-1.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(ev("2^3^2", [0.0; 3]), 512.0);
        assert_eq!(ev("-2^2", [0.0; 3]), 4.0);
        assert_eq!(ev("2*3-4/2", [0.0; 3]), 4.0);
        assert_eq!(ev("1 − 3", [0.0; 3]), -2.0);
    }

    #[test]
    fn syntax_errors_report_offset() {
        let e = parse("(").unwrap_err();
        assert_eq!(e.offset, 1);
        assert!(e.expected.contains(&"'('".to_string()));
        assert_eq!(parse("x1 + ").unwrap_err().offset, 5);
        assert_eq!(parse("x4").unwrap_err().offset, 0);
        assert_eq!(parse("sin x1").unwrap_err().offset, 4);
        assert_eq!(parse("1 2").unwrap_err().offset, 2);
        assert_eq!(parse("1e+").unwrap_err().offset, 3);
    }

    #[test]
    fn domain_errors_carry_position() {
        let e = parse("1/(x1-1)").unwrap().eval([1.0, 0.0, 0.0]).unwrap_err();
        assert_eq!(e.offset, 1);
        let e = parse("2+sqrt(x2)").unwrap().eval([0.0, -1.0, 0.0]).unwrap_err();
        assert_eq!(e.offset, 2);
    }

    #[test]
    fn printing_round_trips() {
        for s in ["-x1^2*3.1", "exp(-(x1^2+x2^2))/0.1", "tanh(x3)-cos(x1)^-2", "1e-300*x2"] {
            let a = parse(s).unwrap();
            let b = parse(&a.to_string()).unwrap();
            assert_eq!(a.eval([0.3, -0.7, 1.1]).unwrap(), b.eval([0.3, -0.7, 1.1]).unwrap());
        }
    }

    #[test]
    fn deep_nesting_is_rejected_not_overflowed() {
        let s = "(".repeat(10_000);
        assert!(parse(&s).is_err());
        let s = "-".repeat(10_000) + "1";
        assert!(parse(&s).is_err());
    }
}
