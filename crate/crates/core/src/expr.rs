//! Right-hand sides `f(t, y)` written as text.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?
//! primary := number | "t" | "y" | "pi" | func "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-t^2` is
//! `-(t^2)` and `2^3^2` is `2^9`. There is no implicit multiplication.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
    Tanh,
    Atan,
}

impl Func {
    pub const ALL: [Func; 11] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Atan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Atan => "atan",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Syntax tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    T,
    Y,
    Pi,
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

const PREC_UNARY: u8 = 3;
const PREC_ATOM: u8 = 5;

impl Node {
    fn precedence(&self) -> u8 {
        match self {
            Node::Binary(op, ..) => op.precedence(),
            Node::Neg(_) => PREC_UNARY,
            _ => PREC_ATOM,
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v:?}"),
            Node::T => f.write_str("t"),
            Node::Y => f.write_str("y"),
            Node::Pi => f.write_str("pi"),
            Node::Neg(inner) => {
                f.write_str("-")?;
                inner.write_child(f, PREC_UNARY)
            }
            Node::Binary(BinOp::Pow, base, exp) => {
                base.write_child(f, PREC_ATOM)?;
                f.write_str("^")?;
                exp.write_child(f, PREC_UNARY)
            }
            Node::Binary(op, lhs, rhs) => {
                let p = op.precedence();
                lhs.write_child(f, p)?;
                write!(f, " {} ", op.symbol())?;
                rhs.write_child(f, p + 1)
            }
            Node::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedToken { found: String, expected: String },
    UnexpectedEnd { expected: String },
    UnbalancedParen,
    UnknownIdentifier(String),
    BadNumber(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at byte {offset}: {}", describe(.kind))]
pub struct ParseError {
    /// Byte offset into the source.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::Empty => "empty expression".into(),
        ParseErrorKind::UnexpectedToken { found, expected } => {
            format!("unexpected '{found}', expected {expected}")
        }
        ParseErrorKind::UnexpectedEnd { expected } => {
            format!("unexpected end of input, expected {expected}")
        }
        ParseErrorKind::UnbalancedParen => "unbalanced parenthesis".into(),
        ParseErrorKind::UnknownIdentifier(name) => format!("unknown identifier '{name}'"),
        ParseErrorKind::BadNumber(text) => format!("invalid number '{text}'"),
    }
}

impl ParseError {
    /// The source line with a caret under the offending byte.
    pub fn render(&self, source: &str) -> String {
        let col = source[..self.offset.min(source.len())].chars().count();
        format!("{source}\n{}^ {self}", " ".repeat(col))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNegative,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{} in '{subexpression}' at t = {t}, y = {y}", match .kind {
    EvalErrorKind::DivisionByZero => "division by zero",
    EvalErrorKind::LogOfNonPositive => "log of a non-positive value",
    EvalErrorKind::SqrtOfNegative => "sqrt of a negative value",
    EvalErrorKind::NonFinite => "non-finite value",
})]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub subexpression: String,
    pub t: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token<'a> {
    Num(f64),
    Ident(&'a str),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for Token<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "{v}"),
            Token::Ident(s) => f.write_str(s),
            Token::Op(c) => write!(f, "{c}"),
            Token::LParen => f.write_str("("),
            Token::RParen => f.write_str(")"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token<'_>)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'0'..=b'9' | b'.' => {
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
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let bad = || ParseError {
                    offset: start,
                    kind: ParseErrorKind::BadNumber(text.to_string()),
                };
                let v: f64 = text.parse().map_err(|_| bad())?;
                if !v.is_finite() {
                    return Err(bad());
                }
                out.push((start, Token::Num(v)));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Token::Ident(&src[start..i])));
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((i, Token::Op(c as char)));
                i += 1;
            }
            b'(' => {
                out.push((i, Token::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Token::RParen));
                i += 1;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: i,
                    kind: ParseErrorKind::UnexpectedToken {
                        found: ch.to_string(),
                        expected: "a number, variable, function or operator".into(),
                    },
                });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token<'a>)>,
    pos: usize,
    end: usize,
    open: Vec<usize>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<Token<'a>> {
        self.tokens.get(self.pos).map(|&(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |&(o, _)| o)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            None if !self.open.is_empty() => ParseError {
                offset: *self.open.last().expect("non-empty"),
                kind: ParseErrorKind::UnbalancedParen,
            },
            None => ParseError {
                offset: self.end,
                kind: ParseErrorKind::UnexpectedEnd {
                    expected: expected.into(),
                },
            },
            Some(Token::RParen) if self.open.is_empty() => ParseError {
                offset: self.offset(),
                kind: ParseErrorKind::UnbalancedParen,
            },
            Some(tok) => ParseError {
                offset: self.offset(),
                kind: ParseErrorKind::UnexpectedToken {
                    found: tok.to_string(),
                    expected: expected.into(),
                },
            },
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek() {
            self.pos += 1;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek() {
            self.pos += 1;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parenthesized(&mut self) -> Result<Node, ParseError> {
        let open_at = self.offset();
        self.pos += 1;
        self.open.push(open_at);
        let inner = self.expr()?;
        match self.peek() {
            Some(Token::RParen) => {
                self.pos += 1;
                self.open.pop();
                Ok(inner)
            }
            _ => Err(self.unexpected("')'")),
        }
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        const OPERAND: &str = "a number, variable, function call or '('";
        let at = self.offset();
        match self.peek() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Token::LParen) => self.parenthesized(),
            Some(Token::Ident(name)) => {
                self.pos += 1;
                match name {
                    "t" => Ok(Node::T),
                    "y" => Ok(Node::Y),
                    "pi" => Ok(Node::Pi),
                    _ => {
                        let func = Func::from_name(name).ok_or_else(|| ParseError {
                            offset: at,
                            kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
                        })?;
                        if self.peek() != Some(Token::LParen) {
                            return Err(self.unexpected(&format!("'(' after '{name}'")));
                        }
                        Ok(Node::Call(func, Box::new(self.parenthesized()?)))
                    }
                }
            }
            _ => Err(self.unexpected(OPERAND)),
        }
    }
}

/// A parsed right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Expression, ParseError> {
        let tokens = tokenize(source)?;
        if tokens.is_empty() {
            return Err(ParseError {
                offset: 0,
                kind: ParseErrorKind::Empty,
            });
        }
        let mut p = Parser {
            tokens,
            pos: 0,
            end: source.len(),
            open: Vec::new(),
        };
        let root = p.expr()?;
        if p.pos < p.tokens.len() {
            return Err(p.unexpected("an operator or end of input"));
        }
        Ok(Expression { root })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn from_node(root: Node) -> Expression {
        Expression { root }
    }

    pub fn evaluate(&self, t: f64, y: f64) -> Result<f64, EvalError> {
        eval(&self.root, t, y)
    }

    /// `evaluate`, with NaN standing in for any evaluation error.
    pub fn value(&self, t: f64, y: f64) -> f64 {
        self.evaluate(t, y).unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl std::str::FromStr for Expression {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

fn eval(node: &Node, t: f64, y: f64) -> Result<f64, EvalError> {
    let fail = |kind| EvalError {
        kind,
        subexpression: node.to_string(),
        t,
        y,
    };
    let v = match node {
        Node::Num(v) => *v,
        Node::T => t,
        Node::Y => y,
        Node::Pi => std::f64::consts::PI,
        Node::Neg(inner) => -eval(inner, t, y)?,
        Node::Binary(op, lhs, rhs) => {
            let a = eval(lhs, t, y)?;
            let b = eval(rhs, t, y)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(fail(EvalErrorKind::DivisionByZero));
                    }
                    a / b
                }
                BinOp::Pow => a.powf(b),
            }
        }
        Node::Call(func, arg) => {
            let x = eval(arg, t, y)?;
            match func {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Exp => x.exp(),
                Func::Log => {
                    if x <= 0.0 {
                        return Err(fail(EvalErrorKind::LogOfNonPositive));
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(fail(EvalErrorKind::SqrtOfNegative));
                    }
                    x.sqrt()
                }
                Func::Abs => x.abs(),
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Tanh => x.tanh(),
                Func::Atan => x.atan(),
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(fail(EvalErrorKind::NonFinite))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(src: &str, t: f64, y: f64) -> f64 {
        Expression::parse(src).unwrap().evaluate(t, y).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(at("1+2*3", 0.0, 0.0), 7.0);
        assert_eq!(at("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(at("-t^2", 3.0, 0.0), -9.0);
        assert_eq!(at("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(at("8/4/2", 0.0, 0.0), 1.0);
        assert_eq!(at("1-2-3", 0.0, 0.0), -4.0);
        assert_eq!(at("--y", 0.0, 4.0), 4.0);
        assert_eq!(at("(-t)^2", 3.0, 0.0), 9.0);
    }

    #[test]
    fn example_rhs_values() {
        let src = "sin(1.3*t*y)/(t+5)^0.65";
        assert_eq!(at(src, 0.0, 1.0), 0.0);
        let v = at("(t+5)^0.65", 0.0, 0.0);
        assert_eq!(v, 5f64.powf(0.65));
        assert!((v - 2.846_626_597_125_765).abs() < 1e-15);
    }

    #[test]
    fn numbers_and_constants() {
        assert_eq!(at("1.5e2 + .5 + 2.", 0.0, 0.0), 152.5);
        assert_eq!(at("1E-2", 0.0, 0.0), 0.01);
        assert_eq!(at("pi", 0.0, 0.0), std::f64::consts::PI);
        assert!(matches!(
            Expression::parse("1e999").unwrap_err().kind,
            ParseErrorKind::BadNumber(_)
        ));
        assert!(matches!(
            Expression::parse("1.2.3").unwrap_err().kind,
            ParseErrorKind::BadNumber(_)
        ));
    }

    #[test]
    fn positioned_errors() {
        let e = Expression::parse("sin(").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnbalancedParen);
        assert_eq!(e.offset, 3);
        let e = Expression::parse("2t").unwrap_err();
        assert_eq!(e.offset, 1);
        assert!(matches!(e.kind, ParseErrorKind::UnexpectedToken { .. }));
        let e = Expression::parse("t + foo(1)").unwrap_err();
        assert_eq!(
            (e.offset, e.kind),
            (4, ParseErrorKind::UnknownIdentifier("foo".into()))
        );
        assert_eq!(
            Expression::parse("  ").unwrap_err().kind,
            ParseErrorKind::Empty
        );
        let e = Expression::parse("(t))").unwrap_err();
        assert_eq!((e.offset, e.kind), (3, ParseErrorKind::UnbalancedParen));
        let e = Expression::parse("t *").unwrap_err();
        assert_eq!(e.offset, 3);
        assert!(matches!(e.kind, ParseErrorKind::UnexpectedEnd { .. }));
        let e = Expression::parse("sin t").unwrap_err();
        assert_eq!(e.offset, 4);
        let e = Expression::parse("t $ y").unwrap_err();
        assert_eq!(e.offset, 2);
        assert_eq!(e.render("t $ y"), "t $ y\n  ^ at byte 2: unexpected '$', expected a number, variable, function or operator");
    }

    #[test]
    fn evaluation_errors_name_the_subexpression() {
        let e = Expression::parse("1 + 1/(t - 1)").unwrap();
        let err = e.evaluate(1.0, 0.0).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::DivisionByZero);
        assert_eq!(err.subexpression, "1.0 / (t - 1.0)");
        let err = Expression::parse("log(y)")
            .unwrap()
            .evaluate(0.0, -1.0)
            .unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::LogOfNonPositive);
        let err = Expression::parse("sqrt(y)")
            .unwrap()
            .evaluate(0.0, -1.0)
            .unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::SqrtOfNegative);
        let err = Expression::parse("exp(y)")
            .unwrap()
            .evaluate(0.0, 1e6)
            .unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::NonFinite);
        assert!(Expression::parse("y^0.5")
            .unwrap()
            .value(0.0, -1.0)
            .is_nan());
    }

    #[test]
    fn every_function_is_reachable() {
        for f in Func::ALL {
            let e = Expression::parse(&format!("{}(0.5)", f.name())).unwrap();
            assert!(e.evaluate(0.0, 0.0).is_ok(), "{}", f.name());
        }
    }
}
