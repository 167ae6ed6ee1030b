//! Small arithmetic expression language used for data given in run configs.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, numeric literals, the
//! variables `x`, `y`, `t`, `eps`, the constant `pi`, and the functions
//! `exp`, `sin`, `cos`, `sqrt`, `abs`, `min`, `max` (the last two take two or
//! more arguments). `^` is right associative and binds tighter than unary
//! minus, so `-x^2` is `-(x^2)`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Point at which an expression is evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Vars {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub eps: f64,
}

impl Vars {
    pub fn new(x: f64, y: f64, t: f64, eps: f64) -> Self {
        Self { x, y, t, eps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Var {
    X,
    Y,
    T,
    Eps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn eval(&self, v: &Vars) -> f64 {
        match self {
            Node::Num(c) => *c,
            Node::Var(Var::X) => v.x,
            Node::Var(Var::Y) => v.y,
            Node::Var(Var::T) => v.t,
            Node::Var(Var::Eps) => v.eps,
            Node::Neg(a) => -a.eval(v),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(v), b.eval(v));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Node::Call(f, args) => match f {
                Func::Exp => args[0].eval(v).exp(),
                Func::Sin => args[0].eval(v).sin(),
                Func::Cos => args[0].eval(v).cos(),
                Func::Sqrt => args[0].eval(v).sqrt(),
                Func::Abs => args[0].eval(v).abs(),
                Func::Min => args.iter().map(|a| a.eval(v)).fold(f64::INFINITY, f64::min),
                Func::Max => args
                    .iter()
                    .map(|a| a.eval(v))
                    .fold(f64::NEG_INFINITY, f64::max),
            },
        }
    }

    fn uses_var(&self, var: Var) -> bool {
        match self {
            Node::Num(_) => false,
            Node::Var(w) => *w == var,
            Node::Neg(a) => a.uses_var(var),
            Node::Bin(_, a, b) => a.uses_var(var) || b.uses_var(var),
            Node::Call(_, args) => args.iter().any(|a| a.uses_var(var)),
        }
    }

    fn is_constant(&self) -> bool {
        [Var::X, Var::Y, Var::T, Var::Eps]
            .iter()
            .all(|&v| !self.uses_var(v))
    }
}

/// A parsed expression together with its source text.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
    constant: Option<f64>,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0 };
        let root = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Expr(format!(
                "unexpected trailing input in `{source}` at token {}",
                parser.pos
            )));
        }
        let constant = root.is_constant().then(|| root.eval(&Vars::default()));
        Ok(Self {
            source: source.to_string(),
            root,
            constant,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            source: format!("{value}"),
            root: Node::Num(value),
            constant: Some(value),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Value if the expression does not depend on any variable.
    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }

    pub fn depends_on_eps(&self) -> bool {
        self.root.uses_var(Var::Eps)
    }

    pub fn eval(&self, vars: &Vars) -> f64 {
        match self.constant {
            Some(c) => c,
            None => self.root.eval(vars),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Expr::constant(v)),
            Raw::Text(s) => Expr::parse(&s).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent part: 1e-3, 2.5E+4
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = text
                    .parse::<f64>()
                    .map_err(|_| Error::Expr(format!("bad number `{text}` in `{src}`")))?;
                out.push(Token::Num(value));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            '+' | '-' | '*' | '/' | '^' => {
                out.push(Token::Op(c));
                i += 1;
            }
            // U+2212 minus sign, accepted for convenience
            '\u{2212}' => {
                out.push(Token::Op('-'));
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            other => {
                return Err(Error::Expr(format!(
                    "unexpected character `{other}` in `{src}`"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(Error::Expr(format!("expected {want:?}, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if op == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if op == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Node::Num(v)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                if let Some(Token::LParen) = self.peek() {
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while let Some(Token::Comma) = self.peek() {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(Token::RParen)?;
                    let (func, arity_ok) = match name.as_str() {
                        "exp" => (Func::Exp, args.len() == 1),
                        "sin" => (Func::Sin, args.len() == 1),
                        "cos" => (Func::Cos, args.len() == 1),
                        "sqrt" => (Func::Sqrt, args.len() == 1),
                        "abs" => (Func::Abs, args.len() == 1),
                        "min" => (Func::Min, args.len() >= 2),
                        "max" => (Func::Max, args.len() >= 2),
                        _ => return Err(Error::Expr(format!("unknown function `{name}`"))),
                    };
                    if !arity_ok {
                        return Err(Error::Expr(format!(
                            "wrong number of arguments ({}) for `{name}`",
                            args.len()
                        )));
                    }
                    return Ok(Node::Call(func, args));
                }
                match name.as_str() {
                    "x" => Ok(Node::Var(Var::X)),
                    "y" => Ok(Node::Var(Var::Y)),
                    "t" => Ok(Node::Var(Var::T)),
                    "eps" => Ok(Node::Var(Var::Eps)),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    _ => Err(Error::Expr(format!("unknown variable `{name}`"))),
                }
            }
            other => Err(Error::Expr(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: f64, y: f64, t: f64) -> f64 {
        Expr::parse(src).unwrap().eval(&Vars::new(x, y, t, 0.1))
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0, 0.0), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0, 0.0, 0.0), 512.0);
        assert_eq!(ev("-x^2", 3.0, 0.0, 0.0), -9.0);
        assert_eq!(ev("(1 - x) / 4", 0.0, 0.0, 0.0), 0.25);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0, 0.0), 1.0);
    }

    #[test]
    fn functions_and_variables() {
        assert!((ev("sin(pi * x) * exp(-t)", 0.5, 0.0, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(ev("max(x - 0.5, 0, y)", 0.25, -1.0, 0.0), 0.0);
        assert_eq!(ev("min(x, y, t)", 3.0, 2.0, 1.0), 1.0);
        assert_eq!(ev("eps * 10", 0.0, 0.0, 0.0), 1.0);
        assert_eq!(ev("2.5e-1 + 1E1", 0.0, 0.0, 0.0), 10.25);
    }

    #[test]
    fn constants_are_folded() {
        let e = Expr::parse("2 * (3 + 1)").unwrap();
        assert_eq!(e.as_constant(), Some(8.0));
        assert!(Expr::parse("t").unwrap().as_constant().is_none());
        assert!(Expr::parse("1 + eps").unwrap().depends_on_eps());
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["1 +", "foo(1)", "z", "min(1)", "(1", "1 2", "3 # 4"] {
            assert!(Expr::parse(bad).is_err(), "{bad} should not parse");
        }
    }

    #[test]
    fn serde_accepts_numbers_and_strings() {
        let e: Expr = serde_json::from_str("\"x + 1\"").unwrap();
        assert_eq!(e.eval(&Vars::new(1.0, 0.0, 0.0, 0.0)), 2.0);
        let c: Expr = serde_json::from_str("0.5").unwrap();
        assert_eq!(c.as_constant(), Some(0.5));
    }
}
