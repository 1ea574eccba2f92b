//! Univariate scalar expressions in the variable `r`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'r' | func '(' expr ')' | '(' expr ')'
//! func    := exp | log | sqrt | sin | cos
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-r^2`
//! is `-(r^2)`.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;


#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var,
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

/// A parsed expression. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                *offset
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{op} of {arg} is outside its domain")]
    Domain { op: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result from {op}")]
    NonFinite { op: &'static str },
}

impl Expression {
    pub fn new(root: Node) -> Self {
        Self { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let tokens = tokenize(text)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            end: text.len(),
        };
        let root = parser.expr()?;
        match parser.peek() {
            None => Ok(Self { root }),
            Some(tok) => Err(ParseError::Syntax {
                offset: tok.offset,
                expected: alloc::vec!["operator", "end of input"],
                found: tok.kind.describe(),
            }),
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64, EvalError> {
        eval_node(&self.root, r)
    }
}

impl Expression {
    /// Value and exact first derivative at `r`, by forward-mode evaluation
    /// over dual numbers.
    pub fn eval_with_derivative(&self, r: f64) -> Result<(f64, f64), EvalError> {
        eval_dual(&self.root, r)
    }
}

fn eval_dual(node: &Node, r: f64) -> Result<(f64, f64), EvalError> {
    match node {
        Node::Const(c) => Ok((*c, 0.0)),
        Node::Var => Ok((checked("r", r)?, 1.0)),
        Node::Unary(op, arg) => {
            let (a, da) = eval_dual(arg, r)?;
            let value = eval_node(&Node::Unary(*op, Box::new(Node::Const(a))), r)?;
            let slope = match op {
                UnaryOp::Neg => -1.0,
                UnaryOp::Exp => value,
                UnaryOp::Log => 1.0 / a,
                UnaryOp::Sqrt => {
                    if value == 0.0 {
                        return Err(EvalError::NonFinite { op: "sqrt'" });
                    }
                    0.5 / value
                }
                UnaryOp::Sin => libm::cos(a),
                UnaryOp::Cos => -libm::sin(a),
            };
            Ok((value, checked("derivative", slope * da)?))
        }
        Node::Binary(op, lhs, rhs) => {
            let (a, da) = eval_dual(lhs, r)?;
            let (b, db) = eval_dual(rhs, r)?;
            let value = eval_node(
                &Node::Binary(*op, Box::new(Node::Const(a)), Box::new(Node::Const(b))),
                r,
            )?;
            let d = match op {
                BinaryOp::Add => da + db,
                BinaryOp::Sub => da - db,
                BinaryOp::Mul => da * b + a * db,
                BinaryOp::Div => (da * b - a * db) / (b * b),
                BinaryOp::Pow => {
                    // d(a^b) = b a^(b-1) da + a^b ln(a) db; the log term only
                    // matters when the exponent varies.
                    let base_term = if da == 0.0 { 0.0 } else { b * libm::pow(a, b - 1.0) * da };
                    let exp_term = if db == 0.0 {
                        0.0
                    } else if a > 0.0 {
                        value * libm::log(a) * db
                    } else {
                        return Err(EvalError::Domain { op: "^", arg: a });
                    };
                    base_term + exp_term
                }
            };
            Ok((value, checked("derivative", d)?))
        }
    }
}

impl core::str::FromStr for Expression {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

fn checked(op: &'static str, value: f64) -> Result<f64, EvalError> {
    if value.is_nan() {
        Err(EvalError::Domain { op, arg: value })
    } else if value.is_infinite() {
        Err(EvalError::NonFinite { op })
    } else {
        Ok(value)
    }
}

fn eval_node(node: &Node, r: f64) -> Result<f64, EvalError> {
    match node {
        Node::Const(c) => Ok(*c),
        Node::Var => checked("r", r),
        Node::Unary(op, arg) => {
            let a = eval_node(arg, r)?;
            match op {
                UnaryOp::Neg => Ok(-a),
                UnaryOp::Exp => checked("exp", libm::exp(a)),
                UnaryOp::Log => {
                    if a <= 0.0 {
                        Err(EvalError::Domain { op: "log", arg: a })
                    } else {
                        checked("log", libm::log(a))
                    }
                }
                UnaryOp::Sqrt => {
                    if a < 0.0 {
                        Err(EvalError::Domain { op: "sqrt", arg: a })
                    } else {
                        Ok(libm::sqrt(a))
                    }
                }
                UnaryOp::Sin => checked("sin", libm::sin(a)),
                UnaryOp::Cos => checked("cos", libm::cos(a)),
            }
        }
        Node::Binary(op, lhs, rhs) => {
            let a = eval_node(lhs, r)?;
            let b = eval_node(rhs, r)?;
            match op {
                BinaryOp::Add => checked("+", a + b),
                BinaryOp::Sub => checked("-", a - b),
                BinaryOp::Mul => checked("*", a * b),
                BinaryOp::Div => {
                    if b == 0.0 {
                        Err(EvalError::DivisionByZero)
                    } else {
                        checked("/", a / b)
                    }
                }
                BinaryOp::Pow => {
                    if a == 0.0 && b < 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    let v = libm::pow(a, b);
                    if v.is_nan() {
                        Err(EvalError::Domain { op: "^", arg: a })
                    } else {
                        checked("^", v)
                    }
                }
            }
        }
    }
}

// Printing is fully parenthesised so that re-parsing reproduces the tree.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Node::Var => f.write_str("r"),
            Node::Unary(UnaryOp::Neg, arg) => write!(f, "(-{arg})"),
            Node::Unary(op, arg) => write!(f, "{}({arg})", op.name()),
            Node::Binary(op, lhs, rhs) => write!(f, "({lhs} {} {rhs})", op.symbol()),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => alloc::format!("number {v}"),
            TokenKind::Ident(s) => alloc::format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".to_string(),
            TokenKind::Minus => "`-`".to_string(),
            TokenKind::Star => "`*`".to_string(),
            TokenKind::Slash => "`/`".to_string(),
            TokenKind::Caret => "`^`".to_string(),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'^' => TokenKind::Caret,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b'0'..=b'9' | b'.' => {
                i = scan_number(bytes, i);
                let lexeme = &text[start..i];
                let value = lexeme.parse::<f64>().map_err(|_| ParseError::Syntax {
                    offset: start,
                    expected: alloc::vec!["number"],
                    found: alloc::format!("`{lexeme}`"),
                })?;
                tokens.push(Token {
                    kind: TokenKind::Number(value),
                    offset: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(text[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: alloc::vec!["number", "`r`", "function", "operator", "parenthesis"],
                    found: alloc::format!("`{ch}`"),
                });
            }
        };
        i += 1;
        tokens.push(Token {
            kind,
            offset: start,
        });
    }
    Ok(tokens)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
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
    i
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        match self.peek() {
            Some(tok) => ParseError::Syntax {
                offset: tok.offset,
                expected,
                found: tok.kind.describe(),
            },
            None => ParseError::Syntax {
                offset: self.end,
                expected,
                found: "end of input".to_string(),
            },
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinaryOp::Add,
                Some(TokenKind::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinaryOp::Mul,
                Some(TokenKind::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::Minus) => {
                self.pos += 1;
                Ok(Node::Unary(UnaryOp::Neg, Box::new(self.unary()?)))
            }
            Some(TokenKind::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if let Some(TokenKind::Caret) = self.peek_kind() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        const EXPECTED: [&str; 4] = ["number", "`r`", "function", "`(`"];
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error(EXPECTED.to_vec()));
        };
        match tok.kind {
            TokenKind::Number(v) => {
                self.pos += 1;
                Ok(Node::Const(v))
            }
            TokenKind::Ident(name) => {
                self.pos += 1;
                if name == "r" {
                    return Ok(Node::Var);
                }
                let Some(op) = UnaryOp::from_name(&name) else {
                    return Err(ParseError::UnknownIdentifier {
                        offset: tok.offset,
                        name,
                    });
                };
                self.expect_lparen()?;
                let arg = self.expr()?;
                self.expect_rparen()?;
                Ok(Node::Unary(op, Box::new(arg)))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            _ => Err(self.error(EXPECTED.to_vec())),
        }
    }

    fn expect_lparen(&mut self) -> Result<(), ParseError> {
        match self.peek_kind() {
            Some(TokenKind::LParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(alloc::vec!["`(`"])),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek_kind() {
            Some(TokenKind::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(alloc::vec!["`)`", "operator"])),
        }
    }
}
