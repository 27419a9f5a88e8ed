//! Recursive-descent parser for chart expressions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          right associative
//! atom    := number | ident | ident '(' sum ')' | '(' sum ')'
//! ```

use super::{BinOp, Func, Node, NodeKind, ParseError};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok<'_> {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

const OPERAND: &[&str] = &["number", "identifier", "(", "-"];

pub(super) struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok<'a>,
    tok_start: usize,
    coords: &'a [String],
    params: &'a [String],
}

impl<'a> Parser<'a> {
    pub(super) fn new(
        src: &'a str,
        coords: &'a [String],
        params: &'a [String],
    ) -> Result<Self, ParseError> {
        let mut p = Self {
            src,
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
            coords,
            params,
        };
        p.bump()?;
        Ok(p)
    }

    pub(super) fn parse(mut self) -> Result<Node, ParseError> {
        if self.tok == Tok::End {
            return Err(ParseError::Empty);
        }
        let node = self.sum()?;
        if self.tok != Tok::End {
            return Err(self.unexpected(&["operator", ")", "end of input"]));
        }
        Ok(node)
    }

    fn bump(&mut self) -> Result<(), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            self.tok = Tok::End;
            return Ok(());
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            self.tok = t;
            return Ok(());
        }
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                self.pos += 1;
            }
            if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                let mut q = self.pos + 1;
                if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                    q += 1;
                }
                if q < bytes.len() && bytes[q].is_ascii_digit() {
                    while q < bytes.len() && bytes[q].is_ascii_digit() {
                        q += 1;
                    }
                    self.pos = q;
                }
            }
            let text = &self.src[start..self.pos];
            let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                offset: start,
                expected: vec!["number".into()],
                found: format!("`{text}`"),
            })?;
            self.tok = Tok::Num(value);
            return Ok(());
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            self.tok = Tok::Ident(&self.src[start..self.pos]);
            return Ok(());
        }
        let ch = self.src[self.pos..].chars().next().unwrap_or('?');
        Err(ParseError::Syntax {
            offset: self.pos,
            expected: OPERAND.iter().map(|s| s.to_string()).collect(),
            found: format!("character `{ch}`"),
        })
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError::Syntax {
            offset: self.tok_start,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.tok.describe(),
        }
    }

    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.product()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.tok == Tok::Minus {
            let start = self.tok_start;
            self.bump()?;
            let inner = self.unary()?;
            let end = inner.span.1;
            return Ok(Node {
                kind: NodeKind::Neg(Box::new(inner)),
                span: (start, end),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.tok == Tok::Caret {
            self.bump()?;
            let exponent = self.unary()?;
            return Ok(Node::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let start = self.tok_start;
        match self.tok {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Node {
                    kind: NodeKind::Const(v),
                    span: (start, self.prev_end()),
                })
            }
            Tok::LParen => {
                self.bump()?;
                let mut inner = self.sum()?;
                self.expect_rparen()?;
                inner.span = (start, self.prev_end());
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump()?;
                if let Some(i) = self.coords.iter().position(|c| c == name) {
                    return Ok(Node {
                        kind: NodeKind::Coord(i),
                        span: (start, self.prev_end()),
                    });
                }
                if self.params.iter().any(|p| p == name) {
                    return Ok(Node {
                        kind: NodeKind::Param(name.to_string()),
                        span: (start, self.prev_end()),
                    });
                }
                if let Some(func) = Func::from_name(name) {
                    if self.tok != Tok::LParen {
                        return Err(self.unexpected(&["("]));
                    }
                    self.bump()?;
                    let arg = self.sum()?;
                    self.expect_rparen()?;
                    return Ok(Node {
                        kind: NodeKind::Func(func, Box::new(arg)),
                        span: (start, self.prev_end()),
                    });
                }
                match name {
                    "pi" => Ok(Node {
                        kind: NodeKind::Const(std::f64::consts::PI),
                        span: (start, self.prev_end()),
                    }),
                    _ => Err(ParseError::UnknownIdentifier {
                        name: name.to_string(),
                        offset: start,
                    }),
                }
            }
            _ => Err(self.unexpected(OPERAND)),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.tok != Tok::RParen {
            return Err(self.unexpected(&[")", "operator"]));
        }
        self.bump()
    }

    /// End offset of the token consumed by the last `bump`.
    fn prev_end(&self) -> usize {
        let bytes = self.src.as_bytes();
        let mut end = self.tok_start;
        while end > 0 && bytes[end - 1].is_ascii_whitespace() {
            end -= 1;
        }
        end
    }
}
