//! Scalar expressions over chart coordinates.
//!
//! Expressions are parsed once against a list of coordinate names (and
//! optionally named parameters) and are immutable afterwards. They can be
//! evaluated to a plain value with [`ScalarExpr::eval`] or to a second-order
//! Taylor jet with [`ScalarExpr::eval_jet2`], which supplies the exact first
//! and second partial derivatives the curvature code needs.

mod eval;
mod jet;
mod parser;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use jet::Jet2;

/// Values for named parameters, bound at evaluation time.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at offset {offset}: expected one of [{}], found {found}", expected.join(", "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("duplicate or invalid coordinate name `{0}`")]
    BadCoordinate(String),
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in {op} at `{snippet}` (bytes {}..{}): {detail}", span.0, span.1)]
    Domain {
        op: &'static str,
        detail: String,
        span: (usize, usize),
        snippet: String,
    },
    #[error("{op} is not differentiable at `{snippet}` (bytes {}..{})", span.0, span.1)]
    Nondifferentiable {
        op: &'static str,
        span: (usize, usize),
        snippet: String,
    },
    #[error("non-finite result at `{snippet}` (bytes {}..{})", span.0, span.1)]
    NonFinite { span: (usize, usize), snippet: String },
    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),
    #[error("point has {got} coordinates, chart has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Abs,
}

impl Func {
    const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

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
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum NodeKind {
    Const(f64),
    Coord(usize),
    Param(String),
    Neg(Box<Node>),
    Func(Func, Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
}

/// Tree node with the byte span of the source text it came from.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Node {
    pub(crate) kind: NodeKind,
    pub(crate) span: (usize, usize),
}

impl Node {
    fn binary(op: BinOp, lhs: Node, rhs: Node) -> Node {
        let span = (lhs.span.0, rhs.span.1);
        Node {
            kind: NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)),
            span,
        }
    }

    fn same_shape(&self, other: &Node) -> bool {
        use NodeKind::*;
        match (&self.kind, &other.kind) {
            (Const(a), Const(b)) => a.to_bits() == b.to_bits(),
            (Coord(a), Coord(b)) => a == b,
            (Param(a), Param(b)) => a == b,
            (Neg(a), Neg(b)) => a.same_shape(b),
            (Func(f, a), Func(g, b)) => f == g && a.same_shape(b),
            (Binary(o, a1, a2), Binary(p, b1, b2)) => o == p && a1.same_shape(b1) && a2.same_shape(b2),
            _ => false,
        }
    }

    fn uses_coords(&self) -> bool {
        match &self.kind {
            NodeKind::Coord(_) => true,
            NodeKind::Const(_) | NodeKind::Param(_) => false,
            NodeKind::Neg(a) | NodeKind::Func(_, a) => a.uses_coords(),
            NodeKind::Binary(_, a, b) => a.uses_coords() || b.uses_coords(),
        }
    }

    fn bind(&self, params: &Params) -> Node {
        let kind = match &self.kind {
            NodeKind::Param(name) => match params.get(name) {
                Some(v) => NodeKind::Const(*v),
                None => NodeKind::Param(name.clone()),
            },
            NodeKind::Neg(a) => NodeKind::Neg(Box::new(a.bind(params))),
            NodeKind::Func(f, a) => NodeKind::Func(*f, Box::new(a.bind(params))),
            NodeKind::Binary(op, a, b) => NodeKind::Binary(*op, Box::new(a.bind(params)), Box::new(b.bind(params))),
            other => other.clone(),
        };
        Node { kind, span: self.span }
    }

    fn write(&self, coords: &[String], out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NodeKind::Const(v) => write!(out, "{v}"),
            NodeKind::Coord(i) => write!(out, "{}", coords[*i]),
            NodeKind::Param(name) => write!(out, "{name}"),
            NodeKind::Neg(a) => {
                write!(out, "(-")?;
                a.write(coords, out)?;
                write!(out, ")")
            }
            NodeKind::Func(f, a) => {
                write!(out, "{}(", f.name())?;
                a.write(coords, out)?;
                write!(out, ")")
            }
            NodeKind::Binary(op, a, b) => {
                write!(out, "(")?;
                a.write(coords, out)?;
                write!(out, " {} ", op.symbol())?;
                b.write(coords, out)?;
                write!(out, ")")
            }
        }
    }
}

/// A parsed, immutable expression bound to a chart's coordinate names.
#[derive(Debug, Clone)]
pub struct ScalarExpr {
    root: Node,
    source: Arc<str>,
    coords: Arc<[String]>,
}

fn check_names(coords: &[String]) -> Result<(), ParseError> {
    for (i, name) in coords.iter().enumerate() {
        let valid = !name.is_empty()
            && name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid || coords[..i].contains(name) || Func::from_name(name).is_some() {
            return Err(ParseError::BadCoordinate(name.clone()));
        }
    }
    Ok(())
}

impl ScalarExpr {
    /// Parse `source` against the chart coordinates `coords`.
    pub fn parse(source: &str, coords: &[String]) -> Result<Self, ParseError> {
        Self::parse_with_params(source, coords, &[])
    }

    /// Parse allowing references to the named parameters in `params`.
    /// Coordinates shadow parameters of the same name.
    pub fn parse_with_params(source: &str, coords: &[String], params: &[String]) -> Result<Self, ParseError> {
        check_names(coords)?;
        let root = parser::Parser::new(source, coords, params)?.parse()?;
        Ok(Self {
            root,
            source: source.into(),
            coords: coords.into(),
        })
    }

    pub fn constant(value: f64, coords: &[String]) -> Self {
        let source: Arc<str> = format!("{value}").into();
        Self {
            root: Node {
                kind: NodeKind::Const(value),
                span: (0, source.len()),
            },
            source,
            coords: coords.into(),
        }
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// True when no coordinate appears in the tree.
    pub fn is_coordinate_free(&self) -> bool {
        !self.root.uses_coords()
    }

    /// Structural equality, ignoring source spans.
    pub fn same_structure(&self, other: &ScalarExpr) -> bool {
        self.coords == other.coords && self.root.same_shape(&other.root)
    }

    /// Substitute the given parameter values as constants.
    pub fn bind(&self, params: &Params) -> ScalarExpr {
        Self {
            root: self.root.bind(params),
            source: self.source.clone(),
            coords: self.coords.clone(),
        }
    }

    pub fn eval(&self, point: &[f64], params: &Params) -> Result<f64, EvalError> {
        self.check_point(point)?;
        eval::Evaluator::values(self, point, params)
            .run(&self.root)
            .map(|j| j.value())
    }

    pub fn eval_jet2(&self, point: &[f64], params: &Params) -> Result<Jet2, EvalError> {
        self.check_point(point)?;
        eval::Evaluator::jets(self, point, params).run(&self.root)
    }

    fn check_point(&self, point: &[f64]) -> Result<(), EvalError> {
        if point.len() != self.dim() {
            return Err(EvalError::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn snippet(&self, span: (usize, usize)) -> String {
        self.source.get(span.0..span.1).unwrap_or("").to_string()
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(&self.coords, f)
    }
}

/// Parse a list of names such as `x, y`.
pub fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests;
