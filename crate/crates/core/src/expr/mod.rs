//! Scalar-field expressions over ℝ^N.
//!
//! Expressions are parsed from a small infix grammar and evaluated with
//! forward-mode jets carrying value, gradient and Hessian. The grammar:
//!
//! ```text
//! expr   = term { ("+" | "-") term } ;
//! term   = unary { ("*" | "/") unary } ;
//! unary  = "-" unary | power ;
//! power  = atom [ "^" [ "-" ] integer ] ;
//! atom   = number | variable | func "(" expr ")" | "(" expr ")" ;
//! func   = "sin" | "cos" | "exp" | "sqrt" ;
//! variable = "x" integer ;        (* x1 .. xN, 1-based *)
//! number = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! A unary minus written directly in front of a numeric literal (and not
//! followed by `^`) folds into a negative constant.

mod jet;
mod parse;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use jet::{Jet1, Jet2};
pub use parse::ParseError;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

/// Syntax tree node. Variable indices are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Var(usize),
    Const(f64),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Neg(Box<Node>),
    Func(Func, Box<Node>),
}

impl Node {
    pub fn add(a: Node, b: Node) -> Node {
        Node::Add(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Node, b: Node) -> Node {
        Node::Mul(Box::new(a), Box::new(b))
    }

    fn count(&self) -> usize {
        match self {
            Node::Var(_) | Node::Const(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.count() + b.count()
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Func(_, a) => 1 + a.count(),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Var(i) => Some(*i),
            Node::Const(_) => None,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Func(_, a) => a.max_var(),
        }
    }

    fn has_zero_divisor(&self) -> bool {
        match self {
            Node::Var(_) | Node::Const(_) => false,
            Node::Div(a, b) => {
                matches!(**b, Node::Const(c) if c == 0.0)
                    || a.has_zero_divisor()
                    || b.has_zero_divisor()
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
                a.has_zero_divisor() || b.has_zero_divisor()
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Func(_, a) => a.has_zero_divisor(),
        }
    }

    fn substitute(&self, rows: &[Node]) -> Node {
        match self {
            Node::Var(i) => rows[*i].clone(),
            Node::Const(c) => Node::Const(*c),
            Node::Add(a, b) => Node::Add(Box::new(a.substitute(rows)), Box::new(b.substitute(rows))),
            Node::Sub(a, b) => Node::Sub(Box::new(a.substitute(rows)), Box::new(b.substitute(rows))),
            Node::Mul(a, b) => Node::Mul(Box::new(a.substitute(rows)), Box::new(b.substitute(rows))),
            Node::Div(a, b) => Node::Div(Box::new(a.substitute(rows)), Box::new(b.substitute(rows))),
            Node::Pow(a, n) => Node::Pow(Box::new(a.substitute(rows)), *n),
            Node::Neg(a) => Node::Neg(Box::new(a.substitute(rows))),
            Node::Func(f, a) => Node::Func(*f, Box::new(a.substitute(rows))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("variable x{index} out of range for ambient dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("ambient dimension {0} outside supported range 1..={MAX_DIM}")]
    BadDimension(usize),
    #[error("division by the constant 0")]
    ZeroDivisor,
    #[error("point has length {got}, expected {expected}")]
    PointLength { got: usize, expected: usize },
    #[error("domain error at node {node}: {what}")]
    Domain { node: usize, what: String },
}

/// Parsed scalar field on ℝ^N. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    dim: usize,
    root: Node,
}

impl Expression {
    pub fn new(root: Node, dim: usize) -> Result<Self, ExprError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(ExprError::BadDimension(dim));
        }
        if let Some(i) = root.max_var() {
            if i >= dim {
                return Err(ExprError::VariableOutOfRange { index: i + 1, dim });
            }
        }
        if root.has_zero_divisor() {
            return Err(ExprError::ZeroDivisor);
        }
        Ok(Expression { dim, root })
    }

    pub fn parse(text: &str, dim: usize) -> Result<Self, ExprError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(ExprError::BadDimension(dim));
        }
        let root = parse::parse(text, dim)?;
        Expression::new(root, dim)
    }

    pub fn constant(c: f64, dim: usize) -> Result<Self, ExprError> {
        Expression::new(Node::Const(c), dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn node_count(&self) -> usize {
        self.root.count()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, ExprError> {
        self.check_len(x)?;
        jet::eval_value(&self.root, x)
    }

    pub fn eval_jet1(&self, x: &[f64]) -> Result<Jet1, ExprError> {
        self.check_len(x)?;
        jet::eval_jet1(&self.root, x, self.dim)
    }

    pub fn eval_jet2(&self, x: &[f64]) -> Result<Jet2, ExprError> {
        self.check_len(x)?;
        jet::eval_jet2(&self.root, x, self.dim)
    }

    /// The expression `x ↦ self(A x)`.
    pub fn compose_linear(&self, a: &DMatrix<f64>) -> Expression {
        assert_eq!(a.nrows(), self.dim);
        assert_eq!(a.ncols(), self.dim);
        let rows: Vec<Node> = (0..self.dim)
            .map(|i| {
                let mut acc: Option<Node> = None;
                for j in 0..self.dim {
                    let c = a[(i, j)];
                    if c == 0.0 {
                        continue;
                    }
                    let term = if c == 1.0 {
                        Node::Var(j)
                    } else {
                        Node::mul(Node::Const(c), Node::Var(j))
                    };
                    acc = Some(match acc {
                        None => term,
                        Some(prev) => Node::add(prev, term),
                    });
                }
                acc.unwrap_or(Node::Const(0.0))
            })
            .collect();
        Expression {
            dim: self.dim,
            root: self.root.substitute(&rows),
        }
    }

    /// `weight · Σ terms`, summed as a balanced tree.
    pub fn weighted_sum(terms: Vec<Expression>, weight: f64) -> Result<Expression, ExprError> {
        let dim = terms.first().map(|t| t.dim).ok_or(ExprError::BadDimension(0))?;
        let mut nodes: Vec<Node> = terms.into_iter().map(|t| t.root).collect();
        while nodes.len() > 1 {
            let mut next = Vec::with_capacity(nodes.len().div_ceil(2));
            let mut it = nodes.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => next.push(Node::add(a, b)),
                    None => next.push(a),
                }
            }
            nodes = next;
        }
        let sum = nodes.pop().expect("non-empty");
        Expression::new(Node::mul(Node::Const(weight), sum), dim)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<DVector<f64>, ExprError> {
        Ok(self.eval_jet1(x)?.gradient)
    }

    fn check_len(&self, x: &[f64]) -> Result<(), ExprError> {
        if x.len() != self.dim {
            return Err(ExprError::PointLength {
                got: x.len(),
                expected: self.dim,
            });
        }
        Ok(())
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "(-{:?})", c.abs())
                } else {
                    write!(f, "{c:?}")
                }
            }
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, n) => write!(f, "({a})^{n}"),
            Node::Neg(a) => write!(f, "(-({a}))"),
            Node::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
