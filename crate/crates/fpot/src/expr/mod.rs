//! Expression language for user-supplied scalar functions of one variable
//! `x`, evaluated together with first and second derivatives through
//! truncated-Taylor jets.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term { ("+"|"-") term }
//! term   := factor { ("*"|"/") factor }
//! factor := ["-"] power
//! power  := atom ["^" factor]
//! atom   := number | "x" | "pi" | "e" | name "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus.

mod jet;
mod parse;

pub use jet::Jet2;
pub use parse::parse;

use std::fmt;

/// Binary operators in source order of precedence.
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

/// The fixed function catalog. Inverse secant/cosecant are evaluated through
/// their `acos(1/x)` / `asin(1/x)` compositions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sec,
    Csc,
    Cot,
    Asin,
    Acos,
    Atan,
    Arcsec,
    Arccsc,
    Sinh,
    Cosh,
    Tanh,
    Coth,
    Arsinh,
    Arcosh,
    Artanh,
    Arcoth,
}

impl UnaryFn {
    pub const ALL: [UnaryFn; 22] = [
        UnaryFn::Exp,
        UnaryFn::Ln,
        UnaryFn::Sqrt,
        UnaryFn::Sin,
        UnaryFn::Cos,
        UnaryFn::Tan,
        UnaryFn::Sec,
        UnaryFn::Csc,
        UnaryFn::Cot,
        UnaryFn::Asin,
        UnaryFn::Acos,
        UnaryFn::Atan,
        UnaryFn::Arcsec,
        UnaryFn::Arccsc,
        UnaryFn::Sinh,
        UnaryFn::Cosh,
        UnaryFn::Tanh,
        UnaryFn::Coth,
        UnaryFn::Arsinh,
        UnaryFn::Arcosh,
        UnaryFn::Artanh,
        UnaryFn::Arcoth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Exp => "exp",
            UnaryFn::Ln => "ln",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Tan => "tan",
            UnaryFn::Sec => "sec",
            UnaryFn::Csc => "csc",
            UnaryFn::Cot => "cot",
            UnaryFn::Asin => "asin",
            UnaryFn::Acos => "acos",
            UnaryFn::Atan => "atan",
            UnaryFn::Arcsec => "arcsec",
            UnaryFn::Arccsc => "arccsc",
            UnaryFn::Sinh => "sinh",
            UnaryFn::Cosh => "cosh",
            UnaryFn::Tanh => "tanh",
            UnaryFn::Coth => "coth",
            UnaryFn::Arsinh => "arsinh",
            UnaryFn::Arcosh => "arcosh",
            UnaryFn::Artanh => "artanh",
            UnaryFn::Arcoth => "arcoth",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Comma-separated catalog listing for diagnostics.
    pub fn catalog() -> String {
        Self::ALL
            .iter()
            .map(|f| f.name())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// One node of a parsed expression. Spans are byte ranges into the original
/// source, kept for error reporting and ignored by equality.
#[derive(Debug, Clone)]
pub enum Node {
    Number(f64),
    Var,
    Pi,
    E,
    Neg(Box<ExprAst>),
    Binary(BinOp, Box<ExprAst>, Box<ExprAst>),
    Call(UnaryFn, Box<ExprAst>),
}

/// A parsed expression in the single free variable `x`.
#[derive(Debug, Clone)]
pub struct ExprAst {
    pub(crate) node: Node,
    pub(crate) span: (usize, usize),
}

impl ExprAst {
    pub(crate) fn new(node: Node, span: (usize, usize)) -> Self {
        Self { node, span }
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn span(&self) -> (usize, usize) {
        self.span
    }

    /// Printing precedence: atoms 5, `^` 4, unary minus 3, `*` `/` 2, `+` `-` 1.
    fn precedence(&self) -> u8 {
        match &self.node {
            Node::Number(_) | Node::Var | Node::Pi | Node::E | Node::Call(..) => 5,
            Node::Binary(BinOp::Pow, ..) => 4,
            Node::Neg(_) => 3,
            Node::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Node::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        }
    }
}

impl PartialEq for ExprAst {
    fn eq(&self, other: &Self) -> bool {
        match (&self.node, &other.node) {
            (Node::Number(a), Node::Number(b)) => a == b,
            (Node::Var, Node::Var) | (Node::Pi, Node::Pi) | (Node::E, Node::E) => true,
            (Node::Neg(a), Node::Neg(b)) => a == b,
            (Node::Binary(op_a, la, ra), Node::Binary(op_b, lb, rb)) => {
                op_a == op_b && la == lb && ra == rb
            }
            (Node::Call(fa, a), Node::Call(fb, b)) => fa == fb && a == b,
            _ => false,
        }
    }
}

fn fmt_child(f: &mut fmt::Formatter<'_>, child: &ExprAst, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Number(v) => write!(f, "{v}"),
            Node::Var => write!(f, "x"),
            Node::Pi => write!(f, "pi"),
            Node::E => write!(f, "e"),
            Node::Neg(inner) => {
                write!(f, "-")?;
                // The operand of unary minus is a `power`; anything looser
                // (including another minus) needs parentheses to reparse.
                fmt_child(f, inner, 4)
            }
            Node::Binary(op, l, r) => match op {
                BinOp::Pow => {
                    // Base must be an atom, exponent is a full factor.
                    fmt_child(f, l, 5)?;
                    write!(f, "^")?;
                    fmt_child(f, r, 3)
                }
                _ => {
                    let prec = self.precedence();
                    fmt_child(f, l, prec)?;
                    write!(f, " {} ", op.symbol())?;
                    // Left-associative parse: equal precedence on the right
                    // must be parenthesized to round-trip structurally.
                    fmt_child(f, r, prec + 1)
                }
            },
            Node::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}
