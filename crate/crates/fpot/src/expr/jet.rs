//! Second-order truncated-Taylor jets and the AST evaluator built on them.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

use super::{BinOp, ExprAst, Node, UnaryFn};

/// Value of a function together with its first and second derivatives at a
/// point. Arithmetic follows the truncated Taylor rules, e.g.
/// `(u*v)'' = u''v + 2u'v' + uv''`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    /// Seed for the independent variable: value `x`, slope 1.
    pub fn var(x: f64) -> Self {
        Self {
            value: x,
            d1: 1.0,
            d2: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            value: c,
            d1: 0.0,
            d2: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }

    /// Chain rule for an outer scalar function given its value and
    /// derivatives at `self.value`.
    fn compose(self, v: f64, dv: f64, ddv: f64) -> Self {
        Self {
            value: v,
            d1: dv * self.d1,
            d2: ddv * self.d1 * self.d1 + dv * self.d2,
        }
    }

    fn recip(self) -> Self {
        let inv = 1.0 / self.value;
        self.compose(inv, -inv * inv, 2.0 * inv * inv * inv)
    }

    /// Integer power by repeated multiplication, exact for any base sign.
    fn powi(self, p: i64) -> Self {
        if p == 0 {
            return Jet2::constant(1.0);
        }
        let mut exp = p.unsigned_abs();
        let mut base = self;
        let mut acc = Jet2::constant(1.0);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            exp >>= 1;
            if exp > 0 {
                base = base * base;
            }
        }
        if p < 0 {
            acc.recip()
        } else {
            acc
        }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            value: self.value + rhs.value,
            d1: self.d1 + rhs.d1,
            d2: self.d2 + rhs.d2,
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            value: self.value - rhs.value,
            d1: self.d1 - rhs.d1,
            d2: self.d2 - rhs.d2,
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            value: self.value * rhs.value,
            d1: self.d1 * rhs.value + self.value * rhs.d1,
            d2: self.d2 * rhs.value + 2.0 * self.d1 * rhs.d1 + self.value * rhs.d2,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, rhs: Jet2) -> Jet2 {
        // w = u/v: u' = w'v + wv', u'' = w''v + 2w'v' + wv''.
        let value = self.value / rhs.value;
        let d1 = (self.d1 - value * rhs.d1) / rhs.value;
        let d2 = (self.d2 - 2.0 * d1 * rhs.d1 - value * rhs.d2) / rhs.value;
        Jet2 { value, d1, d2 }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            value: -self.value,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

impl UnaryFn {
    /// Apply the function to an inner jet. `Err` carries a plain message;
    /// the evaluator attaches location context.
    fn apply(self, u: Jet2) -> std::result::Result<Jet2, String> {
        let v = u.value;
        let jet = match self {
            UnaryFn::Exp => {
                let e = v.exp();
                u.compose(e, e, e)
            }
            UnaryFn::Ln => {
                if v <= 0.0 {
                    return Err(format!("ln of nonpositive value {v}"));
                }
                u.compose(v.ln(), 1.0 / v, -1.0 / (v * v))
            }
            UnaryFn::Sqrt => {
                if v <= 0.0 {
                    return Err(format!("sqrt of nonpositive value {v}"));
                }
                let s = v.sqrt();
                u.compose(s, 0.5 / s, -0.25 / (s * v))
            }
            UnaryFn::Sin => u.compose(v.sin(), v.cos(), -v.sin()),
            UnaryFn::Cos => u.compose(v.cos(), -v.sin(), -v.cos()),
            UnaryFn::Tan => {
                let t = v.tan();
                let sec2 = 1.0 + t * t;
                u.compose(t, sec2, 2.0 * sec2 * t)
            }
            UnaryFn::Sec => {
                let s = 1.0 / v.cos();
                u.compose(s, s * v.tan(), s * (2.0 * s * s - 1.0))
            }
            UnaryFn::Csc => {
                let c = 1.0 / v.sin();
                let cot = v.cos() / v.sin();
                u.compose(c, -c * cot, c * (2.0 * c * c - 1.0))
            }
            UnaryFn::Cot => {
                let cot = v.cos() / v.sin();
                let csc2 = 1.0 + cot * cot;
                u.compose(cot, -csc2, 2.0 * csc2 * cot)
            }
            UnaryFn::Asin => {
                if v.abs() >= 1.0 {
                    return Err(format!("asin argument {v} outside (-1, 1)"));
                }
                let w = 1.0 - v * v;
                u.compose(v.asin(), w.powf(-0.5), v * w.powf(-1.5))
            }
            UnaryFn::Acos => {
                if v.abs() >= 1.0 {
                    return Err(format!("acos argument {v} outside (-1, 1)"));
                }
                let w = 1.0 - v * v;
                u.compose(v.acos(), -w.powf(-0.5), -v * w.powf(-1.5))
            }
            UnaryFn::Atan => {
                let w = 1.0 + v * v;
                u.compose(v.atan(), 1.0 / w, -2.0 * v / (w * w))
            }
            UnaryFn::Arcsec => {
                if v.abs() <= 1.0 {
                    return Err(format!("arcsec argument {v} inside [-1, 1]"));
                }
                return UnaryFn::Acos.apply(u.recip());
            }
            UnaryFn::Arccsc => {
                if v.abs() <= 1.0 {
                    return Err(format!("arccsc argument {v} inside [-1, 1]"));
                }
                return UnaryFn::Asin.apply(u.recip());
            }
            UnaryFn::Sinh => u.compose(v.sinh(), v.cosh(), v.sinh()),
            UnaryFn::Cosh => u.compose(v.cosh(), v.sinh(), v.cosh()),
            UnaryFn::Tanh => {
                let t = v.tanh();
                let sech2 = 1.0 - t * t;
                u.compose(t, sech2, -2.0 * sech2 * t)
            }
            UnaryFn::Coth => {
                if v == 0.0 {
                    return Err("coth is singular at 0".into());
                }
                let c = v.cosh() / v.sinh();
                let csch2 = c * c - 1.0;
                u.compose(c, -csch2, 2.0 * csch2 * c)
            }
            UnaryFn::Arsinh => {
                let w = 1.0 + v * v;
                u.compose(v.asinh(), w.powf(-0.5), -v * w.powf(-1.5))
            }
            UnaryFn::Arcosh => {
                if v <= 1.0 {
                    return Err(format!("arcosh argument {v} not above 1"));
                }
                let w = v * v - 1.0;
                u.compose(v.acosh(), w.powf(-0.5), -v * w.powf(-1.5))
            }
            UnaryFn::Artanh => {
                if v.abs() >= 1.0 {
                    return Err(format!("artanh argument {v} outside (-1, 1)"));
                }
                let w = 1.0 - v * v;
                u.compose(v.atanh(), 1.0 / w, 2.0 * v / (w * w))
            }
            UnaryFn::Arcoth => {
                if v.abs() <= 1.0 {
                    return Err(format!("arcoth argument {v} inside [-1, 1]"));
                }
                let w = 1.0 - v * v;
                u.compose(
                    0.5 * ((v + 1.0) / (v - 1.0)).ln(),
                    1.0 / w,
                    2.0 * v / (w * w),
                )
            }
        };
        Ok(jet)
    }
}

impl ExprAst {
    /// Evaluate the expression at `x`, propagating value, first, and second
    /// derivative through the tree.
    pub fn eval_jet(&self, x: f64) -> Result<Jet2> {
        let jet = self.eval_node(x)?;
        self.ensure_finite(jet, x)
    }

    /// Value only.
    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.eval_jet(x)?.value)
    }

    fn fail(&self, x: f64, what: String) -> Error {
        let (s, e) = self.span;
        Error::EvalFailure {
            x,
            what: format!("{what} in `{self}` (bytes {s}..{e})"),
        }
    }

    fn ensure_finite(&self, jet: Jet2, x: f64) -> Result<Jet2> {
        if jet.is_finite() {
            Ok(jet)
        } else {
            Err(self.fail(
                x,
                format!("non-finite jet ({}, {}, {})", jet.value, jet.d1, jet.d2),
            ))
        }
    }

    fn eval_node(&self, x: f64) -> Result<Jet2> {
        let jet = match &self.node {
            Node::Number(v) => Jet2::constant(*v),
            Node::Var => Jet2::var(x),
            Node::Pi => Jet2::constant(std::f64::consts::PI),
            Node::E => Jet2::constant(std::f64::consts::E),
            Node::Neg(inner) => -inner.eval_node(x)?,
            Node::Call(func, arg) => {
                let u = arg.eval_jet(x)?;
                func.apply(u).map_err(|msg| self.fail(x, msg))?
            }
            Node::Binary(op, l, r) => {
                let a = l.eval_jet(x)?;
                match op {
                    BinOp::Add => a + r.eval_jet(x)?,
                    BinOp::Sub => a - r.eval_jet(x)?,
                    BinOp::Mul => a * r.eval_jet(x)?,
                    BinOp::Div => {
                        let b = r.eval_jet(x)?;
                        if b.value == 0.0 {
                            return Err(self.fail(x, "division by zero".into()));
                        }
                        a / b
                    }
                    BinOp::Pow => self.eval_pow(a, r, x)?,
                }
            }
        };
        self.ensure_finite(jet, x)
    }

    fn eval_pow(&self, base: Jet2, expo_ast: &ExprAst, x: f64) -> Result<Jet2> {
        let expo = expo_ast.eval_jet(x)?;
        let constant_exponent = expo.d1 == 0.0 && expo.d2 == 0.0;
        if constant_exponent {
            let p = expo.value;
            if p == p.trunc() && p.abs() <= 512.0 {
                let jet = base.powi(p as i64);
                if !jet.is_finite() && base.value == 0.0 && p < 0.0 {
                    return Err(self.fail(x, "zero raised to a negative power".into()));
                }
                return Ok(jet);
            }
            if base.value <= 0.0 {
                return Err(self.fail(
                    x,
                    format!(
                        "non-integer exponent {p} requires a positive base, got {}",
                        base.value
                    ),
                ));
            }
            let w = base.value.powf(p);
            return Ok(base.compose(
                w,
                p * base.value.powf(p - 1.0),
                p * (p - 1.0) * base.value.powf(p - 2.0),
            ));
        }
        // Variable exponent: u^v = exp(v ln u).
        if base.value <= 0.0 {
            return Err(self.fail(
                x,
                format!(
                    "variable exponent requires a positive base, got {}",
                    base.value
                ),
            ));
        }
        let ln_base = base.compose(
            base.value.ln(),
            1.0 / base.value,
            -1.0 / (base.value * base.value),
        );
        let z = expo * ln_base;
        let e = z.value.exp();
        Ok(z.compose(e, e, e))
    }
}
