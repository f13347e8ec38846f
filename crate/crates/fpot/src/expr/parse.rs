//! Lexer and recursive-descent parser for the expression grammar.

use crate::error::{Error, Result};

use super::{BinOp, ExprAst, Node, UnaryFn};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token together with its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Tok::Eof, start));
        }
        let c = self.src[self.pos];
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.lex_number(start);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos])
                .expect("identifier bytes are ASCII")
                .to_string();
            return Ok((Tok::Ident(name), start));
        }
        Err(Error::Parse {
            offset: start,
            message: format!("unexpected character `{}`", c as char),
        })
    }

    fn lex_number(&mut self, start: usize) -> Result<(Tok, usize)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        // Exponent suffix only when it is unambiguously part of the number;
        // otherwise `2e` stays two tokens (`2`, Euler's constant).
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let mut look = self.pos + 1;
            if look < self.src.len() && (self.src[look] == b'+' || self.src[look] == b'-') {
                look += 1;
            }
            if look < self.src.len() && self.src[look].is_ascii_digit() {
                self.pos = look;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("number bytes are ASCII");
        let value: f64 = text.parse().map_err(|_| Error::Parse {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                offset: start,
                message: format!("number `{text}` overflows"),
            });
        }
        Ok((Tok::Number(value), start))
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    cursor: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, usize) {
        &self.toks[self.cursor]
    }

    fn advance(&mut self) -> (Tok, usize) {
        let t = self.toks[self.cursor].clone();
        if self.cursor + 1 < self.toks.len() {
            self.cursor += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, hint: &str) -> Result<usize> {
        let (tok, offset) = self.peek().clone();
        if tok == want {
            self.advance();
            Ok(offset)
        } else {
            Err(Error::Parse {
                offset,
                message: format!("expected {hint}, found {}", tok.describe()),
            })
        }
    }

    fn expr(&mut self) -> Result<ExprAst> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().0 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.term()?;
            let span = (lhs.span.0, rhs.span.1);
            lhs = ExprAst::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ExprAst> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().0 {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.advance();
            let rhs = self.factor()?;
            let span = (lhs.span.0, rhs.span.1);
            lhs = ExprAst::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<ExprAst> {
        if self.peek().0 == Tok::Minus {
            let (_, start) = self.advance();
            let inner = self.power()?;
            let span = (start, inner.span.1);
            return Ok(ExprAst::new(Node::Neg(Box::new(inner)), span));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprAst> {
        let base = self.atom()?;
        if self.peek().0 == Tok::Caret {
            self.advance();
            // Right-associative: the exponent is itself a factor.
            let expo = self.factor()?;
            let span = (base.span.0, expo.span.1);
            return Ok(ExprAst::new(
                Node::Binary(BinOp::Pow, Box::new(base), Box::new(expo)),
                span,
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprAst> {
        let (tok, start) = self.advance();
        match tok {
            Tok::Number(v) => Ok(ExprAst::new(Node::Number(v), (start, self.here()))),
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(ExprAst::new(Node::Var, (start, start + 1))),
                "pi" => Ok(ExprAst::new(Node::Pi, (start, start + 2))),
                "e" => Ok(ExprAst::new(Node::E, (start, start + 1))),
                _ => {
                    let func =
                        UnaryFn::from_name(&name).ok_or_else(|| Error::UnknownIdentifier {
                            name: name.clone(),
                            offset: start,
                            catalog: UnaryFn::catalog(),
                        })?;
                    self.expect(Tok::LParen, "`(` after function name")?;
                    let arg = self.expr()?;
                    let close = self.expect(Tok::RParen, "`)` closing the function argument")?;
                    Ok(ExprAst::new(
                        Node::Call(func, Box::new(arg)),
                        (start, close + 1),
                    ))
                }
            },
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen, "`)`")?;
                Ok(ExprAst::new(inner.node, (start, close + 1)))
            }
            other => Err(Error::Parse {
                offset: start,
                message: format!(
                    "expected a number, `x`, `pi`, `e`, a function call, or `(`, found {}",
                    other.describe()
                ),
            }),
        }
    }

    fn here(&self) -> usize {
        self.peek().1
    }
}

/// Parse `source` into an AST. The only free variable is `x`.
pub fn parse(source: &str) -> Result<ExprAst> {
    if source.trim().is_empty() {
        return Err(Error::Parse {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut lexer = Lexer::new(source);
    let mut toks = Vec::new();
    loop {
        let (tok, offset) = lexer.next()?;
        let done = tok == Tok::Eof;
        toks.push((tok, offset));
        if done {
            break;
        }
    }
    let mut parser = Parser { toks, cursor: 0 };
    let ast = parser.expr()?;
    let (tok, offset) = parser.peek().clone();
    if tok != Tok::Eof {
        return Err(Error::Parse {
            offset,
            message: format!(
                "expected an operator or end of input, found {}",
                tok.describe()
            ),
        });
    }
    Ok(ast)
}
