use std::sync::Arc;

use super::{BinOp, Expr, ExprError, Func, Var};

/// Recursive-descent parser; see the module docs for the grammar.
#[derive(Clone, Debug)]
pub struct Parser {
    params: Vec<String>,
}

impl Default for Parser {
    fn default() -> Self {
        Parser::new()
    }
}

impl Parser {
    /// A parser that knows the coordinates and the `pi` parameter.
    pub fn new() -> Self {
        Parser {
            params: vec!["pi".to_string()],
        }
    }

    pub fn with_params<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        for n in names {
            let n = n.into();
            if !self.params.contains(&n) {
                self.params.push(n);
            }
        }
        self
    }

    pub fn parse(&self, text: &str) -> Result<Expr, ExprError> {
        let mut cursor = Cursor {
            src: text,
            pos: 0,
            parser: self,
        };
        let e = cursor.sum()?;
        cursor.skip_ws();
        if cursor.pos < text.len() {
            return Err(cursor.unexpected(&["operator", "end of input"]));
        }
        Ok(e)
    }

    fn allowed_names(&self) -> Vec<String> {
        Var::ALL
            .iter()
            .map(|v| v.name().to_string())
            .chain(self.params.iter().cloned())
            .chain(Func::ALL.iter().map(|f| format!("{}()", f.name())))
            .chain(std::iter::once("neg()".to_string()))
            .collect()
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    parser: &'a Parser,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&'static str]) -> ExprError {
        let found = match self.peek() {
            Some(c) => format!("`{c}`"),
            None => "end of input".to_string(),
        };
        ExprError::Syntax {
            offset: self.pos,
            expected: expected.to_vec(),
            found,
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            Ok(Expr::Neg(Arc::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            Ok(Expr::Bin(BinOp::Pow, Arc::new(base), Arc::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(')') {
                    return Err(self.unexpected(&["`)`", "operator"]));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.identifier(),
            _ => Err(self.unexpected(&["number", "identifier", "`(`", "`-`"])),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        match self.src[start..end].parse::<f64>() {
            Ok(v) => {
                self.pos = end;
                Ok(Expr::Const(v))
            }
            Err(_) => Err(ExprError::Syntax {
                offset: start,
                expected: vec!["number"],
                found: format!("`{}`", &self.src[start..end]),
            }),
        }
    }

    fn identifier(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
            end += 1;
        }
        let name = &self.src[start..end];
        self.pos = end;

        let func = Func::ALL.into_iter().find(|f| f.name() == name);
        if func.is_some() || name == "neg" {
            if !self.eat('(') {
                return Err(self.unexpected(&["`(`"]));
            }
            let arg = self.sum()?;
            if !self.eat(')') {
                return Err(self.unexpected(&["`)`", "operator"]));
            }
            return Ok(match func {
                Some(f) => Expr::Call(f, Arc::new(arg)),
                None => Expr::Neg(Arc::new(arg)),
            });
        }
        if let Some(v) = Var::from_name(name) {
            return Ok(Expr::Var(v));
        }
        if self.parser.params.iter().any(|p| p == name) {
            return Ok(Expr::Param(Arc::from(name)));
        }
        Err(ExprError::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
            allowed: self.parser.allowed_names(),
        })
    }
}
