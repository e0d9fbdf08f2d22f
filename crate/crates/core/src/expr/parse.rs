use std::sync::Arc;

use thiserror::Error;

use super::ast::{BinOp, Expr, Func, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("function `{name}` at byte {offset} takes {expected} argument(s), found {found}")]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid symbol list: {0}")]
    Symbols(String),
}

impl ParseError {
    /// Byte offset into the source, when the error has one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::Arity { offset, .. } => Some(*offset),
            ParseError::Symbols(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lexer = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let tok = lexer.next()?;
            let end = tok.0 == Tok::End;
            out.push(tok);
            if end {
                return Ok(out);
            }
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(c) = self.peek_char() else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == '.' {
            return self.number(start).map(|n| (Tok::Num(n), start));
        }
        if c.is_alphabetic() || c == '_' {
            while let Some(c) = self.peek_char() {
                if c.is_alphanumeric() || c == '_' {
                    self.pos += c.len_utf8();
                } else {
                    break;
                }
            }
            return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
        }
        self.pos += c.len_utf8();
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            other => {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", other),
                })
            }
        };
        Ok((tok, start))
    }

    fn number(&mut self, start: usize) -> Result<f64, ParseError> {
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
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
        self.pos = i;
        self.src[start..i].parse::<f64>().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("malformed number `{}`", &self.src[start..i]),
        })
    }
}

struct Parser<'s> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    symbols: &'s [Arc<str>],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.pos].clone();
        if t.0 != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::from_node(Node::Binary(op, lhs, rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::from_node(Node::Binary(op, lhs, rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                let inner = self.unary()?;
                Ok(Expr::from_node(Node::Neg(inner)))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Tok::Op('^') = self.peek() {
            self.bump();
            // right associative, exponent may be signed
            let exponent = self.unary()?;
            return Ok(Expr::from_node(Node::Binary(BinOp::Pow, base, exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::constant(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.call(name, offset)
                } else {
                    match self.symbols.iter().position(|s| **s == *name) {
                        Some(index) => Ok(Expr::from_node(Node::Var {
                            index,
                            name: self.symbols[index].clone(),
                        })),
                        None => Err(ParseError::UnknownIdentifier { name, offset }),
                    }
                }
            }
            Tok::End => Err(ParseError::Syntax {
                offset,
                message: "unexpected end of input".into(),
            }),
            other => Err(ParseError::Syntax {
                offset,
                message: format!("unexpected token {}", describe(&other)),
            }),
        }
    }

    fn call(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        self.bump(); // '('
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.expr()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_rparen()?;
        let func = Func::from_name(&name).ok_or_else(|| ParseError::UnknownFunction {
            name: name.clone(),
            offset,
        })?;
        if args.len() != func.arity() {
            return Err(ParseError::Arity {
                name,
                offset,
                expected: func.arity(),
                found: args.len(),
            });
        }
        let arg = args.pop().expect("arity checked");
        Ok(Expr::from_node(Node::Call(func, arg)))
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected `)`, found {}", describe(self.peek())))
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {}", v),
        Tok::Ident(s) => format!("identifier `{}`", s),
        Tok::Op(c) => format!("`{}`", c),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

/// Parse `source` against an ordered list of coordinate/parameter names.
/// Variable `symbols[i]` becomes point index `i` at evaluation time.
pub fn parse_expression<S: AsRef<str>>(source: &str, symbols: &[S]) -> Result<Expr, ParseError> {
    if symbols.is_empty() {
        return Err(ParseError::Symbols("symbol list is empty".into()));
    }
    let names: Vec<Arc<str>> = symbols.iter().map(|s| Arc::from(s.as_ref())).collect();
    for (i, a) in names.iter().enumerate() {
        if names[..i].contains(a) {
            return Err(ParseError::Symbols(format!("duplicate symbol `{}`", a)));
        }
        let valid = a.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
            && a.chars().all(|c| c.is_alphanumeric() || c == '_');
        if !valid {
            return Err(ParseError::Symbols(format!("`{}` is not an identifier", a)));
        }
    }
    let tokens = Lexer::tokens(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        symbols: &names,
    };
    let expr = parser.expr()?;
    if *parser.peek() != Tok::End {
        return parser.syntax(format!("unexpected trailing {}", describe(parser.peek())));
    }
    Ok(expr)
}
