use std::fmt;
use std::sync::Arc;

use super::{Expr, Func};

/// Byte range `[start, end)` into the parsed source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        SourceSpan { start, end }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    EmptySource,
    UnexpectedCharacter(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    UnknownIdentifier(String),
    FunctionWithoutArguments(String),
    Arity {
        function: String,
        expected: usize,
        found: usize,
    },
    InvalidNumber(String),
    InvalidExponent(String),
    TrailingInput(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (start, end) = (self.span.start, self.span.end);
        match &self.kind {
            ParseErrorKind::EmptySource => write!(f, "empty expression"),
            ParseErrorKind::UnexpectedCharacter(c) => {
                write!(f, "unexpected character {c:?} at {start}..{end}")
            }
            ParseErrorKind::UnexpectedToken(t) => {
                write!(f, "unexpected token {t:?} at {start}..{end}")
            }
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input at {start}"),
            ParseErrorKind::UnknownIdentifier(name) => {
                write!(f, "unknown identifier {name:?} at {start}..{end}")
            }
            ParseErrorKind::FunctionWithoutArguments(name) => {
                write!(f, "function {name:?} used without arguments at {start}..{end}")
            }
            ParseErrorKind::Arity {
                function,
                expected,
                found,
            } => write!(
                f,
                "function {function:?} takes {expected} argument(s), found {found} at {start}..{end}"
            ),
            ParseErrorKind::InvalidNumber(t) => write!(f, "invalid number {t:?} at {start}..{end}"),
            ParseErrorKind::InvalidExponent(t) => {
                write!(f, "exponent must be an integer literal, found {t:?} at {start}..{end}")
            }
            ParseErrorKind::TrailingInput(t) => {
                write!(f, "unexpected trailing input {t:?} at {start}..{end}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self, src: &str, span: SourceSpan) -> String {
        match self {
            Tok::End => "end of input".to_string(),
            _ => src[span.start..span.end].to_string(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, SourceSpan::new(start, start + 1)));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut is_integer = true;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                is_integer = false;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let save = i;
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                    is_integer = false;
                } else {
                    i = save;
                }
            }
            let text = &src[start..i];
            let span = SourceSpan::new(start, i);
            let value: f64 = text.parse().map_err(|_| ParseError {
                kind: ParseErrorKind::InvalidNumber(text.to_string()),
                span,
            })?;
            out.push((Tok::Num(value, is_integer), span));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), SourceSpan::new(start, i)));
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(ParseError {
            kind: ParseErrorKind::UnexpectedCharacter(ch),
            span: SourceSpan::new(start, start + ch.len_utf8()),
        });
    }
    out.push((Tok::End, SourceSpan::new(src.len(), src.len())));
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    chart: &'a [String],
    params: &'a [(String, f64)],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self) -> ParseError {
        let span = self.span();
        match self.peek() {
            Tok::End => ParseError {
                kind: ParseErrorKind::UnexpectedEnd,
                span,
            },
            tok => ParseError {
                kind: ParseErrorKind::UnexpectedToken(tok.describe(self.src, span)),
                span,
            },
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = binary(super::BinOp::Add, lhs, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = binary(super::BinOp::Sub, lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = binary(super::BinOp::Mul, lhs, self.factor()?);
                }
                Tok::Slash => {
                    self.bump();
                    lhs = binary(super::BinOp::Div, lhs, self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.factor()?;
            return Ok(Expr::Neg(Arc::new(inner)));
        }
        let base = self.base()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.exponent()?;
            return Ok(Expr::Pow(Arc::new(base), exponent));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let start = self.span().start;
        let parenthesized = *self.peek() == Tok::LParen;
        if parenthesized {
            self.bump();
        }
        let negative = *self.peek() == Tok::Minus;
        if negative {
            self.bump();
        }
        let (tok, span) = self.bump();
        let value = match tok {
            Tok::Num(v, true) if v <= i32::MAX as f64 => v as i32,
            Tok::Num(..) => {
                return Err(ParseError {
                    kind: ParseErrorKind::InvalidExponent(self.src[start..span.end].to_string()),
                    span: SourceSpan::new(start, span.end),
                })
            }
            Tok::End => {
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedEnd,
                    span,
                })
            }
            other => {
                return Err(ParseError {
                    kind: ParseErrorKind::InvalidExponent(other.describe(self.src, span)),
                    span,
                })
            }
        };
        if parenthesized {
            if *self.peek() != Tok::RParen {
                return Err(self.unexpected());
            }
            self.bump();
        }
        Ok(if negative { -value } else { value })
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let (tok, span) = self.bump();
        match tok {
            Tok::Num(v, _) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected());
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.call(name, span)
                } else if let Some(index) = self.chart.iter().position(|c| *c == name) {
                    Ok(Expr::var(index, name.as_str()))
                } else if let Some((_, value)) = self.params.iter().find(|(p, _)| *p == name) {
                    Ok(Expr::Num(*value))
                } else if Func::from_name(&name).is_some() {
                    Err(ParseError {
                        kind: ParseErrorKind::FunctionWithoutArguments(name),
                        span,
                    })
                } else {
                    Err(ParseError {
                        kind: ParseErrorKind::UnknownIdentifier(name),
                        span,
                    })
                }
            }
            Tok::End => Err(ParseError {
                kind: ParseErrorKind::UnexpectedEnd,
                span,
            }),
            other => Err(ParseError {
                kind: ParseErrorKind::UnexpectedToken(other.describe(self.src, span)),
                span,
            }),
        }
    }

    fn call(&mut self, name: String, name_span: SourceSpan) -> Result<Expr, ParseError> {
        let func = Func::from_name(&name).ok_or_else(|| ParseError {
            kind: ParseErrorKind::UnknownIdentifier(name.clone()),
            span: name_span,
        })?;
        self.bump(); // '('
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            args.push(self.expr()?);
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.expr()?);
            }
        }
        if *self.peek() != Tok::RParen {
            return Err(self.unexpected());
        }
        let (_, close) = self.bump();
        if args.len() != 1 {
            return Err(ParseError {
                kind: ParseErrorKind::Arity {
                    function: name,
                    expected: 1,
                    found: args.len(),
                },
                span: SourceSpan::new(name_span.start, close.end),
            });
        }
        Ok(Expr::Call(func, Arc::new(args.pop().expect("one argument"))))
    }
}

fn binary(op: super::BinOp, a: Expr, b: Expr) -> Expr {
    Expr::Binary(op, Arc::new(a), Arc::new(b))
}

/// Parses `source` over the coordinates `chart`.
pub fn parse(source: &str, chart: &[String]) -> Result<Expr, ParseError> {
    parse_with_params(source, chart, &[])
}

/// Parses `source`, binding each named parameter to a literal value.
/// Coordinates shadow parameters of the same name.
pub fn parse_with_params(
    source: &str,
    chart: &[String],
    params: &[(String, f64)],
) -> Result<Expr, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError {
            kind: ParseErrorKind::EmptySource,
            span: SourceSpan::new(0, source.len()),
        });
    }
    let toks = lex(source)?;
    let mut parser = Parser {
        src: source,
        toks,
        pos: 0,
        chart,
        params,
    };
    let expr = parser.expr()?;
    match parser.peek() {
        Tok::End => Ok(expr),
        Tok::RParen | Tok::Comma => Err(parser.unexpected()),
        tok => {
            let span = parser.span();
            Err(ParseError {
                kind: ParseErrorKind::TrailingInput(tok.describe(source, span)),
                span,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::BinOp;

    fn chart(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn product_of_three_variables() {
        let e = parse("x*y*z", &chart(&["x", "y", "z"])).unwrap();
        // left associative: (x*y)*z
        match e {
            Expr::Binary(BinOp::Mul, lhs, rhs) => {
                assert!(matches!(*lhs, Expr::Binary(BinOp::Mul, _, _)));
                assert!(matches!(&*rhs, Expr::Var(v) if v.index == 2));
            }
            other => panic!("unexpected tree {other:?}"),
        }
    }

    #[test]
    fn constraint_with_bound_parameter() {
        let c = chart(&["x", "y", "z", "p_x", "p_y", "p_z"]);
        let e = parse_with_params("p_x + y*p_z - a", &c, &[("a".into(), 0.5)]).unwrap();
        assert!(matches!(e, Expr::Binary(BinOp::Sub, _, _)));
        let v = e.eval(&[0.0, 2.0, 0.0, 1.0, 0.0, 3.0]).unwrap();
        assert_eq!(v, 1.0 + 6.0 - 0.5);
    }

    #[test]
    fn unbalanced_parenthesis_reports_end_of_input() {
        let err = parse("(x+", &chart(&["x"])).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(err.span, SourceSpan::new(3, 3));
    }

    #[test]
    fn power_binds_tighter_than_unary_minus() {
        let e = parse("-x^2", &chart(&["x"])).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);
        let e = parse("(-x)^2", &chart(&["x"])).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), 9.0);
        let e = parse("2*-x^2", &chart(&["x"])).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), -18.0);
    }

    #[test]
    fn negative_and_parenthesized_exponents() {
        let c = chart(&["x"]);
        assert_eq!(parse("x^-2", &c).unwrap().eval(&[2.0]).unwrap(), 0.25);
        assert_eq!(parse("x^(-1)", &c).unwrap().eval(&[4.0]).unwrap(), 0.25);
        assert_eq!(parse("2^3^1", &c).map(|_| ()).unwrap_err().kind,
            ParseErrorKind::TrailingInput("^".into()));
    }

    #[test]
    fn scientific_literals() {
        let e = parse("1.5e-3 + 2E2 + .5", &chart(&[])).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 1.5e-3 + 200.0 + 0.5);
    }

    #[test]
    fn arity_and_unknown_names() {
        let c = chart(&["x", "y"]);
        let err = parse("sin(x, y)", &c).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Arity { found: 2, .. }));
        assert_eq!(err.span, SourceSpan::new(0, 9));
        let err = parse("foo(x)", &c).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("foo".into()));
        let err = parse("x + w", &c).unwrap_err();
        assert_eq!(err.span, SourceSpan::new(4, 5));
        let err = parse("sin + x", &c).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::FunctionWithoutArguments(_)));
    }

    #[test]
    fn empty_source_is_rejected() {
        assert_eq!(parse("  ", &chart(&[])).unwrap_err().kind, ParseErrorKind::EmptySource);
    }
}
