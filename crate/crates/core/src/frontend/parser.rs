//! Text syntax for expressions and equation files.
//!
//! ```text
//! # comment
//! dim 3
//! radical
//! ddot x1 = (v2*x3 - v3*x2)/r^3
//! ```

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::symcore::{normalize, Rational, RawExpr, Ring, SymError, SymExpr, VarId};
use crate::vectorfield::{Mode, OdeSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownIdentifier(String),
    RadicalDisabled,
    MalformedExponent,
    UnexpectedToken(String),
    UnexpectedEnd,
    Directive(String),
    Symbolic(SymError),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            ParseErrorKind::RadicalDisabled => {
                f.write_str("`r` used but the radical is not enabled (add a `radical` line)")
            }
            ParseErrorKind::MalformedExponent => {
                f.write_str("malformed exponent (expected an integer such as 3, -2 or (-2))")
            }
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected `{t}`"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of expression"),
            ParseErrorKind::Directive(msg) => f.write_str(msg),
            ParseErrorKind::Symbolic(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(String),
    Ident(String),
    Op(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(s) | Tok::Ident(s) => f.write_str(s),
            Tok::Op(c) => write!(f, "{c}"),
        }
    }
}

// (token, 1-based column)
fn lex(text: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = col0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            out.push((Tok::Int(chars[start..i].iter().collect()), column));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), column));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), column));
            i += 1;
        } else if c == '\u{2212}' {
            out.push((Tok::Op('-'), column));
            i += 1;
        } else {
            return Err(ParseError {
                line,
                column,
                kind: ParseErrorKind::UnexpectedToken(c.to_string()),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_column: usize,
    ring: &'a Ring,
}

impl Parser<'_> {
    fn err(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column,
            kind,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or(self.end_column)
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.err(self.end_column, ParseErrorKind::UnexpectedEnd))?;
        self.pos += 1;
        Ok(t)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<RawExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = RawExpr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = RawExpr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<RawExpr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = RawExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = RawExpr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<RawExpr, ParseError> {
        if self.eat('-') {
            return Ok(RawExpr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<RawExpr, ParseError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let column = self.column();
        let paren = self.eat('(');
        let negative = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        let k = match self.next() {
            Ok((Tok::Int(s), _)) => s
                .parse::<i32>()
                .map_err(|_| self.err(column, ParseErrorKind::MalformedExponent))?,
            _ => return Err(self.err(column, ParseErrorKind::MalformedExponent)),
        };
        if paren && !self.eat(')') {
            return Err(self.err(column, ParseErrorKind::MalformedExponent));
        }
        if self.peek() == Some(&Tok::Op('^')) {
            // a^b^c is ambiguous; require parentheses
            return Err(self.err(self.column(), ParseErrorKind::MalformedExponent));
        }
        Ok(RawExpr::Pow(Box::new(base), if negative { -k } else { k }))
    }

    fn atom(&mut self) -> Result<RawExpr, ParseError> {
        let (tok, column) = self.next()?;
        match tok {
            Tok::Int(s) => {
                let value: num_bigint::BigInt = s.parse().expect("digits");
                Ok(RawExpr::Num(Rational::from_integer(value)))
            }
            Tok::Ident(name) => match self.ring.lookup(&name) {
                Some(v) => Ok(RawExpr::Var(v)),
                None if name == "r" => Err(self.err(column, ParseErrorKind::RadicalDisabled)),
                None => Err(self.err(column, ParseErrorKind::UnknownIdentifier(name))),
            },
            Tok::Op('(') => {
                let inner = self.expr()?;
                if !self.eat(')') {
                    let column = self.column();
                    return Err(match self.peek() {
                        Some(t) => self.err(column, ParseErrorKind::UnexpectedToken(t.to_string())),
                        None => self.err(column, ParseErrorKind::UnexpectedEnd),
                    });
                }
                Ok(inner)
            }
            other => Err(self.err(column, ParseErrorKind::UnexpectedToken(other.to_string()))),
        }
    }
}

fn parse_at(text: &str, ring: &Arc<Ring>, line: usize, col0: usize) -> Result<SymExpr, ParseError> {
    let toks = lex(text, line, col0)?;
    let mut p = Parser {
        toks,
        pos: 0,
        line,
        end_column: col0 + text.chars().count(),
        ring,
    };
    if p.toks.is_empty() {
        return Err(p.err(col0, ParseErrorKind::UnexpectedEnd));
    }
    let raw = p.expr()?;
    if let Some(t) = p.peek() {
        let column = p.column();
        return Err(p.err(column, ParseErrorKind::UnexpectedToken(t.to_string())));
    }
    normalize(&raw, ring).map_err(|e| ParseError {
        line,
        column: col0,
        kind: ParseErrorKind::Symbolic(e),
    })
}

/// Parses a single expression over `ring`.
pub fn parse_expr(text: &str, ring: &Arc<Ring>) -> Result<SymExpr, ParseError> {
    parse_at(text, ring, 1, 1)
}

/// Parses an equation file into a system.
///
/// Directives (`dim N`, `radical`, `mode ode|quantum1d`) precede the
/// equations; every dependent variable gets exactly one `ddot` line.
pub fn parse_system(source: &str) -> Result<OdeSystem, ParseError> {
    let mut dim: Option<usize> = None;
    let mut radical = false;
    let mut mode = Mode::Ode;
    let mut ring: Option<Arc<Ring>> = None;
    let mut rhs: Vec<Option<SymExpr>> = Vec::new();
    let mut last_line = 0;

    let directive = |line: usize, column: usize, msg: String| ParseError {
        line,
        column,
        kind: ParseErrorKind::Directive(msg),
    };

    for (idx, raw_line) in source.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw_line.split('#').next().unwrap_or("");
        let trimmed = content.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let indent = content.chars().count() - trimmed.chars().count();
        let mut words = trimmed.split_whitespace();
        let head = words.next().unwrap();
        match head {
            "dim" | "radical" | "mode" if ring.is_some() => {
                return Err(directive(
                    line,
                    indent + 1,
                    format!("`{head}` must come before the first equation"),
                ));
            }
            "dim" => {
                let value = words.next().and_then(|w| w.parse::<usize>().ok());
                match (value, words.next()) {
                    (Some(n), None) if n >= 1 => dim = Some(n),
                    _ => {
                        return Err(directive(
                            line,
                            indent + 1,
                            "`dim` takes one positive integer".into(),
                        ))
                    }
                }
            }
            "radical" => {
                if words.next().is_some() {
                    return Err(directive(
                        line,
                        indent + 1,
                        "`radical` takes no argument".into(),
                    ));
                }
                radical = true;
            }
            "mode" => {
                let value = words.next().unwrap_or("");
                mode = value
                    .parse()
                    .map_err(|msg: String| directive(line, indent + 1, msg))?;
            }
            "ddot" => {
                let ring = match &ring {
                    Some(r) => r.clone(),
                    None => {
                        let r = match mode {
                            Mode::Ode => {
                                let n = dim.ok_or_else(|| {
                                    directive(
                                        line,
                                        indent + 1,
                                        "`dim N` is required before the first equation".into(),
                                    )
                                })?;
                                if radical && n < 2 {
                                    return Err(directive(
                                        line,
                                        indent + 1,
                                        "the radical needs at least two coordinates".into(),
                                    ));
                                }
                                Ring::ode(n, radical)
                            }
                            Mode::Quantum1d => {
                                if radical {
                                    return Err(directive(
                                        line,
                                        indent + 1,
                                        "the radical is not available in quantum1d mode".into(),
                                    ));
                                }
                                if dim.is_some_and(|n| n != 1) {
                                    return Err(directive(
                                        line,
                                        indent + 1,
                                        "quantum1d mode has exactly one dependent variable".into(),
                                    ));
                                }
                                Ring::quantum1d()
                            }
                        };
                        rhs = vec![None; r.n()];
                        ring = Some(r.clone());
                        r
                    }
                };
                let Some(eq) = content.find('=') else {
                    return Err(directive(
                        line,
                        indent + 1,
                        "expected `ddot <var> = <expr>`".into(),
                    ));
                };
                let lhs = content[..eq].trim();
                let name = lhs.strip_prefix("ddot").unwrap().trim();
                let a = match ring.lookup(name) {
                    Some(VarId::Coord(a)) => a,
                    _ => {
                        return Err(directive(
                            line,
                            indent + 1,
                            format!("`{name}` is not a dependent variable"),
                        ))
                    }
                };
                if rhs[a - 1].is_some() {
                    return Err(directive(
                        line,
                        indent + 1,
                        format!("second equation for `{name}`"),
                    ));
                }
                let col0 = content[..eq + 1].chars().count() + 1;
                rhs[a - 1] = Some(parse_at(&content[eq + 1..], &ring, line, col0)?);
            }
            other => {
                return Err(directive(
                    line,
                    indent + 1,
                    format!("unknown directive `{other}`"),
                ))
            }
        }
    }
    let ring = ring.ok_or_else(|| directive(last_line.max(1), 1, "no equations".into()))?;
    let mut exprs = Vec::new();
    for (i, e) in rhs.into_iter().enumerate() {
        match e {
            Some(e) => exprs.push(e),
            None => {
                return Err(directive(
                    last_line,
                    1,
                    format!("missing equation for `{}`", ring.name(VarId::Coord(i + 1))),
                ))
            }
        }
    }
    Ok(OdeSystem::new(ring, mode, exprs).expect("arity checked above"))
}
