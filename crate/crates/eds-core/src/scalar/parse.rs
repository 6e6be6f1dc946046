use std::collections::BTreeMap;
use std::fmt;

use super::atom::FnRef;
use super::expr::Expr;
use super::tree::SyntaxTree;

/// Known user function symbols, letting source like `F'(z)` and `g(x, z)`
/// resolve to shared [`FnRef`]s (so derivative naming stays consistent).
#[derive(Clone, Default, Debug)]
pub struct SymbolTable {
    fns: BTreeMap<String, FnRef>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, f: FnRef) {
        self.fns.insert(f.name.clone(), f);
    }

    pub fn function(&self, name: &str) -> Option<FnRef> {
        self.fns.get(name).cloned()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at {}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let (line, col) = (self.line, self.col);
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b'0'..=b'9' | b'.' => {
                    let mut s = String::new();
                    let mut seen_dot = false;
                    while self.pos < self.src.len() {
                        let d = self.src[self.pos];
                        if d.is_ascii_digit() {
                            s.push(self.bump() as char);
                        } else if d == b'.' && !seen_dot {
                            seen_dot = true;
                            s.push(self.bump() as char);
                        } else {
                            break;
                        }
                    }
                    if s == "." {
                        return Err(ParseError { line, col, msg: "stray `.`".into() });
                    }
                    out.push((Tok::Num(s), line, col));
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    let mut s = String::new();
                    while self.pos < self.src.len() {
                        let d = self.src[self.pos];
                        if d.is_ascii_alphanumeric() || d == b'_' || d == b'\'' {
                            s.push(self.bump() as char);
                        } else {
                            break;
                        }
                    }
                    out.push((Tok::Ident(s), line, col));
                }
                b'+' => {
                    self.bump();
                    out.push((Tok::Plus, line, col));
                }
                b'-' => {
                    self.bump();
                    out.push((Tok::Minus, line, col));
                }
                b'*' => {
                    self.bump();
                    out.push((Tok::Star, line, col));
                }
                b'/' => {
                    self.bump();
                    out.push((Tok::Slash, line, col));
                }
                b'^' => {
                    self.bump();
                    out.push((Tok::Caret, line, col));
                }
                b'(' => {
                    self.bump();
                    out.push((Tok::LParen, line, col));
                }
                b')' => {
                    self.bump();
                    out.push((Tok::RParen, line, col));
                }
                b',' => {
                    self.bump();
                    out.push((Tok::Comma, line, col));
                }
                _ => {
                    return Err(ParseError {
                        line,
                        col,
                        msg: format!("unexpected character `{}`", c as char),
                    })
                }
            }
        }
        Ok(out)
    }
}

struct Parser<'t> {
    toks: &'t [Spanned],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|&(_, l, c)| (l, c))
            .unwrap_or((1, 1))
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError { line, col, msg: msg.into() }
    }

    fn eat(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.peek() == Some(t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {t:?}")))
        }
    }

    fn expr(&mut self) -> Result<SyntaxTree, ParseError> {
        let mut acc = vec![self.term()?];
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc.push(self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc.push(SyntaxTree::Neg(Box::new(self.term()?)));
                }
                _ => break,
            }
        }
        Ok(if acc.len() == 1 { acc.pop().unwrap() } else { SyntaxTree::Add(acc) })
    }

    fn term(&mut self) -> Result<SyntaxTree, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = SyntaxTree::Mul(vec![acc, rhs]);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = SyntaxTree::Div(Box::new(acc), Box::new(rhs));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<SyntaxTree, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(SyntaxTree::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let (line, col) = self.here();
            let exp = self.exponent()?;
            return exp
                .map(|e| SyntaxTree::Pow(Box::new(base), e))
                .ok_or(ParseError { line, col, msg: "exponent must be rational".into() });
        }
        Ok(base)
    }

    /// Exponents are rational literals: `2`, `-2`, `(1/2)`, `(-3/2)`, `0.5`.
    fn exponent(&mut self) -> Result<Option<String>, ParseError> {
        let mut neg = false;
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            neg = true;
        }
        let s = match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                self.pos += 1;
                decimal_to_rat_str(&s).ok_or_else(|| self.err("bad numeric literal"))?
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.exponent()?.ok_or_else(|| self.err("exponent must be rational"))?;
                let inner = if self.peek() == Some(&Tok::Slash) {
                    self.pos += 1;
                    let d = match self.peek().cloned() {
                        Some(Tok::Num(d)) => {
                            self.pos += 1;
                            d
                        }
                        _ => return Err(self.err("expected denominator")),
                    };
                    let d = decimal_to_rat_str(&d).ok_or_else(|| self.err("bad numeric literal"))?;
                    format!("{inner}*1/{d}")
                } else {
                    inner
                };
                self.eat(&Tok::RParen)?;
                // normalize a possible a*1/b into a plain p/q string
                normalize_rat_str(&inner).ok_or_else(|| self.err("exponent must be rational"))?
            }
            _ => return Ok(None),
        };
        let s = normalize_rat_str(&s).ok_or_else(|| self.err("exponent must be rational"))?;
        Ok(Some(if neg { format!("-{s}") } else { s }))
    }

    fn primary(&mut self) -> Result<SyntaxTree, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                self.pos += 1;
                let r = decimal_to_rat_str(&s).ok_or_else(|| self.err("bad numeric literal"))?;
                Ok(SyntaxTree::Num(r))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "pi" {
                    return Ok(SyntaxTree::Pi);
                }
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.eat(&Tok::RParen)?;
                    Ok(SyntaxTree::App(name, args))
                } else {
                    Ok(SyntaxTree::Sym(name))
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.eat(&Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.err("expected expression")),
        }
    }
}

/// `"0.5"` -> `"1/2"`, `"12"` -> `"12"`. Exact decimal conversion.
fn decimal_to_rat_str(s: &str) -> Option<String> {
    if let Some(dot) = s.find('.') {
        let int = &s[..dot];
        let frac = &s[dot + 1..];
        if frac.is_empty() {
            return Some(int.to_string());
        }
        let numer: num_bigint::BigInt = format!("{int}{frac}").parse().ok()?;
        let denom = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
        let r = super::expr::Rat::new(numer, denom);
        Some(r.to_string())
    } else {
        Some(s.to_string())
    }
}

fn normalize_rat_str(s: &str) -> Option<String> {
    // accepts "p", "p/q", "p*1/q" combinations produced above
    let cleaned = s.replace("*1/", "/");
    let r: super::expr::Rat = cleaned.parse().ok().or_else(|| {
        let mut it = cleaned.splitn(2, '/');
        let p: super::expr::Rat = it.next()?.parse().ok()?;
        let q: super::expr::Rat = it.next()?.parse().ok()?;
        Some(p / q)
    })?;
    Some(r.to_string())
}

/// Parse source text into a canonical expression.
pub fn parse_expr(src: &str, table: &SymbolTable) -> Result<Expr, ParseError> {
    let toks = Lexer::new(src).tokens()?;
    let mut p = Parser { toks: &toks, pos: 0 };
    let tree = p.expr()?;
    if p.pos != toks.len() {
        return Err(p.err("trailing input"));
    }
    let (line, col) = (1, 1);
    tree.to_expr(table).map_err(|msg| ParseError { line, col, msg })
}
