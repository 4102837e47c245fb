//! Text syntax for source programs.
//!
//! One `def` per file, `--` line comments. Projection sugar `prj_i t` is
//! elaborated with the scrutinee's type, so parsing a projection of an
//! ill-typed term reports an error here.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::syntax::{OpRef, SrcContext, SrcDef, SrcTerm, SrcType};
use crate::typecheck::typecheck_source_shadowing;

#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl core::fmt::Display for ParseError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "parse error at {}:{}: expected {}, found {}",
            self.line,
            self.col,
            self.expected.join(" | "),
            self.found
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Nat(usize),
    Float(f64),
    InjN(usize),
    PrjN(usize),
    KwDef,
    KwLet,
    KwIn,
    KwCase,
    KwOf,
    KwMatch,
    KwWith,
    KwIterate,
    KwFrom,
    KwOp,
    KwReal,
    KwUnit,
    KwVoid,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Eq,
    FatArrow,
    Bar,
    Plus,
    Star,
    Minus,
    Eof,
}

impl core::fmt::Display for Tok {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Nat(n) => write!(f, "number `{n}`"),
            Tok::Float(x) => write!(f, "number `{x}`"),
            Tok::InjN(i) => write!(f, "`in{i}`"),
            Tok::PrjN(i) => write!(f, "`prj{i}`"),
            Tok::KwDef => write!(f, "`def`"),
            Tok::KwLet => write!(f, "`let`"),
            Tok::KwIn => write!(f, "`in`"),
            Tok::KwCase => write!(f, "`case`"),
            Tok::KwOf => write!(f, "`of`"),
            Tok::KwMatch => write!(f, "`match`"),
            Tok::KwWith => write!(f, "`with`"),
            Tok::KwIterate => write!(f, "`iterate`"),
            Tok::KwFrom => write!(f, "`from`"),
            Tok::KwOp => write!(f, "`op`"),
            Tok::KwReal => write!(f, "`real`"),
            Tok::KwUnit => write!(f, "`unit`"),
            Tok::KwVoid => write!(f, "`void`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::FatArrow => write!(f, "`=>`"),
            Tok::Bar => write!(f, "`|`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

pub(crate) fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

pub(crate) fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'\''
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = *self.src.get(self.pos)?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut toks = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c == b'-' && self.peek2() == Some(b'-') {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                } else if c.is_ascii_whitespace() {
                    self.bump();
                } else {
                    break;
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                toks.push((Tok::Eof, line, col));
                return Ok(toks);
            };
            let tok = if is_ident_start(c) {
                let start = self.pos;
                while self.peek().map_or(false, is_ident_char) {
                    self.bump();
                }
                let word = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
                keyword_or_ident(word)
            } else if c.is_ascii_digit() {
                self.number(false, line, col)?
            } else {
                self.bump();
                match c {
                    b'(' => Tok::LParen,
                    b')' => Tok::RParen,
                    b'{' => Tok::LBrace,
                    b'}' => Tok::RBrace,
                    b'[' => Tok::LBracket,
                    b']' => Tok::RBracket,
                    b',' => Tok::Comma,
                    b':' => Tok::Colon,
                    b'|' => Tok::Bar,
                    b'+' => Tok::Plus,
                    b'*' => Tok::Star,
                    b'-' => Tok::Minus,
                    b'=' => {
                        if self.peek() == Some(b'>') {
                            self.bump();
                            Tok::FatArrow
                        } else {
                            Tok::Eq
                        }
                    }
                    other => {
                        return Err(ParseError {
                            line,
                            col,
                            expected: vec!["token".into()],
                            found: format!("`{}`", other as char),
                        })
                    }
                }
            };
            toks.push((tok, line, col));
        }
    }

    fn number(&mut self, neg: bool, line: usize, col: usize) -> Result<Tok, ParseError> {
        let start = self.pos;
        let mut is_float = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                self.bump();
            } else if c == b'.' && self.peek2().map_or(false, |d| d.is_ascii_digit()) {
                is_float = true;
                self.bump();
            } else if (c == b'e' || c == b'E')
                && self
                    .peek2()
                    .map_or(false, |d| d.is_ascii_digit() || d == b'-' || d == b'+')
            {
                is_float = true;
                self.bump();
                if matches!(self.peek(), Some(b'-') | Some(b'+')) {
                    self.bump();
                }
            } else {
                break;
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if is_float || neg {
            let v: f64 = text.parse().map_err(|_| ParseError {
                line,
                col,
                expected: vec!["number".into()],
                found: format!("`{text}`"),
            })?;
            Ok(Tok::Float(if neg { -v } else { v }))
        } else {
            let v: usize = text.parse().map_err(|_| ParseError {
                line,
                col,
                expected: vec!["number".into()],
                found: format!("`{text}`"),
            })?;
            Ok(Tok::Nat(v))
        }
    }
}

fn keyword_or_ident(word: &str) -> Tok {
    match word {
        "def" => Tok::KwDef,
        "let" => Tok::KwLet,
        "in" => Tok::KwIn,
        "case" => Tok::KwCase,
        "of" => Tok::KwOf,
        "match" => Tok::KwMatch,
        "with" => Tok::KwWith,
        "iterate" => Tok::KwIterate,
        "from" => Tok::KwFrom,
        "op" => Tok::KwOp,
        "real" => Tok::KwReal,
        "unit" => Tok::KwUnit,
        "void" => Tok::KwVoid,
        "inl" => Tok::InjN(1),
        "inr" => Tok::InjN(2),
        _ => {
            if let Some(rest) = word.strip_prefix("in") {
                if !rest.is_empty() && rest.bytes().all(|c| c.is_ascii_digit()) {
                    return Tok::InjN(rest.parse().unwrap());
                }
            }
            if let Some(rest) = word.strip_prefix("prj") {
                if !rest.is_empty() && rest.bytes().all(|c| c.is_ascii_digit()) {
                    return Tok::PrjN(rest.parse().unwrap());
                }
            }
            Tok::Ident(word.to_string())
        }
    }
}

/// Surface terms: the core grammar plus projection sugar.
#[derive(Clone, Debug)]
enum PTerm {
    Var(String),
    Op(OpRef, Vec<PTerm>),
    Let(String, Box<PTerm>, Box<PTerm>),
    Inj(usize, Box<PTerm>, SrcType),
    SumMatch(Box<PTerm>, Vec<(String, PTerm)>),
    Tuple(Vec<PTerm>),
    ProdMatch(Box<PTerm>, Vec<String>, Box<PTerm>),
    IterateFrom(String, Box<PTerm>, Box<PTerm>),
    Prj(usize, Box<PTerm>),
}

struct Parser {
    toks: Vec<Spanned>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> (usize, usize) {
        let (_, l, c) = self.toks[self.at];
        (l, c)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let (line, col) = self.pos();
        Err(ParseError {
            line,
            col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: format!("{}", self.peek()),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(&[what])
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        if let Tok::Ident(s) = self.peek().clone() {
            self.bump();
            Ok(s)
        } else {
            self.fail(&["identifier"])
        }
    }

    fn nat(&mut self) -> Result<usize, ParseError> {
        if let Tok::Nat(n) = *self.peek() {
            self.bump();
            Ok(n)
        } else {
            self.fail(&["number"])
        }
    }

    // type := prodty ("+" prodty)*
    fn ty(&mut self) -> Result<SrcType, ParseError> {
        let first = self.prod_ty()?;
        let mut parts = vec![first];
        while *self.peek() == Tok::Plus {
            self.bump();
            parts.push(self.prod_ty()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { SrcType::Sum(parts) })
    }

    fn prod_ty(&mut self) -> Result<SrcType, ParseError> {
        let first = self.atom_ty()?;
        let mut parts = vec![first];
        while *self.peek() == Tok::Star {
            self.bump();
            parts.push(self.atom_ty()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { SrcType::Prod(parts) })
    }

    fn atom_ty(&mut self) -> Result<SrcType, ParseError> {
        match self.peek().clone() {
            Tok::KwReal => {
                self.bump();
                let n = self.nat()?;
                if n == 0 {
                    return self.fail(&["positive array dimension"]);
                }
                Ok(SrcType::Real(n))
            }
            Tok::KwUnit => {
                self.bump();
                Ok(SrcType::Unit)
            }
            Tok::KwVoid => {
                self.bump();
                Ok(SrcType::Void)
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => self.fail(&["`real`", "`unit`", "`void`", "`(`"]),
        }
    }

    fn opref(&mut self) -> Result<OpRef, ParseError> {
        let base = self.ident()?;
        let mut params = Vec::new();
        if *self.peek() == Tok::LBracket {
            self.bump();
            loop {
                let neg = if *self.peek() == Tok::Minus {
                    self.bump();
                    true
                } else {
                    false
                };
                let v = match self.bump() {
                    Tok::Float(x) => x,
                    Tok::Nat(n) => n as f64,
                    _ => return self.fail(&["number"]),
                };
                params.push(if neg { -v } else { v });
                match self.bump() {
                    Tok::Comma => continue,
                    Tok::RBracket => break,
                    _ => return self.fail(&["`,`", "`]`"]),
                }
            }
        }
        Ok(OpRef { base, params })
    }

    // term := let / case / match / iterate / injection / atom
    fn term(&mut self) -> Result<PTerm, ParseError> {
        match self.peek().clone() {
            Tok::KwLet => {
                self.bump();
                let x = self.ident()?;
                self.expect(Tok::Eq, "`=`")?;
                let bound = self.term()?;
                self.expect(Tok::KwIn, "`in`")?;
                let body = self.term()?;
                Ok(PTerm::Let(x, Box::new(bound), Box::new(body)))
            }
            Tok::KwCase => {
                self.bump();
                let scrut = self.term()?;
                self.expect(Tok::KwOf, "`of`")?;
                let mut branches = Vec::new();
                loop {
                    let i = match self.bump() {
                        Tok::InjN(i) => i,
                        _ => return self.fail(&["`in1`, `in2`, ..."]),
                    };
                    if i != branches.len() + 1 {
                        return self.fail(&["branches in order in1, in2, ..."]);
                    }
                    let x = self.ident()?;
                    self.expect(Tok::FatArrow, "`=>`")?;
                    let body = self.term()?;
                    branches.push((x, body));
                    if *self.peek() == Tok::Bar {
                        self.bump();
                    } else {
                        break;
                    }
                }
                Ok(PTerm::SumMatch(Box::new(scrut), branches))
            }
            Tok::KwMatch => {
                self.bump();
                let scrut = self.term()?;
                self.expect(Tok::KwWith, "`with`")?;
                self.expect(Tok::LParen, "`(`")?;
                let mut names = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        names.push(self.ident()?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::FatArrow, "`=>`")?;
                let body = self.term()?;
                Ok(PTerm::ProdMatch(Box::new(scrut), names, Box::new(body)))
            }
            Tok::KwIterate => {
                self.bump();
                let x = self.ident()?;
                self.expect(Tok::KwFrom, "`from`")?;
                let from = self.term()?;
                self.expect(Tok::LBrace, "`{`")?;
                let body = self.term()?;
                self.expect(Tok::RBrace, "`}`")?;
                Ok(PTerm::IterateFrom(x, Box::new(from), Box::new(body)))
            }
            Tok::InjN(i) => {
                self.bump();
                let payload = self.atom()?;
                self.expect(Tok::Colon, "`:` (injections need a sum annotation)")?;
                let ann = self.ty()?;
                Ok(PTerm::Inj(i, Box::new(payload), ann))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<PTerm, ParseError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.bump();
                Ok(PTerm::Var(x))
            }
            Tok::KwOp => {
                self.bump();
                let op = self.opref()?;
                self.expect(Tok::LParen, "`(`")?;
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.term()?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(PTerm::Op(op, args))
            }
            Tok::PrjN(i) => {
                self.bump();
                if i == 0 {
                    return self.fail(&["positive projection index"]);
                }
                let t = self.atom()?;
                Ok(PTerm::Prj(i, Box::new(t)))
            }
            Tok::LParen => {
                self.bump();
                if *self.peek() == Tok::RParen {
                    self.bump();
                    return Ok(PTerm::Tuple(vec![]));
                }
                let first = self.term()?;
                if *self.peek() == Tok::Comma {
                    let mut parts = vec![first];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        parts.push(self.term()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(PTerm::Tuple(parts))
                } else {
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(first)
                }
            }
            _ => self.fail(&["term"]),
        }
    }

    fn def(&mut self) -> Result<(String, SrcContext, SrcType, PTerm), ParseError> {
        self.expect(Tok::KwDef, "`def`")?;
        let name = self.ident()?;
        self.expect(Tok::LParen, "`(`")?;
        let mut ctx = SrcContext::new();
        if *self.peek() != Tok::RParen {
            loop {
                let x = self.ident()?;
                self.expect(Tok::Colon, "`:`")?;
                let t = self.ty()?;
                if ctx.0.iter().any(|(n, _)| n == &x) {
                    return self.fail(&["distinct parameter names"]);
                }
                ctx.0.push((x, t));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Colon, "`:`")?;
        let ret = self.ty()?;
        self.expect(Tok::Eq, "`=`")?;
        let body = self.term()?;
        if *self.peek() != Tok::Eof {
            return self.fail(&["end of input"]);
        }
        Ok((name, ctx, ret, body))
    }
}

/// Lower the surface term, expanding projection sugar with the scrutinee's
/// type. The context is threaded so that binder types are available.
fn lower(ctx: &SrcContext, t: &PTerm) -> Result<SrcTerm, ParseError> {
    match t {
        PTerm::Var(x) => Ok(SrcTerm::Var(x.clone())),
        PTerm::Op(op, args) => {
            let args = args.iter().map(|a| lower(ctx, a)).collect::<Result<Vec<_>, _>>()?;
            Ok(SrcTerm::Op(op.clone(), args))
        }
        PTerm::Let(x, bound, body) => {
            let bound = lower(ctx, bound)?;
            let tb = type_of(ctx, &bound)?;
            let mut ctx2 = ctx.clone();
            ctx2.0.push((x.clone(), tb));
            Ok(SrcTerm::Let(x.clone(), Box::new(bound), Box::new(lower(&ctx2, body)?)))
        }
        PTerm::Inj(i, payload, ann) => {
            Ok(SrcTerm::Inj(*i, Box::new(lower(ctx, payload)?), ann.clone()))
        }
        PTerm::SumMatch(scrut, branches) => {
            let scrut = lower(ctx, scrut)?;
            let ts = type_of(ctx, &scrut)?;
            let SrcType::Sum(summands) = &ts else {
                return Err(elab_error(format!("case scrutinee has non-sum type {ts:?}")));
            };
            if summands.len() != branches.len() {
                return Err(elab_error(format!(
                    "{} branches for a {}-ary sum",
                    branches.len(),
                    summands.len()
                )));
            }
            let mut out = Vec::new();
            for ((x, b), s) in branches.iter().zip(summands) {
                let mut ctx2 = ctx.clone();
                ctx2.0.push((x.clone(), s.clone()));
                out.push((x.clone(), lower(&ctx2, b)?));
            }
            Ok(SrcTerm::SumMatch(Box::new(scrut), out))
        }
        PTerm::Tuple(ts) => {
            let ts = ts.iter().map(|t| lower(ctx, t)).collect::<Result<Vec<_>, _>>()?;
            Ok(SrcTerm::Tuple(ts))
        }
        PTerm::ProdMatch(scrut, names, body) => {
            let scrut = lower(ctx, scrut)?;
            let ts = type_of(ctx, &scrut)?;
            let comps: Vec<SrcType> = match &ts {
                SrcType::Unit => vec![],
                SrcType::Prod(cs) => cs.clone(),
                other => return Err(elab_error(format!("match scrutinee has non-product type {other:?}"))),
            };
            if comps.len() != names.len() {
                return Err(elab_error(format!(
                    "{} binders for a {}-ary product",
                    names.len(),
                    comps.len()
                )));
            }
            let mut ctx2 = ctx.clone();
            for (n, c) in names.iter().zip(comps) {
                ctx2.0.push((n.clone(), c));
            }
            Ok(SrcTerm::ProdMatch(Box::new(scrut), names.clone(), Box::new(lower(&ctx2, body)?)))
        }
        PTerm::IterateFrom(x, from, body) => {
            let from = lower(ctx, from)?;
            let tf = type_of(ctx, &from)?;
            let mut ctx2 = ctx.clone();
            ctx2.0.push((x.clone(), tf));
            let body = lower(&ctx2, body)?;
            Ok(SrcTerm::Let(
                x.clone(),
                Box::new(from),
                Box::new(SrcTerm::Iterate(x.clone(), Box::new(body))),
            ))
        }
        PTerm::Prj(i, scrut) => {
            let scrut = lower(ctx, scrut)?;
            let ts = type_of(ctx, &scrut)?;
            let arity = match &ts {
                SrcType::Prod(cs) => cs.len(),
                other => {
                    return Err(elab_error(format!("prj{i} applied to non-product type {other:?}")))
                }
            };
            if *i > arity {
                return Err(elab_error(format!("prj{i} applied to a {arity}-ary product")));
            }
            Ok(crate::syntax::prj(*i, arity, scrut))
        }
    }
}

fn type_of(ctx: &SrcContext, t: &SrcTerm) -> Result<SrcType, ParseError> {
    typecheck_source_shadowing(ctx, t).map_err(|e| elab_error(format!("{e}")))
}

fn elab_error(detail: String) -> ParseError {
    ParseError { line: 0, col: 0, expected: vec![detail], found: "<elaboration>".to_string() }
}

/// Parse one top-level `def` from UTF-8 text.
pub fn parse_source(text: &str) -> Result<SrcDef, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, at: 0 };
    let (name, ctx, ret, body) = p.def()?;
    let body = lower(&ctx, &body)?;
    Ok(SrcDef { name, ctx, ret, body })
}
