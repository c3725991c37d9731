//! Token cursor, expression parsing and lowering shared by the language
//! frontends.

use crate::expr::Expr;
use crate::model::Language;

use super::lexer::{Tok, Token};
use super::{Diagnostic, ParseError};

/// A call found while lowering an expression, before it receives a label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCall {
    pub target: String,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone)]
pub enum PKind {
    Str { value: String, formatted: bool },
    Name(String),
    Num,
    Member { obj: Box<PExpr>, name: String, dotted: bool },
    Call { callee: Box<PExpr>, args: Vec<PExpr> },
    Binary { op: &'static str, lhs: Box<PExpr>, rhs: Box<PExpr> },
    /// Anything else; children are kept only to find calls inside.
    Other(Vec<PExpr>),
}

#[derive(Debug, Clone)]
pub struct PExpr {
    pub kind: PKind,
    pub start: usize,
    pub end: usize,
}

/// Expression-level failure. The statement parser turns it into an Other
/// block plus a warning.
#[derive(Debug, Clone)]
pub struct Unsupported {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

pub type PResult<T> = Result<T, Unsupported>;

pub struct Parser<'a> {
    pub toks: Vec<Token>,
    pub pos: usize,
    pub src: &'a str,
    pub lang: Language,
    pub warnings: Vec<Diagnostic>,
}

const C_TYPE_WORDS: &[&str] = &[
    "int", "char", "void", "long", "short", "unsigned", "signed", "float", "double", "size_t", "const", "struct",
    "enum", "union", "static", "extern", "volatile", "register", "bool", "_Bool", "FILE", "PyObject",
];

impl<'a> Parser<'a> {
    pub fn new(toks: Vec<Token>, src: &'a str, lang: Language) -> Self {
        Parser {
            toks,
            pos: 0,
            src,
            lang,
            warnings: Vec::new(),
        }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, off: usize) -> &Tok {
        let i = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn token(&self) -> &Token {
        &self.toks[self.pos]
    }

    pub fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn at_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    pub fn at_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == word)
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn skip_newlines(&mut self) {
        while matches!(self.peek(), Tok::Newline) {
            self.bump();
        }
    }

    pub fn fatal(&self, msg: impl Into<String>) -> ParseError {
        let t = self.token();
        ParseError {
            unit: String::new(),
            line: t.line,
            col: t.col,
            message: msg.into(),
            token: t.describe(),
        }
    }

    pub fn unsupported(&self, msg: impl Into<String>) -> Unsupported {
        let t = self.token();
        Unsupported {
            line: t.line,
            col: t.col,
            message: format!("{} (at `{}`)", msg.into(), t.describe()),
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<Token, ParseError> {
        if self.at_punct(p) {
            Ok(self.bump())
        } else {
            Err(self.fatal(format!("expected `{p}`")))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(w) => {
                self.bump();
                Ok(w)
            }
            _ => Err(self.fatal("expected identifier")),
        }
    }

    pub fn warn(&mut self, u: Unsupported) {
        self.warnings.push(Diagnostic {
            line: u.line,
            col: u.col,
            message: u.message,
        });
    }

    fn prev_end(&self) -> usize {
        self.toks[self.pos.saturating_sub(1)].end
    }

    pub fn text(&self, start: usize, end: usize) -> &'a str {
        self.src[start..end].trim()
    }

    // ---- expressions -------------------------------------------------

    pub fn expr(&mut self) -> PResult<PExpr> {
        let start = self.token().start;
        let e = self.binary(0)?;
        if self.lang == Language::Python && self.at_ident("if") {
            // a if c else b
            self.bump();
            let c = self.binary(0)?;
            if !self.at_ident("else") {
                return Err(self.unsupported("conditional expression without else"));
            }
            self.bump();
            let b = self.expr()?;
            return Ok(PExpr {
                kind: PKind::Other(vec![e, c, b]),
                start,
                end: self.prev_end(),
            });
        }
        if self.lang != Language::Python && self.at_punct("?") {
            self.bump();
            let a = self.expr()?;
            if !self.eat_punct(":") {
                return Err(self.unsupported("expected `:` in conditional expression"));
            }
            let b = self.expr()?;
            return Ok(PExpr {
                kind: PKind::Other(vec![e, a, b]),
                start,
                end: self.prev_end(),
            });
        }
        Ok(e)
    }

    fn infix_op(&self) -> Option<(&'static str, u8)> {
        let op: &'static str = match self.peek() {
            Tok::Punct(p) => p,
            Tok::Ident(w) if self.lang == Language::Python => match w.as_str() {
                "or" => "or",
                "and" => "and",
                "in" => "in",
                "is" => "is",
                "not" if matches!(self.peek_at(1), Tok::Ident(n) if n == "in") => "not in",
                _ => return None,
            },
            Tok::Ident(w) if self.lang == Language::JavaScript => match w.as_str() {
                "instanceof" => "instanceof",
                "in" => "in",
                _ => return None,
            },
            _ => return None,
        };
        let prec = match op {
            "||" | "or" => 1,
            "&&" | "and" => 2,
            "==" | "!=" | "===" | "!==" | "<" | ">" | "<=" | ">=" | "in" | "is" | "not in" | "instanceof" => 4,
            "|" => 5,
            "^" => 6,
            "&" => 7,
            "<<" | ">>" => 8,
            "+" | "-" => 9,
            "*" | "/" | "%" => 10,
            "//" if self.lang == Language::Python => 10,
            "**" => 12,
            _ => return None,
        };
        Some((op, prec))
    }

    fn binary(&mut self, min_prec: u8) -> PResult<PExpr> {
        let start = self.token().start;
        let mut lhs = self.unary()?;
        while let Some((op, prec)) = self.infix_op() {
            if prec < min_prec {
                break;
            }
            self.bump();
            if op == "not in" {
                self.bump();
            }
            if self.lang == Language::JavaScript {
                self.skip_newlines();
            }
            let next_min = if op == "**" { prec } else { prec + 1 };
            let rhs = self.binary(next_min)?;
            lhs = PExpr {
                kind: PKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                start,
                end: self.prev_end(),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<PExpr> {
        let start = self.token().start;
        let is_prefix = match self.peek() {
            Tok::Punct(p) => matches!(*p, "-" | "+" | "!" | "~" | "*" | "&" | "++" | "--" | "..."),
            Tok::Ident(w) => match self.lang {
                Language::Python => matches!(w.as_str(), "not" | "await"),
                Language::JavaScript => matches!(w.as_str(), "typeof" | "new" | "await" | "void" | "delete"),
                Language::C => w == "sizeof",
                Language::Shell => false,
            },
            _ => false,
        };
        if is_prefix {
            self.bump();
            if self.lang == Language::Python && matches!(self.toks[self.pos - 1].tok, Tok::Punct("*")) && self.at_punct("*")
            {
                self.bump();
            }
            let operand = self.unary()?;
            return Ok(PExpr {
                kind: PKind::Other(vec![operand]),
                start,
                end: self.prev_end(),
            });
        }
        if self.lang == Language::C && self.at_punct("(") && self.looks_like_cast() {
            while !self.at_punct(")") {
                self.bump();
            }
            self.bump();
            return self.unary();
        }
        self.postfix()
    }

    fn looks_like_cast(&self) -> bool {
        let mut i = self.pos + 1;
        let mut saw_type_word = false;
        let mut saw_star = false;
        let mut words = 0;
        loop {
            match &self.toks[i].tok {
                Tok::Ident(w) => {
                    saw_type_word |= C_TYPE_WORDS.contains(&w.as_str());
                    words += 1;
                }
                Tok::Punct("*") => saw_star = true,
                Tok::Punct(")") => break,
                _ => return false,
            }
            i += 1;
        }
        words > 0 && (saw_type_word || saw_star)
    }

    fn postfix(&mut self) -> PResult<PExpr> {
        let start = self.token().start;
        let mut e = self.primary()?;
        loop {
            if self.at_punct("(") {
                self.bump();
                let args = self.call_args()?;
                e = PExpr {
                    kind: PKind::Call {
                        callee: Box::new(e),
                        args,
                    },
                    start,
                    end: self.prev_end(),
                };
            } else if self.at_punct(".") || self.at_punct("->") {
                let dotted = self.at_punct(".");
                self.bump();
                let name = match self.peek().clone() {
                    Tok::Ident(n) => n,
                    _ => return Err(self.unsupported("expected member name")),
                };
                self.bump();
                e = PExpr {
                    kind: PKind::Member {
                        obj: Box::new(e),
                        name,
                        dotted,
                    },
                    start,
                    end: self.prev_end(),
                };
            } else if self.at_punct("[") {
                self.bump();
                let idx = self.seq_until("]")?;
                let mut kids = vec![e];
                kids.extend(idx);
                e = PExpr {
                    kind: PKind::Other(kids),
                    start,
                    end: self.prev_end(),
                };
            } else if self.lang != Language::Python && (self.at_punct("++") || self.at_punct("--")) {
                self.bump();
                e = PExpr {
                    kind: PKind::Other(vec![e]),
                    start,
                    end: self.prev_end(),
                };
            } else {
                break;
            }
        }
        Ok(e)
    }

    /// Comma separated expressions up to the closing punct, which is consumed.
    /// Slices (`a:b`) are tolerated inside subscripts.
    fn seq_until(&mut self, close: &str) -> PResult<Vec<PExpr>> {
        let mut items = Vec::new();
        loop {
            self.skip_newlines();
            if self.eat_punct(close) {
                return Ok(items);
            }
            if self.at_punct(":") {
                self.bump();
                continue;
            }
            items.push(self.expr()?);
            self.skip_newlines();
            if self.lang == Language::Python && self.at_ident("for") {
                // comprehension: keep scanning for calls until the bracket closes
                self.bump();
                while !self.at_punct(close) {
                    if self.at_eof() {
                        return Err(self.unsupported("unterminated comprehension"));
                    }
                    if let Ok(x) = self.expr() {
                        items.push(x);
                    } else {
                        self.bump();
                    }
                }
            }
            if !self.eat_punct(",") && !self.at_punct(close) && !self.at_punct(":") {
                return Err(self.unsupported(format!("expected `,` or `{close}`")));
            }
        }
    }

    fn call_args(&mut self) -> PResult<Vec<PExpr>> {
        let mut args = Vec::new();
        loop {
            self.skip_newlines();
            if self.eat_punct(")") {
                return Ok(args);
            }
            // keyword (`name=value`) or labelled (`name: value`) arguments keep
            // their position and drop the name
            if let Tok::Ident(_) = self.peek() {
                let named = match self.peek_at(1) {
                    Tok::Punct("=") => self.lang == Language::Python,
                    Tok::Punct(":") => self.lang == Language::JavaScript,
                    _ => false,
                };
                if named {
                    self.bump();
                    self.bump();
                }
            }
            args.push(self.expr()?);
            self.skip_newlines();
            if self.lang == Language::Python && self.at_ident("for") {
                return Err(self.unsupported("generator expression argument"));
            }
            if !self.eat_punct(",") && !self.at_punct(")") {
                return Err(self.unsupported("expected `,` or `)` in argument list"));
            }
        }
    }

    fn primary(&mut self) -> PResult<PExpr> {
        let t = self.token().clone();
        match t.tok {
            Tok::Str { value, formatted } => {
                self.bump();
                let mut value = value;
                let mut formatted = formatted;
                // adjacent literals concatenate in C and Python
                if self.lang != Language::JavaScript {
                    while let Tok::Str { value: v, formatted: f } = self.peek().clone() {
                        self.bump();
                        value.push_str(&v);
                        formatted |= f;
                    }
                }
                Ok(PExpr {
                    kind: PKind::Str { value, formatted },
                    start: t.start,
                    end: self.prev_end(),
                })
            }
            Tok::Num(_) => {
                self.bump();
                Ok(PExpr {
                    kind: PKind::Num,
                    start: t.start,
                    end: t.end,
                })
            }
            Tok::Ident(name) => {
                if self.lang == Language::Python && name == "lambda" {
                    return Err(self.unsupported("lambda expression"));
                }
                if self.lang == Language::JavaScript && name == "function" {
                    return Err(self.unsupported("function expression"));
                }
                self.bump();
                if self.lang == Language::JavaScript && self.at_punct("=>") {
                    return Err(self.unsupported("arrow function"));
                }
                Ok(PExpr {
                    kind: PKind::Name(name),
                    start: t.start,
                    end: t.end,
                })
            }
            Tok::Punct("(") => {
                self.bump();
                let items = self.seq_until(")")?;
                if self.lang == Language::JavaScript && self.at_punct("=>") {
                    return Err(self.unsupported("arrow function"));
                }
                let end = self.prev_end();
                if items.len() == 1 && !self.src[t.start..end].trim_end_matches(')').trim_end().ends_with(',') {
                    let mut inner = items.into_iter().next().expect("one item");
                    inner.start = t.start;
                    inner.end = end;
                    return Ok(inner);
                }
                Ok(PExpr {
                    kind: PKind::Other(items),
                    start: t.start,
                    end,
                })
            }
            Tok::Punct("[") => {
                self.bump();
                let items = self.seq_until("]")?;
                Ok(PExpr {
                    kind: PKind::Other(items),
                    start: t.start,
                    end: self.prev_end(),
                })
            }
            Tok::Punct("{") => {
                self.skip_balanced_braces();
                Ok(PExpr {
                    kind: PKind::Other(Vec::new()),
                    start: t.start,
                    end: self.prev_end(),
                })
            }
            _ => Err(self.unsupported("expected expression")),
        }
    }

    /// Skip a `{ ... }` group, cursor on the opening brace.
    pub fn skip_balanced_braces(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Punct("{") => depth += 1,
                Tok::Punct("}") => {
                    depth -= 1;
                    if depth == 0 {
                        self.bump();
                        return;
                    }
                }
                Tok::Eof => return,
                _ => {}
            }
            self.bump();
        }
    }

    // ---- lowering ----------------------------------------------------

    /// Dotted path for `a.b.c`, `None` for anything else.
    fn dotted_name(e: &PExpr) -> Option<String> {
        match &e.kind {
            PKind::Name(n) => Some(n.clone()),
            PKind::Member { obj, name, dotted: true } => Self::dotted_name(obj).map(|o| format!("{o}.{name}")),
            _ => None,
        }
    }

    /// Lower to an [`Expr`], appending every call inside to `calls`
    /// innermost first.
    pub fn lower(&self, e: &PExpr, calls: &mut Vec<RawCall>) -> Expr {
        let text = || Expr::Dynamic(self.text(e.start, e.end).to_string());
        match &e.kind {
            PKind::Str { value, formatted: false } => Expr::StringLiteral(value.clone()),
            PKind::Str { formatted: true, .. } | PKind::Num => text(),
            PKind::Name(n) => Expr::VarRef(n.clone()),
            PKind::Member { obj, .. } => match Self::dotted_name(e) {
                Some(path) => Expr::VarRef(path),
                None => {
                    self.lower(obj, calls);
                    text()
                }
            },
            PKind::Call { callee, args } => {
                let target = match Self::dotted_name(callee) {
                    Some(n) => n,
                    None => {
                        if let PKind::Member { obj, .. } = &callee.kind {
                            self.lower(obj, calls);
                        } else {
                            self.lower(callee, calls);
                        }
                        self.text(callee.start, callee.end).to_string()
                    }
                };
                let args: Vec<Expr> = args.iter().map(|a| self.lower(a, calls)).collect();
                calls.push(RawCall {
                    target: target.clone(),
                    args: args.clone(),
                });
                Expr::Call { callee: target, args }
            }
            PKind::Binary { op, lhs, rhs } => {
                let l = self.lower(lhs, calls);
                let r = self.lower(rhs, calls);
                let concat_ok = |x: &Expr| matches!(x, Expr::StringLiteral(_) | Expr::VarRef(_) | Expr::Concat(..));
                if *op == "+" && self.lang != Language::C && concat_ok(&l) && concat_ok(&r) {
                    Expr::concat(l, r)
                } else {
                    text()
                }
            }
            PKind::Other(kids) => {
                for k in kids {
                    self.lower(k, calls);
                }
                text()
            }
        }
    }
}
