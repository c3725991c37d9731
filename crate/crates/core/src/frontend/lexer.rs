use crate::model::Language;

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// `formatted` marks interpolating strings (f-strings, template literals
    /// with `${}`), whose value cannot be known statically.
    Str { value: String, formatted: bool },
    Num(String),
    Punct(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn describe(&self) -> String {
        match &self.tok {
            Tok::Ident(s) => s.clone(),
            Tok::Str { value, .. } => format!("{value:?}"),
            Tok::Num(n) => n.clone(),
            Tok::Punct(p) => p.to_string(),
            Tok::Newline => "newline".into(),
            Tok::Indent => "indent".into(),
            Tok::Dedent => "dedent".into(),
            Tok::Eof => "end of file".into(),
        }
    }
}

const PUNCTS: &[&str] = &[
    "...", "===", "!==", "**=", "<<=", ">>=", "->", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "**", "//", "=>", "::", "(", ")", "{", "}", "[", "]", ";",
    ",", ".", ":", "=", "+", "-", "*", "/", "%", "<", ">", "!", "&", "|", "^", "~", "?", "@",
];

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    line_start: usize,
    lang: Language,
    out: Vec<Token>,
    /// Brackets that suppress significant newlines: all three kinds in
    /// Python, `(` and `[` in JavaScript.
    depth: usize,
    /// Open brackets with their line and column.
    open: Vec<(&'static str, usize, usize)>,
    indents: Vec<usize>,
    at_line_start: bool,
}

pub fn tokenize(src: &str, lang: Language) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        line: 1,
        line_start: 0,
        lang,
        out: Vec::new(),
        depth: 0,
        open: Vec::new(),
        indents: vec![0],
        at_line_start: true,
    };
    lx.run()?;
    Ok(lx.out)
}

impl<'a> Lexer<'a> {
    fn col(&self, pos: usize) -> usize {
        let start = if pos >= self.line_start {
            self.line_start
        } else {
            self.src[..pos].rfind('\n').map_or(0, |i| i + 1)
        };
        self.src[start..pos].chars().count() + 1
    }

    /// Errors may point back at a token that began on an earlier line.
    fn error(&self, pos: usize, msg: impl Into<String>, token: impl Into<String>) -> ParseError {
        ParseError {
            unit: String::new(),
            line: self.src[..pos].matches('\n').count() + 1,
            col: self.col(pos),
            message: msg.into(),
            token: token.into(),
        }
    }

    fn push(&mut self, tok: Tok, start: usize, end: usize) {
        let col = self.col(start);
        self.out.push(Token {
            tok,
            line: self.line,
            col,
            start,
            end,
        });
    }

    fn peek(&self, off: usize) -> u8 {
        *self.bytes.get(self.pos + off).unwrap_or(&0)
    }

    fn newline(&mut self) {
        self.line += 1;
        self.pos += 1;
        self.line_start = self.pos;
    }

    fn significant_newlines(&self) -> bool {
        matches!(self.lang, Language::Python | Language::JavaScript) && self.depth == 0
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while self.pos < self.bytes.len() {
            if self.lang == Language::Python
                && self.at_line_start
                && self.depth == 0
                && self.python_indentation()?
            {
                continue;
            }
            self.at_line_start = false;
            let c = self.peek(0);
            match c {
                b'\n' => {
                    if self.significant_newlines() && !matches!(self.out.last().map(|t| &t.tok), Some(Tok::Newline) | None)
                    {
                        self.push(Tok::Newline, self.pos, self.pos + 1);
                    }
                    self.newline();
                    self.at_line_start = true;
                }
                b' ' | b'\t' | b'\r' | 0x0c => self.pos += 1,
                b'\\' if self.peek(1) == b'\n' || (self.peek(1) == b'\r' && self.peek(2) == b'\n') => {
                    if self.peek(1) == b'\r' {
                        self.pos += 1;
                    }
                    self.pos += 1;
                    self.newline();
                }
                b'#' if self.lang == Language::Python => self.skip_line(),
                b'#' if self.lang == Language::C && self.only_space_before() => self.skip_preprocessor(),
                b'/' if self.lang != Language::Python && self.peek(1) == b'/' => self.skip_line(),
                b'/' if self.lang != Language::Python && self.peek(1) == b'*' => self.skip_block_comment()?,
                b'"' | b'\'' => self.string(self.pos, false)?,
                b'`' if self.lang == Language::JavaScript => self.template()?,
                c if c.is_ascii_digit() => self.number(),
                c if c == b'_' || c == b'$' || c.is_ascii_alphabetic() || c >= 0x80 => self.ident_or_prefixed_string()?,
                _ => self.punct()?,
            }
        }
        if self.significant_newlines() && !matches!(self.out.last().map(|t| &t.tok), Some(Tok::Newline) | None) {
            self.push(Tok::Newline, self.pos, self.pos);
        }
        if let Some(&(b, line, col)) = self.open.last() {
            return Err(ParseError {
                unit: String::new(),
                line,
                col,
                message: format!("unclosed `{b}`"),
                token: b.to_string(),
            });
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, self.pos, self.pos);
        }
        self.push(Tok::Eof, self.pos, self.pos);
        Ok(())
    }

    fn only_space_before(&self) -> bool {
        self.src[self.line_start..self.pos].trim().is_empty()
    }

    /// Handles leading whitespace of a Python line. Returns true when the
    /// line was blank or comment-only and has been consumed.
    fn python_indentation(&mut self) -> Result<bool, ParseError> {
        let mut width = 0;
        let mut p = self.pos;
        while p < self.bytes.len() {
            match self.bytes[p] {
                b' ' => width += 1,
                b'\t' => width = (width / 8 + 1) * 8,
                b'\r' | 0x0c => {}
                _ => break,
            }
            p += 1;
        }
        let rest = self.bytes.get(p).copied().unwrap_or(b'\n');
        if rest == b'\n' || rest == b'#' {
            self.pos = p;
            if rest == b'#' {
                self.skip_line();
            }
            if self.pos < self.bytes.len() {
                self.newline();
            }
            return Ok(true);
        }
        self.pos = p;
        let current = *self.indents.last().expect("indent stack never empty");
        if width > current {
            self.indents.push(width);
            self.push(Tok::Indent, p, p);
        } else if width < current {
            while width < *self.indents.last().expect("indent stack never empty") {
                self.indents.pop();
                self.push(Tok::Dedent, p, p);
            }
            if width != *self.indents.last().expect("indent stack never empty") {
                return Err(self.error(p, "unindent does not match any outer indentation level", ""));
            }
        }
        self.at_line_start = false;
        Ok(false)
    }

    fn skip_line(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
            self.pos += 1;
        }
    }

    fn skip_preprocessor(&mut self) {
        loop {
            self.skip_line();
            let continued = self.pos > 0 && self.bytes[self.pos - 1] == b'\\';
            if continued && self.pos < self.bytes.len() {
                self.newline();
            } else {
                break;
            }
        }
    }

    fn skip_block_comment(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        self.pos += 2;
        while self.pos < self.bytes.len() {
            if self.peek(0) == b'*' && self.peek(1) == b'/' {
                self.pos += 2;
                return Ok(());
            }
            if self.peek(0) == b'\n' {
                self.newline();
            } else {
                self.pos += 1;
            }
        }
        Err(self.error(start, "unterminated block comment", "/*"))
    }

    fn number(&mut self) {
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            let exp_sign = (c == b'+' || c == b'-') && matches!(self.bytes[self.pos - 1], b'e' | b'E')
                && !self.src[start..self.pos].starts_with("0x");
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.push(Tok::Num(self.src[start..self.pos].to_string()), start, self.pos);
    }

    fn ident_or_prefixed_string(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c == b'_' || c == b'$' || c.is_ascii_alphanumeric() || c >= 0x80 {
                self.pos += 1;
            } else {
                break;
            }
        }
        let word = &self.src[start..self.pos];
        let next = self.peek(0);
        if (next == b'"' || next == b'\'') && self.is_string_prefix(word) {
            let formatted = word.to_ascii_lowercase().contains('f');
            return self.string(start, formatted);
        }
        self.push(Tok::Ident(word.to_string()), start, self.pos);
        Ok(())
    }

    fn is_string_prefix(&self, word: &str) -> bool {
        match self.lang {
            Language::Python => {
                word.len() <= 2 && word.chars().all(|c| matches!(c.to_ascii_lowercase(), 'r' | 'b' | 'f' | 'u'))
            }
            Language::C => matches!(word, "L" | "u" | "U" | "u8"),
            _ => false,
        }
    }

    /// Lex a quoted string starting at the quote under `self.pos`; `start`
    /// includes any prefix.
    fn string(&mut self, start: usize, formatted: bool) -> Result<(), ParseError> {
        let quote = self.peek(0);
        let raw = self.src[start..self.pos].to_ascii_lowercase().contains('r');
        let triple = self.lang == Language::Python && self.peek(1) == quote && self.peek(2) == quote;
        self.pos += if triple { 3 } else { 1 };
        let mut value = String::new();
        loop {
            if self.pos >= self.bytes.len() {
                return Err(self.error(start, "unterminated string literal", &self.src[start..self.pos.min(start + 20)]));
            }
            let c = self.peek(0);
            if c == quote && (!triple || (self.peek(1) == quote && self.peek(2) == quote)) {
                self.pos += if triple { 3 } else { 1 };
                break;
            }
            if c == b'\n' && !triple {
                return Err(self.error(start, "unterminated string literal", &self.src[start..self.pos]));
            }
            if c == b'\\' && !raw {
                let esc = self.peek(1);
                self.pos += 2;
                match esc {
                    b'n' => value.push('\n'),
                    b't' => value.push('\t'),
                    b'r' => value.push('\r'),
                    b'0' => value.push('\0'),
                    b'\\' => value.push('\\'),
                    b'\'' => value.push('\''),
                    b'"' => value.push('"'),
                    b'\n' => {
                        self.line += 1;
                        self.line_start = self.pos;
                    }
                    _ => {
                        value.push('\\');
                        self.pos -= 1;
                    }
                }
                continue;
            }
            let ch = self.src[self.pos..].chars().next().expect("in bounds");
            if ch == '\n' {
                self.line += 1;
                self.line_start = self.pos + 1;
            }
            value.push(ch);
            self.pos += ch.len_utf8();
        }
        self.push(Tok::Str { value, formatted }, start, self.pos);
        Ok(())
    }

    fn template(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        self.pos += 1;
        let mut value = String::new();
        let mut formatted = false;
        loop {
            if self.pos >= self.bytes.len() {
                return Err(self.error(start, "unterminated template literal", "`"));
            }
            match self.peek(0) {
                b'`' => {
                    self.pos += 1;
                    break;
                }
                b'$' if self.peek(1) == b'{' => {
                    formatted = true;
                    value.push_str("${");
                    self.pos += 2;
                }
                b'\\' => {
                    value.push(self.peek(1) as char);
                    self.pos += 2;
                }
                b'\n' => {
                    value.push('\n');
                    self.newline();
                }
                _ => {
                    let ch = self.src[self.pos..].chars().next().expect("in bounds");
                    value.push(ch);
                    self.pos += ch.len_utf8();
                }
            }
        }
        self.push(Tok::Str { value, formatted }, start, self.pos);
        Ok(())
    }

    fn punct(&mut self) -> Result<(), ParseError> {
        let rest = &self.src[self.pos..];
        let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) else {
            let ch = rest.chars().next().expect("in bounds");
            return Err(self.error(self.pos, format!("unexpected character `{ch}`"), ch.to_string()));
        };
        let suppresses = |b: &str| b != "{" || self.lang == Language::Python;
        match *p {
            "(" | "[" | "{" => {
                self.open.push((p, self.line, self.col(self.pos)));
                if suppresses(p) {
                    self.depth += 1;
                }
            }
            ")" | "]" | "}" => {
                let want = match *p {
                    ")" => "(",
                    "]" => "[",
                    _ => "{",
                };
                match self.open.pop() {
                    Some((b, _, _)) if b == want => {
                        if suppresses(b) {
                            self.depth -= 1;
                        }
                    }
                    Some((b, line, col)) => {
                        return Err(ParseError {
                            unit: String::new(),
                            line,
                            col,
                            message: format!("unclosed `{b}` before `{p}`"),
                            token: (*p).to_string(),
                        })
                    }
                    None => return Err(self.error(self.pos, format!("unmatched `{p}`"), *p)),
                }
            }
            _ => {}
        }
        let start = self.pos;
        self.pos += p.len();
        self.push(Tok::Punct(p), start, self.pos);
        Ok(())
    }
}
