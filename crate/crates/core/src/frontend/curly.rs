//! Statement parser for the brace languages (C and JavaScript).

use crate::expr::Expr;
use crate::model::Language;

use super::cfg::{Header, Stmt};
use super::lexer::Tok;
use super::parser::{PKind, PResult, Parser, RawCall};
use super::{ParseError, ProcDef};

const C_DECL_START: &[&str] = &[
    "int", "char", "void", "long", "short", "unsigned", "signed", "float", "double", "const", "static", "extern",
    "struct", "enum", "union", "volatile", "register", "auto", "inline", "bool", "_Bool",
];

pub fn parse_program(p: &mut Parser) -> Result<(Vec<Stmt>, Vec<ProcDef>), ParseError> {
    let mut main = Vec::new();
    let mut procs = Vec::new();
    loop {
        skip_separators(p);
        if p.at_eof() {
            break;
        }
        if p.at_punct("}") {
            return Err(p.fatal("unmatched `}`"));
        }
        match p.lang {
            Language::C => c_top_level(p, &mut main, &mut procs)?,
            _ => {
                if p.at_ident("function") || (p.at_ident("async") && matches!(p.peek_at(1), Tok::Ident(w) if w == "function"))
                {
                    if p.at_ident("async") {
                        p.bump();
                    }
                    procs.push(js_function(p)?);
                } else if p.at_ident("export") {
                    p.bump();
                } else {
                    stmt(p, &mut main)?;
                }
            }
        }
    }
    Ok((main, procs))
}

fn skip_separators(p: &mut Parser) {
    while matches!(p.peek(), Tok::Newline) || p.at_punct(";") {
        p.bump();
    }
}

/// Consume a balanced `(...)`, cursor on the opening paren.
fn skip_parens(p: &mut Parser) -> Result<(), ParseError> {
    p.expect_punct("(")?;
    let mut depth = 1;
    while depth > 0 {
        match p.bump().tok {
            Tok::Punct("(") => depth += 1,
            Tok::Punct(")") => depth -= 1,
            Tok::Eof => return Err(p.fatal("unterminated parenthesis")),
            _ => {}
        }
    }
    Ok(())
}

fn skip_block(p: &mut Parser) -> Result<(), ParseError> {
    if !p.at_punct("{") {
        return Err(p.fatal("expected `{`"));
    }
    p.skip_balanced_braces();
    if p.toks[p.pos - 1].tok != Tok::Punct("}") {
        return Err(p.fatal("unterminated block"));
    }
    Ok(())
}

fn js_function(p: &mut Parser) -> Result<ProcDef, ParseError> {
    let line = p.token().line;
    p.bump();
    p.eat_punct("*");
    let name = p.expect_ident()?;
    skip_parens(p)?;
    let body = block(p)?;
    Ok(ProcDef { name, body, line })
}

/// Index just past the `)` matching the `(` at `open`, if any.
fn matching_paren(p: &Parser, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, t) in p.toks.iter().enumerate().skip(open) {
        match t.tok {
            Tok::Punct("(") => depth += 1,
            Tok::Punct(")") => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            Tok::Eof => return None,
            _ => {}
        }
    }
    None
}

/// Length of a leading `type-words [*]... name` run, with the name position.
fn declarator_prefix(p: &Parser) -> Option<(usize, usize)> {
    let mut i = p.pos;
    let mut idents = Vec::new();
    loop {
        match &p.toks[i].tok {
            Tok::Ident(_) => idents.push(i),
            Tok::Punct("*") => {}
            _ => break,
        }
        i += 1;
    }
    if idents.len() >= 2 && idents.last() == Some(&(i - 1)) {
        Some((i, i - 1))
    } else {
        None
    }
}

fn c_top_level(p: &mut Parser, main: &mut Vec<Stmt>, procs: &mut Vec<ProcDef>) -> Result<(), ParseError> {
    if p.at_ident("typedef") || ((p.at_ident("struct") || p.at_ident("enum") || p.at_ident("union")) && is_type_body(p)) {
        skip_to_semicolon(p)?;
        return Ok(());
    }
    if let Some((after, name_ix)) = declarator_prefix(p) {
        if p.toks[after].tok == Tok::Punct("(") {
            let close = matching_paren(p, after).ok_or_else(|| p.fatal("unterminated parameter list"))?;
            let name = match &p.toks[name_ix].tok {
                Tok::Ident(n) => n.clone(),
                _ => unreachable!("declarator name is an identifier"),
            };
            let line = p.toks[name_ix].line;
            p.pos = close;
            if p.at_punct("{") {
                let body = block(p)?;
                procs.push(ProcDef { name, body, line });
            } else {
                // prototype
                skip_to_semicolon(p)?;
            }
            return Ok(());
        }
        declaration(p, main)?;
        return Ok(());
    }
    let u = p.unsupported("unexpected top-level construct");
    p.warn(u);
    skip_to_semicolon(p)?;
    main.push(Stmt::other(Vec::new()));
    Ok(())
}

fn is_type_body(p: &Parser) -> bool {
    matches!(p.peek_at(1), Tok::Punct("{")) || matches!(p.peek_at(2), Tok::Punct("{"))
}

fn skip_to_semicolon(p: &mut Parser) -> Result<(), ParseError> {
    let mut depth = 0usize;
    loop {
        match p.peek() {
            Tok::Punct("{" | "(" | "[") => depth += 1,
            Tok::Punct("}" | ")" | "]") => {
                if depth == 0 {
                    return Err(p.fatal("unbalanced bracket"));
                }
                depth -= 1;
            }
            Tok::Punct(";") if depth == 0 => {
                p.bump();
                return Ok(());
            }
            Tok::Eof => return Err(p.fatal("expected `;`")),
            _ => {}
        }
        p.bump();
    }
}

/// Skip to the end of the current statement without consuming a closing
/// `}` of the enclosing block.
fn skip_statement(p: &mut Parser) {
    let mut depth = 0usize;
    loop {
        match p.peek() {
            Tok::Punct("{" | "(" | "[") => depth += 1,
            Tok::Punct("}" | ")" | "]") => {
                if depth == 0 {
                    return;
                }
                depth -= 1;
                if depth == 0 && p.at_punct("}") {
                    p.bump();
                    if p.lang == Language::JavaScript && !p.at_punct(")") && !p.at_punct(".") {
                        return;
                    }
                    continue;
                }
            }
            Tok::Punct(";") if depth == 0 => {
                p.bump();
                return;
            }
            Tok::Newline if depth == 0 => return,
            Tok::Eof => return,
            _ => {}
        }
        p.bump();
    }
}

/// `{ stmts }` with the braces consumed.
fn block(p: &mut Parser) -> Result<Vec<Stmt>, ParseError> {
    p.expect_punct("{")?;
    let mut out = Vec::new();
    loop {
        skip_separators(p);
        if p.eat_punct("}") {
            return Ok(out);
        }
        if p.at_eof() {
            return Err(p.fatal("unterminated block"));
        }
        stmt(p, &mut out)?;
    }
}

/// A statement or a braced block, as used after `if`, `while` and `else`.
fn body(p: &mut Parser) -> Result<Vec<Stmt>, ParseError> {
    while matches!(p.peek(), Tok::Newline) {
        p.bump();
    }
    if p.at_punct("{") {
        return block(p);
    }
    let mut out = Vec::new();
    if p.eat_punct(";") {
        return Ok(out);
    }
    stmt(p, &mut out)?;
    Ok(out)
}

fn paren_header(p: &mut Parser) -> Result<Header, ParseError> {
    if !p.at_punct("(") {
        return Err(p.fatal("expected `(`"));
    }
    let open = p.pos;
    let close = matching_paren(p, open).ok_or_else(|| p.fatal("unterminated condition"))?;
    p.bump();
    let res: PResult<Vec<RawCall>> = (|| {
        let e = p.expr()?;
        let mut calls = Vec::new();
        p.lower(&e, &mut calls);
        while p.at_punct(",") {
            p.bump();
            let e = p.expr()?;
            p.lower(&e, &mut calls);
        }
        if p.pos + 1 != close {
            return Err(p.unsupported("unexpected tokens in condition"));
        }
        Ok(calls)
    })();
    p.pos = close;
    match res {
        Ok(calls) => Ok(Header { assign: None, calls }),
        Err(u) => {
            p.warn(u);
            Ok(Header::default())
        }
    }
}

fn keyword(p: &Parser) -> String {
    match p.peek() {
        Tok::Ident(w) => w.clone(),
        _ => String::new(),
    }
}

fn stmt(p: &mut Parser, out: &mut Vec<Stmt>) -> Result<(), ParseError> {
    let js = p.lang == Language::JavaScript;
    match keyword(p).as_str() {
        "if" => {
            p.bump();
            let head = paren_header(p)?;
            let then_branch = body(p)?;
            let save = p.pos;
            skip_separators_before_else(p);
            let else_branch = if p.at_ident("else") {
                p.bump();
                body(p)?
            } else {
                p.pos = save;
                Vec::new()
            };
            out.push(Stmt::If {
                head,
                then_branch,
                else_branch,
            });
        }
        "while" => {
            p.bump();
            let head = paren_header(p)?;
            let body = body(p)?;
            out.push(Stmt::Loop { head, body });
        }
        "do" => {
            p.bump();
            let u = p.unsupported("do-while is approximated as a while loop");
            p.warn(u);
            let body = body(p)?;
            skip_separators(p);
            if !p.at_ident("while") {
                return Err(p.fatal("expected `while` after do body"));
            }
            p.bump();
            let head = paren_header(p)?;
            out.push(Stmt::Loop { head, body });
        }
        "for" => {
            p.bump();
            for_loop(p, out)?;
        }
        "return" => {
            p.bump();
            let mut calls = Vec::new();
            if !at_statement_end(p) {
                let start = p.pos;
                match p.expr() {
                    Ok(e) => {
                        p.lower(&e, &mut calls);
                    }
                    Err(u) => {
                        p.warn(u);
                        p.pos = start;
                        skip_statement(p);
                    }
                }
            }
            end_statement(p);
            out.push(Stmt::Return(calls));
        }
        "break" | "continue" => {
            let u = p.unsupported("jump is approximated as a plain statement");
            p.warn(u);
            p.bump();
            end_statement(p);
            out.push(Stmt::other(Vec::new()));
        }
        "switch" | "class" | "goto" => {
            let u = p.unsupported(format!("`{}` statement", keyword(p)));
            p.warn(u);
            skip_statement(p);
            out.push(Stmt::other(Vec::new()));
        }
        "function" if js => {
            let u = p.unsupported("nested function declaration");
            p.warn(u);
            p.bump();
            while !p.at_punct("{") && !p.at_eof() {
                p.bump();
            }
            skip_block(p)?;
            out.push(Stmt::other(Vec::new()));
        }
        "try" => {
            p.bump();
            let then_branch = block(p)?;
            let mut handlers = Vec::new();
            let mut finally = Vec::new();
            loop {
                skip_separators_before_else(p);
                if p.at_ident("catch") {
                    p.bump();
                    if p.at_punct("(") {
                        skip_parens(p)?;
                    }
                    handlers.extend(block(p)?);
                } else if p.at_ident("finally") {
                    p.bump();
                    finally = block(p)?;
                } else {
                    break;
                }
            }
            out.push(Stmt::If {
                head: Header::default(),
                then_branch,
                else_branch: handlers,
            });
            out.extend(finally);
        }
        "var" | "let" | "const" if js => {
            p.bump();
            js_declaration(p, out);
        }
        "import" | "export" if js => {
            skip_statement(p);
        }
        _ if p.at_punct("{") => {
            let inner = block(p)?;
            out.extend(inner);
        }
        _ => {
            if p.lang == Language::C && is_c_declaration(p) {
                declaration(p, out)?;
            } else {
                expression_statement(p, out);
            }
        }
    }
    Ok(())
}

/// Newlines may separate `}` from `else` in JavaScript.
fn skip_separators_before_else(p: &mut Parser) {
    while matches!(p.peek(), Tok::Newline) {
        p.bump();
    }
}

fn at_statement_end(p: &Parser) -> bool {
    matches!(p.peek(), Tok::Newline | Tok::Eof) || p.at_punct(";") || p.at_punct("}")
}

fn end_statement(p: &mut Parser) {
    if p.at_punct(";") || matches!(p.peek(), Tok::Newline) {
        p.bump();
    }
}

fn is_c_declaration(p: &Parser) -> bool {
    if let Tok::Ident(w) = p.peek() {
        if C_DECL_START.contains(&w.as_str()) {
            return true;
        }
    }
    match declarator_prefix(p) {
        Some((after, _)) => matches!(p.toks[after].tok, Tok::Punct("=" | ";" | "[" | ",")),
        None => false,
    }
}

/// C declaration: `T *x = e;` becomes an assignment, a declaration without
/// initializer produces no statement.
fn declaration(p: &mut Parser, out: &mut Vec<Stmt>) -> Result<(), ParseError> {
    let start = p.pos;
    let Some((after, name_ix)) = declarator_prefix(p) else {
        let u = p.unsupported("unsupported declaration");
        p.warn(u);
        skip_statement(p);
        out.push(Stmt::other(Vec::new()));
        return Ok(());
    };
    let name = match &p.toks[name_ix].tok {
        Tok::Ident(n) => n.clone(),
        _ => unreachable!("declarator name is an identifier"),
    };
    p.pos = after;
    if p.eat_punct(";") {
        return Ok(());
    }
    let res: PResult<Stmt> = (|| {
        if !p.at_punct("=") {
            return Err(p.unsupported("unsupported declarator"));
        }
        p.bump();
        let e = p.expr()?;
        let mut calls = Vec::new();
        let rhs = p.lower(&e, &mut calls);
        if !p.at_punct(";") {
            return Err(p.unsupported("multiple declarators"));
        }
        p.bump();
        Ok(Stmt::simple(Some((name, rhs)), calls))
    })();
    match res {
        Ok(s) => out.push(s),
        Err(u) => {
            p.warn(u);
            p.pos = start;
            skip_statement(p);
            out.push(Stmt::other(Vec::new()));
        }
    }
    Ok(())
}

fn js_declaration(p: &mut Parser, out: &mut Vec<Stmt>) {
    let start = p.pos;
    let res: PResult<Option<Stmt>> = (|| {
        let name = match p.peek().clone() {
            Tok::Ident(n) => {
                p.bump();
                n
            }
            _ => return Err(p.unsupported("destructuring declaration")),
        };
        if at_statement_end(p) {
            return Ok(None);
        }
        if !p.at_punct("=") {
            return Err(p.unsupported("unsupported declarator"));
        }
        p.bump();
        let e = p.expr()?;
        let mut calls = Vec::new();
        let rhs = p.lower(&e, &mut calls);
        if !at_statement_end(p) {
            return Err(p.unsupported("multiple declarators"));
        }
        Ok(Some(Stmt::simple(Some((name, rhs)), calls)))
    })();
    match res {
        Ok(s) => {
            end_statement(p);
            out.extend(s);
        }
        Err(u) => {
            p.warn(u);
            p.pos = start;
            skip_statement(p);
            out.push(Stmt::other(Vec::new()));
        }
    }
}

fn for_loop(p: &mut Parser, out: &mut Vec<Stmt>) -> Result<(), ParseError> {
    if !p.at_punct("(") {
        return Err(p.fatal("expected `(` after for"));
    }
    let open = p.pos;
    let close = matching_paren(p, open).ok_or_else(|| p.fatal("unterminated for header"))?;
    // for (x of e) / for (let x in e)
    let mut i = open + 1;
    if matches!(&p.toks[i].tok, Tok::Ident(w) if matches!(w.as_str(), "let" | "const" | "var")) {
        i += 1;
    }
    if let (Tok::Ident(v), Tok::Ident(kw)) = (&p.toks[i].tok, &p.toks[i + 1].tok) {
        if kw == "of" || kw == "in" {
            let v = v.clone();
            let start = p.toks[i + 2].start;
            let end = p.toks[close - 2].end;
            p.pos = i + 2;
            let mut calls = Vec::new();
            if let Ok(e) = p.expr() {
                p.lower(&e, &mut calls);
            }
            p.pos = close;
            let head = Header {
                assign: Some((v, Expr::dynamic(p.text(start, end.max(start)).to_string()))),
                calls,
            };
            let body = body(p)?;
            out.push(Stmt::Loop { head, body });
            return Ok(());
        }
    }
    // classic three-part header
    p.bump();
    let mut parts: Vec<Vec<RawCall>> = Vec::new();
    let mut init = Vec::new();
    for part in 0..3 {
        let stop = if part < 2 { ";" } else { ")" };
        let seg_start = p.pos;
        while !(p.at_punct(stop) && depth_between(p, open, p.pos) == 1) {
            if p.pos >= close {
                return Err(p.fatal("malformed for header"));
            }
            p.bump();
        }
        let seg_end = p.pos;
        p.pos = seg_start;
        if part == 0 {
            if seg_end > seg_start {
                let mut sub = Vec::new();
                if p.lang == Language::C && is_c_declaration(p) || matches!(keyword(p).as_str(), "let" | "var" | "const")
                {
                    if p.lang == Language::JavaScript {
                        p.bump();
                        js_declaration(p, &mut sub);
                    } else {
                        declaration(p, &mut sub)?;
                    }
                } else {
                    expression_statement(p, &mut sub);
                }
                init = sub;
            }
        } else {
            let mut calls = Vec::new();
            while p.pos < seg_end {
                match p.expr() {
                    Ok(e) => {
                        p.lower(&e, &mut calls);
                    }
                    Err(_) => {
                        p.bump();
                    }
                }
                if p.at_punct(",") || p.at_punct("=") {
                    p.bump();
                }
            }
            parts.push(calls);
        }
        p.pos = seg_end + 1;
    }
    p.pos = close;
    out.extend(init);
    let mut calls = parts.remove(0);
    calls.extend(parts.remove(0));
    let head = Header { assign: None, calls };
    let body = body(p)?;
    out.push(Stmt::Loop { head, body });
    Ok(())
}

fn depth_between(p: &Parser, from: usize, to: usize) -> usize {
    let mut depth = 0usize;
    for t in &p.toks[from..to] {
        match t.tok {
            Tok::Punct("(" | "[" | "{") => depth += 1,
            Tok::Punct(")" | "]" | "}") => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    depth
}

fn expression_statement(p: &mut Parser, out: &mut Vec<Stmt>) {
    let start = p.pos;
    match expression_statement_inner(p) {
        Ok(s) => {
            end_statement(p);
            out.push(s);
        }
        Err(u) => {
            p.warn(u);
            p.pos = start;
            skip_statement(p);
            out.push(Stmt::other(Vec::new()));
        }
    }
}

fn expression_statement_inner(p: &mut Parser) -> PResult<Stmt> {
    let lhs = p.expr()?;
    let mut calls = Vec::new();
    if p.at_punct("=") {
        p.bump();
        let rhs = p.expr()?;
        let value = p.lower(&rhs, &mut calls);
        if !at_statement_end(p) {
            return Err(p.unsupported("chained assignment"));
        }
        let target = match &lhs.kind {
            PKind::Name(n) => Some(n.clone()),
            PKind::Member { dotted: true, .. } => match p.lower(&lhs, &mut Vec::new()) {
                Expr::VarRef(v) => Some(v),
                _ => None,
            },
            _ => None,
        };
        return Ok(match target {
            Some(v) => Stmt::simple(Some((v, value)), calls),
            None => {
                p.lower(&lhs, &mut calls);
                Stmt::other(calls)
            }
        });
    }
    if let Tok::Punct(op) = p.peek() {
        if op.len() >= 2 && op.ends_with('=') && !matches!(*op, "==" | "!=" | "<=" | ">=" | "===" | "!==") {
            let op = *op;
            p.bump();
            let rhs = p.expr()?;
            p.lower(&lhs, &mut calls);
            p.lower(&rhs, &mut calls);
            if !at_statement_end(p) {
                return Err(p.unsupported("unexpected tokens after statement"));
            }
            let u = p.unsupported(format!("compound assignment `{op}`"));
            p.warn(u);
            return Ok(Stmt::other(calls));
        }
    }
    if !at_statement_end(p) {
        return Err(p.unsupported("unexpected tokens after expression"));
    }
    p.lower(&lhs, &mut calls);
    Ok(Stmt::simple(None, calls))
}
