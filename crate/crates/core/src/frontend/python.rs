//! Indentation-based statement parser for the Python subset.

use crate::expr::Expr;

use super::cfg::{Header, Stmt};
use super::lexer::Tok;
use super::parser::{PExpr, PKind, PResult, Parser, RawCall};
use super::{ParseError, ProcDef};

pub fn parse_module(p: &mut Parser) -> Result<(Vec<Stmt>, Vec<ProcDef>), ParseError> {
    let mut main = Vec::new();
    let mut procs = Vec::new();
    loop {
        p.skip_newlines();
        match p.peek() {
            Tok::Eof => break,
            Tok::Indent => return Err(p.fatal("unexpected indent")),
            Tok::Ident(w) if w == "def" => procs.push(parse_def(p)?),
            _ => parse_stmt(p, &mut main)?,
        }
    }
    Ok((main, procs))
}

fn parse_def(p: &mut Parser) -> Result<ProcDef, ParseError> {
    let line = p.token().line;
    p.bump();
    let name = p.expect_ident()?;
    p.expect_punct("(")?;
    let mut depth = 1;
    while depth > 0 {
        match p.bump().tok {
            Tok::Punct("(") => depth += 1,
            Tok::Punct(")") => depth -= 1,
            Tok::Eof => return Err(p.fatal("unterminated parameter list")),
            _ => {}
        }
    }
    if p.eat_punct("->") {
        while !p.at_punct(":") && !matches!(p.peek(), Tok::Newline | Tok::Eof) {
            p.bump();
        }
    }
    p.expect_punct(":")?;
    let body = parse_suite(p)?;
    Ok(ProcDef { name, body, line })
}

/// Body after a `:`: an indented block or statements on the same line.
fn parse_suite(p: &mut Parser) -> Result<Vec<Stmt>, ParseError> {
    let mut out = Vec::new();
    if !matches!(p.peek(), Tok::Newline) {
        parse_simple_line(p, &mut out)?;
        return Ok(out);
    }
    p.skip_newlines();
    if !matches!(p.peek(), Tok::Indent) {
        return Err(p.fatal("expected an indented block"));
    }
    p.bump();
    loop {
        p.skip_newlines();
        match p.peek() {
            Tok::Dedent => {
                p.bump();
                return Ok(out);
            }
            Tok::Eof => return Ok(out),
            _ => parse_stmt(p, &mut out)?,
        }
    }
}

/// Skip a suite without producing statements.
fn skip_suite(p: &mut Parser) -> Result<(), ParseError> {
    if !matches!(p.peek(), Tok::Newline) {
        skip_line(p);
        return Ok(());
    }
    p.skip_newlines();
    if !matches!(p.peek(), Tok::Indent) {
        return Err(p.fatal("expected an indented block"));
    }
    let mut depth = 0usize;
    loop {
        match p.bump().tok {
            Tok::Indent => depth += 1,
            Tok::Dedent => {
                depth -= 1;
                if depth == 0 {
                    return Ok(());
                }
            }
            Tok::Eof => return Ok(()),
            _ => {}
        }
    }
}

fn skip_line(p: &mut Parser) {
    while !matches!(p.peek(), Tok::Newline | Tok::Eof | Tok::Dedent) {
        p.bump();
    }
}

fn end_of_line(p: &Parser) -> bool {
    matches!(p.peek(), Tok::Newline | Tok::Eof | Tok::Dedent)
}

fn condition(p: &mut Parser) -> PResult<Vec<RawCall>> {
    let e = p.expr()?;
    let mut calls = Vec::new();
    p.lower(&e, &mut calls);
    if !p.at_punct(":") {
        return Err(p.unsupported("expected `:`"));
    }
    p.bump();
    Ok(calls)
}

/// Parse a header expression followed by `:`. Unsupported headers keep the
/// block structure and lose their calls.
fn header(p: &mut Parser) -> Result<Header, ParseError> {
    let start = p.pos;
    match condition(p) {
        Ok(calls) => Ok(Header { assign: None, calls }),
        Err(u) => {
            p.pos = start;
            skip_to_colon(p)?;
            p.warn(u);
            Ok(Header::default())
        }
    }
}

/// Consume tokens up to and including the next `:` outside brackets.
fn skip_to_colon(p: &mut Parser) -> Result<(), ParseError> {
    let mut depth = 0usize;
    loop {
        match p.peek() {
            Tok::Punct("(" | "[" | "{") => depth += 1,
            Tok::Punct(")" | "]" | "}") => depth = depth.saturating_sub(1),
            Tok::Punct(":") if depth == 0 => {
                p.bump();
                return Ok(());
            }
            Tok::Newline | Tok::Eof => return Err(p.fatal("expected `:`")),
            _ => {}
        }
        p.bump();
    }
}

fn parse_stmt(p: &mut Parser, out: &mut Vec<Stmt>) -> Result<(), ParseError> {
    let kw = match p.peek() {
        Tok::Ident(w) => w.clone(),
        _ => String::new(),
    };
    match kw.as_str() {
        "if" => {
            p.bump();
            out.push(parse_if_tail(p)?);
        }
        "while" => {
            p.bump();
            let head = header(p)?;
            let body = parse_suite(p)?;
            out.push(Stmt::Loop { head, body });
            skip_else(p)?;
        }
        "for" => {
            p.bump();
            out.push(parse_for(p)?);
            skip_else(p)?;
        }
        "def" | "class" => {
            let u = p.unsupported(format!("nested `{kw}`"));
            p.warn(u);
            skip_to_colon(p)?;
            skip_suite(p)?;
            out.push(Stmt::other(Vec::new()));
        }
        "with" => {
            p.bump();
            parse_with(p, out)?;
        }
        "try" => {
            p.bump();
            parse_try(p, out)?;
        }
        "async" => {
            p.bump();
            parse_stmt(p, out)?;
        }
        _ if p.at_punct("@") => skip_line(p),
        _ => parse_simple_line(p, out)?,
    }
    Ok(())
}

/// After `if`/`elif`: condition, suite and optional elif/else chain.
fn parse_if_tail(p: &mut Parser) -> Result<Stmt, ParseError> {
    let head = header(p)?;
    let then_branch = parse_suite(p)?;
    p.skip_newlines();
    let else_branch = if p.at_ident("elif") {
        p.bump();
        vec![parse_if_tail(p)?]
    } else if p.at_ident("else") {
        p.bump();
        p.expect_punct(":")?;
        parse_suite(p)?
    } else {
        Vec::new()
    };
    Ok(Stmt::If {
        head,
        then_branch,
        else_branch,
    })
}

fn skip_else(p: &mut Parser) -> Result<(), ParseError> {
    p.skip_newlines();
    if p.at_ident("else") {
        let u = p.unsupported("loop `else` clause");
        p.warn(u);
        p.bump();
        p.expect_punct(":")?;
        skip_suite(p)?;
    }
    Ok(())
}

fn parse_for(p: &mut Parser) -> Result<Stmt, ParseError> {
    let target = match (p.peek().clone(), p.peek_at(1).clone()) {
        (Tok::Ident(v), Tok::Ident(kw)) if kw == "in" => {
            p.bump();
            Some(v)
        }
        _ => None,
    };
    if target.is_none() {
        let u = p.unsupported("loop target is not a single name");
        p.warn(u);
        while !p.at_ident("in") {
            if end_of_line(p) {
                return Err(p.fatal("expected `in`"));
            }
            p.bump();
        }
    }
    p.bump();
    let start = p.token().start;
    let mut head = header(p)?;
    let end = p.toks[p.pos.saturating_sub(2)].end.max(start);
    if let Some(v) = target {
        head.assign = Some((v, Expr::dynamic(p.text(start, end).to_string())));
    }
    let body = parse_suite(p)?;
    Ok(Stmt::Loop { head, body })
}

fn parse_with(p: &mut Parser, out: &mut Vec<Stmt>) -> Result<(), ParseError> {
    let start = p.pos;
    let res: PResult<Option<(String, Expr, Vec<RawCall>)>> = (|| {
        let e = p.expr()?;
        let mut calls = Vec::new();
        let rhs = p.lower(&e, &mut calls);
        let var = if p.at_ident("as") {
            p.bump();
            match p.peek().clone() {
                Tok::Ident(v) => {
                    p.bump();
                    Some(v)
                }
                _ => return Err(p.unsupported("`with` target is not a name")),
            }
        } else {
            None
        };
        if !p.at_punct(":") {
            return Err(p.unsupported("expected `:` after with item"));
        }
        p.bump();
        Ok(match var {
            Some(v) => Some((v, rhs, calls)),
            None if calls.is_empty() => None,
            None => Some((String::new(), rhs, calls)),
        })
    })();
    match res {
        Ok(Some((v, rhs, calls))) if !v.is_empty() => out.push(Stmt::simple(Some((v, rhs)), calls)),
        Ok(Some((_, _, calls))) => out.push(Stmt::simple(None, calls)),
        Ok(None) => {}
        Err(u) => {
            p.warn(u);
            p.pos = start;
            skip_to_colon(p)?;
            out.push(Stmt::other(Vec::new()));
        }
    }
    out.extend(parse_suite(p)?);
    Ok(())
}

/// `try` bodies and handlers become a two-way branch; `finally` follows.
fn parse_try(p: &mut Parser, out: &mut Vec<Stmt>) -> Result<(), ParseError> {
    p.expect_punct(":")?;
    let body = parse_suite(p)?;
    let mut handlers = Vec::new();
    let mut finally = Vec::new();
    loop {
        p.skip_newlines();
        if p.at_ident("except") || p.at_ident("else") {
            skip_to_colon(p)?;
            handlers.extend(parse_suite(p)?);
        } else if p.at_ident("finally") {
            p.bump();
            p.expect_punct(":")?;
            finally = parse_suite(p)?;
        } else {
            break;
        }
    }
    out.push(Stmt::If {
        head: Header::default(),
        then_branch: body,
        else_branch: handlers,
    });
    out.extend(finally);
    Ok(())
}

/// One or more `;`-separated simple statements ending the logical line.
fn parse_simple_line(p: &mut Parser, out: &mut Vec<Stmt>) -> Result<(), ParseError> {
    loop {
        let start = p.pos;
        match simple_stmt(p) {
            Ok(s) => out.push(s),
            Err(u) => {
                p.warn(u);
                p.pos = start;
                while !end_of_line(p) && !p.at_punct(";") {
                    p.bump();
                }
                out.push(Stmt::other(Vec::new()));
            }
        }
        if p.eat_punct(";") && !end_of_line(p) {
            continue;
        }
        if !end_of_line(p) {
            let u = p.unsupported("trailing tokens after statement");
            p.warn(u);
            skip_line(p);
        }
        if matches!(p.peek(), Tok::Newline) {
            p.bump();
        }
        return Ok(());
    }
}

fn target_name(e: &PExpr) -> Option<String> {
    match &e.kind {
        PKind::Name(n) => Some(n.clone()),
        PKind::Member {
            obj,
            name,
            dotted: true,
        } => target_name(obj).map(|o| format!("{o}.{name}")),
        _ => None,
    }
}

fn simple_stmt(p: &mut Parser) -> PResult<Stmt> {
    let kw = match p.peek() {
        Tok::Ident(w) => w.clone(),
        _ => String::new(),
    };
    match kw.as_str() {
        "return" => {
            p.bump();
            let mut calls = Vec::new();
            if !end_of_line(p) && !p.at_punct(";") {
                let e = p.expr()?;
                p.lower(&e, &mut calls);
                while p.eat_punct(",") {
                    let e = p.expr()?;
                    p.lower(&e, &mut calls);
                }
            }
            return Ok(Stmt::Return(calls));
        }
        "pass" | "break" | "continue" | "import" | "from" | "global" | "nonlocal" => {
            if kw == "break" || kw == "continue" {
                let u = p.unsupported(format!("`{kw}` is approximated as a plain statement"));
                p.warn(u);
            }
            while !end_of_line(p) && !p.at_punct(";") {
                p.bump();
            }
            return Ok(Stmt::other(Vec::new()));
        }
        "raise" | "assert" | "del" | "yield" => {
            p.bump();
            let mut calls = Vec::new();
            while !end_of_line(p) && !p.at_punct(";") {
                if p.at_punct(",") || p.at_ident("from") {
                    p.bump();
                    continue;
                }
                let e = p.expr()?;
                p.lower(&e, &mut calls);
            }
            return Ok(Stmt::other(calls));
        }
        _ => {}
    }
    let lhs = p.expr()?;
    // annotated assignment `x: T = v`
    if p.at_punct(":") {
        p.bump();
        p.expr()?;
        if !p.at_punct("=") {
            return Ok(Stmt::other(Vec::new()));
        }
    }
    if p.at_punct("=") {
        p.bump();
        let rhs = p.expr()?;
        let mut calls = Vec::new();
        let value = p.lower(&rhs, &mut calls);
        if p.at_punct("=") || p.at_punct(",") {
            return Err(p.unsupported("chained or tuple assignment"));
        }
        return match target_name(&lhs) {
            Some(v) => Ok(Stmt::simple(Some((v, value)), calls)),
            None => {
                p.lower(&lhs, &mut calls);
                Ok(Stmt::other(calls))
            }
        };
    }
    if let Tok::Punct(op) = p.peek() {
        if op.len() >= 2 && op.ends_with('=') && !matches!(*op, "==" | "!=" | "<=" | ">=") {
            let op = *op;
            p.bump();
            let rhs = p.expr()?;
            let mut calls = Vec::new();
            p.lower(&lhs, &mut calls);
            p.lower(&rhs, &mut calls);
            let u = p.unsupported(format!("compound assignment `{op}`"));
            p.warn(u);
            return Ok(Stmt::other(calls));
        }
    }
    if p.at_punct(",") {
        return Err(p.unsupported("tuple expression statement"));
    }
    let mut calls = Vec::new();
    p.lower(&lhs, &mut calls);
    Ok(Stmt::simple(None, calls))
}
