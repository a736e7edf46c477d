use std::collections::BTreeMap;
use std::fmt::Write;

use super::lexer::{Cursor, Tok};
use super::{LangError, ParseError};
use crate::model::{BinOp, Expr, GuardedCommand, ModelError, SystemModel, VarDecl};

/// Parses and validates a model.
///
/// ```text
/// model   := const* var+ initc? command*
/// const   := "const" IDENT "=" INT ";"
/// var     := "var" IDENT ":" INT ".." INT "init" INT ";"
/// initc   := "init" expr ";"
/// command := "[" IDENT? "]" expr "->" update ";"
/// update  := "skip" | IDENT "'" "=" expr ("&" IDENT "'" "=" expr)*
/// ```
pub fn parse_model(text: &str) -> Result<SystemModel, LangError> {
    let mut cur = Cursor::new(text)?;
    let mut constants = BTreeMap::new();
    let mut variables: Vec<VarDecl> = Vec::new();

    while cur.is_keyword("const") {
        cur.bump();
        let name = cur.ident()?;
        cur.expect(Tok::Assign)?;
        let value = cur.int()?;
        cur.expect(Tok::Semi)?;
        if constants.insert(name.clone(), value).is_some() {
            return Err(ModelError::Duplicate(name).into());
        }
    }
    while cur.is_keyword("var") {
        cur.bump();
        let name = cur.ident()?;
        cur.expect(Tok::Colon)?;
        let lo = cur.int()?;
        cur.expect(Tok::DotDot)?;
        let hi = cur.int()?;
        cur.expect_keyword("init")?;
        let init = cur.int()?;
        cur.expect(Tok::Semi)?;
        if variables.iter().any(|v| v.name == name) {
            return Err(ModelError::Duplicate(name).into());
        }
        variables.push(VarDecl { name, lo, hi, init });
    }
    if variables.is_empty() {
        return Err(cur.unexpected("`var` declaration").into());
    }
    let init_constraint = if cur.is_keyword("init") {
        cur.bump();
        let e = expr(&mut cur)?;
        cur.expect(Tok::Semi)?;
        Some(e)
    } else {
        None
    };
    let mut commands = Vec::new();
    while !cur.at_eof() {
        commands.push(command(&mut cur)?);
    }
    Ok(SystemModel::new(
        constants,
        variables,
        init_constraint,
        commands,
    )?)
}

fn command(cur: &mut Cursor) -> Result<GuardedCommand, ParseError> {
    if !cur.eat(&Tok::LBracket) {
        return Err(cur.unexpected("`[` starting a command"));
    }
    let label = if cur.eat(&Tok::RBracket) {
        None
    } else {
        let l = cur.ident()?;
        cur.expect(Tok::RBracket)?;
        Some(l)
    };
    let guard = expr(cur)?;
    cur.expect(Tok::Arrow)?;
    let mut updates = Vec::new();
    if cur.is_keyword("skip") {
        cur.bump();
    } else {
        loop {
            let var = cur.ident()?;
            cur.expect(Tok::Prime)?;
            cur.expect(Tok::Assign)?;
            updates.push((var, expr(cur)?));
            if !cur.eat(&Tok::Amp) {
                break;
            }
        }
    }
    cur.expect(Tok::Semi)?;
    Ok(GuardedCommand {
        label,
        guard,
        updates,
    })
}

// expr := and ("|" and)* ; and := unary ("&" unary)* ;
// unary := "!" unary | cmp ; cmp := sum (CMP sum)? ;
// sum := product (("+"|"-") product)* ; product := primary ("*" primary)*
pub(crate) fn expr(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let mut lhs = and_expr(cur)?;
    while cur.eat(&Tok::Bar) {
        lhs = Expr::bin(BinOp::Or, lhs, and_expr(cur)?);
    }
    Ok(lhs)
}

fn and_expr(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let mut lhs = unary(cur)?;
    // `&` also separates updates, but updates never contain a bare guard
    while *cur.peek() == Tok::Amp && !is_update_start(cur) {
        cur.bump();
        lhs = Expr::bin(BinOp::And, lhs, unary(cur)?);
    }
    Ok(lhs)
}

fn is_update_start(cur: &Cursor) -> bool {
    matches!(cur.peek_at(1), Tok::Ident(_)) && *cur.peek_at(2) == Tok::Prime
}

fn unary(cur: &mut Cursor) -> Result<Expr, ParseError> {
    if cur.eat(&Tok::Bang) {
        return Ok(Expr::not(unary(cur)?));
    }
    comparison(cur)
}

fn comparison(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let lhs = sum(cur)?;
    let op = match cur.peek() {
        Tok::EqEq => BinOp::Eq,
        Tok::NotEq => BinOp::Ne,
        Tok::Lt => BinOp::Lt,
        Tok::Le => BinOp::Le,
        Tok::Gt => BinOp::Gt,
        Tok::Ge => BinOp::Ge,
        _ => return Ok(lhs),
    };
    cur.bump();
    Ok(Expr::bin(op, lhs, sum(cur)?))
}

fn sum(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let mut lhs = product(cur)?;
    loop {
        let op = match cur.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            _ => return Ok(lhs),
        };
        cur.bump();
        lhs = Expr::bin(op, lhs, product(cur)?);
    }
}

fn product(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let mut lhs = primary(cur)?;
    while cur.eat(&Tok::Star) {
        lhs = Expr::bin(BinOp::Mul, lhs, primary(cur)?);
    }
    Ok(lhs)
}

fn primary(cur: &mut Cursor) -> Result<Expr, ParseError> {
    match cur.peek().clone() {
        Tok::LParen => {
            cur.bump();
            let e = expr(cur)?;
            cur.expect(Tok::RParen)?;
            Ok(e)
        }
        Tok::Int(_) | Tok::Minus => Ok(Expr::Int(cur.int()?)),
        Tok::Ident(name) if name == "true" || name == "false" => {
            cur.bump();
            Ok(Expr::Bool(name == "true"))
        }
        Tok::Ident(_) => Ok(Expr::Ident(cur.ident()?)),
        _ => Err(cur.unexpected("expression")),
    }
}

const NOT_PRECEDENCE: u8 = 3;

fn expr_precedence(e: &Expr) -> u8 {
    match e {
        Expr::Bin(op, _, _) => op.precedence(),
        Expr::Not(_) => NOT_PRECEDENCE,
        // literals (negative ones included) re-parse as primaries
        _ => 8,
    }
}

/// Canonical text of an expression with minimal parentheses.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_child(out: &mut String, child: &Expr, needs_parens: bool) {
    if needs_parens {
        out.push('(');
        write_expr(out, child);
        out.push(')');
    } else {
        write_expr(out, child);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Expr::Ident(name) => out.push_str(name),
        Expr::Not(inner) => {
            out.push('!');
            write_child(out, inner, expr_precedence(inner) < NOT_PRECEDENCE);
        }
        Expr::Bin(op, lhs, rhs) => {
            let p = op.precedence();
            let lp = expr_precedence(lhs);
            let rp = expr_precedence(rhs);
            // comparisons do not chain, everything else is left-associative
            let left_parens = lp < p || (op.is_comparison() && lp == p);
            write_child(out, lhs, left_parens);
            match op {
                BinOp::And | BinOp::Or => {
                    let _ = write!(out, " {} ", op.symbol());
                }
                _ => out.push_str(op.symbol()),
            }
            write_child(out, rhs, rp <= p);
        }
    }
}

/// Canonical model text; [`parse_model`] inverts it.
pub fn print_model(m: &SystemModel) -> String {
    let mut out = String::new();
    for (name, value) in &m.constants {
        let _ = writeln!(out, "const {name} = {value};");
    }
    for v in &m.variables {
        let _ = writeln!(out, "var {} : {}..{} init {};", v.name, v.lo, v.hi, v.init);
    }
    if let Some(init) = &m.init_constraint {
        let _ = writeln!(out, "init {};", print_expr(init));
    }
    for cmd in &m.commands {
        let label = cmd.label.as_deref().unwrap_or("");
        let updates = if cmd.updates.is_empty() {
            "skip".to_string()
        } else {
            cmd.updates
                .iter()
                .map(|(var, rhs)| format!("{var}'={}", print_expr(rhs)))
                .collect::<Vec<_>>()
                .join(" & ")
        };
        let _ = writeln!(out, "[{label}] {} -> {updates};", print_expr(&cmd.guard));
    }
    out
}
