use std::fmt;

use super::lexer::{Cursor, Tok};
use super::ParseError;
use crate::model::Comparator;

/// CTL state formula over integer atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CtlFormula {
    True,
    False,
    Atom {
        var: String,
        cmp: Comparator,
        value: i64,
    },
    Not(Box<CtlFormula>),
    And(Box<CtlFormula>, Box<CtlFormula>),
    Or(Box<CtlFormula>, Box<CtlFormula>),
    Ex(Box<CtlFormula>),
    Ef(Box<CtlFormula>),
    Eg(Box<CtlFormula>),
    Ax(Box<CtlFormula>),
    Af(Box<CtlFormula>),
    Ag(Box<CtlFormula>),
}

impl CtlFormula {
    pub fn atom(var: impl Into<String>, cmp: Comparator, value: i64) -> CtlFormula {
        CtlFormula::Atom {
            var: var.into(),
            cmp,
            value,
        }
    }

    pub fn eq(var: impl Into<String>, value: i64) -> CtlFormula {
        CtlFormula::atom(var, Comparator::Eq, value)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: CtlFormula) -> CtlFormula {
        CtlFormula::Not(Box::new(f))
    }

    pub fn and(a: CtlFormula, b: CtlFormula) -> CtlFormula {
        CtlFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: CtlFormula, b: CtlFormula) -> CtlFormula {
        CtlFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn ex(f: CtlFormula) -> CtlFormula {
        CtlFormula::Ex(Box::new(f))
    }

    pub fn ef(f: CtlFormula) -> CtlFormula {
        CtlFormula::Ef(Box::new(f))
    }

    pub fn eg(f: CtlFormula) -> CtlFormula {
        CtlFormula::Eg(Box::new(f))
    }

    pub fn ax(f: CtlFormula) -> CtlFormula {
        CtlFormula::Ax(Box::new(f))
    }

    pub fn af(f: CtlFormula) -> CtlFormula {
        CtlFormula::Af(Box::new(f))
    }

    pub fn ag(f: CtlFormula) -> CtlFormula {
        CtlFormula::Ag(Box::new(f))
    }

    /// Left-nested conjunction; `True` for an empty iterator.
    pub fn conjunction(parts: impl IntoIterator<Item = CtlFormula>) -> CtlFormula {
        parts
            .into_iter()
            .reduce(CtlFormula::and)
            .unwrap_or(CtlFormula::True)
    }

    /// Top-level conjuncts, flattening nested `And` nodes left to right.
    pub fn conjuncts(&self) -> Vec<&CtlFormula> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            match f {
                CtlFormula::And(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                other => out.push(other),
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        match self {
            CtlFormula::True | CtlFormula::False | CtlFormula::Atom { .. } => 1,
            CtlFormula::And(a, b) | CtlFormula::Or(a, b) => 1 + a.depth().max(b.depth()),
            CtlFormula::Not(f)
            | CtlFormula::Ex(f)
            | CtlFormula::Ef(f)
            | CtlFormula::Eg(f)
            | CtlFormula::Ax(f)
            | CtlFormula::Af(f)
            | CtlFormula::Ag(f) => 1 + f.depth(),
        }
    }

    /// Variables referenced by atoms, in first-occurrence order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        self.visit(&mut |f| {
            if let CtlFormula::Atom { var, .. } = f {
                if !out.contains(&var.as_str()) {
                    out.push(var);
                }
            }
        });
        out
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a CtlFormula)) {
        f(self);
        match self {
            CtlFormula::True | CtlFormula::False | CtlFormula::Atom { .. } => {}
            CtlFormula::And(a, b) | CtlFormula::Or(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            CtlFormula::Not(g)
            | CtlFormula::Ex(g)
            | CtlFormula::Ef(g)
            | CtlFormula::Eg(g)
            | CtlFormula::Ax(g)
            | CtlFormula::Af(g)
            | CtlFormula::Ag(g) => g.visit(f),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            CtlFormula::Or(..) => 1,
            CtlFormula::And(..) => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for CtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}

/// Parses a CTL formula.
///
/// `!` and the temporal operators bind tighter than `&`, which binds
/// tighter than `|`; both binary operators associate to the left.
pub fn parse_formula(text: &str) -> Result<CtlFormula, ParseError> {
    let mut cur = Cursor::new(text)?;
    let f = or(&mut cur)?;
    if !cur.at_eof() {
        return Err(cur.unexpected("`&`, `|` or end of input"));
    }
    Ok(f)
}

fn or(cur: &mut Cursor) -> Result<CtlFormula, ParseError> {
    let mut lhs = and(cur)?;
    while cur.eat(&Tok::Bar) {
        lhs = CtlFormula::or(lhs, and(cur)?);
    }
    Ok(lhs)
}

fn and(cur: &mut Cursor) -> Result<CtlFormula, ParseError> {
    let mut lhs = unary(cur)?;
    while cur.eat(&Tok::Amp) {
        lhs = CtlFormula::and(lhs, unary(cur)?);
    }
    Ok(lhs)
}

fn unary(cur: &mut Cursor) -> Result<CtlFormula, ParseError> {
    if cur.eat(&Tok::Bang) {
        return Ok(CtlFormula::not(unary(cur)?));
    }
    let temporal: Option<fn(CtlFormula) -> CtlFormula> = match cur.peek() {
        Tok::Ident(kw) => match kw.as_str() {
            "EX" => Some(CtlFormula::ex),
            "EF" => Some(CtlFormula::ef),
            "EG" => Some(CtlFormula::eg),
            "AX" => Some(CtlFormula::ax),
            "AF" => Some(CtlFormula::af),
            "AG" => Some(CtlFormula::ag),
            _ => None,
        },
        _ => None,
    };
    if let Some(build) = temporal {
        cur.bump();
        return Ok(build(unary(cur)?));
    }
    primary(cur)
}

fn primary(cur: &mut Cursor) -> Result<CtlFormula, ParseError> {
    if cur.eat(&Tok::LParen) {
        let f = or(cur)?;
        cur.expect(Tok::RParen)?;
        return Ok(f);
    }
    if cur.is_keyword("true") {
        cur.bump();
        return Ok(CtlFormula::True);
    }
    if cur.is_keyword("false") {
        cur.bump();
        return Ok(CtlFormula::False);
    }
    if !matches!(cur.peek(), Tok::Ident(_)) {
        return Err(cur.unexpected("atom, `(`, `!` or temporal operator"));
    }
    let var = cur.ident()?;
    let cmp = match cur.peek() {
        Tok::EqEq => Comparator::Eq,
        Tok::NotEq => Comparator::Ne,
        Tok::Lt => Comparator::Lt,
        Tok::Le => Comparator::Le,
        Tok::Gt => Comparator::Gt,
        Tok::Ge => Comparator::Ge,
        other => {
            return Err(cur.error(format!("unknown comparator {other} after `{var}`")));
        }
    };
    cur.bump();
    let value = cur.int()?;
    Ok(CtlFormula::Atom { var, cmp, value })
}

/// Canonical text: binary operators spaced, atoms unspaced, temporal
/// operators always parenthesized.
pub fn print_formula(f: &CtlFormula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f);
    out
}

fn write_formula(out: &mut String, f: &CtlFormula) {
    let wrapped = |out: &mut String, op: &str, inner: &CtlFormula| {
        out.push_str(op);
        out.push('(');
        write_formula(out, inner);
        out.push(')');
    };
    match f {
        CtlFormula::True => out.push_str("true"),
        CtlFormula::False => out.push_str("false"),
        CtlFormula::Atom { var, cmp, value } => {
            out.push_str(var);
            out.push_str(cmp.symbol());
            out.push_str(&value.to_string());
        }
        CtlFormula::Not(inner) => match **inner {
            CtlFormula::True
            | CtlFormula::False
            | CtlFormula::Not(_)
            | CtlFormula::Ex(_)
            | CtlFormula::Ef(_)
            | CtlFormula::Eg(_)
            | CtlFormula::Ax(_)
            | CtlFormula::Af(_)
            | CtlFormula::Ag(_) => {
                out.push('!');
                write_formula(out, inner);
            }
            _ => wrapped(out, "!", inner),
        },
        CtlFormula::And(a, b) | CtlFormula::Or(a, b) => {
            let p = f.precedence();
            let op = if matches!(f, CtlFormula::And(..)) { " & " } else { " | " };
            if a.precedence() < p {
                wrapped(out, "", a);
            } else {
                write_formula(out, a);
            }
            out.push_str(op);
            if b.precedence() <= p {
                wrapped(out, "", b);
            } else {
                write_formula(out, b);
            }
        }
        CtlFormula::Ex(g) => wrapped(out, "EX", g),
        CtlFormula::Ef(g) => wrapped(out, "EF", g),
        CtlFormula::Eg(g) => wrapped(out, "EG", g),
        CtlFormula::Ax(g) => wrapped(out, "AX", g),
        CtlFormula::Af(g) => wrapped(out, "AF", g),
        CtlFormula::Ag(g) => wrapped(out, "AG", g),
    }
}
