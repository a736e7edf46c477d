//! Agent-based system model: bounded integer variables, constants and
//! guarded commands, plus expression evaluation and the one-step
//! successor relation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&",
            BinOp::Or => "|",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }

    pub fn is_arithmetic(self) -> bool {
        self.precedence() >= 5
    }
}

/// Integer comparison shared by model expressions and formula atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub const ALL: [Comparator; 6] = [
        Comparator::Eq,
        Comparator::Ne,
        Comparator::Lt,
        Comparator::Le,
        Comparator::Gt,
        Comparator::Ge,
    ];

    pub fn apply(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        self.as_binop().symbol()
    }

    pub fn as_binop(self) -> BinOp {
        match self {
            Comparator::Eq => BinOp::Eq,
            Comparator::Ne => BinOp::Ne,
            Comparator::Lt => BinOp::Lt,
            Comparator::Le => BinOp::Le,
            Comparator::Gt => BinOp::Gt,
            Comparator::Ge => BinOp::Ge,
        }
    }

    pub fn from_binop(op: BinOp) -> Option<Comparator> {
        Some(match op {
            BinOp::Eq => Comparator::Eq,
            BinOp::Ne => Comparator::Ne,
            BinOp::Lt => Comparator::Lt,
            BinOp::Le => Comparator::Le,
            BinOp::Gt => Comparator::Gt,
            BinOp::Ge => Comparator::Ge,
            _ => return None,
        })
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Expression over variables and constants. Identifiers are resolved at
/// evaluation time against a scope.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Ident(String),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn ident(name: impl Into<String>) -> Expr {
        Expr::Ident(name.into())
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Expr) -> Expr {
        Expr::Not(Box::new(inner))
    }

    /// Every identifier referenced, in first-occurrence order.
    pub fn identifiers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_identifiers(&mut out);
        out
    }

    fn collect_identifiers<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Ident(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            Expr::Not(inner) => inner.collect_identifiers(out),
            Expr::Bin(_, lhs, rhs) => {
                lhs.collect_identifiers(out);
                rhs.collect_identifiers(out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Type {
    Int,
    Bool,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type::Int => "integer",
            Type::Bool => "boolean",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("arithmetic overflow in `{0}`")]
    Overflow(&'static str),
    #[error("type mismatch: expected {expected}, found {found}")]
    TypeMismatch { expected: Type, found: Type },
}

/// A variable assignment, one value per declared variable in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Valuation(pub Vec<i64>);

impl Valuation {
    pub fn values(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// Name lookup used by [`eval_expr`].
pub trait Scope {
    fn lookup(&self, name: &str) -> Option<i64>;
}

/// Variables of a valuation plus constants.
pub struct ValuationScope<'a> {
    pub vars: &'a [VarDecl],
    pub valuation: &'a Valuation,
    pub consts: &'a BTreeMap<String, i64>,
}

impl Scope for ValuationScope<'_> {
    fn lookup(&self, name: &str) -> Option<i64> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .map(|i| self.valuation.0[i])
            .or_else(|| self.consts.get(name).copied())
    }
}

/// Evaluates `expr` under `scope`.
pub fn eval_expr(expr: &Expr, scope: &dyn Scope) -> Result<Value, EvalError> {
    match expr {
        Expr::Int(n) => Ok(Value::Int(*n)),
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Ident(name) => scope
            .lookup(name)
            .map(Value::Int)
            .ok_or_else(|| EvalError::UnknownIdentifier(name.clone())),
        Expr::Not(inner) => Ok(Value::Bool(!expect_bool(eval_expr(inner, scope)?)?)),
        Expr::Bin(op, lhs, rhs) => {
            let l = eval_expr(lhs, scope)?;
            // short-circuit keeps evaluation total on guards like `k<N & ...`
            match op {
                BinOp::And if !expect_bool(l)? => return Ok(Value::Bool(false)),
                BinOp::Or if expect_bool(l)? => return Ok(Value::Bool(true)),
                _ => {}
            }
            let r = eval_expr(rhs, scope)?;
            apply_binop(*op, l, r)
        }
    }
}

fn expect_bool(v: Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        Value::Int(_) => Err(EvalError::TypeMismatch {
            expected: Type::Bool,
            found: Type::Int,
        }),
    }
}

fn expect_int(v: Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(n) => Ok(n),
        Value::Bool(_) => Err(EvalError::TypeMismatch {
            expected: Type::Int,
            found: Type::Bool,
        }),
    }
}

fn apply_binop(op: BinOp, l: Value, r: Value) -> Result<Value, EvalError> {
    if op == BinOp::And || op == BinOp::Or {
        // the left operand already decided the short-circuit case
        expect_bool(l)?;
        return Ok(Value::Bool(expect_bool(r)?));
    }
    let (a, b) = (expect_int(l)?, expect_int(r)?);
    let overflow = || EvalError::Overflow(op.symbol());
    Ok(match op {
        BinOp::Add => Value::Int(a.checked_add(b).ok_or_else(overflow)?),
        BinOp::Sub => Value::Int(a.checked_sub(b).ok_or_else(overflow)?),
        BinOp::Mul => Value::Int(a.checked_mul(b).ok_or_else(overflow)?),
        cmp => Value::Bool(
            Comparator::from_binop(cmp)
                .expect("remaining operators are comparisons")
                .apply(a, b),
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarDecl {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
    pub init: i64,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, lo: i64, hi: i64, init: i64) -> VarDecl {
        VarDecl {
            name: name.into(),
            lo,
            hi,
            init,
        }
    }

    pub fn contains(&self, value: i64) -> bool {
        self.lo <= value && value <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GuardedCommand {
    pub label: Option<String>,
    pub guard: Expr,
    pub updates: Vec<(String, Expr)>,
}

impl GuardedCommand {
    pub fn describe(&self, index: usize) -> String {
        match &self.label {
            Some(label) => format!("command #{} [{}]", index + 1, label),
            None => format!("command #{}", index + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("model declares no variables")]
    NoVariables,
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
    #[error("empty domain for `{name}`: {lo}..{hi}")]
    EmptyDomain { name: String, lo: i64, hi: i64 },
    #[error("init out of bounds: `{name}` init {init} not in {lo}..{hi}")]
    InitOutOfBounds {
        name: String,
        init: i64,
        lo: i64,
        hi: i64,
    },
    #[error("unknown identifier `{name}` in {context}")]
    UnknownIdentifier { name: String, context: String },
    #[error("`{0}` is a constant and cannot be updated")]
    AssignToConstant(String),
    #[error("{context}: variable `{var}` updated more than once")]
    DuplicateUpdate { context: String, var: String },
    #[error("{context}: expected {expected} expression, found {found}")]
    Type {
        context: String,
        expected: Type,
        found: Type,
    },
    #[error("{context}: update drives `{var}` to {value}, outside {lo}..{hi}")]
    OutOfDomain {
        context: String,
        var: String,
        value: i64,
        lo: i64,
        hi: i64,
    },
    #[error("{context}: {source}")]
    Eval {
        context: String,
        #[source]
        source: EvalError,
    },
}

/// A finite-state agent-based system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemModel {
    pub constants: BTreeMap<String, i64>,
    pub variables: Vec<VarDecl>,
    /// Optional constraint that widens the initial set beyond the declared
    /// `init` valuation.
    pub init_constraint: Option<Expr>,
    pub commands: Vec<GuardedCommand>,
}

impl SystemModel {
    /// Builds a model after checking declarations, name resolution and types.
    pub fn new(
        constants: BTreeMap<String, i64>,
        variables: Vec<VarDecl>,
        init_constraint: Option<Expr>,
        commands: Vec<GuardedCommand>,
    ) -> Result<SystemModel, ModelError> {
        let model = SystemModel {
            constants,
            variables,
            init_constraint,
            commands,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.variables.is_empty() {
            return Err(ModelError::NoVariables);
        }
        let mut seen = BTreeSet::new();
        for name in self.constants.keys() {
            seen.insert(name.as_str());
        }
        for var in &self.variables {
            if !seen.insert(var.name.as_str()) {
                return Err(ModelError::Duplicate(var.name.clone()));
            }
            if var.lo > var.hi {
                return Err(ModelError::EmptyDomain {
                    name: var.name.clone(),
                    lo: var.lo,
                    hi: var.hi,
                });
            }
            if !var.contains(var.init) {
                return Err(ModelError::InitOutOfBounds {
                    name: var.name.clone(),
                    init: var.init,
                    lo: var.lo,
                    hi: var.hi,
                });
            }
        }
        if let Some(init) = &self.init_constraint {
            self.check_expr(init, Type::Bool, "init constraint")?;
        }
        for (i, cmd) in self.commands.iter().enumerate() {
            let context = cmd.describe(i);
            self.check_expr(&cmd.guard, Type::Bool, &format!("{context} guard"))?;
            let mut updated = BTreeSet::new();
            for (var, rhs) in &cmd.updates {
                if self.var_index(var).is_none() {
                    if self.constants.contains_key(var) {
                        return Err(ModelError::AssignToConstant(var.clone()));
                    }
                    return Err(ModelError::UnknownIdentifier {
                        name: var.clone(),
                        context: context.clone(),
                    });
                }
                if !updated.insert(var.as_str()) {
                    return Err(ModelError::DuplicateUpdate {
                        context,
                        var: var.clone(),
                    });
                }
                self.check_expr(rhs, Type::Int, &format!("{context} update of `{var}`"))?;
            }
        }
        Ok(())
    }

    fn check_expr(&self, expr: &Expr, expected: Type, context: &str) -> Result<(), ModelError> {
        let found = self.type_of(expr, context)?;
        if found != expected {
            return Err(ModelError::Type {
                context: context.to_string(),
                expected,
                found,
            });
        }
        Ok(())
    }

    fn type_of(&self, expr: &Expr, context: &str) -> Result<Type, ModelError> {
        Ok(match expr {
            Expr::Int(_) => Type::Int,
            Expr::Bool(_) => Type::Bool,
            Expr::Ident(name) => {
                if self.var_index(name).is_none() && !self.constants.contains_key(name) {
                    return Err(ModelError::UnknownIdentifier {
                        name: name.clone(),
                        context: context.to_string(),
                    });
                }
                Type::Int
            }
            Expr::Not(inner) => {
                self.check_expr(inner, Type::Bool, context)?;
                Type::Bool
            }
            Expr::Bin(op, lhs, rhs) => {
                let operand = if matches!(op, BinOp::And | BinOp::Or) {
                    Type::Bool
                } else {
                    Type::Int
                };
                self.check_expr(lhs, operand, context)?;
                self.check_expr(rhs, operand, context)?;
                if op.is_arithmetic() {
                    Type::Int
                } else {
                    Type::Bool
                }
            }
        })
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn var_names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    /// The valuation given by the per-variable `init` declarations.
    pub fn declared_init(&self) -> Valuation {
        Valuation(self.variables.iter().map(|v| v.init).collect())
    }

    pub fn in_domain(&self, v: &Valuation) -> bool {
        v.0.len() == self.variables.len()
            && self.variables.iter().zip(&v.0).all(|(d, &x)| d.contains(x))
    }

    pub fn eval(&self, expr: &Expr, v: &Valuation) -> Result<Value, EvalError> {
        eval_expr(
            expr,
            &ValuationScope {
                vars: &self.variables,
                valuation: v,
                consts: &self.constants,
            },
        )
    }

    /// Indices of the commands whose guards hold under `v`.
    pub fn enabled_commands(&self, v: &Valuation) -> Result<Vec<usize>, ModelError> {
        Compiled::new(self).enabled(v)
    }

    /// Successor valuations of `v`, one per enabled command, sorted and
    /// deduplicated. A state with no enabled command is its own successor.
    pub fn step(&self, v: &Valuation) -> Result<Vec<Valuation>, ModelError> {
        Compiled::new(self).step(v)
    }
}

/// Identifier-resolved form of a model used on hot paths.
pub(crate) struct Compiled<'m> {
    model: &'m SystemModel,
    commands: Vec<CompiledCommand>,
}

struct CompiledCommand {
    guard: CExpr,
    updates: Vec<(usize, CExpr)>,
}

enum CExpr {
    Int(i64),
    Bool(bool),
    Var(usize),
    Not(Box<CExpr>),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
}

impl CExpr {
    fn compile(expr: &Expr, model: &SystemModel, index: &HashMap<&str, usize>) -> CExpr {
        match expr {
            Expr::Int(n) => CExpr::Int(*n),
            Expr::Bool(b) => CExpr::Bool(*b),
            Expr::Ident(name) => match index.get(name.as_str()) {
                Some(&i) => CExpr::Var(i),
                // validated models only reference declared names
                None => CExpr::Int(model.constants[name]),
            },
            Expr::Not(inner) => CExpr::Not(Box::new(CExpr::compile(inner, model, index))),
            Expr::Bin(op, l, r) => CExpr::Bin(
                *op,
                Box::new(CExpr::compile(l, model, index)),
                Box::new(CExpr::compile(r, model, index)),
            ),
        }
    }

    fn eval(&self, v: &[i64]) -> Result<Value, EvalError> {
        match self {
            CExpr::Int(n) => Ok(Value::Int(*n)),
            CExpr::Bool(b) => Ok(Value::Bool(*b)),
            CExpr::Var(i) => Ok(Value::Int(v[*i])),
            CExpr::Not(inner) => Ok(Value::Bool(!expect_bool(inner.eval(v)?)?)),
            CExpr::Bin(op, lhs, rhs) => {
                let l = lhs.eval(v)?;
                match op {
                    BinOp::And if !expect_bool(l)? => return Ok(Value::Bool(false)),
                    BinOp::Or if expect_bool(l)? => return Ok(Value::Bool(true)),
                    _ => {}
                }
                apply_binop(*op, l, rhs.eval(v)?)
            }
        }
    }
}

impl<'m> Compiled<'m> {
    pub(crate) fn new(model: &'m SystemModel) -> Compiled<'m> {
        let index: HashMap<&str, usize> = model
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.as_str(), i))
            .collect();
        let commands = model
            .commands
            .iter()
            .map(|cmd| CompiledCommand {
                guard: CExpr::compile(&cmd.guard, model, &index),
                updates: cmd
                    .updates
                    .iter()
                    .map(|(var, rhs)| (index[var.as_str()], CExpr::compile(rhs, model, &index)))
                    .collect(),
            })
            .collect();
        Compiled { model, commands }
    }

    pub(crate) fn eval_bool(&self, expr: &Expr, v: &Valuation) -> Result<bool, EvalError> {
        expect_bool(self.model.eval(expr, v)?)
    }

    /// Indices of commands whose guard holds under `v`.
    pub(crate) fn enabled(&self, v: &Valuation) -> Result<Vec<usize>, ModelError> {
        let mut out = Vec::new();
        for (i, cmd) in self.commands.iter().enumerate() {
            let on = cmd
                .guard
                .eval(&v.0)
                .and_then(expect_bool)
                .map_err(|source| ModelError::Eval {
                    context: self.model.commands[i].describe(i),
                    source,
                })?;
            if on {
                out.push(i);
            }
        }
        Ok(out)
    }

    pub(crate) fn apply(&self, index: usize, v: &Valuation) -> Result<Valuation, ModelError> {
        let cmd = &self.commands[index];
        let context = || self.model.commands[index].describe(index);
        let mut next = v.clone();
        for (var, rhs) in &cmd.updates {
            let value = rhs
                .eval(&v.0)
                .and_then(expect_int)
                .map_err(|source| ModelError::Eval {
                    context: context(),
                    source,
                })?;
            let decl = &self.model.variables[*var];
            if !decl.contains(value) {
                return Err(ModelError::OutOfDomain {
                    context: context(),
                    var: decl.name.clone(),
                    value,
                    lo: decl.lo,
                    hi: decl.hi,
                });
            }
            next.0[*var] = value;
        }
        Ok(next)
    }

    pub(crate) fn step(&self, v: &Valuation) -> Result<Vec<Valuation>, ModelError> {
        let enabled = self.enabled(v)?;
        if enabled.is_empty() {
            return Ok(vec![v.clone()]);
        }
        let mut succ = enabled
            .into_iter()
            .map(|i| self.apply(i, v))
            .collect::<Result<Vec<_>, _>>()?;
        succ.sort();
        succ.dedup();
        Ok(succ)
    }
}
