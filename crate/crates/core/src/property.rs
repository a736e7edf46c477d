//! Execution logs and their compilation into CTL properties.
//!
//! Row `i` of a log becomes the conjunction `c(i)` of `var==value` atoms in
//! header order. The strong property chains consecutive rows with `EX`, the
//! weak one with `EF`; both end by requiring the final row to hold forever.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::lang::{is_identifier, CtlFormula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogError {
    #[error("line {line}: empty header")]
    EmptyHeader { line: usize },
    #[error("line 1: `{0}` is not a valid variable name")]
    BadHeader(String),
    #[error("line 1: duplicate header name `{0}`")]
    DuplicateHeader(String),
    #[error("ragged row at line {line}: expected {expected} values, found {found}")]
    Ragged {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: `{cell}` is not an integer")]
    NotInteger { line: usize, cell: String },
    #[error("fewer than 2 rows (found {0})")]
    TooFewRows(usize),
    #[error("row {index} out of range 1..={rows}")]
    RowOutOfRange { index: usize, rows: usize },
}

/// A table of `n` rows over `m` named variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionLog {
    variables: Vec<String>,
    rows: Vec<Vec<i64>>,
}

impl ExecutionLog {
    /// Checks the invariants: non-empty unique header, rectangular rows, at
    /// least two rows.
    pub fn new(variables: Vec<String>, rows: Vec<Vec<i64>>) -> Result<ExecutionLog, LogError> {
        if variables.is_empty() {
            return Err(LogError::EmptyHeader { line: 1 });
        }
        for (i, name) in variables.iter().enumerate() {
            if !is_identifier(name) {
                return Err(LogError::BadHeader(name.clone()));
            }
            if variables[..i].contains(name) {
                return Err(LogError::DuplicateHeader(name.clone()));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != variables.len() {
                return Err(LogError::Ragged {
                    line: i + 2,
                    expected: variables.len(),
                    found: row.len(),
                });
            }
        }
        if rows.len() < 2 {
            return Err(LogError::TooFewRows(rows.len()));
        }
        Ok(ExecutionLog { variables, rows })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `r(i, j)` with 1-based indices.
    pub fn cell(&self, row: usize, col: usize) -> Option<i64> {
        self.rows.get(row.checked_sub(1)?)?.get(col.checked_sub(1)?).copied()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.variables.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(i64::to_string).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Whether the last two rows differ, which makes faithful-mode
    /// properties unsatisfiable.
    pub fn faithful_warning(&self) -> Option<String> {
        let n = self.rows.len();
        (n >= 2 && self.rows[n - 2] != self.rows[n - 1]).then(|| {
            format!(
                "rows {} and {n} differ; the faithful base case requires both at one state \
                 and cannot be satisfied (duplicate the final row or use --base corrected)",
                n - 1
            )
        })
    }
}

/// Parses a header line of identifiers followed by rows of integers. No
/// quoting; LF or CRLF endings; trailing newline optional.
pub fn parse_log(text: &str) -> Result<ExecutionLog, LogError> {
    let mut lines: Vec<&str> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    let header = lines.first().copied().unwrap_or("");
    if header.trim().is_empty() {
        return Err(LogError::EmptyHeader { line: 1 });
    }
    let variables: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::with_capacity(lines.len().saturating_sub(1));
    for (i, line) in lines.iter().enumerate().skip(1) {
        let lineno = i + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != variables.len() {
            return Err(LogError::Ragged {
                line: lineno,
                expected: variables.len(),
                found: cells.len(),
            });
        }
        let row = cells
            .iter()
            .map(|c| {
                c.trim().parse::<i64>().map_err(|_| LogError::NotInteger {
                    line: lineno,
                    cell: c.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    ExecutionLog::new(variables, rows)
}

/// Base case of the row recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaseMode {
    /// `c(n-1) ∧ AG c(n)`: the last two rows pinned at one state.
    #[default]
    Faithful,
    /// `c(n) ∧ AG c(n)`, chained from row `n-1` by one more step.
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropertyKind {
    /// Consecutive rows are one transition apart.
    #[default]
    Strong,
    /// Consecutive rows are connected by some path.
    Weak,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {what} `{value}`")]
pub struct ParseModeError {
    what: &'static str,
    value: String,
}

impl FromStr for BaseMode {
    type Err = ParseModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "faithful" => Ok(BaseMode::Faithful),
            "corrected" => Ok(BaseMode::Corrected),
            _ => Err(ParseModeError {
                what: "base mode",
                value: s.into(),
            }),
        }
    }
}

impl FromStr for PropertyKind {
    type Err = ParseModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strong" => Ok(PropertyKind::Strong),
            "weak" => Ok(PropertyKind::Weak),
            _ => Err(ParseModeError {
                what: "property type",
                value: s.into(),
            }),
        }
    }
}

impl fmt::Display for BaseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseMode::Faithful => "faithful",
            BaseMode::Corrected => "corrected",
        })
    }
}

impl fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PropertyKind::Strong => "strong",
            PropertyKind::Weak => "weak",
        })
    }
}

/// `c(i)`: conjunction of `v_j == r(i, j)` over all columns, 1-based `i`.
pub fn row_conjunction(log: &ExecutionLog, i: usize) -> Result<CtlFormula, LogError> {
    let row = i
        .checked_sub(1)
        .and_then(|k| log.rows.get(k))
        .ok_or(LogError::RowOutOfRange {
            index: i,
            rows: log.rows.len(),
        })?;
    Ok(CtlFormula::conjunction(
        log.variables
            .iter()
            .zip(row)
            .map(|(var, &value)| CtlFormula::eq(var.clone(), value)),
    ))
}

pub fn strong_property(log: &ExecutionLog, base: BaseMode) -> Result<CtlFormula, LogError> {
    property(log, PropertyKind::Strong, base)
}

pub fn weak_property(log: &ExecutionLog, base: BaseMode) -> Result<CtlFormula, LogError> {
    property(log, PropertyKind::Weak, base)
}

/// Unrolls the row recursion from the base case outwards.
pub fn property(
    log: &ExecutionLog,
    kind: PropertyKind,
    base: BaseMode,
) -> Result<CtlFormula, LogError> {
    let n = log.rows.len();
    let c = |i: usize| row_conjunction(log, i);
    let step = |f: CtlFormula| match kind {
        PropertyKind::Strong => CtlFormula::ex(f),
        PropertyKind::Weak => CtlFormula::ef(f),
    };
    // `first` is the earliest row already folded into `acc`
    let (mut acc, first) = match base {
        BaseMode::Faithful => {
            if n < 2 {
                return Err(LogError::TooFewRows(n));
            }
            (CtlFormula::and(c(n - 1)?, CtlFormula::ag(c(n)?)), n - 1)
        }
        BaseMode::Corrected => {
            if n < 1 {
                return Err(LogError::TooFewRows(n));
            }
            (CtlFormula::and(c(n)?, CtlFormula::ag(c(n)?)), n)
        }
    };
    for row in (1..first).rev() {
        acc = CtlFormula::and(c(row)?, step(acc));
    }
    Ok(acc)
}
