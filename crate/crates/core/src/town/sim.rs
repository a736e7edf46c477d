use std::fmt;
use std::str::FromStr;

use crate::property::ExecutionLog;

use super::{Action, Heading, Objective, Start, TownError, TownMap};

pub const LOG_COLUMNS: [&str; 4] = ["x", "y", "d", "k"];

/// A deliberate deviation from the honest run. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fault {
    /// Take a wrong action at the j-th tagged stop.
    WrongTurn(usize),
    /// Overwrite one cell of the honest log.
    Forge { row: usize, var: String, value: i64 },
    /// Delete one interior row.
    Skip(usize),
    /// Drop the last j rows.
    Truncate(usize),
}

impl FromStr for Fault {
    type Err = TownError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| TownError::Fault(format!("`{s}`: {msg}"));
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| bad("expected KIND:ARGS"))?;
        let index = |a: &str| -> Result<usize, TownError> {
            a.trim().parse().map_err(|_| bad("index must be a positive integer"))
        };
        match kind {
            "wrong-turn" => Ok(Fault::WrongTurn(index(args)?)),
            "skip" => Ok(Fault::Skip(index(args)?)),
            "truncate" => Ok(Fault::Truncate(index(args)?)),
            "forge" => {
                let parts: Vec<&str> = args.split(',').map(str::trim).collect();
                let [row, var, value] = parts[..] else {
                    return Err(bad("expected forge:ROW,VAR,VALUE"));
                };
                Ok(Fault::Forge {
                    row: index(row)?,
                    var: var.to_string(),
                    value: value.parse().map_err(|_| bad("value must be an integer"))?,
                })
            }
            _ => Err(bad("unknown fault kind (wrong-turn, forge, skip, truncate)")),
        }
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::WrongTurn(j) => write!(f, "wrong-turn:{j}"),
            Fault::Forge { row, var, value } => write!(f, "forge:{row},{var},{value}"),
            Fault::Skip(i) => write!(f, "skip:{i}"),
            Fault::Truncate(j) => write!(f, "truncate:{j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simulation {
    pub log: ExecutionLog,
    /// Whether the robot reached the end of the objective.
    pub completed: bool,
    pub warnings: Vec<String>,
}

/// Actions tried instead of `intended`, in order.
fn alternatives(intended: Action) -> [Action; 2] {
    match intended {
        Action::Left => [Action::Right, Action::Forward],
        Action::Right => [Action::Forward, Action::Left],
        Action::Forward => [Action::Left, Action::Right],
    }
}

/// Drives the robot from `start` until the objective is done or it cannot
/// move, logging `(x, y, d, k)` per state and repeating the final row once.
pub fn simulate(
    map: &TownMap,
    objective: &Objective,
    start: Start,
    fault: Option<&Fault>,
) -> Result<Simulation, TownError> {
    let mut d = map.check_start(start)?;
    objective.check_against(map)?;
    let steps = objective.len();
    let wrong_at = match fault {
        Some(Fault::WrongTurn(j)) if *j < 1 || *j > steps => {
            return Err(TownError::Fault(format!(
                "wrong-turn:{j} outside 1..={steps} tagged stops"
            )));
        }
        Some(Fault::WrongTurn(j)) => Some(*j),
        _ => None,
    };

    let (mut x, mut y, mut k) = (start.x, start.y, 0usize);
    let row = |x: i64, y: i64, d: Heading, k: usize| vec![x, y, d.index(), k as i64];
    let mut rows = vec![row(x, y, d, k)];
    let mut warnings = Vec::new();
    while k < steps {
        let tag = map.tag_at(x, y).expect("robot stays on nodes");
        if tag == 0 {
            let Some((nx, ny)) = map.step(x, y, d) else {
                warnings.push(format!("dead end at ({x},{y}) heading {}", d.name()));
                break;
            };
            (x, y) = (nx, ny);
        } else {
            let expected = objective.sequence[k];
            if tag != expected.tag {
                warnings.push(format!(
                    "halted at tag {tag} while expecting tag {}",
                    expected.tag
                ));
                break;
            }
            let mut action = expected.action;
            if wrong_at == Some(k + 1) {
                let alts = alternatives(action);
                action = alts
                    .into_iter()
                    .find(|a| map.step(x, y, d.turn(*a)).is_some())
                    .unwrap_or(alts[0]);
            }
            let nd = d.turn(action);
            let Some((nx, ny)) = map.step(x, y, nd) else {
                warnings.push(format!(
                    "{action} at tag {tag} leads off the map; run stopped"
                ));
                break;
            };
            (x, y, d, k) = (nx, ny, nd, k + 1);
        }
        rows.push(row(x, y, d, k));
    }
    let completed = k == steps;
    if let Some(j) = wrong_at {
        if k < j - 1 {
            warnings.push(format!("tagged stop {j} never reached; no wrong turn taken"));
        }
    }
    rows.push(rows.last().expect("start row").clone());

    apply_log_fault(&mut rows, fault)?;
    let columns = LOG_COLUMNS.iter().map(|c| c.to_string()).collect();
    let log = ExecutionLog::new(columns, rows).map_err(|e| TownError::Fault(e.to_string()))?;
    Ok(Simulation {
        log,
        completed,
        warnings,
    })
}

fn apply_log_fault(rows: &mut Vec<Vec<i64>>, fault: Option<&Fault>) -> Result<(), TownError> {
    let n = rows.len();
    match fault {
        None | Some(Fault::WrongTurn(_)) => {}
        Some(Fault::Forge { row, var, value }) => {
            let col = LOG_COLUMNS
                .iter()
                .position(|c| c == var)
                .ok_or_else(|| TownError::Fault(format!("unknown log column `{var}`")))?;
            if *row < 1 || *row > n {
                return Err(TownError::Fault(format!("forge row {row} outside 1..={n}")));
            }
            rows[row - 1][col] = *value;
        }
        Some(Fault::Skip(i)) => {
            if *i <= 1 || *i + 1 >= n {
                return Err(TownError::Fault(format!(
                    "skip:{i} needs an interior row, 1 < i < {} (log has {n} rows)",
                    n.saturating_sub(1)
                )));
            }
            rows.remove(i - 1);
        }
        Some(Fault::Truncate(j)) => {
            if *j < 1 || *j + 2 > n {
                return Err(TownError::Fault(format!(
                    "truncate:{j} must leave at least 2 of {n} rows"
                )));
            }
            rows.truncate(n - j);
        }
    }
    Ok(())
}
