//! End-to-end check of a log against a model: parse, build the state graph,
//! compile the log property, evaluate it on the initial states.

use std::fmt;

use crate::checker::holds_initially;
use crate::graph::{build_graph_with_budget, GraphError, StateGraph, DEFAULT_STATE_BUDGET};
use crate::lang::{parse_model, print_formula};
use crate::model::SystemModel;
use crate::property::{parse_log, property, BaseMode, ExecutionLog, PropertyKind};

/// Why a result was not confirmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    ModelParse,
    LogParse,
    VariableMismatch,
    StateExplosion,
    ModelError,
    PropertyFails,
    MissingArtifact,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::ModelParse => "model-parse",
            RejectReason::LogParse => "log-parse",
            RejectReason::VariableMismatch => "variable-mismatch",
            RejectReason::StateExplosion => "state explosion",
            RejectReason::ModelError => "model-error",
            RejectReason::PropertyFails => "property-fails",
            RejectReason::MissingArtifact => "missing-artifact",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub reason: RejectReason,
    pub detail: String,
}

impl Rejection {
    pub fn new(reason: RejectReason, detail: impl Into<String>) -> Rejection {
        Rejection {
            reason,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.reason, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub kind: PropertyKind,
    pub base: BaseMode,
    pub state_budget: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            kind: PropertyKind::Strong,
            base: BaseMode::Faithful,
            state_budget: DEFAULT_STATE_BUDGET,
        }
    }
}

impl CheckOptions {
    pub fn new(kind: PropertyKind, base: BaseMode) -> CheckOptions {
        CheckOptions {
            kind,
            base,
            ..CheckOptions::default()
        }
    }
}

/// Log columns must equal the model variables, names and order.
pub fn check_columns(model_vars: &[String], log: &ExecutionLog) -> Result<(), Rejection> {
    if model_vars != log.variables() {
        return Err(Rejection::new(
            RejectReason::VariableMismatch,
            format!(
                "log columns ({}) differ from model variables ({})",
                log.variables().join(","),
                model_vars.join(",")
            ),
        ));
    }
    Ok(())
}

/// Checks a log on an already built graph.
pub fn check_log_on_graph(
    graph: &StateGraph,
    log: &ExecutionLog,
    kind: PropertyKind,
    base: BaseMode,
) -> Result<(), Rejection> {
    check_columns(graph.var_names(), log)?;
    let formula = property(log, kind, base)
        .map_err(|e| Rejection::new(RejectReason::LogParse, e.to_string()))?;
    let verdict = holds_initially(graph, &formula)
        .map_err(|e| Rejection::new(RejectReason::VariableMismatch, e.to_string()))?;
    if verdict.holds {
        return Ok(());
    }
    let detail = match verdict.violations.first() {
        Some(v) => format!(
            "{kind} property fails; initial state {} violates conjunct #{} `{}`",
            graph.state(v.state),
            v.conjunct + 1,
            truncate(&v.conjunct_text, 120)
        ),
        None => format!("{kind} property fails: {}", truncate(&print_formula(&formula), 120)),
    };
    Err(Rejection::new(RejectReason::PropertyFails, detail))
}

fn truncate(s: &str, max: usize) -> String {
    if s.chars().count() <= max {
        s.to_string()
    } else {
        let cut: String = s.chars().take(max).collect();
        format!("{cut}...")
    }
}

pub fn build_for_check(model: &SystemModel, budget: usize) -> Result<StateGraph, Rejection> {
    build_graph_with_budget(model, budget).map_err(|e| match e {
        GraphError::StateExplosion { .. } => {
            Rejection::new(RejectReason::StateExplosion, e.to_string())
        }
        GraphError::Model(m) => Rejection::new(RejectReason::ModelError, m.to_string()),
    })
}

/// Validates log text against model text; every failure mode is a
/// [`Rejection`], never a panic.
pub fn check_texts(model_text: &str, log_text: &str, opts: CheckOptions) -> Result<(), Rejection> {
    let model = parse_model(model_text)
        .map_err(|e| Rejection::new(RejectReason::ModelParse, e.to_string()))?;
    let log =
        parse_log(log_text).map_err(|e| Rejection::new(RejectReason::LogParse, e.to_string()))?;
    check_columns(&model.var_names(), &log)?;
    let graph = build_for_check(&model, opts.state_budget)?;
    check_log_on_graph(&graph, &log, opts.kind, opts.base)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN2: &str = "var x : 0..1 init 0; [] x==0 -> x'=1;";

    #[test]
    fn honest_and_forged_logs() {
        let opts = CheckOptions::default();
        assert_eq!(check_texts(CHAIN2, "x\n0\n1\n1\n", opts), Ok(()));
        let forged = check_texts(CHAIN2, "x\n0\n0\n1\n", opts).unwrap_err();
        assert_eq!(forged.reason, RejectReason::PropertyFails);
    }

    #[test]
    fn mismatched_and_malformed_inputs() {
        let opts = CheckOptions::default();
        let r = check_texts(CHAIN2, "y\n0\n1\n1\n", opts).unwrap_err();
        assert_eq!(r.reason, RejectReason::VariableMismatch);
        let r = check_texts(CHAIN2, "x\n0\n", opts).unwrap_err();
        assert_eq!(r.reason, RejectReason::LogParse);
        let r = check_texts("var x", "x\n0\n0\n", opts).unwrap_err();
        assert_eq!(r.reason, RejectReason::ModelParse);
    }

    #[test]
    fn budget_overflow_rejects() {
        let counter = "var x : 0..50 init 0; [] x<50 -> x'=x+1;";
        let opts = CheckOptions {
            state_budget: 10,
            ..CheckOptions::default()
        };
        let r = check_texts(counter, "x\n0\n1\n1\n", opts).unwrap_err();
        assert_eq!(r.reason, RejectReason::StateExplosion);
        assert_eq!(r.reason.code(), "state explosion");
    }
}
