//! Conformance checking of execution logs against guarded-command behavior
//! models.
//!
//! A provider declares a finite-state model up front; after a job it submits
//! a log of the states it went through. The log is compiled into a CTL
//! property (row-by-row successor chain, or eventual reachability for
//! partial logs) and checked on the explicit state graph of the model.

pub mod checker;
pub mod conformance;
pub mod graph;
pub mod lang;
pub mod lifecycle;
pub mod model;
pub mod property;
pub mod template;
pub mod town;

pub use checker::{holds_initially, sat, CheckError, StateSet, Verdict};
pub use graph::{build_graph, build_graph_with_budget, GraphError, StateGraph};
pub use lang::{parse_formula, parse_model, print_formula, print_model, CtlFormula};
pub use model::{eval_expr, SystemModel, Valuation};
