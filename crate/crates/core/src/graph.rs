//! Explicit state graph (Kripke structure) built by breadth-first closure.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::model::{Compiled, ModelError, SystemModel, Valuation};

pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("state explosion: more than {budget} states")]
    StateExplosion { budget: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Reachable states of a model with a total transition relation.
///
/// State indices follow BFS discovery order, seeded by the sorted initial
/// valuations and expanding successors in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGraph {
    var_names: Vec<String>,
    states: Vec<Valuation>,
    initial: Vec<usize>,
    succ: Vec<Vec<usize>>,
}

impl StateGraph {
    /// Assembles a graph from raw parts. Deadlocked states receive a
    /// self-loop; successor lists are sorted and deduplicated.
    ///
    /// Panics if an index is out of range or a valuation has the wrong arity.
    pub fn from_parts(
        var_names: Vec<String>,
        states: Vec<Valuation>,
        initial: Vec<usize>,
        succ: Vec<Vec<usize>>,
    ) -> StateGraph {
        assert_eq!(states.len(), succ.len(), "one successor list per state");
        let n = states.len();
        for v in &states {
            assert_eq!(v.0.len(), var_names.len(), "valuation arity");
        }
        let mut initial = initial;
        initial.sort_unstable();
        initial.dedup();
        assert!(initial.iter().all(|&i| i < n), "initial index out of range");
        let succ = succ
            .into_iter()
            .enumerate()
            .map(|(s, mut out)| {
                assert!(out.iter().all(|&t| t < n), "successor index out of range");
                out.sort_unstable();
                out.dedup();
                if out.is_empty() {
                    out.push(s);
                }
                out
            })
            .collect();
        StateGraph {
            var_names,
            states,
            initial,
            succ,
        }
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|v| v == name)
    }

    pub fn states(&self) -> &[Valuation] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &Valuation {
        &self.states[index]
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn successors(&self, index: usize) -> &[usize] {
        &self.succ[index]
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// Predecessor lists, the transpose of the successor relation.
    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.states.len()];
        for (s, out) in self.succ.iter().enumerate() {
            for &t in out {
                pred[t].push(s);
            }
        }
        pred
    }

    pub fn index_of(&self, v: &Valuation) -> Option<usize> {
        self.states.iter().position(|s| s == v)
    }
}

/// Builds the reachable state graph with the default budget.
pub fn build_graph(model: &SystemModel) -> Result<StateGraph, GraphError> {
    build_graph_with_budget(model, DEFAULT_STATE_BUDGET)
}

pub fn build_graph_with_budget(
    model: &SystemModel,
    budget: usize,
) -> Result<StateGraph, GraphError> {
    let compiled = Compiled::new(model);
    let initial_vals = initial_valuations(model, &compiled, budget)?;

    let mut index: HashMap<Valuation, usize> = HashMap::new();
    let mut states = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |v: Valuation,
                      states: &mut Vec<Valuation>,
                      queue: &mut VecDeque<usize>|
     -> Result<usize, GraphError> {
        if let Some(&i) = index.get(&v) {
            return Ok(i);
        }
        if states.len() >= budget {
            return Err(GraphError::StateExplosion { budget });
        }
        let i = states.len();
        index.insert(v.clone(), i);
        states.push(v);
        queue.push_back(i);
        Ok(i)
    };

    let mut initial = Vec::with_capacity(initial_vals.len());
    for v in initial_vals {
        initial.push(intern(v, &mut states, &mut queue)?);
    }
    let mut succ: Vec<Vec<usize>> = Vec::new();
    while let Some(s) = queue.pop_front() {
        let current = states[s].clone();
        let mut out = Vec::new();
        for next in compiled.step(&current)? {
            out.push(intern(next, &mut states, &mut queue)?);
        }
        if succ.len() <= s {
            succ.resize(s + 1, Vec::new());
        }
        succ[s] = out;
    }
    Ok(StateGraph::from_parts(model.var_names(), states, initial, succ))
}

/// Declared init valuation plus every in-domain valuation satisfying the
/// optional init constraint, sorted.
fn initial_valuations(
    model: &SystemModel,
    compiled: &Compiled<'_>,
    budget: usize,
) -> Result<Vec<Valuation>, GraphError> {
    let mut set = BTreeSet::new();
    set.insert(model.declared_init());
    let Some(constraint) = &model.init_constraint else {
        return Ok(set.into_iter().collect());
    };
    let space = model
        .variables
        .iter()
        .try_fold(1usize, |acc, v| {
            usize::try_from(v.hi - v.lo + 1)
                .ok()
                .and_then(|n| acc.checked_mul(n))
        })
        .filter(|&n| n <= budget)
        .ok_or(GraphError::StateExplosion { budget })?;
    let mut current: Vec<i64> = model.variables.iter().map(|v| v.lo).collect();
    for _ in 0..space {
        let v = Valuation(current.clone());
        let ok = compiled
            .eval_bool(constraint, &v)
            .map_err(|source| ModelError::Eval {
                context: "init constraint".into(),
                source,
            })?;
        if ok {
            set.insert(v);
        }
        // odometer increment, last variable fastest
        for (slot, decl) in current.iter_mut().zip(&model.variables).rev() {
            if *slot < decl.hi {
                *slot += 1;
                break;
            }
            *slot = decl.lo;
        }
    }
    Ok(set.into_iter().collect())
}
