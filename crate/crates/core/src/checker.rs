//! Explicit-state CTL model checking by bottom-up labeling.
//!
//! Existential operators are computed directly (pre-image, backward
//! reachability, greatest-fixpoint pruning); universal ones through their
//! existential duals.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::graph::StateGraph;
use crate::lang::CtlFormula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("formula references unknown variable `{0}`")]
    UnknownVariable(String),
}

/// Membership bitset over the state indices of one graph.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    len: usize,
    words: Vec<u64>,
}

impl StateSet {
    pub fn empty(len: usize) -> StateSet {
        StateSet {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> StateSet {
        let mut set = StateSet {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        set.trim();
        set
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> StateSet {
        let mut set = StateSet::empty(len);
        for i in indices {
            set.insert(i);
        }
        set
    }

    fn trim(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    /// Universe size (the graph's state count).
    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    /// Returns whether `i` was newly inserted. Panics when `i` is out of range.
    pub fn insert(&mut self, i: usize) -> bool {
        assert!(i < self.len, "state index {i} out of range {}", self.len);
        let (w, bit) = (i / 64, 1u64 << (i % 64));
        let fresh = self.words[w] & bit == 0;
        self.words[w] |= bit;
        fresh
    }

    pub fn remove(&mut self, i: usize) -> bool {
        if i >= self.len {
            return false;
        }
        let (w, bit) = (i / 64, 1u64 << (i % 64));
        let present = self.words[w] & bit != 0;
        self.words[w] &= !bit;
        present
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn complement(&self) -> StateSet {
        let mut out = StateSet {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.trim();
        out
    }

    pub fn intersection(&self, other: &StateSet) -> StateSet {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        assert_eq!(self.len, other.len, "state sets over different graphs");
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    fn zip_with(&self, other: &StateSet, op: impl Fn(u64, u64) -> u64) -> StateSet {
        assert_eq!(self.len, other.len, "state sets over different graphs");
        StateSet {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.contains(i))
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Satisfaction set of `formula` over `graph`.
pub fn sat(graph: &StateGraph, formula: &CtlFormula) -> Result<StateSet, CheckError> {
    for var in formula.variables() {
        if graph.var_index(var).is_none() {
            return Err(CheckError::UnknownVariable(var.to_string()));
        }
    }
    let pred = graph.predecessors();
    Ok(Labeler { graph, pred: &pred }.label(formula))
}

struct Labeler<'g> {
    graph: &'g StateGraph,
    pred: &'g [Vec<usize>],
}

impl Labeler<'_> {
    fn n(&self) -> usize {
        self.graph.state_count()
    }

    fn label(&self, f: &CtlFormula) -> StateSet {
        match f {
            CtlFormula::True => StateSet::full(self.n()),
            CtlFormula::False => StateSet::empty(self.n()),
            CtlFormula::Atom { var, cmp, value } => {
                let col = self.graph.var_index(var).expect("variables checked up front");
                StateSet::from_indices(
                    self.n(),
                    self.graph
                        .states()
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| cmp.apply(v.0[col], *value))
                        .map(|(i, _)| i),
                )
            }
            CtlFormula::Not(g) => self.label(g).complement(),
            CtlFormula::And(a, b) => self.label(a).intersection(&self.label(b)),
            CtlFormula::Or(a, b) => self.label(a).union(&self.label(b)),
            CtlFormula::Ex(g) => self.pre_image(&self.label(g)),
            CtlFormula::Ef(g) => self.backward_reach(self.label(g)),
            CtlFormula::Eg(g) => self.prune_to_infinite(self.label(g)),
            CtlFormula::Ax(g) => self.pre_image(&self.label(g).complement()).complement(),
            CtlFormula::Af(g) => self
                .prune_to_infinite(self.label(g).complement())
                .complement(),
            CtlFormula::Ag(g) => self
                .backward_reach(self.label(g).complement())
                .complement(),
        }
    }

    /// States with at least one successor in `target`.
    fn pre_image(&self, target: &StateSet) -> StateSet {
        let mut out = StateSet::empty(self.n());
        for t in target.iter() {
            for &s in &self.pred[t] {
                out.insert(s);
            }
        }
        out
    }

    /// Least fixpoint Z = target ∪ EX Z, by backward breadth-first search.
    fn backward_reach(&self, target: StateSet) -> StateSet {
        let mut reached = target;
        let mut frontier: VecDeque<usize> = reached.iter().collect();
        while let Some(t) = frontier.pop_front() {
            for &s in &self.pred[t] {
                if reached.insert(s) {
                    frontier.push_back(s);
                }
            }
        }
        reached
    }

    /// Greatest fixpoint Z = keep ∩ EX Z: repeatedly drops states whose
    /// successors have all left the set.
    fn prune_to_infinite(&self, keep: StateSet) -> StateSet {
        let mut alive = keep;
        let mut live_succ: Vec<usize> = (0..self.n())
            .map(|s| {
                self.graph
                    .successors(s)
                    .iter()
                    .filter(|&&t| alive.contains(t))
                    .count()
            })
            .collect();
        let mut doomed: Vec<usize> = alive.iter().filter(|&s| live_succ[s] == 0).collect();
        while let Some(t) = doomed.pop() {
            if !alive.remove(t) {
                continue;
            }
            for &s in &self.pred[t] {
                live_succ[s] -= 1;
                if live_succ[s] == 0 && alive.contains(s) {
                    doomed.push(s);
                }
            }
        }
        alive
    }
}

/// Diagnostic for one initial state that does not satisfy the formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialViolation {
    pub state: usize,
    /// Zero-based index into the formula's top-level conjuncts.
    pub conjunct: usize,
    pub conjunct_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    pub initial: Vec<usize>,
    pub satisfying_initial: Vec<usize>,
    pub violations: Vec<InitialViolation>,
}

/// Whether some initial state satisfies `formula`. On failure, each initial
/// state is reported with the first top-level conjunct it violates.
pub fn holds_initially(graph: &StateGraph, formula: &CtlFormula) -> Result<Verdict, CheckError> {
    let whole = sat(graph, formula)?;
    let initial = graph.initial().to_vec();
    let satisfying_initial: Vec<usize> =
        initial.iter().copied().filter(|&s| whole.contains(s)).collect();
    let holds = !satisfying_initial.is_empty();
    let mut violations = Vec::new();
    if !holds {
        let conjuncts = formula.conjuncts();
        let sets = conjuncts
            .iter()
            .map(|c| sat(graph, c))
            .collect::<Result<Vec<_>, _>>()?;
        for &s in &initial {
            if let Some(i) = sets.iter().position(|set| !set.contains(s)) {
                violations.push(InitialViolation {
                    state: s,
                    conjunct: i,
                    conjunct_text: conjuncts[i].to_string(),
                });
            }
        }
    }
    Ok(Verdict {
        holds,
        initial,
        satisfying_initial,
        violations,
    })
}
