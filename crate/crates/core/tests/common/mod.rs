//! Shared generators and a path-semantics CTL oracle for integration tests.
#![allow(dead_code)]

pub mod lifecycle;

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use tracecheck::lang::CtlFormula;
use tracecheck::model::{BinOp, Comparator, Expr, GuardedCommand, SystemModel, Valuation, VarDecl};
use tracecheck::town::{Action, Edge, Node, Objective, Start, Step, Town, TownMap};
use tracecheck::{StateGraph, StateSet};

pub const VARS: [&str; 2] = ["a", "b"];

/// Random graph with at most `max_states` states (and at most 64), one to
/// four successors per state, valuations over `a, b` in `0..=3`.
pub fn random_graph(rng: &mut StdRng, max_states: usize) -> StateGraph {
    let n = rng.gen_range(1..=max_states.min(64));
    let states: Vec<Valuation> = (0..n)
        .map(|_| Valuation(vec![rng.gen_range(0..=3), rng.gen_range(0..=3)]))
        .collect();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let out = rng.gen_range(1..=4);
            (0..out).map(|_| rng.gen_range(0..n)).collect()
        })
        .collect();
    let initial = vec![rng.gen_range(0..n)];
    StateGraph::from_parts(VARS.iter().map(|v| v.to_string()).collect(), states, initial, succ)
}

pub fn random_atom(rng: &mut StdRng) -> CtlFormula {
    match rng.gen_range(0..10) {
        0 => CtlFormula::True,
        1 => CtlFormula::False,
        _ => CtlFormula::atom(
            *VARS.choose(rng).unwrap(),
            *Comparator::ALL.choose(rng).unwrap(),
            rng.gen_range(-1..=4),
        ),
    }
}

/// Random formula of depth at most `depth` (atoms have depth 0).
pub fn random_formula(rng: &mut StdRng, depth: usize) -> CtlFormula {
    if depth == 0 || rng.gen_bool(0.2) {
        return random_atom(rng);
    }
    let sub = |rng: &mut StdRng| random_formula(rng, depth - 1);
    match rng.gen_range(0..9) {
        0 => CtlFormula::not(sub(rng)),
        1 => CtlFormula::and(sub(rng), sub(rng)),
        2 => CtlFormula::or(sub(rng), sub(rng)),
        3 => CtlFormula::ex(sub(rng)),
        4 => CtlFormula::ef(sub(rng)),
        5 => CtlFormula::eg(sub(rng)),
        6 => CtlFormula::ax(sub(rng)),
        7 => CtlFormula::af(sub(rng)),
        _ => CtlFormula::ag(sub(rng)),
    }
}

pub fn mask_of(set: &StateSet) -> u64 {
    set.iter().fold(0, |m, i| m | (1 << i))
}

/// Reference CTL semantics for graphs of at most 64 states, read straight
/// off path definitions: reachability sets and reachable cycles.
pub struct Oracle<'g> {
    graph: &'g StateGraph,
    n: usize,
    succ: Vec<u64>,
    /// `reach[s]`: states reachable from `s` in zero or more steps.
    reach: Vec<u64>,
}

impl<'g> Oracle<'g> {
    pub fn new(graph: &'g StateGraph) -> Oracle<'g> {
        let n = graph.state_count();
        assert!(n <= 64);
        let succ: Vec<u64> = (0..n)
            .map(|s| graph.successors(s).iter().fold(0, |m, &t| m | (1 << t)))
            .collect();
        let full = Self::mask_all(n);
        let mut reach = Self::closure_within(&succ, full);
        for (s, r) in reach.iter_mut().enumerate() {
            *r |= 1 << s;
        }
        Oracle {
            graph,
            n,
            succ,
            reach,
        }
    }

    fn mask_all(n: usize) -> u64 {
        if n == 64 {
            u64::MAX
        } else {
            (1u64 << n) - 1
        }
    }

    /// States reachable in one or more steps through states of `within`,
    /// for each start state in `within` (zero elsewhere).
    fn closure_within(succ: &[u64], within: u64) -> Vec<u64> {
        let n = succ.len();
        let mut r: Vec<u64> = (0..n)
            .map(|i| if within >> i & 1 == 1 { succ[i] & within } else { 0 })
            .collect();
        for k in 0..n {
            let rk = r[k];
            for ri in r.iter_mut() {
                if *ri >> k & 1 == 1 {
                    *ri |= rk;
                }
            }
        }
        r
    }

    /// States with an infinite path staying inside `within`.
    fn infinite_inside(&self, within: u64) -> u64 {
        let r = Self::closure_within(&self.succ, within);
        let on_cycle = (0..self.n)
            .filter(|&t| r[t] >> t & 1 == 1)
            .fold(0u64, |m, t| m | (1 << t));
        (0..self.n)
            .filter(|&s| within >> s & 1 == 1 && (on_cycle >> s & 1 == 1 || r[s] & on_cycle != 0))
            .fold(0, |m, s| m | (1 << s))
    }

    fn states_where(&self, pred: impl Fn(usize) -> bool) -> u64 {
        (0..self.n).filter(|&s| pred(s)).fold(0, |m, s| m | (1 << s))
    }

    pub fn sat(&self, f: &CtlFormula) -> u64 {
        let all = Self::mask_all(self.n);
        match f {
            CtlFormula::True => all,
            CtlFormula::False => 0,
            CtlFormula::Atom { var, cmp, value } => {
                let col = VARS.iter().position(|v| v == var).expect("known variable");
                self.states_where(|s| cmp.apply(self.graph.state(s).0[col], *value))
            }
            CtlFormula::Not(g) => all & !self.sat(g),
            CtlFormula::And(a, b) => self.sat(a) & self.sat(b),
            CtlFormula::Or(a, b) => self.sat(a) | self.sat(b),
            CtlFormula::Ex(g) => {
                let p = self.sat(g);
                self.states_where(|s| self.succ[s] & p != 0)
            }
            CtlFormula::Ax(g) => {
                let p = self.sat(g);
                self.states_where(|s| self.succ[s] & !p == 0)
            }
            CtlFormula::Ef(g) => {
                let p = self.sat(g);
                self.states_where(|s| self.reach[s] & p != 0)
            }
            CtlFormula::Ag(g) => {
                let p = self.sat(g);
                self.states_where(|s| self.reach[s] & !p == 0)
            }
            CtlFormula::Eg(g) => self.infinite_inside(self.sat(g)),
            CtlFormula::Af(g) => {
                // every path meets g: no infinite path avoiding it
                let avoid = all & !self.sat(g);
                all & !self.infinite_inside(avoid)
            }
        }
    }
}

/// Random town of at most 5x5 tiles with a random objective over its tags.
pub fn random_town(rng: &mut StdRng) -> (Town, Objective) {
    let width = rng.gen_range(2..=5);
    let height = rng.gen_range(2..=5);
    let mut cells: Vec<(i64, i64)> = Vec::new();
    for x in 0..width {
        for y in 0..height {
            if rng.gen_bool(0.85) {
                cells.push((x, y));
            }
        }
    }
    if cells.is_empty() {
        cells.push((0, 0));
    }
    let mut next_tag = 1;
    let mut nodes: Vec<Node> = cells
        .iter()
        .map(|&(x, y)| {
            let tag = if rng.gen_bool(0.4) {
                next_tag += 1;
                next_tag - 1
            } else {
                0
            };
            Node { x, y, tag }
        })
        .collect();
    if next_tag == 1 {
        let i = rng.gen_range(0..nodes.len());
        nodes[i].tag = 1;
    }
    let mut edges = Vec::new();
    for &(x, y) in &cells {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let to = (x + dx, y + dy);
            if cells.contains(&to) && rng.gen_bool(0.7) {
                edges.push(Edge {
                    from: [x, y],
                    to: [to.0, to.1],
                });
            }
        }
    }
    let map = TownMap::new(width, height, nodes.clone(), edges).expect("generated map is valid");
    let &(sx, sy) = cells.choose(rng).unwrap();
    let start = Start {
        x: sx,
        y: sy,
        d: rng.gen_range(0..4),
    };
    let tags: Vec<i64> = nodes.iter().filter(|n| n.tag > 0).map(|n| n.tag).collect();
    let len = rng.gen_range(1..=5);
    let sequence = (0..len)
        .map(|_| Step {
            tag: *tags.choose(rng).unwrap(),
            action: *Action::ALL.choose(rng).unwrap(),
        })
        .collect();
    (
        Town::new(map, start).expect("start is a node"),
        Objective::new(sequence).unwrap(),
    )
}

/// A town whose robot completes a walk of `steps` tagged stops: every node
/// tagged, every adjacency open both ways, objective read off a random
/// walk so the run always succeeds.
pub fn completable_town(rng: &mut StdRng, steps: usize) -> (Town, Objective) {
    let width = rng.gen_range(2..=5);
    let height = rng.gen_range(2..=5);
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut tag = 0;
    for x in 0..width {
        for y in 0..height {
            tag += 1;
            nodes.push(Node { x, y, tag });
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (tx, ty) = (x + dx, y + dy);
                if (0..width).contains(&tx) && (0..height).contains(&ty) {
                    edges.push(Edge {
                        from: [x, y],
                        to: [tx, ty],
                    });
                }
            }
        }
    }
    let map = TownMap::new(width, height, nodes, edges).unwrap();
    let start = Start {
        x: rng.gen_range(0..width),
        y: rng.gen_range(0..height),
        d: rng.gen_range(0..4),
    };
    let (mut x, mut y) = (start.x, start.y);
    let mut d = tracecheck::town::Heading::from_index(start.d).unwrap();
    let mut sequence = Vec::new();
    for _ in 0..steps {
        let options: Vec<Action> = Action::ALL
            .into_iter()
            .filter(|a| map.step(x, y, d.turn(*a)).is_some())
            .collect();
        let action = *options.choose(rng).expect("every grid node has an exit");
        sequence.push(Step {
            tag: map.tag_at(x, y).unwrap(),
            action,
        });
        d = d.turn(action);
        (x, y) = map.step(x, y, d).unwrap();
    }
    (Town::new(map, start).unwrap(), Objective::new(sequence).unwrap())
}

const INT_OPS: [BinOp; 3] = [BinOp::Add, BinOp::Sub, BinOp::Mul];
const CMP_OPS: [BinOp; 6] = [BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge];

pub fn int_expr(rng: &mut StdRng, names: &[String], depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.4) {
        return if rng.gen_bool(0.5) && !names.is_empty() {
            Expr::ident(names.choose(rng).unwrap().clone())
        } else {
            Expr::Int(rng.gen_range(-20..=20))
        };
    }
    Expr::bin(
        *INT_OPS.choose(rng).unwrap(),
        int_expr(rng, names, depth - 1),
        int_expr(rng, names, depth - 1),
    )
}

pub fn bool_expr(rng: &mut StdRng, names: &[String], depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..6) {
            0 => Expr::Bool(rng.gen()),
            _ => Expr::bin(
                *CMP_OPS.choose(rng).unwrap(),
                int_expr(rng, names, 2),
                int_expr(rng, names, 2),
            ),
        };
    }
    match rng.gen_range(0..3) {
        0 => Expr::not(bool_expr(rng, names, depth - 1)),
        1 => Expr::bin(BinOp::And, bool_expr(rng, names, depth - 1), bool_expr(rng, names, depth - 1)),
        _ => Expr::bin(BinOp::Or, bool_expr(rng, names, depth - 1), bool_expr(rng, names, depth - 1)),
    }
}

/// Random well-typed model over up to three small-domain variables.
pub fn random_model(rng: &mut StdRng) -> SystemModel {
    let mut constants = BTreeMap::new();
    for i in 0..rng.gen_range(0..3) {
        constants.insert(format!("K{i}"), rng.gen_range(-5..=5));
    }
    let variables: Vec<VarDecl> = (0..rng.gen_range(1..=3))
        .map(|i| {
            let lo = rng.gen_range(-3..=1);
            let hi = lo + rng.gen_range(0..=4);
            VarDecl::new(format!("v{i}"), lo, hi, rng.gen_range(lo..=hi))
        })
        .collect();
    let mut names: Vec<String> = variables.iter().map(|v| v.name.clone()).collect();
    names.extend(constants.keys().cloned());
    let init_constraint = rng.gen_bool(0.3).then(|| bool_expr(rng, &names, 2));
    let commands = (0..rng.gen_range(0..4))
        .map(|c| {
            let mut targets: Vec<&VarDecl> = variables.iter().collect();
            targets.shuffle(rng);
            let count = rng.gen_range(0..=targets.len());
            GuardedCommand {
                label: rng.gen_bool(0.5).then(|| format!("cmd{c}")),
                guard: bool_expr(rng, &names, 3),
                updates: targets[..count]
                    .iter()
                    .map(|v| (v.name.clone(), int_expr(rng, &names, 2)))
                    .collect(),
            }
        })
        .collect();
    SystemModel::new(constants, variables, init_constraint, commands).expect("well-typed model")
}
