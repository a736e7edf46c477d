//! Grid-town robot scenario: a map of nodes joined by directed edges,
//! AprilTag-style numbered signs on some nodes, and an objective telling
//! the robot which way to go at each tagged stop.
//!
//! The robot keeps driving straight across untagged nodes. At a tagged node
//! it must meet the next step of the objective, otherwise it halts.

mod bindings;
mod sim;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bindings::{action_tag, build_bindings, transit_tag, TownModel, TOWN_TEMPLATE};
pub use sim::{simulate, Fault, Simulation, LOG_COLUMNS};

/// Compass heading; the numeric value is the `d` model variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heading {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    pub fn from_index(d: i64) -> Option<Heading> {
        usize::try_from(d).ok().and_then(|i| Heading::ALL.get(i).copied())
    }

    pub fn index(self) -> i64 {
        self as i64
    }

    /// Unit step `(dx, dy)`; north is `+y`.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Heading::North => (0, 1),
            Heading::East => (1, 0),
            Heading::South => (0, -1),
            Heading::West => (-1, 0),
        }
    }

    pub fn turn(self, action: Action) -> Heading {
        let i = self as usize;
        Heading::ALL[match action {
            Action::Left => (i + 3) % 4,
            Action::Right => (i + 1) % 4,
            Action::Forward => i,
        }]
    }

    pub fn name(self) -> &'static str {
        match self {
            Heading::North => "north",
            Heading::East => "east",
            Heading::South => "south",
            Heading::West => "west",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Left,
    Right,
    Forward,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Left, Action::Right, Action::Forward];

    pub fn name(self) -> &'static str {
        match self {
            Action::Left => "left",
            Action::Right => "right",
            Action::Forward => "forward",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = TownError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| TownError::Schema(format!("unknown action `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub x: i64,
    pub y: i64,
    /// 0 marks an untagged node.
    #[serde(default)]
    pub tag: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: [i64; 2],
    pub to: [i64; 2],
}

/// Robot pose at the start of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Start {
    pub x: i64,
    pub y: i64,
    pub d: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TownError {
    #[error("schema: {0}")]
    Schema(String),
    #[error("town size {width}x{height} must be at least 1x1")]
    BadSize { width: i64, height: i64 },
    #[error("node ({x},{y}) lies outside the map")]
    OutOfBounds { x: i64, y: i64 },
    #[error("node ({x},{y}) declared twice")]
    DuplicateNode { x: i64, y: i64 },
    #[error("node ({x},{y}) has negative tag {tag}")]
    NegativeTag { x: i64, y: i64, tag: i64 },
    #[error("duplicate tag {0}")]
    DuplicateTag(i64),
    #[error("edge endpoint ({x},{y}) is not a declared node")]
    DanglingEdge { x: i64, y: i64 },
    #[error("edge ({},{})->({},{}) joins non-adjacent nodes", .from[0], .from[1], .to[0], .to[1])]
    NotAdjacent { from: [i64; 2], to: [i64; 2] },
    #[error("edge ({},{})->({},{}) declared twice", .from[0], .from[1], .to[0], .to[1])]
    DuplicateEdge { from: [i64; 2], to: [i64; 2] },
    #[error("start ({x},{y}) is not a declared node")]
    StartNotNode { x: i64, y: i64 },
    #[error("heading {0} is not one of 0 (N), 1 (E), 2 (S), 3 (W)")]
    BadHeading(i64),
    #[error("non-empty sequence required")]
    EmptyObjective,
    #[error("objective references tag {0}, which is not on the map")]
    UnknownTag(i64),
    #[error("fault: {0}")]
    Fault(String),
}

/// A validated town. Coordinates run `0..width` and `0..height`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TownMap {
    width: i64,
    height: i64,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    tags: HashMap<(i64, i64), i64>,
    by_tag: HashMap<i64, (i64, i64)>,
    edge_set: BTreeSet<((i64, i64), (i64, i64))>,
}

impl TownMap {
    pub fn new(width: i64, height: i64, nodes: Vec<Node>, edges: Vec<Edge>) -> Result<TownMap, TownError> {
        if width < 1 || height < 1 {
            return Err(TownError::BadSize { width, height });
        }
        let mut tags = HashMap::new();
        let mut by_tag = HashMap::new();
        for n in &nodes {
            if !(0..width).contains(&n.x) || !(0..height).contains(&n.y) {
                return Err(TownError::OutOfBounds { x: n.x, y: n.y });
            }
            if n.tag < 0 {
                return Err(TownError::NegativeTag { x: n.x, y: n.y, tag: n.tag });
            }
            if tags.insert((n.x, n.y), n.tag).is_some() {
                return Err(TownError::DuplicateNode { x: n.x, y: n.y });
            }
            if n.tag > 0 && by_tag.insert(n.tag, (n.x, n.y)).is_some() {
                return Err(TownError::DuplicateTag(n.tag));
            }
        }
        let mut edge_set = BTreeSet::new();
        for e in &edges {
            for [x, y] in [e.from, e.to] {
                if !tags.contains_key(&(x, y)) {
                    return Err(TownError::DanglingEdge { x, y });
                }
            }
            if (e.from[0] - e.to[0]).abs() + (e.from[1] - e.to[1]).abs() != 1 {
                return Err(TownError::NotAdjacent { from: e.from, to: e.to });
            }
            let key = ((e.from[0], e.from[1]), (e.to[0], e.to[1]));
            if !edge_set.insert(key) {
                return Err(TownError::DuplicateEdge { from: e.from, to: e.to });
            }
        }
        Ok(TownMap {
            width,
            height,
            nodes,
            edges,
            tags,
            by_tag,
            edge_set,
        })
    }

    pub fn width(&self) -> i64 {
        self.width
    }

    pub fn height(&self) -> i64 {
        self.height
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_node(&self, x: i64, y: i64) -> bool {
        self.tags.contains_key(&(x, y))
    }

    /// Tag on node `(x, y)`: `Some(0)` if untagged, `None` if no node.
    pub fn tag_at(&self, x: i64, y: i64) -> Option<i64> {
        self.tags.get(&(x, y)).copied()
    }

    pub fn node_with_tag(&self, tag: i64) -> Option<(i64, i64)> {
        if tag <= 0 {
            return None;
        }
        self.by_tag.get(&tag).copied()
    }

    /// The neighbor reached by leaving `(x, y)` towards `h`, if that edge exists.
    pub fn step(&self, x: i64, y: i64, h: Heading) -> Option<(i64, i64)> {
        let (dx, dy) = h.delta();
        let to = (x + dx, y + dy);
        self.edge_set.contains(&((x, y), to)).then_some(to)
    }

    /// Checks that `start` sits on a node with a valid heading.
    pub fn check_start(&self, start: Start) -> Result<Heading, TownError> {
        if !self.is_node(start.x, start.y) {
            return Err(TownError::StartNotNode { x: start.x, y: start.y });
        }
        Heading::from_index(start.d).ok_or(TownError::BadHeading(start.d))
    }
}

/// A map together with the robot's start pose, as stored in a town file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Town {
    pub map: TownMap,
    pub start: Start,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TownFile {
    width: i64,
    height: i64,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    start: Start,
}

impl Town {
    pub fn new(map: TownMap, start: Start) -> Result<Town, TownError> {
        map.check_start(start)?;
        Ok(Town { map, start })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TownFile {
            width: self.map.width,
            height: self.map.height,
            nodes: self.map.nodes.clone(),
            edges: self.map.edges.clone(),
            start: self.start,
        })
        .expect("town serializes")
    }
}

pub fn load_town(json: &str) -> Result<Town, TownError> {
    let file: TownFile =
        serde_json::from_str(json).map_err(|e| TownError::Schema(e.to_string()))?;
    let map = TownMap::new(file.width, file.height, file.nodes, file.edges)?;
    Town::new(map, file.start)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub tag: i64,
    pub action: Action,
}

/// Ordered tag/action list. The k-th tagged stop must carry `sequence[k].tag`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Objective {
    pub sequence: Vec<Step>,
}

impl Objective {
    pub fn new(sequence: Vec<Step>) -> Result<Objective, TownError> {
        if sequence.is_empty() {
            return Err(TownError::EmptyObjective);
        }
        Ok(Objective { sequence })
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// Every tag must name a tagged node of `map`.
    pub fn check_against(&self, map: &TownMap) -> Result<(), TownError> {
        if self.sequence.is_empty() {
            return Err(TownError::EmptyObjective);
        }
        match self.sequence.iter().find(|s| map.node_with_tag(s.tag).is_none()) {
            Some(s) => Err(TownError::UnknownTag(s.tag)),
            None => Ok(()),
        }
    }

    /// Actions the objective uses at least once.
    pub fn actions(&self) -> BTreeSet<Action> {
        self.sequence.iter().map(|s| s.action).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("objective serializes")
    }
}

pub fn load_objective(json: &str) -> Result<Objective, TownError> {
    let parsed: Objective =
        serde_json::from_str(json).map_err(|e| TownError::Schema(e.to_string()))?;
    Objective::new(parsed.sequence)
}
