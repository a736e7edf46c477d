use crate::template::{render, Bindings, Rendered, Scalar, Settings, Template, TemplateError};

use super::{Action, Heading, Objective, Start, TownError, TownMap};

/// Town template. Action commands are named `<action>_<new heading>`;
/// each one's guard lists the (node, incoming heading, step) triples where
/// it fires.
pub const TOWN_TEMPLATE: &str = "\
// grid town robot: position (x, y), heading d (0=N 1=E 2=S 3=W),
// objective progress k
var x : 0..@x_max@ init @x_init@;
var y : 0..@y_max@ init @y_init@;
var d : 0..3 init @d_init@;
var k : 0..@steps@ init @k_init@;

[left_north] @left_north@ -> y'=y+1 & d'=0 & k'=k+1;
[left_east] @left_east@ -> x'=x+1 & d'=1 & k'=k+1;
[left_south] @left_south@ -> y'=y-1 & d'=2 & k'=k+1;
[left_west] @left_west@ -> x'=x-1 & d'=3 & k'=k+1;
[right_north] @right_north@ -> y'=y+1 & d'=0 & k'=k+1;
[right_east] @right_east@ -> x'=x+1 & d'=1 & k'=k+1;
[right_south] @right_south@ -> y'=y-1 & d'=2 & k'=k+1;
[right_west] @right_west@ -> x'=x-1 & d'=3 & k'=k+1;
[forward_north] @forward_north@ -> y'=y+1 & d'=0 & k'=k+1;
[forward_east] @forward_east@ -> x'=x+1 & d'=1 & k'=k+1;
[forward_south] @forward_south@ -> y'=y-1 & d'=2 & k'=k+1;
[forward_west] @forward_west@ -> x'=x-1 & d'=3 & k'=k+1;

[transit_north] k<@steps@ & (@transit_north@) -> y'=y+1;
[transit_east] k<@steps@ & (@transit_east@) -> x'=x+1;
[transit_south] k<@steps@ & (@transit_south@) -> y'=y-1;
[transit_west] k<@steps@ & (@transit_west@) -> x'=x-1;
";

pub fn action_tag(action: Action, heading: Heading) -> String {
    format!("{}_{}", action.name(), heading.name())
}

pub fn transit_tag(heading: Heading) -> String {
    format!("transit_{}", heading.name())
}

/// Everything needed to render a town model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TownModel {
    pub template: String,
    pub settings: Settings,
    pub bindings: Bindings,
}

impl TownModel {
    pub fn render(&self) -> Result<Rendered, TemplateError> {
        render(&Template::parse(&self.template)?, &self.bindings, &self.settings)
    }

    /// Drops the bindings of every action the objective never uses, so those
    /// commands fall back to their `"false"` defaults.
    pub fn reduced(&self, objective: &Objective) -> TownModel {
        let used = objective.actions();
        let mut out = self.clone();
        for action in Action::ALL.into_iter().filter(|a| !used.contains(a)) {
            for h in Heading::ALL {
                out.bindings.0.remove(&action_tag(action, h));
            }
        }
        out
    }
}

fn disjunction(terms: Vec<String>) -> String {
    if terms.is_empty() {
        "false".to_string()
    } else {
        terms.join(" | ")
    }
}

/// Bindings and settings that turn [`TOWN_TEMPLATE`] into the model of a
/// robot executing `objective` on `map` from `start`. Every action and
/// transit tag is bound explicitly.
pub fn build_bindings(map: &TownMap, start: Start, objective: &Objective) -> Result<TownModel, TownError> {
    let start_heading = map.check_start(start)?;
    objective.check_against(map)?;

    let mut settings = Settings::default();
    let params = [
        ("x_max", map.width() - 1),
        ("y_max", map.height() - 1),
        ("x_init", start.x),
        ("y_init", start.y),
        ("d_init", start_heading.index()),
        ("k_init", 0),
        ("steps", objective.len() as i64),
    ];
    for (name, value) in params {
        settings.parameters.insert(name.to_string(), Scalar::Int(value));
    }
    for h in Heading::ALL {
        for a in Action::ALL {
            settings.defaults.insert(action_tag(a, h), "false".to_string());
        }
        settings.defaults.insert(transit_tag(h), "false".to_string());
    }

    let mut bindings = Bindings::new();
    for a in Action::ALL {
        for h in Heading::ALL {
            let mut terms = Vec::new();
            for (k, step) in objective.sequence.iter().enumerate() {
                if step.action != a {
                    continue;
                }
                let (x, y) = map.node_with_tag(step.tag).expect("objective checked");
                if map.step(x, y, h).is_none() {
                    continue;
                }
                for incoming in Heading::ALL.into_iter().filter(|d| d.turn(a) == h) {
                    terms.push(format!("(x=={x} & y=={y} & d=={} & k=={k})", incoming.index()));
                }
            }
            bindings.insert(action_tag(a, h), disjunction(terms));
        }
    }
    let mut untagged: Vec<(i64, i64)> = map
        .nodes()
        .iter()
        .filter(|n| n.tag == 0)
        .map(|n| (n.x, n.y))
        .collect();
    untagged.sort_unstable();
    for h in Heading::ALL {
        let terms = untagged
            .iter()
            .filter(|&&(x, y)| map.step(x, y, h).is_some())
            .map(|(x, y)| format!("(x=={x} & y=={y} & d=={})", h.index()))
            .collect();
        bindings.insert(transit_tag(h), disjunction(terms));
    }
    Ok(TownModel {
        template: TOWN_TEMPLATE.to_string(),
        settings,
        bindings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::model::Valuation;
    use crate::town::load_town;
    use crate::town::{load_objective, Step};

    const TWO_NODES: &str = r#"{"width":1,"height":2,
        "nodes":[{"x":0,"y":0,"tag":1},{"x":0,"y":1}],
        "edges":[{"from":[0,0],"to":[0,1]}],
        "start":{"x":0,"y":0,"d":0}}"#;

    #[test]
    fn two_node_model_has_unique_run() {
        let town = load_town(TWO_NODES).unwrap();
        let objective = Objective::new(vec![Step { tag: 1, action: Action::Forward }]).unwrap();
        let tm = build_bindings(&town.map, town.start, &objective).unwrap();
        assert_eq!(tm.bindings.get("forward_north"), Some("(x==0 & y==0 & d==0 & k==0)"));
        assert_eq!(tm.bindings.get("transit_north"), Some("false"));
        let rendered = tm.render().unwrap();
        let g = build_graph(&rendered.model).unwrap();
        assert_eq!(g.state_count(), 2);
        let a = g.index_of(&Valuation(vec![0, 0, 0, 0])).unwrap();
        let b = g.index_of(&Valuation(vec![0, 1, 0, 1])).unwrap();
        assert_eq!(g.initial(), &[a]);
        assert_eq!(g.successors(a), &[b]);
        assert_eq!(g.successors(b), &[b]);
    }

    #[test]
    fn errors() {
        let town = load_town(TWO_NODES).unwrap();
        let nine = load_objective(r#"{"sequence":[{"tag":9,"action":"left"}]}"#).unwrap();
        assert_eq!(
            build_bindings(&town.map, town.start, &nine),
            Err(TownError::UnknownTag(9))
        );
        let objective = Objective::new(vec![Step { tag: 1, action: Action::Left }]).unwrap();
        let off = Start { x: 5, y: 5, d: 0 };
        assert!(matches!(
            build_bindings(&town.map, off, &objective),
            Err(TownError::StartNotNode { .. })
        ));
    }

    #[test]
    fn reduction_leaves_only_used_actions_bound() {
        let town = load_town(TWO_NODES).unwrap();
        let objective = Objective::new(vec![Step { tag: 1, action: Action::Forward }]).unwrap();
        let full = build_bindings(&town.map, town.start, &objective).unwrap();
        let reduced = full.reduced(&objective);
        assert!(reduced.bindings.get("left_north").is_none());
        assert!(reduced.bindings.get("forward_north").is_some());
        assert_eq!(reduced.render().unwrap().text, full.render().unwrap().text);
    }
}
