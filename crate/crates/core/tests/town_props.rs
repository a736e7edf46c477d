mod common;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{completable_town, random_town};
use tracecheck::conformance::check_log_on_graph;
use tracecheck::property::{BaseMode, ExecutionLog, PropertyKind};
use tracecheck::town::{build_bindings, simulate, Fault, LOG_COLUMNS};
use tracecheck::{build_graph, StateGraph};

fn strong(g: &StateGraph, log: &ExecutionLog) -> bool {
    check_log_on_graph(g, log, PropertyKind::Strong, BaseMode::Faithful).is_ok()
}

fn weak(g: &StateGraph, log: &ExecutionLog) -> bool {
    check_log_on_graph(g, log, PropertyKind::Weak, BaseMode::Faithful).is_ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn generated_model_is_deterministic(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (town, objective) = random_town(&mut rng);
        let model = build_bindings(&town.map, town.start, &objective).unwrap().render().unwrap().model;
        let g = build_graph(&model).unwrap();
        prop_assert_eq!(g.initial().len(), 1);
        for (s, v) in g.states().iter().enumerate() {
            let enabled = model.enabled_commands(v).unwrap().len();
            let stuck = g.successors(s) == [s];
            prop_assert!(enabled == 1 || (enabled == 0 && stuck), "state {} has {} commands", v, enabled);
        }
    }

    #[test]
    fn honest_logs_confirm(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (town, objective) = random_town(&mut rng);
        let model = build_bindings(&town.map, town.start, &objective).unwrap().render().unwrap().model;
        let g = build_graph(&model).unwrap();
        let sim = simulate(&town.map, &objective, town.start, None).unwrap();
        prop_assert!(strong(&g, &sim.log));
        prop_assert!(weak(&g, &sim.log));
        // the log is exactly the model's run
        prop_assert_eq!(g.state_count() + 1, sim.log.len());
    }

    #[test]
    fn forged_cells_are_detected(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let steps = rng.gen_range(1..=5);
        let (town, objective) = completable_town(&mut rng, steps);
        let model = build_bindings(&town.map, town.start, &objective).unwrap().render().unwrap().model;
        let g = build_graph(&model).unwrap();
        let honest = simulate(&town.map, &objective, town.start, None).unwrap();
        prop_assert!(honest.completed);
        let n = honest.log.len();
        let row = rng.gen_range(2..n);
        let col = rng.gen_range(0..4);
        let old = honest.log.rows()[row - 1][col];
        let value = old + if rng.gen_bool(0.5) { 1 } else { -1 };
        let fault = Fault::Forge { row, var: LOG_COLUMNS[col].to_string(), value };
        let forged = simulate(&town.map, &objective, town.start, Some(&fault)).unwrap();
        prop_assert!(!strong(&g, &forged.log), "{} went undetected", fault);
    }

    #[test]
    fn skipped_rows_pass_only_weak(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let steps = rng.gen_range(1..=5);
        let (town, objective) = completable_town(&mut rng, steps);
        let model = build_bindings(&town.map, town.start, &objective).unwrap().render().unwrap().model;
        let g = build_graph(&model).unwrap();
        let n = simulate(&town.map, &objective, town.start, None).unwrap().log.len();
        prop_assume!(n >= 4);
        let i = rng.gen_range(2..n - 1);
        let skipped = simulate(&town.map, &objective, town.start, Some(&Fault::Skip(i))).unwrap();
        prop_assert!(weak(&g, &skipped.log));
        prop_assert!(!strong(&g, &skipped.log));
    }

    #[test]
    fn wrong_turns_are_detected(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let steps = rng.gen_range(1..=5);
        let (town, objective) = completable_town(&mut rng, steps);
        let model = build_bindings(&town.map, town.start, &objective).unwrap().render().unwrap().model;
        let g = build_graph(&model).unwrap();
        let j = rng.gen_range(1..=objective.len());
        let sim = simulate(&town.map, &objective, town.start, Some(&Fault::WrongTurn(j))).unwrap();
        prop_assert!(!strong(&g, &sim.log));
    }

    #[test]
    fn reduction_keeps_verdicts(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (town, objective) = random_town(&mut rng);
        let tm = build_bindings(&town.map, town.start, &objective).unwrap();
        let full = build_graph(&tm.render().unwrap().model).unwrap();
        let reduced = build_graph(&tm.reduced(&objective).render().unwrap().model).unwrap();
        prop_assert!(reduced.state_count() <= full.state_count());
        let honest = simulate(&town.map, &objective, town.start, None).unwrap();
        let mut logs = vec![honest.log.clone()];
        if honest.log.len() >= 3 {
            let fault = Fault::Forge { row: 2, var: "k".into(), value: 9 };
            logs.push(simulate(&town.map, &objective, town.start, Some(&fault)).unwrap().log);
        }
        for log in &logs {
            prop_assert_eq!(strong(&full, log), strong(&reduced, log));
            prop_assert_eq!(weak(&full, log), weak(&reduced, log));
        }
    }
}
