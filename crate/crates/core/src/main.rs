use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;

use clap::{Args, Parser, Subcommand};

use tracecheck::conformance::CheckOptions;
use tracecheck::graph::{build_graph_with_budget, DEFAULT_STATE_BUDGET};
use tracecheck::lifecycle::{
    derive_verdict, run_validator, validate, ContentHash, ContentStore, Ledger, LiabilityId,
    Processed, Status, VerdictKind,
};
use tracecheck::property::{parse_log, property, BaseMode, PropertyKind};
use tracecheck::template::{parse_settings, render, Bindings, Settings, Template};
use tracecheck::town::{build_bindings, load_objective, load_town, simulate, Fault};
use tracecheck::{holds_initially, parse_formula, parse_model};

/// Validate execution logs against guarded-command behavior models.
#[derive(Parser)]
#[command(name = "tracecheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a model template and check that the result parses.
    GenModel {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        settings: Option<PathBuf>,
        #[arg(long)]
        bindings: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compile an execution log into a CTL property.
    GenProperty {
        #[arg(long)]
        log: PathBuf,
        #[command(flatten)]
        mode: Mode,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a CTL property on a model.
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        property: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
        budget: usize,
    },
    /// Store a model and objective and create a liability.
    Order {
        #[command(flatten)]
        ws: Workspace,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        objective: PathBuf,
        #[arg(long)]
        promisor: String,
        #[arg(long)]
        promisee: String,
    },
    /// Run the robot for a liability and submit its log.
    Execute {
        #[command(flatten)]
        ws: Workspace,
        #[arg(long)]
        liability: LiabilityId,
        #[arg(long)]
        town: PathBuf,
        #[arg(long)]
        fault: Option<Fault>,
    },
    /// Confirm or reject submitted results.
    Validate {
        #[command(flatten)]
        ws: Workspace,
        #[arg(long, conflicts_with = "watch")]
        liability: Option<LiabilityId>,
        /// Keep polling the ledger for new submissions.
        #[arg(long)]
        watch: bool,
        #[command(flatten)]
        mode: Mode,
        #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
        budget: usize,
    },
    /// Re-derive every recorded verdict and compare.
    Replay {
        #[command(flatten)]
        ws: Workspace,
        #[command(flatten)]
        mode: Mode,
    },
    /// Write the town template, settings and bindings for a town and objective.
    GenTown {
        #[arg(long)]
        town: PathBuf,
        #[arg(long)]
        objective: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Leave actions the objective never uses at their `false` default.
        #[arg(long)]
        reduced: bool,
    },
    /// Run the robot and print its log.
    Simulate {
        #[arg(long)]
        town: PathBuf,
        #[arg(long)]
        objective: PathBuf,
        #[arg(long)]
        fault: Option<Fault>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Order, execute and validate one liability end to end.
    Demo {
        #[arg(long)]
        town: PathBuf,
        #[arg(long)]
        objective: PathBuf,
        #[arg(long)]
        fault: Option<Fault>,
        #[command(flatten)]
        mode: Mode,
        /// Keep the workspace here instead of a temporary directory.
        #[arg(long)]
        workspace: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Workspace {
    #[arg(long)]
    ledger: PathBuf,
    #[arg(long)]
    store: PathBuf,
}

#[derive(Args, Clone, Copy)]
struct Mode {
    #[arg(long = "type", default_value_t = PropertyKind::Strong)]
    kind: PropertyKind,
    #[arg(long, default_value_t = BaseMode::Faithful)]
    base: BaseMode,
}

type Outcome = Result<ExitCode, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn ctx<T, E: std::fmt::Display>(what: &Path, r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| format!("{}: {e}", what.display()))
}

fn open_workspace(ws: &Workspace) -> Result<(Ledger, ContentStore), String> {
    let ledger = Ledger::open(&ws.ledger).map_err(|e| e.to_string())?;
    let store = ContentStore::open(&ws.store).map_err(|e| e.to_string())?;
    Ok((ledger, store))
}

fn verdict_code(all_confirmed: bool) -> ExitCode {
    if all_confirmed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::GenModel {
            template,
            settings,
            bindings,
            output,
        } => {
            let tpl = ctx(&template, Template::parse(&read(&template)?))?;
            let settings = match settings {
                Some(p) => ctx(&p, parse_settings(&read(&p)?))?,
                None => Settings::default(),
            };
            let bindings = match bindings {
                Some(p) => ctx(&p, Bindings::from_json(&read(&p)?))?,
                None => Bindings::new(),
            };
            let rendered = render(&tpl, &bindings, &settings).map_err(|e| e.to_string())?;
            write(&output, &rendered.text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GenProperty { log, mode, output } => {
            let parsed = ctx(&log, parse_log(&read(&log)?))?;
            if mode.base == BaseMode::Faithful {
                if let Some(w) = parsed.faithful_warning() {
                    eprintln!("warning: {w}");
                }
            }
            let formula = property(&parsed, mode.kind, mode.base).map_err(|e| e.to_string())?;
            let text = format!("{formula}\n");
            match output {
                Some(p) => write(&p, &text)?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            model,
            property,
            budget,
        } => {
            let m = ctx(&model, parse_model(&read(&model)?))?;
            let f = ctx(&property, parse_formula(&read(&property)?))?;
            let graph = build_graph_with_budget(&m, budget).map_err(|e| e.to_string())?;
            let verdict = holds_initially(&graph, &f).map_err(|e| e.to_string())?;
            println!("states: {}, edges: {}", graph.state_count(), graph.edge_count());
            if verdict.holds {
                println!("holds");
            } else {
                println!("fails");
                for v in &verdict.violations {
                    println!(
                        "  initial state {} violates conjunct #{}: {}",
                        graph.state(v.state),
                        v.conjunct + 1,
                        v.conjunct_text
                    );
                }
            }
            Ok(verdict_code(verdict.holds))
        }
        Command::Order {
            ws,
            model,
            objective,
            promisor,
            promisee,
        } => {
            let (mut ledger, store) = open_workspace(&ws)?;
            let id = order(&mut ledger, &store, &model, &objective, &promisor, &promisee)?;
            println!("{id}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Execute {
            ws,
            liability,
            town,
            fault,
        } => {
            let (mut ledger, store) = open_workspace(&ws)?;
            let hash = execute(&mut ledger, &store, liability, &town, fault.as_ref())?;
            println!("{hash}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate {
            ws,
            liability,
            watch,
            mode,
            budget,
        } => {
            let (mut ledger, store) = open_workspace(&ws)?;
            let opts = CheckOptions {
                kind: mode.kind,
                base: mode.base,
                state_budget: budget,
            };
            let processed = match liability {
                Some(id) => {
                    let p = validate(&mut ledger, &store, id, opts).map_err(|e| e.to_string())?;
                    report(&p);
                    vec![p]
                }
                None => {
                    let never = AtomicBool::new(false);
                    run_validator(
                        &mut ledger,
                        &store,
                        opts,
                        watch.then_some(&never),
                        &mut report,
                    )
                    .map_err(|e| e.to_string())?
                }
            };
            println!("{} processed", processed.len());
            Ok(verdict_code(
                processed.iter().all(|p| p.verdict == VerdictKind::Confirmed),
            ))
        }
        Command::Replay { ws, mode } => {
            let (ledger, store) = open_workspace(&ws)?;
            let opts = CheckOptions::new(mode.kind, mode.base);
            let mut all_match = true;
            let mut count = 0;
            for l in ledger.liabilities() {
                let recorded = match l.status {
                    Status::Confirmed => VerdictKind::Confirmed,
                    Status::Rejected => VerdictKind::Rejected,
                    _ => continue,
                };
                count += 1;
                let derived = match derive_verdict(&store, l, opts) {
                    Ok(()) => VerdictKind::Confirmed,
                    Err(_) => VerdictKind::Rejected,
                };
                let same = derived == recorded;
                all_match &= same;
                println!(
                    "liability {}: recorded {recorded}, derived {derived}{}",
                    l.id,
                    if same { "" } else { "  MISMATCH" }
                );
            }
            println!("{count} replayed");
            Ok(verdict_code(all_match))
        }
        Command::GenTown {
            town,
            objective,
            out_dir,
            reduced,
        } => {
            let t = ctx(&town, load_town(&read(&town)?))?;
            let o = ctx(&objective, load_objective(&read(&objective)?))?;
            let mut tm = build_bindings(&t.map, t.start, &o).map_err(|e| e.to_string())?;
            if reduced {
                tm = tm.reduced(&o);
            }
            fs::create_dir_all(&out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
            write(&out_dir.join("town.tpl"), &tm.template)?;
            write(&out_dir.join("town.settings"), &tm.settings.to_text())?;
            write(&out_dir.join("town.bindings.json"), &format!("{}\n", tm.bindings.to_json()))?;
            println!("{}", out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            town,
            objective,
            fault,
            output,
        } => {
            let t = ctx(&town, load_town(&read(&town)?))?;
            let o = ctx(&objective, load_objective(&read(&objective)?))?;
            let sim = simulate(&t.map, &o, t.start, fault.as_ref()).map_err(|e| e.to_string())?;
            for w in &sim.warnings {
                eprintln!("warning: {w}");
            }
            match output {
                Some(p) => write(&p, &sim.log.to_csv())?,
                None => print!("{}", sim.log.to_csv()),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Demo {
            town,
            objective,
            fault,
            mode,
            workspace,
        } => demo(&town, &objective, fault.as_ref(), mode, workspace),
    }
}

fn report(p: &Processed) {
    match &p.rejection {
        None => println!("liability {}: {}", p.id, p.verdict),
        Some(r) => println!("liability {}: {} ({r})", p.id, p.verdict),
    }
}

fn order(
    ledger: &mut Ledger,
    store: &ContentStore,
    model: &Path,
    objective: &Path,
    promisor: &str,
    promisee: &str,
) -> Result<LiabilityId, String> {
    let model_text = read(model)?;
    ctx(model, parse_model(&model_text))?;
    let objective_text = read(objective)?;
    ctx(objective, load_objective(&objective_text))?;
    let m = store.put(model_text.as_bytes()).map_err(|e| e.to_string())?;
    let o = store.put(objective_text.as_bytes()).map_err(|e| e.to_string())?;
    ledger
        .create_liability(store, promisor, promisee, m, o)
        .map_err(|e| e.to_string())
}

fn execute(
    ledger: &mut Ledger,
    store: &ContentStore,
    id: LiabilityId,
    town: &Path,
    fault: Option<&Fault>,
) -> Result<ContentHash, String> {
    let l = ledger
        .liability(id)
        .ok_or_else(|| format!("unknown liability {id}"))?;
    if l.status != Status::Created {
        return Err(format!("wrong status: liability {id} is {}", l.status));
    }
    let t = ctx(town, load_town(&read(town)?))?;
    let bytes = store.get(&l.objective_hash).map_err(|e| e.to_string())?;
    let objective = load_objective(&String::from_utf8_lossy(&bytes))
        .map_err(|e| format!("stored objective: {e}"))?;
    let sim = simulate(&t.map, &objective, t.start, fault).map_err(|e| e.to_string())?;
    for w in &sim.warnings {
        eprintln!("warning: {w}");
    }
    let hash = store
        .put(sim.log.to_csv().as_bytes())
        .map_err(|e| e.to_string())?;
    ledger
        .submit_result(store, id, hash.clone())
        .map_err(|e| e.to_string())?;
    Ok(hash)
}

fn demo(
    town: &Path,
    objective: &Path,
    fault: Option<&Fault>,
    mode: Mode,
    workspace: Option<PathBuf>,
) -> Outcome {
    let t = ctx(town, load_town(&read(town)?))?;
    let o = ctx(objective, load_objective(&read(objective)?))?;
    let _tmp;
    let dir = match workspace {
        Some(d) => {
            fs::create_dir_all(&d).map_err(|e| format!("{}: {e}", d.display()))?;
            d
        }
        None => {
            let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
            let d = tmp.path().to_path_buf();
            _tmp = tmp;
            d
        }
    };
    println!("workspace: {}", dir.display());

    let tm = build_bindings(&t.map, t.start, &o).map_err(|e| e.to_string())?;
    let rendered = tm.render().map_err(|e| e.to_string())?;
    let model_path = dir.join("model.gcm");
    let objective_path = dir.join("objective.json");
    let town_path = dir.join("town.json");
    write(&model_path, &rendered.text)?;
    write(&objective_path, &o.to_json())?;
    write(&town_path, &t.to_json())?;
    println!(
        "model: {} commands over x, y, d, k",
        rendered.model.commands.len()
    );

    let ws = Workspace {
        ledger: dir.join("ledger.jsonl"),
        store: dir.join("store"),
    };
    let (mut ledger, store) = open_workspace(&ws)?;
    let id = order(&mut ledger, &store, &model_path, &objective_path, "customer", "robot")?;
    println!("order: liability {id} created");
    let hash = execute(&mut ledger, &store, id, &town_path, fault)?;
    match fault {
        Some(f) => println!("execute: result {hash} submitted (fault {f})"),
        None => println!("execute: result {hash} submitted"),
    }
    let p = validate(&mut ledger, &store, id, CheckOptions::new(mode.kind, mode.base))
        .map_err(|e| e.to_string())?;
    print!("validate: ");
    report(&p);
    Ok(verdict_code(p.verdict == VerdictKind::Confirmed))
}
