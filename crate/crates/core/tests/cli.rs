use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tracecheck::lifecycle::{Ledger, Status};

const CHAIN2: &str = "var x : 0..1 init 0;\n[] x==0 -> x'=1;\n";

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracecheck"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Ws {
    dir: tempfile::TempDir,
}

impl Ws {
    fn new() -> Ws {
        Ws {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }

    fn file(&self, name: &str, content: &str) -> String {
        let p = self.path(name);
        fs::write(&p, content).unwrap();
        p
    }

    fn ledger_args(&self) -> Vec<String> {
        vec![
            "--ledger".into(),
            self.path("ledger.jsonl"),
            "--store".into(),
            self.path("store"),
        ]
    }

    fn run(&self, cmd: &str, extra: &[&str]) -> Output {
        let mut args: Vec<String> = vec![cmd.into()];
        args.extend(self.ledger_args());
        args.extend(extra.iter().map(|s| s.to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        run(&refs)
    }
}

#[test]
fn gen_property_examples() {
    let ws = Ws::new();
    let log = ws.file("run.csv", "x\n0\n1\n1\n");
    let out = run(&["gen-property", "--log", &log]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "x==0 & EX(x==1 & AG(x==1))\n");
    let weak = run(&["gen-property", "--log", &log, "--type", "weak"]);
    assert_eq!(stdout(&weak), "x==0 & EF(x==1 & AG(x==1))\n");
    let target = ws.path("p.ctl");
    let corrected = run(&["gen-property", "--log", &log, "--base", "corrected", "-o", &target]);
    assert_eq!(code(&corrected), 0);
    assert_eq!(
        fs::read_to_string(&target).unwrap(),
        "x==0 & EX(x==1 & EX(x==1 & AG(x==1)))\n"
    );
    let short = ws.file("short.csv", "x\n0\n");
    assert_eq!(code(&run(&["gen-property", "--log", &short])), 2);
    assert_eq!(code(&run(&["gen-property", "--log", &log, "--type", "medium"])), 2);
}

#[test]
fn check_examples() {
    let ws = Ws::new();
    let model = ws.file("chain2.gcm", CHAIN2);
    let holds = ws.file("holds.ctl", "x==0 & EX(x==1 & AG(x==1))");
    let fails = ws.file("fails.ctl", "x==1");
    let out = run(&["check", "--model", &model, "--property", &holds]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("states: 2, edges: 2"), "{}", stdout(&out));
    assert_eq!(code(&run(&["check", "--model", &model, "--property", &fails])), 1);
    let missing = ws.path("missing.gcm");
    let out = run(&["check", "--model", &missing, "--property", &holds]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.gcm"));
    let unknown = ws.file("unknown.ctl", "zz==1");
    assert_eq!(code(&run(&["check", "--model", &model, "--property", &unknown])), 2);
}

#[test]
fn gen_model_examples() {
    let ws = Ws::new();
    let out_dir = ws.path("town");
    let town = data("town5x5.json");
    let objective = data("objective4.json");
    let out = run(&[
        "gen-town",
        "--town",
        town.to_str().unwrap(),
        "--objective",
        objective.to_str().unwrap(),
        "--out-dir",
        &out_dir,
    ]);
    assert_eq!(code(&out), 0);
    let model = ws.path("town.gcm");
    let out = run(&[
        "gen-model",
        "--template",
        &format!("{out_dir}/town.tpl"),
        "--settings",
        &format!("{out_dir}/town.settings"),
        "--bindings",
        &format!("{out_dir}/town.bindings.json"),
        "-o",
        &model,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tracecheck::parse_model(&fs::read_to_string(&model).unwrap()).is_ok());

    let tpl = ws.file("t.tpl", "var x : 0..1 init 0;\n[] @go@ -> x'=1;\n");
    let out = run(&["gen-model", "--template", &tpl, "-o", &ws.path("t.gcm")]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unresolved tag go"));
    let bindings = ws.file("b.json", r#"{"go": "x==0"}"#);
    let out = run(&["gen-model", "--template", &tpl, "--bindings", &bindings, "-o", &ws.path("t.gcm")]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(ws.path("t.gcm")).unwrap(), CHAIN2);
}

#[test]
fn lifecycle_commands() {
    let ws = Ws::new();
    let tm_dir = ws.path("tm");
    let town = data("town5x5.json");
    let objective = data("objective4.json");
    let (town, objective) = (town.to_str().unwrap(), objective.to_str().unwrap());
    run(&["gen-town", "--town", town, "--objective", objective, "--out-dir", &tm_dir]);
    let model = ws.path("town.gcm");
    run(&[
        "gen-model",
        "--template",
        &format!("{tm_dir}/town.tpl"),
        "--settings",
        &format!("{tm_dir}/town.settings"),
        "--bindings",
        &format!("{tm_dir}/town.bindings.json"),
        "-o",
        &model,
    ]);
    let order = |m: &str| {
        ws.run(
            "order",
            &["--model", m, "--objective", objective, "--promisor", "0xa", "--promisee", "0xb"],
        )
    };
    let first = order(&model);
    assert_eq!((code(&first), stdout(&first)), (0, "1\n".to_string()));
    assert_eq!(stdout(&order(&model)), "2\n");
    let broken = ws.file("broken.gcm", "var x : 0..1");
    assert_eq!(code(&order(&broken)), 2);

    let honest = ws.run("execute", &["--liability", "1", "--town", town]);
    assert_eq!(code(&honest), 0, "{}", String::from_utf8_lossy(&honest.stderr));
    let forged = ws.run("execute", &["--liability", "2", "--town", town, "--fault", "forge:2,k,3"]);
    assert_eq!(code(&forged), 0);
    assert_eq!(code(&ws.run("execute", &["--liability", "1", "--town", town])), 2);
    assert_eq!(code(&ws.run("execute", &["--liability", "9", "--town", town])), 2);
    let ledger = Ledger::open(ws.path("ledger.jsonl")).unwrap();
    assert_eq!(ledger.liability(1).unwrap().status, Status::ResultSubmitted);

    let one = ws.run("validate", &["--liability", "1"]);
    assert_eq!(code(&one), 0);
    assert!(stdout(&one).contains("liability 1: Confirmed"));
    let rest = ws.run("validate", &[]);
    assert_eq!(code(&rest), 1);
    assert!(stdout(&rest).contains("liability 2: Rejected (property-fails"), "{}", stdout(&rest));
    let idle = ws.run("validate", &[]);
    assert_eq!(code(&idle), 0);
    assert!(stdout(&idle).contains("0 processed"));
    assert_eq!(code(&ws.run("validate", &["--liability", "1"])), 2);

    let replay = ws.run("replay", &[]);
    assert_eq!(code(&replay), 0);
    assert!(stdout(&replay).contains("2 replayed"));
}

#[test]
fn demo_examples() {
    let town = data("town5x5.json");
    let objective = data("objective4.json");
    let base = [
        "demo",
        "--town",
        town.to_str().unwrap(),
        "--objective",
        objective.to_str().unwrap(),
    ];
    let honest = run(&base);
    assert_eq!(code(&honest), 0);
    assert!(stdout(&honest).contains("validate: liability 1: Confirmed"));
    let mut wrong = base.to_vec();
    wrong.extend(["--fault", "wrong-turn:1"]);
    assert_eq!(code(&run(&wrong)), 1);
    let mut partial = base.to_vec();
    partial.extend(["--fault", "skip:3", "--type", "weak"]);
    assert_eq!(code(&run(&partial)), 0);
    let mut bad_fault = base.to_vec();
    bad_fault.extend(["--fault", "skip:1"]);
    assert_eq!(code(&run(&bad_fault)), 2);
}

#[test]
fn simulate_prints_the_log() {
    let town = data("town5x5.json");
    let objective = data("objective4.json");
    let out = run(&[
        "simulate",
        "--town",
        town.to_str().unwrap(),
        "--objective",
        objective.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("x,y,d,k\n1,0,1,0\n"));
    assert!(text.ends_with("3,4,3,4\n3,4,3,4\n"));
}
