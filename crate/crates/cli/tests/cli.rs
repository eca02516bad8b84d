use std::path::PathBuf;
use std::process::{Command, Output};

fn ctldl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctldl")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ctldl-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

const CHAIN: &str = "state a p\nstate b p\nstate c q\nstate d\nedge a b\nedge b c\nedge c c\nedge d d\n";

#[test]
fn mc_prints_one_state_per_line() {
    let k = scratch("chain.kripke", CHAIN);
    let o = ctldl(&["mc", "--kripke", k.to_str().unwrap(), "--formula", "E[ p U q ]"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "a\nb\nc\n");
}

#[test]
fn example_three_translation() {
    let o = ctldl(&["translate", "ctl2std", "--formula", "E[ false ~U p ]"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for rule in [
        "G(X) :- G2(X), G3(X).",
        "G(X) :- B(X,X).",
        "G(X) :- G3(X), R(X,Y), G(Y).",
        "B(X,Y) :- G3(X), R(X,Y), G3(Y).",
        "B(X,Y) :- G3(X), R(X,U), B(U,Y).",
        "G2(X) :- W(X), !G1(X).",
        "G1(X) :- W(X).",
        "G3(X) :- P0(X).",
    ] {
        assert!(text.lines().any(|l| l == rule), "missing {rule} in\n{text}");
    }
}

#[test]
fn translated_program_reads_back_and_evaluates() {
    let dir = scratch("placeholder", "");
    let prog = dir.with_file_name("eu.dl");
    let o = ctldl(&["translate", "ctl2std", "--formula", "E[ p U q ]", "-o", prog.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let back = ctldl(&["translate", "std2ctl", "--program", prog.to_str().unwrap()]);
    assert_eq!(stdout(&back).trim(), "E[ p U q ]");

    let db = scratch("db.dl", "R(a,b).\nP0(a).\nP1(b).\n");
    let direct = ctldl(&["eval", "--program", prog.to_str().unwrap(), "--db", db.to_str().unwrap()]);
    let via = ctldl(&["eval", "--program", prog.to_str().unwrap(), "--db", db.to_str().unwrap(), "--engine", "via-ctl"]);
    assert_eq!(direct.status.code(), Some(0));
    assert_eq!(stdout(&direct), "G(a).\nG(b).\n");
    assert_eq!(stdout(&direct), stdout(&via));
}

#[test]
fn roundtrip_recovers_the_formula() {
    let o = ctldl(&["roundtrip", "--formula", "EX p & q"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("enf: EX p & q\n"));
    assert!(text.ends_with("recovered: EX p & q\n"));
}

#[test]
fn sat_and_contains_exit_codes() {
    let sat = ctldl(&["sat", "--formula", "E[ true U p ]"]);
    assert_eq!(sat.status.code(), Some(0));
    assert!(stdout(&sat).starts_with("satisfiable\n"));

    let unsat = ctldl(&["sat", "--formula", "p & !p"]);
    assert_eq!(unsat.status.code(), Some(1));

    let holds = ctldl(&["contains", "--f1", "q", "--f2", "E[ true U q ]"]);
    assert_eq!(holds.status.code(), Some(0));

    let refuted = ctldl(&["contains", "--f1", "E[ true U q ]", "--f2", "q"]);
    assert_eq!(refuted.status.code(), Some(1));
    let text = stdout(&refuted);
    assert!(text.starts_with("not contained\n"));

    // The printed witness is a structure the mc command accepts.
    let witness: String = text.lines().skip(2).map(|l| format!("{l}\n")).collect();
    let state = text.lines().nth(1).unwrap().trim_start_matches("state: ").to_string();
    let k = scratch("witness.kripke", &witness);
    let f1 = stdout(&ctldl(&["mc", "--kripke", k.to_str().unwrap(), "--formula", "E[ true U q ]"]));
    let f2 = stdout(&ctldl(&["mc", "--kripke", k.to_str().unwrap(), "--formula", "q"]));
    assert!(f1.lines().any(|s| s == state));
    assert!(!f2.lines().any(|s| s == state));
}

#[test]
fn bench_with_no_sizes_prints_header() {
    let o = ctldl(&["bench", "--sizes", ""]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "size,route,millis\n");
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(ctldl(&["mc", "--kripke", "/nonexistent/k", "--formula", "p"]).status.code(), Some(2));
    assert_eq!(ctldl(&["normalize", "--form", "enf", "--formula", "E[ p U"]).status.code(), Some(2));
    let k = scratch("bad.kripke", "edge a b\n");
    assert_eq!(ctldl(&["mc", "--kripke", k.to_str().unwrap(), "--formula", "p"]).status.code(), Some(2));
}

#[test]
fn normalize_pushes_negation() {
    let o = ctldl(&["normalize", "--form", "pnf", "--formula", "!AX p"]);
    assert_eq!(stdout(&o), "EX !p\n");
}
