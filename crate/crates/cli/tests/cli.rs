use std::path::Path;
use std::process::{Command, Output};

fn magflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magflow"))
        .args(args)
        .env_remove("MAGFLOW_THREADS")
        .output()
        .expect("spawn magflow")
}

fn config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

const REEB: &str = r#"{"system":{"type":"sphere","n":2},
    "initial":{"q":[1,0,0,0],"v":[0,0.5,0,0]},
    "integrator":{"step":0.001,"t_end":1,"sample_every":250}}"#;

#[test]
fn zero_duration_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "c.json",
        r#"{"system":{"type":"ellipsoid","a":[1,4]},"initial":{"q":[1,0,0,0],"v":[0,0,1,0]},"integrator":{"t_end":0}}"#,
    );
    let out = magflow(&["simulate", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = rows(&stdout(&out));
    assert_eq!(table.len(), 2);
    assert_eq!(
        table[0][..9],
        ["t", "q_0", "q_1", "q_2", "q_3", "v_0", "v_1", "v_2", "v_3"]
    );
    assert_eq!(table[1][..9], ["0", "1", "0", "0", "0", "0", "0", "1", "0"]);
}

#[test]
fn reeb_orbit_traces_the_hopf_circle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "reeb.json", REEB);
    let out = magflow(&["simulate", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let table = rows(&stdout(&out));
    assert_eq!(table.len(), 6);
    for row in &table[1..] {
        let x: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
        let t = x[0];
        // γ(t) = e^{it/2} e₁
        assert!((x[1] - (t / 2.0).cos()).abs() < 1e-12);
        assert!((x[2] - (t / 2.0).sin()).abs() < 1e-12);
        assert!(x[3].abs() < 1e-14 && x[4].abs() < 1e-14);
    }
}

#[test]
fn diagnostics_can_be_selected() {
    let dir = tempfile::tempdir().unwrap();
    let body = REEB.replacen('{', r#"{"diagnostics":["energy"],"#, 1);
    let cfg = config(dir.path(), "reeb.json", &body);
    let out = magflow(&["simulate", &cfg]);
    let header = stdout(&out).lines().next().unwrap().to_string();
    assert_eq!(header, "t,q_0,q_1,q_2,q_3,v_0,v_1,v_2,v_3,energy");

    let bad = config(
        dir.path(),
        "bad.json",
        &REEB.replacen('{', r#"{"diagnostics":["nope"],"#, 1),
    );
    assert_eq!(magflow(&["simulate", &bad]).status.code(), Some(1));
}

#[test]
fn oracle_on_reeb_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "reeb.json", REEB);
    let out = magflow(&["oracle", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let get = |k: &str| -> String {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{k},")))
            .unwrap_or_else(|| panic!("missing {k} in {text}"))
            .to_string()
    };
    assert_eq!(get("degenerate"), "true");
    assert_eq!(get("lambda").parse::<f64>().unwrap(), 0.25);
    assert!(get("sup_error").parse::<f64>().unwrap() < 1e-12);

    let ell = config(dir.path(), "e.json", r#"{"system":{"type":"ellipsoid","a":[1,4]}}"#);
    assert_eq!(magflow(&["oracle", &ell]).status.code(), Some(1));
}

#[test]
fn orbits_table_matches_closed_form() {
    let out = magflow(&["orbits", "--a", "1,4", "--omega", "0.25,0.5,1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = rows(&stdout(&out));
    assert_eq!(
        table[0],
        [
            "axis",
            "a_j",
            "omega",
            "kappa",
            "S_L",
            "S_free",
            "closed_form",
            "abs_err",
            "sign"
        ]
    );
    let body: Vec<&Vec<String>> = table[1..].iter().filter(|r| r[0] == "2").collect();
    assert_eq!(body.len(), 3);
    let signs: Vec<&str> = body.iter().map(|r| r[8].as_str()).collect();
    assert_eq!(signs, ["-1", "0", "1"]);
    for r in body {
        assert!(r[7].parse::<f64>().unwrap() <= 1e-8);
    }
    assert_eq!(
        magflow(&["orbits", "--a", "1,4", "--omega", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(magflow(&["orbits", "--a", "4,1"]).status.code(), Some(1));
}

#[test]
fn revolution_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "rev.json",
        r#"{"system":{"type":"revolution","profile":"torus"},
            "initial":{"q":[0.3,0],"v":[0.8,0.4]},
            "integrator":{"step":0.001,"t_end":20,"sample_every":100}}"#,
    );
    let out = magflow(&["verify", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let table = rows(&stdout(&out));
    assert_eq!(table[0], ["quantity", "initial", "max_drift", "t_at_max", "pass"]);
    let names: Vec<&str> = table[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["energy", "F"]);
}

#[test]
fn unknown_field_and_missing_file_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "x.json", r#"{"system":{"type":"sphere","n":2},"bogus":1}"#);
    assert_eq!(magflow(&["simulate", &cfg]).status.code(), Some(1));
    assert_eq!(magflow(&["simulate", "/nonexistent/cfg.json"]).status.code(), Some(1));
    assert_eq!(magflow(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn verify_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "v.json",
        r#"{"system":{"type":"ellipsoid","a":[1,2,4]},"integrator":{"step":0.002,"t_end":2,"sample_every":10},
            "sweep":{"count":4},"seed":7}"#,
    );
    let one = Command::new(env!("CARGO_BIN_EXE_magflow"))
        .args(["verify", &cfg])
        .env("MAGFLOW_THREADS", "1")
        .output()
        .unwrap();
    let three = Command::new(env!("CARGO_BIN_EXE_magflow"))
        .args(["verify", &cfg])
        .env("MAGFLOW_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0), "{}", stdout(&one));
    assert_eq!(one.stdout, three.stdout);

    let bad = Command::new(env!("CARGO_BIN_EXE_magflow"))
        .args(["verify", &cfg])
        .env("MAGFLOW_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn output_path_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let cfg = config(dir.path(), "reeb.json", REEB);
    let out = magflow(&["simulate", &cfg, "-o", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 6);
}
