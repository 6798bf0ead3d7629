use std::fs;
use std::process::{Command, Output};

fn stirap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stirap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn efficiency_line(o: &Output) -> f64 {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix("final efficiency: "))
        .expect("efficiency line")
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn simulate_reference_runs() {
    let o = stirap(&[
        "simulate",
        "--scheme",
        "m21",
        "--area",
        "10pi",
        "--tau",
        "1",
        "--shortcut",
        "type2",
    ]);
    assert!(o.status.success());
    assert_eq!(efficiency_line(&o), 1.0);
    let o = stirap(&[
        "simulate",
        "--scheme",
        "m21",
        "--area",
        "10pi",
        "--tau",
        "1",
        "--shortcut",
        "none",
    ]);
    let p = efficiency_line(&o);
    assert!((0.77..=0.83).contains(&p), "{p}");
}

#[test]
fn simulate_writes_trajectory_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let o = stirap(&[
        "simulate",
        "--scheme",
        "three",
        "--shortcut",
        "type1",
        "--steps",
        "200",
        "--track-adiabatic",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t [T],P[1],P[2],P[3],P_adiabatic[0],P_adiabatic[1],P_adiabatic[2]"
    );
    assert_eq!(lines.count(), 201);
}

#[test]
fn invalid_input_exits_nonzero_with_diagnostic() {
    for args in [
        vec!["simulate", "--scheme", "m23"],
        vec!["simulate", "--shortcut", "type4"],
        vec!["simulate", "--area", "-3pi"],
        vec!["simulate", "--beta", "-0.5"],
        vec!["simulate", "--steps", "0"],
        vec!["simulate", "--t-start", "3", "--t-end", "-3"],
        vec!["simulate", "--scheme", "generic"],
        vec!["simulate", "--shortcut", "type3", "--scheme", "sigmapi22"],
        vec!["simulate", "-o", "/definitely/not/here/out.csv"],
        vec!["reproduce", "--fig", "9"],
    ] {
        let o = stirap(&args);
        assert!(!o.status.success(), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.starts_with("error: "), "{args:?}: {err}");
    }
}

#[test]
fn generic_chain_from_flags() {
    let o = stirap(&[
        "simulate",
        "--scheme",
        "generic",
        "--cg",
        "0.9,0.4,0.7,0.3",
        "--shortcut",
        "numeric-full",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(efficiency_line(&o) > 0.999999);
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.toml");
    let second = dir.path().join("b.toml");
    let o = stirap(&[
        "simulate",
        "--scheme",
        "m22",
        "--area",
        "7.5pi",
        "--shortcut",
        "type3",
        "--phase",
        "1.2",
        "--xi",
        "0.9",
        "--beta",
        "1.1",
        "--steps",
        "1000",
        "--dump-config",
        first.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let o = stirap(&[
        "simulate",
        "--config",
        first.to_str().unwrap(),
        "--dump-config",
        second.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let a = fs::read_to_string(&first).unwrap();
    assert_eq!(a, fs::read_to_string(&second).unwrap());
    assert!(a.contains("area = \"7.5pi\""));

    let from_file = stirap(&["simulate", "--config", first.to_str().unwrap()]);
    let from_flags = stirap(&[
        "simulate",
        "--scheme",
        "m22",
        "--area",
        "7.5pi",
        "--shortcut",
        "type3",
        "--phase",
        "1.2",
        "--xi",
        "0.9",
        "--beta",
        "1.1",
        "--steps",
        "1000",
    ]);
    assert_eq!(stdout(&from_file), stdout(&from_flags));
}

#[test]
fn scan_csv_and_json() {
    let o = stirap(&[
        "scan",
        "--shortcut",
        "type2",
        "--parameter",
        "beta",
        "--from",
        "0.5",
        "--to",
        "1.5",
        "--points",
        "3",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "beta,efficiency");
    assert_eq!(rows.len(), 4);
    assert!(rows[2].starts_with("1,0.99999"));

    let o = stirap(&[
        "scan",
        "--shortcut",
        "type2",
        "--parameter",
        "phase",
        "--points",
        "5",
        "--json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["parameter"], "phase");
    assert_eq!(v["efficiencies"].as_array().unwrap().len(), 5);
}

#[test]
fn pulses_and_shortcut_alias_agree() {
    let a = stirap(&[
        "pulses",
        "--scheme",
        "m21",
        "--shortcut",
        "type2",
        "--samples",
        "11",
    ]);
    let b = stirap(&[
        "shortcut",
        "--scheme",
        "m21",
        "--shortcut",
        "type2",
        "--samples",
        "11",
    ]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a)
        .starts_with("t [T],pump [1/T],stokes [1/T],\"Q[g-2,g0] [1/T]\",\"Q[g0,g+2] [1/T]\""));
}

#[test]
fn reproduce_writes_repeatable_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(stirap(&["reproduce", "--fig", "4", "--out-dir", d])
        .status
        .success());
    let first = fs::read(dir.path().join("fig4_m21.csv")).unwrap();
    assert!(stirap(&["reproduce", "--fig", "4", "--out-dir", d])
        .status
        .success());
    assert_eq!(first, fs::read(dir.path().join("fig4_m21.csv")).unwrap());
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(names.len(), 1);
}

#[test]
fn verify_json_report() {
    let o = stirap(&["verify", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().len() > 20);
    assert_eq!(v["sigma_pi"].as_array().unwrap().len(), 2);
}
