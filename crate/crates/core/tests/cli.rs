use std::path::{Path, PathBuf};
use std::process::Command;

use jumplq::cli::{parse_config, parse_config_str, run, Mode, Overrides, DEFAULT_PATHS, DEFAULT_SEED, DEFAULT_STEPS};
use jumplq::Error;

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn shipped_text(name: &str) -> String {
    std::fs::read_to_string(shipped(name)).unwrap()
}

fn jumplq(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_jumplq")).args(args).output().unwrap()
}

const MINIMAL: &str = r#"
[grid]
T = 1.0

[problem.pre]
A = 0.0
B = 1.0
C = 0.0
D = 1.0
Q = 1.0
R = 1.0

[problem.post]
A = 0.0
B = 1.0
C = 0.0
D = 1.0
Q = 1.0
R = 1.0

[terminal]
G0 = 1.0
G1 = 1.0
"#;

#[test]
fn minimal_config_gets_documented_defaults() {
    let cfg = parse_config_str(MINIMAL, Path::new("minimal.toml"), Mode::Solve, &Overrides::default()).unwrap();
    assert_eq!(cfg.grid.unwrap().steps(), DEFAULT_STEPS);
    assert_eq!((DEFAULT_STEPS, DEFAULT_PATHS, DEFAULT_SEED), (1000, 100_000, 42));
    assert_eq!(cfg.mc.paths, DEFAULT_PATHS);
    assert_eq!(cfg.mc.seed, DEFAULT_SEED);
    assert_eq!(cfg.problem.unwrap().control_dim(), 1);
}

#[test]
fn flags_override_config_keys() {
    let ov = Overrides {
        out: Some("elsewhere".into()),
        paths: Some(10),
        seed: Some(7),
        grid: Some(50),
    };
    let cfg = parse_config_str(MINIMAL, Path::new("m.toml"), Mode::Simulate, &ov).unwrap();
    assert_eq!(cfg.grid.unwrap().steps(), 50);
    assert_eq!(cfg.problem.unwrap().grid.steps(), 50);
    assert_eq!((cfg.mc.paths, cfg.mc.seed), (10, 7));
    assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
}

#[test]
fn missing_terminal_weight_names_the_key() {
    let text = MINIMAL.replace("G0 = 1.0\n", "");
    let err = parse_config_str(&text, Path::new("m.toml"), Mode::Solve, &Overrides::default()).unwrap_err();
    assert!(matches!(&err, Error::Schema { key, .. } if key == "terminal.G0"), "{err}");
}

#[test]
fn unknown_and_misplaced_keys_are_rejected() {
    let text = MINIMAL.replace("[terminal]", "[terminal]\nG2 = 1.0");
    let err = parse_config_str(&text, Path::new("m.toml"), Mode::Solve, &Overrides::default()).unwrap_err();
    assert!(matches!(&err, Error::Schema { key, .. } if key == "terminal.G2"), "{err}");
    let err = parse_config_str(MINIMAL, Path::new("m.toml"), Mode::Frontier, &Overrides::default()).unwrap_err();
    assert_eq!(err.kind(), "SchemaError");
    let err = parse_config_str("[grid\n", Path::new("m.toml"), Mode::Solve, &Overrides::default()).unwrap_err();
    assert_eq!(err.kind(), "ParseError");
}

#[test]
fn validation_errors_carry_the_file() {
    let text = MINIMAL.replacen("A = 0.0", "A = 0.0\nE = -2.0", 1);
    let err = parse_config_str(&text, Path::new("bad.toml"), Mode::Solve, &Overrides::default()).unwrap_err();
    match err {
        Error::ViolatedAssumption { location, .. } => assert!(location.starts_with("bad.toml [problem]")),
        other => panic!("{other}"),
    }
}

#[test]
fn solve_writes_terminal_row_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let ov = Overrides {
        out: Some(dir.path().into()),
        grid: Some(200),
        ..Overrides::default()
    };
    let cfg = parse_config(&shipped("solve.toml"), Mode::Solve, &ov).unwrap();
    run(&cfg).unwrap();
    let text = std::fs::read_to_string(dir.path().join("riccati.csv")).unwrap();
    assert!(text.ends_with('\n'));
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 201);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[200][0], 1.0);
    assert_eq!(rows[200][1], 1.0);

    let sol = jumplq::riccati::assemble(cfg.problem.as_ref().unwrap()).unwrap();
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[1], sol.p0()[i]);
        assert_eq!(row[2], sol.n0()[i]);
    }
    let policy = std::fs::read_to_string(dir.path().join("policy.csv")).unwrap();
    assert!(policy.starts_with("t,xi0_plus_1,xi0_minus_1\n"));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let config = shipped("simulate.toml");
    let config = config.to_str().unwrap();
    for dir in [&a, &b] {
        let out = jumplq(&["simulate", config, "--out", dir.path().to_str().unwrap(), "--paths", "3000", "--grid", "200"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    assert_eq!(read(&a, "mc.csv"), read(&b, "mc.csv"));
    assert_eq!(read(&a, "paths.csv"), read(&b, "paths.csv"));
    let mc = String::from_utf8(read(&a, "mc.csv")).unwrap();
    assert!(mc.lines().nth(1).unwrap().contains(",3000,42,"));
}

#[test]
fn exit_codes_are_distinct_per_failure() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let low_z = write("low.toml", &shipped_text("frontier.toml").replace("z = [1.05, 1.1, 1.2, 1.3]", "z = [0.9]"));
    let cases = [
        (write("parse.toml", "[grid\n"), "solve", 2),
        (write("schema.toml", &MINIMAL.replace("G0 = 1.0\n", "")), "solve", 3),
        (write("assume.toml", &MINIMAL.replacen("A = 0.0", "A = 0.0\nE = -2.0", 1)), "solve", 4),
        (low_z, "frontier", 15),
        (dir.path().join("absent.toml").to_str().unwrap().to_string(), "solve", 17),
    ];
    for (path, mode, code) in cases {
        let res = jumplq(&[mode, &path, "--out", out]);
        assert_eq!(res.status.code(), Some(code), "{mode} {path}: {}", String::from_utf8_lossy(&res.stderr));
        assert!(!res.stderr.is_empty());
    }
}

#[test]
fn failed_validation_surfaces_as_failed_check() {
    let dir = tempfile::tempdir().unwrap();
    let text = shipped_text("verify.toml")
        .replace("E = -0.4", "E = -2.0")
        .replace("criteria = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]", "criteria = [2]");
    let path = dir.path().join("v.toml");
    std::fs::write(&path, text).unwrap();
    let res = jumplq(&["verify", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(report.contains("configured problem,FAIL"));
    assert!(report.contains("ViolatedAssumption"));
}

#[test]
fn neither_case_surfaces_as_failed_check() {
    let dir = tempfile::tempdir().unwrap();
    let text = shipped_text("verify.toml")
        .replace("R = [[1.0]]", "R = [[0.0]]")
        .replace("G0 = 1.0", "G0 = 0.0")
        .replace("G1 = 1.5", "G1 = 0.0")
        .replace("criteria = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]", "criteria = [10]");
    let path = dir.path().join("v.toml");
    std::fs::write(&path, text).unwrap();
    let res = jumplq(&["verify", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(report.contains("NeitherCase"));
}

#[test]
fn shipped_frontier_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let res = jumplq(&[
        "frontier",
        shipped("frontier.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--paths",
        "2000",
    ]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(dir.path().join("frontier.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("z,eta_star,J_star,N0,P0,mc_mean"));
}

#[test]
fn shipped_verify_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let res = jumplq(&["verify", shipped("verify.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(report.matches(",PASS,").count(), 11);
}
