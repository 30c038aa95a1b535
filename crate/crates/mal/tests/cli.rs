use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn mal(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mal"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let out = dir.join("out");
    let text = format!("{body}\n[output]\ndirectory = {:?}\n", out.display().to_string());
    let path = dir.join("experiment.toml");
    std::fs::write(&path, text).unwrap();
    path
}

const CONSTANTS: &str = r#"
[experiment]
id = "constants"
[grid]
N = 16
[fixture]
preset = "constants"
[geodesic]
time_steps = 16
epsilon_schedule = [0.1]
"#;

fn read_path_csv(path: &Path) -> Vec<(f64, usize, usize, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,i,j,u"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect()
}

#[test]
fn solve_constants_matches_scalar_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANTS);
    let out = mal(&["solve", "--config", cfg.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_path_csv(&dir.path().join("out/constants.path.csv"));
    assert_eq!(rows.len(), 17 * 16 * 16);
    for (t, _, _, u) in rows {
        let exact = 0.5 * t + 0.05 * (t * t - t);
        assert!((u - exact).abs() < 1e-6, "t={t}: {u} vs {exact}");
    }
    let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/constants.json")).unwrap()).unwrap();
    assert_eq!(side["N"], 16);
    assert_eq!(side["epsilon"], 0.1);
    assert!(side["hcma_deviation"].as_f64().unwrap() < 1e-6);
    assert_eq!(side["config_hash"].as_str().unwrap().len(), 64);
    let hcma = std::fs::read_to_string(dir.path().join("out/constants.hcma.csv")).unwrap();
    assert!(hcma.starts_with("t,i,j,c\n"));
}

#[test]
fn repeated_solves_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let body = CONSTANTS
        .replace("preset = \"constants\"", "preset = \"mixture\"")
        .replace("epsilon_schedule = [0.1]", "epsilon_schedule = [0.5, 0.1, 0.02]");
    let cfg = write_config(dir.path(), &body);
    let files = ["constants.path.csv", "constants.hcma.csv", "constants.json"];
    let run = |threads: &str| {
        let out = mal(&["solve", "--config", cfg.to_str().unwrap()], &[("MAL_THREADS", threads)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        files.map(|f| std::fs::read(dir.path().join("out").join(f)).unwrap())
    };
    let first = run("0");
    assert_eq!(first, run("0"));
    assert_eq!(first, run("1"));
}

#[test]
fn malformed_configs_exit_3_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    for (body, field) in [
        (CONSTANTS.replace("N = 16", "N = -16"), "grid.N"),
        (CONSTANTS.replace("time_steps = 16", "time_steps = 1"), "geodesic.time_steps"),
        (CONSTANTS.replace("[0.1]", "[0.1, -1.0]"), "geodesic.epsilon_schedule[1]"),
        (CONSTANTS.replace("\"constants\"\n[geodesic]", "\"nope\"\n[geodesic]"), "fixture.preset"),
    ] {
        let cfg = write_config(dir.path(), &body);
        let out = mal(&["solve", "--config", cfg.to_str().unwrap()], &[]);
        assert_eq!(out.status.code(), Some(3));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(field), "{field}: {err}");
    }
    let out = mal(&["solve", "--config", dir.path().join("missing.toml").to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn nonconvergence_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let body = CONSTANTS
        .replace("preset = \"constants\"", "preset = \"random\"")
        .replace("epsilon_schedule = [0.1]", "epsilon_schedule = [1e-3]\nmax_iter = 1");
    let cfg = write_config(dir.path(), &body);
    let out = mal(&["solve", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

fn records(stdout: &[u8]) -> Vec<Value> {
    String::from_utf8_lossy(stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

const KEYS: [&str; 10] = [
    "experiment",
    "check",
    "value",
    "tolerance",
    "pass",
    "seed",
    "N",
    "time_steps",
    "epsilon",
    "config_hash",
];

#[test]
fn noether_on_constants_passes_with_zero_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONSTANTS.replace("epsilon_schedule = [0.1]", ""));
    let out = mal(&["verify", "--config", cfg.to_str().unwrap(), "--suite", "noether"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out.stdout);
    for r in &recs {
        for k in KEYS {
            assert!(r.get(k).is_some(), "missing {k} in {r}");
        }
    }
    let dev = recs.iter().find(|r| r["check"] == "max-deviation").unwrap();
    // zero in the limit; the continuation stops at a small ε, where u̇ = 0.5 + ε(t − ½)
    let eps = dev["epsilon"].as_f64().unwrap();
    assert!(eps > 0.0 && eps < 1e-3);
    assert!(dev["value"].as_f64().unwrap() <= 0.5 * eps + 1e-12, "{dev}");
    assert_eq!(dev["pass"], true);
    let control = recs.iter().find(|r| r["kind"] == "control").unwrap();
    assert_eq!(control["expectation"], "expected-fail: observed-fail");
    let saved = std::fs::read(dir.path().join("out/constants.verify.jsonl")).unwrap();
    assert_eq!(saved, out.stdout);
}

#[test]
fn least_action_records_every_competitor() {
    let dir = tempfile::tempdir().unwrap();
    let body = CONSTANTS
        .replace("preset = \"constants\"", "preset = \"mode-vs-constant\"")
        .replace("epsilon_schedule = [0.1]", "")
        + "[verification]\ncount = 100\nseeds = [7]\n";
    let cfg = write_config(dir.path(), &body);
    let out = mal(&["verify", "--config", cfg.to_str().unwrap(), "--suite", "least_action"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out.stdout);
    let margins: Vec<f64> = recs
        .iter()
        .filter(|r| r["check"].as_str().unwrap().starts_with("competitor-"))
        .map(|r| -r["value"].as_f64().unwrap())
        .collect();
    assert_eq!(margins.len(), 100);
    assert!(margins.iter().all(|&m| m >= -5e-3));
    assert!(recs.iter().all(|r| r["seed"] == 7 && r["N"] == 16));
    let hash = recs[0]["config_hash"].as_str().unwrap();
    assert!(recs.iter().all(|r| r["config_hash"] == hash));
    let control = recs.iter().find(|r| r["kind"] == "control").unwrap();
    assert_eq!(control["pass"], true);
    assert_eq!(control["expectation"], "expected-fail: observed-fail");
}

#[test]
fn verify_rejects_unknown_suites_and_empty_selection() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANTS);
    let out = mal(&["verify", "--config", cfg.to_str().unwrap(), "--suite", "noether,bogus"], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    let out = mal(&["verify", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(3));
}

fn rearrange(input: &str) -> (Option<i32>, String) {
    let dir = tempfile::tempdir().unwrap();
    let (inp, outp) = (dir.path().join("in.csv"), dir.path().join("out.csv"));
    std::fs::write(&inp, input).unwrap();
    let out = mal(&["rearrange", "--in", inp.to_str().unwrap(), "--out", outp.to_str().unwrap()], &[]);
    (out.status.code(), std::fs::read_to_string(&outp).unwrap_or_default())
}

fn parse_table(text: &str) -> Vec<(f64, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

#[test]
fn rearrange_sorts_levels_and_accumulates_mass() {
    let (code, text) = rearrange("value,weight\n1,0.5\n3,0.3\n2,0.2\n");
    assert_eq!(code, Some(0));
    assert!(text.starts_with("breakpoint,level\n"));
    let rows = parse_table(&text);
    let expect = [(0.3, 3.0), (0.5, 2.0), (1.0, 1.0)];
    assert_eq!(rows.len(), 3);
    for ((b, l), (eb, el)) in rows.iter().zip(expect) {
        assert!((b - eb).abs() < 1e-15 && *l == el, "{rows:?}");
    }
    let (code, text) = rearrange("2.5,1\n");
    assert_eq!(code, Some(0));
    assert_eq!(parse_table(&text), vec![(1.0, 2.5)]);
}

#[test]
fn rearrange_rejects_bad_rows() {
    assert_eq!(rearrange("1,0.5\n2,0\n").0, Some(3));
    assert_eq!(rearrange("1,0.5\n2,-1\n").0, Some(3));
    assert_eq!(rearrange("1,0.5\nx,1\n").0, Some(3));
    assert_eq!(rearrange("1,0.5,3\n").0, Some(3));
    assert_eq!(rearrange("").0, Some(3));
}
