use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sirc-mfg")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&o.stderr)))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn presets_lists_five() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["presets"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 5);
    assert_eq!(list[0]["name"], "May2020");
    assert_eq!(list[0]["epidemic"]["beta"], 0.2821);
    assert_eq!(list[2]["init"]["R"]["A"], 0.006937);
    assert!(list[1]["init"].is_string());
}

#[test]
fn mfg_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(
        &["simulate-mfg", "--preset", "May2020", "--N", "50", "--M", "200", "--out", "may", "--snapshot-days", "0,50",
          "--binary-dump", "--population", "1000"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("may");

    let (header, rows) = csv_rows(&out.join("aggregates.csv"));
    assert_eq!(header[..7], ["t", "S", "I", "R", "C", "total", "newinf"]);
    assert_eq!(header.len(), 12);
    assert_eq!(rows.len(), 101);
    let m0 = rows[0][5];
    for r in &rows {
        assert!((r[5] - m0).abs() <= 1e-12 * m0);
        assert!((r[7] - 1000.0 * r[1]).abs() <= 1e-9);
    }

    let report = read_json(&out.join("report.json"));
    assert_eq!(report["converged"], true);
    assert_eq!(report["cost_history"].as_array().unwrap().len(), report["iterations"].as_u64().unwrap() as usize + 1);
    assert_eq!(report["stability"]["holds"], true);
    assert!(report["audit"]["max_mass_drift"].as_f64().unwrap() <= 1e-12);

    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["inputs_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["resolved_scenario"].as_str().unwrap().contains("[grid]"));

    let (fh, frows) = csv_rows(&out.join("fields_day50.csv"));
    assert_eq!(fh.len(), 13);
    assert_eq!(fh[0], "x");
    assert_eq!(frows.len(), 50);
    let (_, day0) = csv_rows(&out.join("fields_day0.csv"));

    let bytes = fs::read(out.join("density.bin")).unwrap();
    assert_eq!(bytes.len(), 201 * 4 * 50 * 8);
    let first = f64::from_le_bytes(bytes[..8].try_into().unwrap());
    assert_eq!(first, day0[0][1]);
    assert!(out.join("value.bin").exists());

    let state = read_json(&out.join("final_state.json"));
    assert_eq!(state["S"].as_array().unwrap().len(), 50);
}

#[test]
fn identical_inputs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = bin(&["simulate-mfg", "--preset", "Dec2020_case2", "--M", "100", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["aggregates.csv", "report.json", "final_state.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn july_chains_from_may() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["simulate-mfg", "--preset", "Jul2020", "--out", "jul"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "validation");

    assert_eq!(bin(&["simulate-mfg", "--preset", "May2020", "--out", "may"], dir.path()).status.code(), Some(0));
    let o = bin(&["simulate-mfg", "--preset", "Jul2020", "--init-from", "may/final_state.json", "--out", "jul"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, may) = csv_rows(&dir.path().join("may/aggregates.csv"));
    let (_, jul) = csv_rows(&dir.path().join("jul/aggregates.csv"));
    for c in 1..5 {
        assert!((may[100][c] - jul[0][c]).abs() <= 1e-15);
    }

    let o = bin(
        &["simulate-mfg", "--preset", "Jul2020", "--init-from", "may/final_state.json", "--N", "40", "--out", "bad"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_reports_cfl() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["validate", "--preset", "Dec2020", "--N", "200", "--M", "200"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["valid"], true);
    assert_eq!(v["cfl_diffusion"]["I"]["h2"], 2.5e-5);
    assert_eq!(v["cfl_diffusion"]["I"]["bound"], 1.0);

    let o = bin(&["validate", "--preset", "Dec2020", "--sigma2", "1e-6"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["valid"], false);
    assert_eq!(stderr_json(&o)["error"]["kind"], "validation");
}

#[test]
fn scenario_files() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| fs::write(dir.path().join(name), text).unwrap();

    write("bad_c2.toml", "preset = \"Dec2020\"\n[mfg]\nc2 = 1.5\n");
    let o = bin(&["validate", "--scenario", "bad_c2.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["error"]["message"].as_str().unwrap().contains("c2 out of [0,1]"));

    write("typo.toml", "preset = \"Dec2020\"\n[solver]\nmax_iter = 5\n");
    let o = bin(&["validate", "--scenario", "typo.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["error"]["message"].as_str().unwrap().contains("max_iter"));

    write("empty.toml", "");
    let o = bin(&["validate", "--scenario", "empty.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr_json(&o)["error"]["message"].as_str().unwrap().to_string();
    assert!(msg.contains("epidemic.beta") && msg.contains("grid.M") && msg.contains("init.I.xc"), "{msg}");

    write(
        "custom.toml",
        "[epidemic]\nbeta = 0.4\ngamma = 0.3\ndelta = 0.1\nmu = 0.02\nepsilon = 0.1\n\
         [mfg]\nsigma2 = 0.3\nc1 = 4.0\nc2 = 0.5\nc3 = 0.5\n\
         [grid]\nN = 20\nM = 50\nT = 20.0\n\
         [init.S]\nA = 0.97\nxc = 0.6\nsc = 0.2\n[init.I]\nA = 0.03\nxc = 0.4\nsc = 0.2\n\
         [init.R]\nA = 0.0\nxc = 0.5\nsc = 0.2\n[init.C]\nA = 0.0\nxc = 0.5\nsc = 0.2\n\
         [output]\nsnapshot_days = [10.0]\n",
    );
    let o = bin(&["simulate-mfg", "--scenario", "custom.toml", "--out", "custom"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("custom/fields_day10.csv").exists());
    assert_eq!(read_json(&dir.path().join("custom/report.json"))["scenario"], "custom");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["simulate-mfg", "--preset", "Dec2020", "--control-bound", "none", "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"]["kind"], "numerical");

    let o = bin(&["simulate-mfg", "--preset", "Dec2020", "--max-iters", "1", "--out", "y"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(read_json(&dir.path().join("y/report.json"))["converged"], false);

    let o = bin(&["simulate-mfg", "--preset", "Dec2020", "--snapshot-days", "500", "--out", "z"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = bin(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "usage");

    let o = bin(&["simulate-mfg", "--preset", "Nov2020"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn external_control_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["simulate-mfg", "--preset", "Dec2020_case3", "--external-control", "--out", "ext"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let report = read_json(&dir.path().join("ext/report.json"));
    assert_eq!(report["external_control"], true);
    assert!(read_json(&dir.path().join("ext/manifest.json"))["resolved_scenario"]
        .as_str()
        .unwrap()
        .contains("external_control = true"));
}

#[test]
fn ode_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["simulate-ode", "--preset", "Dec2020", "--dt", "0.5", "--out", "ode"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = csv_rows(&dir.path().join("ode/trajectory.csv"));
    assert_eq!(header, ["t", "S", "I", "R", "C", "total", "newinf"]);
    assert_eq!(rows.len(), 201);
    assert_eq!(rows[0][1], 0.991199);
    assert!(rows.iter().all(|r| (r[5] - 1.0).abs() < 1e-10));
    assert_eq!(rows[200][0], 100.0);
}
