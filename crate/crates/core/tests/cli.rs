use measchrod::carleman::ExteriorReport;
use measchrod::cli::{canonical_json, CheckRow, ResonanceOutput};
use measchrod::wave::LedReport;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

const DELTA2: &str = r#"{"support": [-1, 1], "atoms": [{"x": 0, "w": 2}]}"#;
const DELTA2_REORDERED: &str = r#"{"atoms": [{"w": 2, "x": 0}], "support": [-1, 1]}"#;
const ATTRACTIVE: &str = r#"{"support": [-1, 1], "atoms": [{"x": 0, "w": -2}]}"#;
const FREE: &str = r#"{"support": [-1, 1]}"#;

struct Run {
    dir: TempDir,
}

impl Run {
    fn new() -> Self {
        Run {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn out(&self, sub: &str) -> PathBuf {
        self.dir.path().join(sub)
    }

    fn exec(&self, sub: &str, args: &[&str]) -> Output {
        self.exec_env(sub, args, &[])
    }

    fn exec_env(&self, sub: &str, args: &[&str], env: &[(&str, &str)]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_measchrod"));
        cmd.arg("--out").arg(self.out(sub)).args(args);
        for (k, v) in env {
            cmd.env(k, v);
        }
        cmd.output().unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Every listed output exists and parses as its format.
fn check_manifest(dir: &Path) -> Value {
    let m = json(&dir.join("manifest.json"));
    for o in m["outputs"].as_array().unwrap() {
        let p = dir.join(o.as_str().unwrap());
        assert!(p.exists(), "{p:?} missing");
        if p.extension().unwrap() == "json" {
            json(&p);
        } else {
            let mut r = csv::Reader::from_path(&p).unwrap();
            for rec in r.records() {
                rec.unwrap();
            }
        }
    }
    m
}

#[test]
fn carleman_example_writes_three_passing_rows() {
    let r = Run::new();
    let pot = r.file("delta2.json", DELTA2);
    let o = r.exec(
        "a",
        &[
            "carleman",
            "--potential",
            pot.to_str().unwrap(),
            "--E",
            "1",
            "--eps",
            "0.1",
            "--h",
            "1,0.5,0.25",
            "--delta",
            "1",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows: Vec<CheckRow> = serde_json::from_value(json(&r.out("a").join("carleman.json"))).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|row| row.passed && row.ratio <= row.tolerance));
    let csv_rows = csv::Reader::from_path(r.out("a").join("carleman.csv"))
        .unwrap()
        .records()
        .count();
    assert_eq!(csv_rows, 3);
    let m = check_manifest(&r.out("a"));
    assert_eq!(m["command"], "carleman");
}

#[test]
fn emitted_json_round_trips() {
    let r = Run::new();
    let pot = r.file("delta2.json", DELTA2);
    let o = r.exec(
        "a",
        &[
            "resolvent-bound",
            "--potential",
            pot.to_str().unwrap(),
            "--h",
            "1,0.5",
            "--sign",
            "both",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let raw = json(&r.out("a").join("resolvent_bound.json"));
    let rows: Vec<CheckRow> = serde_json::from_value(raw.clone()).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(serde_json::to_value(&rows).unwrap(), raw);

    let o = r.exec(
        "b",
        &["exterior", "--potential", pot.to_str().unwrap(), "--h", "0.25,0.125"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let raw = json(&r.out("b").join("exterior.json"));
    let rep: ExteriorReport = serde_json::from_value(raw.clone()).unwrap();
    assert_eq!(serde_json::to_value(&rep).unwrap(), raw);
    assert!(rep.slope_in_band(), "slope {}", rep.slope);
    check_manifest(&r.out("b"));
}

#[test]
fn usage_errors_exit_two_with_messages() {
    let r = Run::new();
    let pot = r.file("delta2.json", DELTA2);
    let p = pot.to_str().unwrap();
    let o = r.exec("a", &["carleman", "--potential", p, "--h", ""]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("h grid empty"), "{}", stderr(&o));

    let bad = r.file("bad.json", "{\n  \"support\": [-1, 1],\n  \"atoms\": [\n");
    let o = r.exec("b", &["carleman", "--potential", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert!(msg.contains("line") && msg.contains("column"), "{msg}");

    let o = r.exec("c", &["exterior", "--potential", p, "--h", "0.3,0.25"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("h exceeds h₀ = 0.25"), "{}", stderr(&o));

    let o = r.exec("d", &["resonances", "--potential", p, "--rect=-1,1,-1,1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("rectangle must exclude λ=0"), "{}", stderr(&o));

    let o = r.exec("e", &["wave", "--potential", p, "--w0", "0,1.5,1"]);
    assert_eq!(code(&o), 2);

    let o = r.exec("f", &["carleman", "--bogus"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn resonance_listing() {
    let r = Run::new();
    let pot = r.file("delta2.json", DELTA2);
    let o = r.exec(
        "a",
        &[
            "resonances",
            "--potential",
            pot.to_str().unwrap(),
            "--rect=-1,1,-2,-0.5",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let raw = json(&r.out("a").join("resonances.json"));
    let out: ResonanceOutput = serde_json::from_value(raw.clone()).unwrap();
    assert_eq!(out.resonances.len(), 1);
    let l = out.resonances[0].lambda;
    assert!(l.re.abs() < 1e-6 && (l.im + 1.0).abs() < 1e-6, "{l}");
    assert!(raw["resonances"][0].get("lambda_re").is_some());

    let free = r.file("free.json", FREE);
    let o = r.exec(
        "b",
        &[
            "resonances",
            "--potential",
            free.to_str().unwrap(),
            "--rect=-5,5,-3,-0.1",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out: ResonanceOutput = serde_json::from_value(json(&r.out("b").join("resonances.json"))).unwrap();
    assert!(out.resonances.is_empty());
}

#[test]
fn wave_runs_and_flags_bound_state_growth() {
    let r = Run::new();
    let pot = r.file("delta2.json", DELTA2);
    let o = r.exec("a", &["wave", "--potential", pot.to_str().unwrap(), "--T", "20"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep: LedReport = serde_json::from_value(json(&r.out("a").join("wave_fit.json"))).unwrap();
    assert!((rep.fit.rate - 2.0).abs() < 0.5 && rep.decays);
    check_manifest(&r.out("a"));

    let att = r.file("att.json", ATTRACTIVE);
    let o = r.exec(
        "b",
        &[
            "wave",
            "--potential",
            att.to_str().unwrap(),
            "--T",
            "20",
            "--project-nonneg=false",
        ],
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let rep: LedReport = serde_json::from_value(json(&r.out("b").join("wave_fit.json"))).unwrap();
    assert!(!rep.decays && !rep.projected);
}

#[test]
fn fixed_seed_is_deterministic_and_hash_ignores_key_order() {
    let r = Run::new();
    let a = r.file("a.json", DELTA2);
    let b = r.file("b.json", DELTA2_REORDERED);
    let args = |p: &Path, seed: &'static str| -> Vec<String> {
        [
            "--seed",
            seed,
            "carleman",
            "--potential",
            p.to_str().unwrap(),
            "--h",
            "1,0.5",
            "--draws",
            "3",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    };
    let run = |sub: &str, p: &Path, seed: &'static str, threads: &str| {
        let v = args(p, seed);
        let refs: Vec<&str> = v.iter().map(String::as_str).collect();
        let o = r.exec_env(sub, &refs, &[("MEASCHROD_THREADS", threads)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read_to_string(r.out(sub).join("carleman.csv")).unwrap()
    };
    let first = run("s1", &a, "11", "1");
    assert_eq!(first, run("s2", &b, "11", "3"));
    assert_ne!(first, run("s3", &a, "12", "2"));
    let m1 = json(&r.out("s1").join("manifest.json"));
    let m2 = json(&r.out("s2").join("manifest.json"));
    assert_eq!(m1["potential_hash"], m2["potential_hash"]);
    assert_eq!(m1["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m1["threads"], 1);
    assert_eq!(m1["seed"], 11);
    assert_eq!(
        canonical_json(&m1["config"]).unwrap(),
        canonical_json(&m2["config"]).unwrap().replace("b.json", "a.json")
    );
}

#[test]
fn potential_validate_accepts_and_rejects() {
    let r = Run::new();
    let ok = r.file(
        "ok.json",
        r#"{"support": [0, 1], "generators": [{"type": "cantor", "level": 3, "mass": 1}]}"#,
    );
    let o = r.exec("a", &["potential-validate", "--potential", ok.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let unsorted = r.file(
        "bad.json",
        r#"{"support": [-1, 1], "density": {"breakpoints": [0.5, 0], "coeffs": [[1, 0, 0, 0]]}}"#,
    );
    let o = r.exec("b", &["potential-validate", "--potential", unsorted.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}
