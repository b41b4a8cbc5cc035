use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_convexhodge"))
}

fn job_file(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("convexhodge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(sub: &str, job: &str, extra: &[&str]) -> Output {
    static NEXT: AtomicUsize = AtomicUsize::new(0);
    let path = job_file(&format!("{sub}-{}.json", NEXT.fetch_add(1, Ordering::Relaxed)), job);
    bin().arg(sub).arg("--job").arg(path).args(extra).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: stderr {}", String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn mixvol_two_discs() {
    let out = run(
        "mixvol",
        r#"{"command": "mixvol", "n": 2, "bodies": [{"type": "ball", "radius": 1.0}, {"type": "ball", "radius": 2.0}]}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((r["results"]["value"].as_f64().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    assert!(r["results"]["oracle_relative_delta"].as_f64().unwrap() <= 1e-10);
    assert_eq!(r["verdict"]["pass"], Value::Bool(true));
    assert_eq!(r["version"], Value::String(convexhodge::VERSION.into()));
}

#[test]
fn spectral_row() {
    let out = run("spectral", r#"{"n": 4, "r": 2, "m": 2}"#, &[]);
    assert_eq!(out.status.code(), Some(0));
    let row = &report(&out)["results"]["rows"][0];
    assert!((row["hw"].as_f64().unwrap() - 1.0).abs() < 1e-14);
    assert_eq!(row["bound"].as_f64(), Some(0.25));
    assert_eq!(row["ratio"].as_f64(), Some(4.0));
    assert!(row["consistency"].as_f64().unwrap() <= 1e-13);
}

#[test]
fn hr_k2_family() {
    let out = run("hr", r#"{"command": "hr", "n": 4, "k": 2, "seed": 2}"#, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = &report(&out)["results"]["families"][0]["certificate"]["report"];
    let prim = &report["primitivity"];
    assert!(prim["residual"].as_f64().unwrap() <= 1e-6 * prim["scale"].as_f64().unwrap());
    assert!(report["margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn overrides_are_echoed() {
    let out = run("norms", r#"{"n": 3}"#, &["--grid", "24", "--seed", "9", "--tol-norms", "1e-9"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["job"]["grid"], 24);
    assert_eq!(r["job"]["seed"], 9);
    assert_eq!(r["seed"], 9);
    assert_eq!(r["job"]["tolerances"]["norms"].as_f64(), Some(1e-9));
    assert_eq!(r["results"]["grid_resolution"], 24);
}

#[test]
fn echoed_job_reruns_to_the_same_verdict() {
    let out = run("af", r#"{"n": 3, "seed": 4}"#, &["--seed", "5"]);
    let first = report(&out);
    let echoed = serde_json::to_string(&first["job"]).unwrap();
    let again = report(&run("af", &echoed, &[]));
    assert_eq!(first["verdict"], again["verdict"]);
    assert_eq!(first["results"], again["results"]);
}

#[test]
fn failed_verdict_exits_one() {
    // an impossible oracle tolerance turns a correct run into a failed check
    let out = run(
        "mixvol",
        r#"{"n": 2, "bodies": [{"type": "ellipsoid", "matrix": [[2.0, 0.5], [0.5, 1.0]]}, {"type": "ball", "radius": 1.3}]}"#,
        &["--tol-oracle=-1"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["verdict"]["pass"], Value::Bool(false));
}

#[test]
fn input_errors_exit_two() {
    let cases = [
        r#"{"n": 2, "bodies": [{"type": "ball", "radius": 1.0}"#,
        r#"{"n": 2, "bodies": [{"type": "cube", "side": 1.0}, {"type": "ball", "radius": 1.0}]}"#,
        r#"{"n": 2, "bodeis": []}"#,
        r#"{"command": "af", "n": 2}"#,
        r#"{"n": 3, "bodies": [{"type": "ball", "radius": 1.0}]}"#,
        r#"{"n": 3, "bodies": [{"type": "ball", "radius": 1.0}, {"type": "ball", "radius": 1.0},
            {"type": "harmonic_perturbation", "radius": 0.1, "terms": [{"degree": 2, "index": 0, "coef": 1.0}]}]}"#,
    ];
    for job in cases {
        let out = run("mixvol", job, &[]);
        assert_eq!(out.status.code(), Some(2), "{job}");
        assert!(!out.stderr.is_empty());
    }
    let out = run("mixvol", r#"{"n": 2, "bodeis": []}"#, &[]);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("bodeis") && msg.contains("line 1"), "{msg}");
    let out = run("mixvol", r#"{"n": 3, "bodies": [{"type": "ball", "radius": 1.0}, {"type": "ball", "radius": 1.0},
        {"type": "harmonic_perturbation", "radius": 0.1, "terms": [{"degree": 2, "index": 0, "coef": 1.0}]}]}"#, &[]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("margin"));
}

#[test]
fn out_flag_writes_the_report() {
    let out_path = std::env::temp_dir().join(format!("convexhodge-cli-{}-report.json", std::process::id()));
    let out = run("spectral", r#"{"n_max": 4, "m_max": 5}"#, &["--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(r["results"]["rows"].as_array().unwrap().len(), 16);
}

#[test]
fn runs_are_byte_identical() {
    let job = r#"{"n": 3, "bodies": [
        {"type": "harmonic_perturbation", "radius": 1.0, "terms": [{"degree": 2, "index": 1, "coef": 0.1}]},
        {"type": "minkowski_sum", "bodies": [{"type": "ball", "radius": 0.5}, {"type": "ellipsoid", "matrix": [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 0.5]]}]},
        {"type": "dilate", "factor": 2.0, "body": {"type": "ball", "radius": 0.5}}
    ]}"#;
    let strip = |o: &Output| {
        String::from_utf8(o.stdout.clone())
            .unwrap()
            .lines()
            .filter(|l| !l.contains("wall_clock_seconds"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = run("mixvol", job, &[]);
    let b = run("mixvol", job, &[]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(strip(&a), strip(&b));
}
