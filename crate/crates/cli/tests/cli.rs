use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_overlapix"))
        .args(args)
        .env_remove("OVERLAPIX_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}\n{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
    })
}

#[test]
fn norms_of_vacuum_and_ghz() {
    let o = run(&["norms", "--family", "fock", "--n", "0"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["l1"].as_f64().unwrap(), 1.0);
    assert_eq!(v["schema"], 1);
    for k in ["l2", "linf", "smoothed_l1"] {
        assert!(v[k].is_number(), "{k}");
    }
    let o = run(&["norms", "--family", "ghz", "--n", "3"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["l1"].as_f64().unwrap(), 0.875);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["norms", "--family", "fock", "--n", "-1"][..],
        &["norms", "--family", "squeezed", "--n", "1"],
        &["norms", "--target", "fock:x"],
        &["estimate", "--target", "ghz:3", "--sigma", "ghz:3", "--delta", "0.05"],
        &["estimate", "--target", "ghz:3", "--sigma", "ghz:2", "--eps", "0.1", "--delta", "0.05", "--seed", "1"],
        &["sweep", "--family", "nonsense"],
        &["sweep", "--family", "stabiliser", "--trials", "10", "--seed", "1"],
        &["frobnicate"],
    ] {
        let o = run(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn capacity_exits_3() {
    assert_eq!(code(&run(&["norms", "--family", "ghz", "--n", "9"])), 3);
    assert_eq!(code(&run(&["norms", "--target", "spike:9"])), 3);
}

#[test]
fn budget_overflow_exits_4() {
    let o = run(&["estimate", "--target", "ghz:3", "--sigma", "ghz:3", "--eps", "1e-5", "--delta", "0.05", "--seed", "1"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn estimate_ghz3_budget() {
    let o = run(&["estimate", "--target", "ghz:3", "--sigma", "ghz:3", "--eps", "0.1", "--delta", "0.05", "--seed", "7"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["n_samples"], 459);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["within_eps"], true);
}

#[test]
fn estimate_reports_mixture_truth() {
    let o = run(&[
        "estimate", "--target", "fock:0", "--sigma", "mix:fock0=0.7,fock1=0.3", "--eps", "0.1", "--delta", "0.1",
        "--seed", "5",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["truth"].as_f64().unwrap(), 0.7);
}

#[test]
fn seed_fixes_every_byte() {
    let args = ["estimate", "--target", "fock:1", "--sigma", "coherent:0.5", "--eps", "0.2", "--delta", "0.1", "--seed", "11"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.stdout, b.stdout);
    let dir = std::env::temp_dir().join(format!("overlapix-cli-{}", std::process::id()));
    let p = |k: &str| dir.join(k).display().to_string();
    for k in ["a", "b"] {
        let o = run(&["sweep", "--family", "haar", "--n", "4", "--draws", "20", "--seed", "3", "--output", &p(k)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for ext in ["json", "csv"] {
        let a = fs::read(format!("{}.{ext}", p("a"))).unwrap();
        let b = fs::read(format!("{}.{ext}", p("b"))).unwrap();
        assert_eq!(a, b, "{ext}");
        assert!(!a.contains(&b'\r'), "{ext} has CR");
    }
    let csv = fs::read_to_string(format!("{}.csv", p("a"))).unwrap();
    assert!(csv.starts_with("n,"));
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn missing_seed_is_logged() {
    let o = run(&["estimate", "--target", "ghz:2", "--sigma", "mm:2", "--eps", "0.2", "--delta", "0.1"]);
    assert_eq!(code(&o), 0);
    let err = String::from_utf8_lossy(&o.stderr);
    let seed = json(&o)["seed"].as_u64().unwrap();
    assert!(err.contains(&format!("--seed {seed}")), "{err}");
}

#[test]
fn thread_cap_is_honoured() {
    let with = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_overlapix"))
            .args(["norms", "--family", "fock", "--n", "2"])
            .env("OVERLAPIX_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(code(&with("1")), 0);
    assert_eq!(code(&with("lots")), 2);
}

#[test]
fn csv_format_prints_a_header_row() {
    let o = run(&["norms", "--family", "ghz", "--n", "3", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].split(',').any(|h| h == "l1"));
}

#[test]
fn witness_for_fock4() {
    let o = run(&["witness", "--family", "fock", "--n", "4", "--eps", "0.8"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["branch"], "low_part");
    assert_eq!(v["holds"], true);
}

#[test]
fn spike_sweep_passes() {
    let o = run(&["sweep", "--family", "spike", "--n", "2,4,8", "--seed", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["all_pass"], true);
}

#[test]
fn fock_sweep_passes() {
    let o = run(&["sweep", "--family", "fock", "--n", "4,16,64", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn stabiliser_sweep_passes() {
    let o = run(&["sweep", "--family", "stabiliser", "--n", "2,4,6", "--eps", "0.1", "--delta", "0.05", "--trials", "400", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}
