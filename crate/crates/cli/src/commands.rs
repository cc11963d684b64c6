use std::fs;
use std::io::Write;
use std::path::Path;

use overlapix::descriptor::{StateKind, StateSpec};
use overlapix::estimator::{estimate_fidelity_pauli, estimate_fidelity_wigner, make_blackbox};
use overlapix::experiments::{run_sweep, SweepFamily, SweepSpec};
use overlapix::format::round_json;
use overlapix::smoothing::{adversarial_g, budget_optimize, truncate};
use overlapix::{Error, Result};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};

/// A finished command: what to write, and whether its checks passed.
pub struct Outcome {
    pub json: Value,
    /// Pre-rendered CSV; built from the top-level JSON fields when absent.
    pub csv: Option<String>,
    pub pass: bool,
    pub diagnostics: Vec<String>,
}

fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn norms(cfg: &RunConfig) -> Result<Outcome> {
    let spec = StateSpec::parse(&cfg.state_descriptor()?)?;
    let mut json = serde_json::to_value(spec.norms(cfg.eps.unwrap_or(0.1))?).expect("norms serialise");
    json["schema"] = json!(1);
    json["state"] = json!(spec.label());
    Ok(Outcome {
        json,
        csv: None,
        pass: true,
        diagnostics: Vec::new(),
    })
}

pub fn estimate(cfg: &RunConfig, seed: u64) -> Result<Outcome> {
    let need = |o: &Option<String>, flag: &str| {
        o.clone().ok_or_else(|| Error::Parse(format!("estimate needs --{flag}")))
    };
    let target = StateSpec::parse(&need(&cfg.target, "target")?)?;
    let sigma = StateSpec::parse(&need(&cfg.sigma, "sigma")?)?;
    let eps = cfg.eps.ok_or_else(|| Error::Parse("estimate needs --eps".into()))?;
    let delta = cfg.delta.ok_or_else(|| Error::Parse("estimate needs --delta".into()))?;
    let mut bb = make_blackbox(sigma.measured()?, target.r(), seed)?;
    let mut rep = match (target.kind(), sigma.kind()) {
        (StateKind::Wigner(w), StateKind::Wigner(s)) => {
            if w.modes() != s.modes() {
                return Err(precondition("target and sigma have different mode counts"));
            }
            estimate_fidelity_wigner(w, &mut bb, eps, delta, seed)?
        }
        (StateKind::Qubits(a), StateKind::Qubits(b)) => {
            if a.n() != b.n() {
                return Err(precondition(format!(
                    "target has {} qubits, sigma has {}",
                    a.n(),
                    b.n()
                )));
            }
            estimate_fidelity_pauli(&target.table()?, &mut bb, eps, delta, seed)?
        }
        _ => return Err(precondition("target and sigma must both be optical or both qubit states")),
    };
    rep.state_descriptors = vec![target.label().to_string(), sigma.label().to_string()];
    if let Some(truth) = target.fidelity(&sigma) {
        rep = rep.with_truth(truth);
    }
    let mut diagnostics = Vec::new();
    if rep.within_eps == Some(false) {
        diagnostics.push(format!(
            "estimate {} misses truth {} by more than {eps}",
            rep.estimate,
            rep.truth.unwrap_or(f64::NAN)
        ));
    }
    Ok(Outcome {
        json: serde_json::to_value(&rep).expect("report serialises"),
        csv: None,
        pass: rep.within_eps != Some(false),
        diagnostics,
    })
}

fn unsigned(n: &[i64]) -> Result<Vec<u32>> {
    n.iter()
        .map(|&v| u32::try_from(v).map_err(|_| Error::Parse(format!("size '{v}' is not a non-negative integer"))))
        .collect()
}

pub fn sweep(cfg: &RunConfig, seed: u64) -> Result<Outcome> {
    let family: SweepFamily = cfg
        .family
        .as_deref()
        .ok_or_else(|| Error::Parse("sweep needs --family".into()))?
        .parse()?;
    let mut spec = SweepSpec::defaults(family);
    if !cfg.n.is_empty() {
        spec.n_list = unsigned(&cfg.n)?;
    }
    if !cfg.t_list.is_empty() {
        spec.t_list = cfg.t_list.clone();
    }
    if !cfg.eps_list.is_empty() {
        spec.eps_list = cfg.eps_list.clone();
    }
    if !cfg.targets.is_empty() {
        spec.targets = cfg.targets.clone();
    }
    spec.eps = cfg.eps.unwrap_or(spec.eps);
    spec.delta = cfg.delta.unwrap_or(spec.delta);
    spec.trials = cfg.trials.unwrap_or(spec.trials);
    spec.draws = cfg.draws.unwrap_or(spec.draws);
    spec.seed = seed;
    spec.validate()?;
    let res = run_sweep(&spec)?;
    let diagnostics = res
        .assertions
        .iter()
        .filter(|a| !a.pass)
        .map(|a| format!("FAIL {}: {}", a.name, a.detail))
        .collect();
    Ok(Outcome {
        json: serde_json::from_str(&res.to_json()).expect("sweep JSON parses"),
        csv: Some(res.to_csv()),
        pass: res.all_pass(),
        diagnostics,
    })
}

pub fn witness(cfg: &RunConfig) -> Result<Outcome> {
    let spec = StateSpec::parse(&cfg.state_descriptor()?)?;
    let eps = cfg.eps.ok_or_else(|| Error::Parse("witness needs --eps".into()))?;
    let delta = cfg.delta.unwrap_or(0.05);
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(precondition(format!("delta must lie in (0, 1/3), got {delta}")));
    }
    let f = spec.target()?;
    let g = adversarial_g(&f, eps)?;
    let holds = g.holds(1e-6);
    let lower = g.lower_bound_figure(f.r(), truncate(&f, 2.0 * eps)?.l1_tilde, delta);
    let upper = budget_optimize(&f, eps, delta, f.r())?.n_raw;
    let json = json!({
        "schema": 1,
        "state": spec.label(),
        "eps": eps,
        "delta": delta,
        "branch": g.branch,
        "c_star": finite(g.c_star),
        "t": g.t,
        "scale": g.scale,
        "l1_tilde": g.l1_tilde,
        "inner": g.properties.inner,
        "g_l2": g.properties.l2,
        "g_linf": g.properties.linf,
        "linf_bound": eps / g.l1_tilde,
        "holds": holds,
        "lower_bound_samples": lower,
        "upper_budget_samples": upper,
    });
    let diagnostics = if holds {
        Vec::new()
    } else {
        vec![format!("witness properties fail: {:?}", g.properties)]
    };
    Ok(Outcome {
        json,
        csv: None,
        pass: holds,
        diagnostics,
    })
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flat_csv(v: &Value) -> Result<String> {
    let Value::Object(map) = v else {
        return Err(Error::Contract("CSV rendering needs a JSON object".into()));
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::Contract(format!("CSV write failed: {e}"));
    w.write_record(map.keys()).map_err(io)?;
    w.write_record(map.values().map(scalar)).map_err(io)?;
    let bytes = w.into_inner().map_err(|e| Error::Contract(format!("CSV flush failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
}

/// Writes `<output>.json` and `<output>.csv`, or prints the chosen format.
pub fn emit(cfg: &RunConfig, out: &mut Outcome) -> std::io::Result<()> {
    round_json(&mut out.json);
    let json = serde_json::to_string_pretty(&out.json).expect("value serialises") + "\n";
    let csv = match out.csv.take() {
        Some(c) => c,
        None => flat_csv(&out.json).map_err(|e| std::io::Error::other(e.to_string()))?,
    };
    match &cfg.output {
        Some(p) => {
            let with = |ext: &str| {
                let mut s = p.as_os_str().to_owned();
                s.push(ext);
                s
            };
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(Path::new(&with(".json")), &json)?;
            fs::write(Path::new(&with(".csv")), &csv)?;
        }
        None => {
            let text = match cfg.format {
                Format::Json => json,
                Format::Csv => csv,
            };
            std::io::stdout().lock().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
