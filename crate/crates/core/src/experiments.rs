//! Parameter sweeps: norms, budgets and seeded estimation trials over state families,
//! with CSV rows and a JSON summary of pass/fail checks.

use std::f64::consts::FRAC_2_PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::cv_states::{
    fidelity_closed_form, norms_adaptive, spike_norm_bounds, WignerEvaluator, WignerKind,
};
use crate::descriptor::{StateKind, StateSpec};
use crate::dv_states::{char_table, haar_state, CharacteristicTable, StateModel};
use crate::error::{Error, Result};
use crate::estimator::{
    blackbox_rng, lambda_rng, BlackBoxSampler, Estimator, MeasuredFunction,
};
use crate::format::{round_json, sig12};
use crate::quadrature::QuadratureGrid;
use crate::smoothing::{adversarial_g, budget_optimize, truncate, LevelFunctionals, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFamily {
    FockScaling,
    SpikeBounds,
    StabiliserBudget,
    HaarConcentration,
    GaussianBudget,
    WorstCaseBand,
    AdversarialWitness,
}

impl SweepFamily {
    pub const ALL: [SweepFamily; 7] = [
        Self::FockScaling,
        Self::SpikeBounds,
        Self::StabiliserBudget,
        Self::HaarConcentration,
        Self::GaussianBudget,
        Self::WorstCaseBand,
        Self::AdversarialWitness,
    ];

    /// Short name used on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Self::FockScaling => "fock",
            Self::SpikeBounds => "spike",
            Self::StabiliserBudget => "stabiliser",
            Self::HaarConcentration => "haar",
            Self::GaussianBudget => "gaussian",
            Self::WorstCaseBand => "worstcase",
            Self::AdversarialWitness => "witness",
        }
    }
}

impl fmt::Display for SweepFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fock" | "fock_scaling" => Self::FockScaling,
            "spike" | "spike_bounds" => Self::SpikeBounds,
            "stabiliser" | "stabilizer" | "stabiliser_budget" => Self::StabiliserBudget,
            "haar" | "haar_concentration" => Self::HaarConcentration,
            "gaussian" | "gaussian_budget" => Self::GaussianBudget,
            "worstcase" | "worst_case_band" => Self::WorstCaseBand,
            "witness" | "adversarial_witness" => Self::AdversarialWitness,
            _ => return Err(Error::Parse(format!("unknown sweep family '{s}'"))),
        })
    }
}

/// Everything a sweep depends on besides the build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: SweepFamily,
    pub n_list: Vec<u32>,
    pub t_list: Vec<f64>,
    pub eps: f64,
    pub eps_list: Vec<f64>,
    pub delta: f64,
    pub trials: usize,
    pub draws: usize,
    pub targets: Vec<String>,
    pub seed: u64,
}

impl SweepSpec {
    pub fn defaults(family: SweepFamily) -> Self {
        let mut s = Self {
            family,
            n_list: Vec::new(),
            t_list: Vec::new(),
            eps: 0.1,
            eps_list: Vec::new(),
            delta: 0.05,
            trials: 0,
            draws: 0,
            targets: Vec::new(),
            seed: 1,
        };
        match family {
            SweepFamily::FockScaling => {
                s.n_list = vec![4, 16, 64];
                s.delta = 0.1;
                s.trials = 100;
            }
            SweepFamily::SpikeBounds => s.n_list = vec![2, 4, 8],
            SweepFamily::StabiliserBudget => {
                s.n_list = vec![2, 4, 6];
                s.trials = 400;
            }
            SweepFamily::HaarConcentration => {
                s.n_list = vec![4, 5, 6];
                s.draws = 20;
            }
            SweepFamily::GaussianBudget => {
                s.eps_list = vec![0.2, 0.1, 0.05];
                s.delta = 0.1;
                s.trials = 100;
                s.targets = vec!["vacuum".into(), "coherent:1".into()];
            }
            SweepFamily::WorstCaseBand => {
                s.t_list = vec![1.0, 2.0, 4.0, 8.0];
                s.trials = 100;
            }
            SweepFamily::AdversarialWitness => {
                s.eps_list = vec![0.05, 0.1, 0.15, 0.3, 0.8];
                s.targets = ["fock:0", "fock:4", "fock:16", "ghz:3", "haar:4:1"]
                    .map(String::from)
                    .to_vec();
            }
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Precondition(m));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0,1), got {}", self.delta));
        }
        if self.trials > 0 && self.trials < 100 {
            return bad(format!("failure-rate checks need at least 100 trials, got {}", self.trials));
        }
        let eps_ok = |e: f64| e > 0.0 && e < 1.0;
        let in_range = |lo: u32, hi: u32| self.n_list.iter().all(|n| (lo..=hi).contains(n));
        match self.family {
            SweepFamily::FockScaling if self.n_list.is_empty() || !in_range(0, 64) => {
                bad("Fock sweeps need n in 0..=64".into())
            }
            SweepFamily::SpikeBounds if self.n_list.is_empty() || !in_range(1, 8) => {
                bad("spike sweeps need n in 1..=8".into())
            }
            SweepFamily::StabiliserBudget if self.n_list.is_empty() || !in_range(2, 8) => {
                bad("stabiliser sweeps need n in 2..=8".into())
            }
            SweepFamily::HaarConcentration if self.n_list.is_empty() || !in_range(3, 7) => {
                bad("Haar sweeps need n in 3..=7".into())
            }
            SweepFamily::HaarConcentration if self.draws < 20 => {
                bad(format!("Haar sweeps need at least 20 draws, got {}", self.draws))
            }
            SweepFamily::GaussianBudget | SweepFamily::AdversarialWitness
                if self.eps_list.is_empty() || self.targets.is_empty() =>
            {
                bad("this sweep needs targets and an epsilon list".into())
            }
            SweepFamily::GaussianBudget | SweepFamily::AdversarialWitness
                if !self.eps_list.iter().all(|e| eps_ok(*e)) =>
            {
                bad("epsilons must lie in (0,1)".into())
            }
            SweepFamily::WorstCaseBand
                if self.t_list.is_empty() || self.t_list.iter().any(|t| !(1.0..9.0).contains(t)) =>
            {
                bad("worst-case sweeps need t in [1, 9)".into())
            }
            SweepFamily::WorstCaseBand if !(self.eps > 0.0 && self.eps <= 0.5) => {
                bad(format!("worst-case sweeps mix with weight 2*eps; need eps in (0, 0.5], got {}", self.eps))
            }
            _ if !eps_ok(self.eps) => bad(format!("epsilon must lie in (0,1), got {}", self.eps)),
            _ => Ok(()),
        }
    }

    /// Hex SHA-256 of the JSON encoding.
    pub fn config_hash(&self) -> String {
        hex(&Sha256::digest(serde_json::to_vec(self).expect("spec serialises")))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// One named pass/fail check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Rows and checks of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema: u32,
    pub family: SweepFamily,
    pub spec: SweepSpec,
    pub config_hash: String,
    pub seed: u64,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub assertions: Vec<Assertion>,
    pub all_pass: bool,
}

impl SweepResult {
    fn new(spec: &SweepSpec, columns: &[&str]) -> Self {
        Self {
            schema: 1,
            family: spec.family,
            spec: spec.clone(),
            config_hash: spec.config_hash(),
            seed: spec.seed,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            assertions: Vec::new(),
            all_pass: true,
        }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.all_pass &= pass;
        self.assertions.push(Assertion {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn all_pass(&self) -> bool {
        self.all_pass
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    /// Column `name` of every row.
    pub fn column(&self, name: &str) -> Vec<Value> {
        match self.columns.iter().position(|c| c == name) {
            Some(i) => self.rows.iter().map(|r| r[i].clone()).collect(),
            None => Vec::new(),
        }
    }

    /// Pretty JSON; floats rounded to 12 significant digits, rows as objects.
    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect())
            })
            .collect();
        let mut v = json!({
            "schema": self.schema,
            "family": self.family,
            "spec": self.spec,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "columns": self.columns,
            "rows": rows,
            "assertions": self.assertions,
            "all_pass": self.all_pass,
        });
        round_json(&mut v);
        let mut s = serde_json::to_string_pretty(&v).expect("value serialises");
        s.push('\n');
        s
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Contract(format!("csv write failed: {e}"));
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(cell)).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::Contract(format!("csv flush failed: {e}")))?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// SHA-256 over the JSON and CSV artifacts.
    pub fn artifact_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_json());
        h.update(self.to_csv());
        hex(&h.finalize())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => i.to_string(),
            (_, Some(u), _) => u.to_string(),
            (_, _, Some(f)) => sig12(f).to_string(),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    json!(x)
}

/// Binomial slack `3√(δ/T)` on an empirical failure rate.
pub fn failure_slack(delta: f64, trials: usize) -> f64 {
    3.0 * (delta / trials as f64).sqrt()
}

/// Deterministic sub-seed for `(seed, tags…)` (splitmix64 steps).
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut z = seed;
    for t in tags.iter().chain(std::iter::once(&0x5eed)) {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(*t);
        let mut x = z;
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z = x ^ (x >> 31);
    }
    z
}

/// Runs `trials` independent estimations and returns the fraction with
/// `|estimate + offset − truth| > ε`.
pub fn failure_rate(
    est: &Estimator,
    sigma: &Arc<dyn MeasuredFunction>,
    truth: f64,
    offset: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let eps = est.plan().epsilon;
    let r = est.plan().r;
    let fails: Vec<bool> = (0..trials as u64)
        .into_par_iter()
        .map(|k| -> Result<bool> {
            let mut bb = BlackBoxSampler::new(sigma.clone(), r, blackbox_rng(seed, k))?;
            let x = est.run(&mut bb, &mut lambda_rng(seed, k))?;
            Ok((x + offset - truth).abs() > eps)
        })
        .collect::<Result<_>>()?;
    Ok(fails.iter().filter(|f| **f).count() as f64 / trials as f64)
}

fn spread(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Runs the sweep described by `spec`.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    match spec.family {
        SweepFamily::FockScaling => fock_scaling(spec),
        SweepFamily::SpikeBounds => spike_bounds(spec),
        SweepFamily::StabiliserBudget => stabiliser_budget(spec),
        SweepFamily::HaarConcentration => haar_trend(spec),
        SweepFamily::GaussianBudget => gaussian_budget(spec),
        SweepFamily::WorstCaseBand => worstcase_band(spec),
        SweepFamily::AdversarialWitness => adversarial_witness(spec),
    }
}

pub fn run_fock_scaling(
    n_list: &[u32],
    eps: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<SweepResult> {
    run_sweep(&SweepSpec {
        n_list: n_list.to_vec(),
        eps,
        delta,
        trials,
        seed,
        ..SweepSpec::defaults(SweepFamily::FockScaling)
    })
}

pub fn run_spike_bounds(n_list: &[u32], seed: u64) -> Result<SweepResult> {
    run_sweep(&SweepSpec {
        n_list: n_list.to_vec(),
        seed,
        ..SweepSpec::defaults(SweepFamily::SpikeBounds)
    })
}

pub fn run_stabiliser_budget(
    n_list: &[u32],
    eps: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<SweepResult> {
    run_sweep(&SweepSpec {
        n_list: n_list.to_vec(),
        eps,
        delta,
        trials,
        seed,
        ..SweepSpec::defaults(SweepFamily::StabiliserBudget)
    })
}

pub fn run_haar_trend(
    n_list: &[u32],
    draws: usize,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<SweepResult> {
    run_sweep(&SweepSpec {
        n_list: n_list.to_vec(),
        draws,
        eps,
        delta,
        seed,
        ..SweepSpec::defaults(SweepFamily::HaarConcentration)
    })
}

pub fn run_gaussian_budget(
    targets: &[String],
    eps_list: &[f64],
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<SweepResult> {
    run_sweep(&SweepSpec {
        targets: targets.to_vec(),
        eps_list: eps_list.to_vec(),
        delta,
        trials,
        seed,
        ..SweepSpec::defaults(SweepFamily::GaussianBudget)
    })
}

pub fn run_worstcase_band(
    t_list: &[f64],
    eps: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<SweepResult> {
    run_sweep(&SweepSpec {
        t_list: t_list.to_vec(),
        eps,
        delta,
        trials,
        seed,
        ..SweepSpec::defaults(SweepFamily::WorstCaseBand)
    })
}

pub fn run_adversarial_witness(
    targets: &[String],
    eps_list: &[f64],
    delta: f64,
    seed: u64,
) -> Result<SweepResult> {
    run_sweep(&SweepSpec {
        targets: targets.to_vec(),
        eps_list: eps_list.to_vec(),
        delta,
        seed,
        ..SweepSpec::defaults(SweepFamily::AdversarialWitness)
    })
}

fn rate_check(
    res: &mut SweepResult,
    name: String,
    rate: f64,
    spec: &SweepSpec,
) {
    let limit = spec.delta + failure_slack(spec.delta, spec.trials);
    res.check(
        name,
        rate <= limit,
        format!("failure rate {} over {} trials, limit {}", sig12(rate), spec.trials, sig12(limit)),
    );
}

fn fock_scaling(spec: &SweepSpec) -> Result<SweepResult> {
    let mut res = SweepResult::new(
        spec,
        &[
            "n", "l1", "l1_over_sqrt_n", "n_samples", "eps_prime", "samples_per_n", "truth_self",
            "fail_self", "truth_mix", "fail_mix",
        ],
    );
    let mut ratios = Vec::new();
    let mut per_n = Vec::new();
    for (row, &n) in spec.n_list.iter().enumerate() {
        let w = WignerEvaluator::fock(n);
        let (norms, _) = norms_adaptive(&w)?;
        let target = Target::wigner(&w)?;
        let est = Estimator::prepare(&target, spec.eps, spec.delta, FRAC_2_PI)?;
        let n_samples = est.plan().n_samples;
        let sqrt_ratio = if n > 0 { norms.l1 / (n as f64).sqrt() } else { f64::NAN };
        let samples_per_n = if n > 0 { n_samples as f64 / n as f64 } else { f64::NAN };
        if n > 0 {
            ratios.push(sqrt_ratio);
            per_n.push(samples_per_n);
        }
        let mix = WignerEvaluator::mixture(vec![(0.7, w.clone()), (0.3, WignerEvaluator::fock(n + 2))])?;
        let truth_mix = fidelity_closed_form(&w, &mix).unwrap_or(0.7);
        let (mut fs, mut fm) = (f64::NAN, f64::NAN);
        if spec.trials > 0 {
            let own: Arc<dyn MeasuredFunction> = Arc::new(w.clone());
            fs = failure_rate(&est, &own, 1.0, 0.0, spec.trials, derive_seed(spec.seed, &[row as u64, 0]))?;
            let mixed: Arc<dyn MeasuredFunction> = Arc::new(mix);
            fm = failure_rate(&est, &mixed, truth_mix, 0.0, spec.trials, derive_seed(spec.seed, &[row as u64, 1]))?;
            rate_check(&mut res, format!("failure_rate_self_n{n}"), fs, spec);
            rate_check(&mut res, format!("failure_rate_mix_n{n}"), fm, spec);
        }
        if n == 0 {
            let gauss = (8.0 / (spec.eps * spec.eps) * (1.0 / spec.delta).ln()).ceil();
            let dev = (n_samples as f64 - gauss).abs() / gauss;
            res.check(
                "gaussian_row",
                dev <= 0.1,
                format!("N = {n_samples} against the Gaussian budget {gauss}"),
            );
        }
        res.push(vec![
            json!(n),
            num(norms.l1),
            num(sqrt_ratio),
            json!(n_samples),
            num(est.plan().eps_prime),
            num(samples_per_n),
            num(1.0),
            num(fs),
            num(truth_mix),
            num(fm),
        ]);
    }
    if ratios.len() >= 2 {
        let s = spread(&ratios);
        res.check("l1_sqrt_n_band", s < 1.3, format!("max/min of l1/sqrt(n) = {}", sig12(s)));
        let s = spread(&per_n);
        res.check("budget_linear_in_n", s <= 1.5, format!("max/min of N/n = {}", sig12(s)));
    }
    Ok(res)
}

fn spike_bounds(spec: &SweepSpec) -> Result<SweepResult> {
    let mut res = SweepResult::new(
        spec,
        &["n", "linf", "linf_bound", "l1", "reciprocity", "c_n", "pass"],
    );
    let rows: Vec<_> = spec
        .n_list
        .par_iter()
        .map(|&n| {
            let radius = n as f64 * 3f64.powi(n as i32) + 5.0;
            spike_norm_bounds(n, &QuadratureGrid::cartesian(16, radius))
        })
        .collect::<Result<_>>()?;
    for b in rows {
        res.check(
            format!("spike_bounds_n{}", b.n),
            b.holds(),
            format!(
                "linf {} <= {}, l1 {} <= {}, pi*l1*linf {} >= 1, c_n {} >= {}",
                sig12(b.linf),
                sig12(b.linf_bound()),
                sig12(b.l1),
                b.n,
                sig12(std::f64::consts::PI * b.l1 * b.linf),
                sig12(b.c_n),
                b.n
            ),
        );
        res.push(vec![
            json!(b.n),
            num(b.linf),
            num(b.linf_bound()),
            num(b.l1),
            num(std::f64::consts::PI * b.l1 * b.linf),
            num(b.c_n),
            json!(b.holds()),
        ]);
    }
    Ok(res)
}

fn stabiliser_budget(spec: &SweepSpec) -> Result<SweepResult> {
    let mut res = SweepResult::new(
        spec,
        &["n", "l1", "l1_exact", "n_samples", "eps_prime", "fail_self", "truth_mm", "fail_mm"],
    );
    let mut budgets = Vec::new();
    for (row, &n) in spec.n_list.iter().enumerate() {
        let ghz = StateModel::ghz(n)?;
        let table = char_table(&ghz)?;
        let d = table.dim() as f64;
        let exact = (d - 1.0) / d;
        let l1 = table.l1();
        res.check(
            format!("l1_exact_n{n}"),
            (l1 - exact).abs() <= 1e-12,
            format!("l1 {} against (d-1)/d = {}", sig12(l1), sig12(exact)),
        );
        let target = Target::pauli(table.clone());
        let est = Estimator::prepare(&target, spec.eps, spec.delta, 1.0)?;
        let n_samples = est.plan().n_samples;
        budgets.push(n_samples as f64);
        let (mut fs, mut fm) = (f64::NAN, f64::NAN);
        if spec.trials > 0 {
            let own: Arc<dyn MeasuredFunction> = Arc::new(table);
            fs = failure_rate(&est, &own, 1.0, 1.0 / d, spec.trials, derive_seed(spec.seed, &[row as u64, 0]))?;
            let mm: Arc<dyn MeasuredFunction> = Arc::new(char_table(&StateModel::maximally_mixed(n))?);
            fm = failure_rate(&est, &mm, 1.0 / d, 1.0 / d, spec.trials, derive_seed(spec.seed, &[row as u64, 1]))?;
            rate_check(&mut res, format!("failure_rate_self_n{n}"), fs, spec);
            rate_check(&mut res, format!("failure_rate_mm_n{n}"), fm, spec);
        }
        res.push(vec![
            json!(n),
            num(l1),
            num(exact),
            json!(n_samples),
            num(est.plan().eps_prime),
            num(fs),
            num(1.0 / d),
            num(fm),
        ]);
    }
    if budgets.len() >= 2 {
        let s = spread(&budgets);
        res.check(
            "budget_spread_15pct",
            s <= 1.15,
            format!("max/min of N across n = {}", sig12(s)),
        );
    }
    Ok(res)
}

struct HaarDraw {
    l1_scaled: f64,
    linf_scaled: f64,
    n_samples: f64,
    cauchy_schwarz: bool,
}

fn haar_trend(spec: &SweepSpec) -> Result<SweepResult> {
    let mut res = SweepResult::new(
        spec,
        &[
            "n", "draws", "median_l1_over_sqrt_d", "max_l1_over_sqrt_d", "median_linf_scaled",
            "median_n_samples", "median_n_over_d",
        ],
    );
    let mut n_over_d = Vec::new();
    for &n in &spec.n_list {
        let d = (1u64 << n) as f64;
        let draws: Vec<HaarDraw> = (0..spec.draws as u64)
            .into_par_iter()
            .map(|j| -> Result<HaarDraw> {
                let state = haar_state(n, derive_seed(spec.seed, &[n as u64, j]))?;
                let table = char_table(&state)?;
                let plan = budget_optimize(&Target::pauli(table.clone()), spec.eps, spec.delta, 1.0)?;
                Ok(HaarDraw {
                    l1_scaled: table.l1() / d.sqrt(),
                    linf_scaled: table.linf() * (d / d.ln()).sqrt(),
                    n_samples: plan.n_raw,
                    cauchy_schwarz: table.l1() <= d.sqrt(),
                })
            })
            .collect::<Result<_>>()?;
        let mut l1s: Vec<f64> = draws.iter().map(|h| h.l1_scaled).collect();
        let max_l1 = l1s.iter().cloned().fold(0.0, f64::max);
        let mut infs: Vec<f64> = draws.iter().map(|h| h.linf_scaled).collect();
        let mut ns: Vec<f64> = draws.iter().map(|h| h.n_samples).collect();
        let (ml1, minf, mn) = (median(&mut l1s), median(&mut infs), median(&mut ns));
        n_over_d.push(mn / d);
        res.check(
            format!("median_l1_band_n{n}"),
            (0.5..=1.1).contains(&ml1),
            format!("median l1/sqrt(d) = {}", sig12(ml1)),
        );
        res.check(
            format!("median_linf_n{n}"),
            minf <= 4.0,
            format!("median linf*sqrt(d/ln d) = {}", sig12(minf)),
        );
        res.check(
            format!("cauchy_schwarz_n{n}"),
            draws.iter().all(|h| h.cauchy_schwarz),
            format!("max l1/sqrt(d) = {}", sig12(max_l1)),
        );
        res.push(vec![
            json!(n),
            json!(spec.draws),
            num(ml1),
            num(max_l1),
            num(minf),
            num(mn),
            num(mn / d),
        ]);
    }
    if n_over_d.len() >= 2 {
        let s = spread(&n_over_d);
        res.check("budget_over_d_band", s <= 2.0, format!("max/min of median N/d = {}", sig12(s)));
    }
    Ok(res)
}

fn gaussian_budget(spec: &SweepSpec) -> Result<SweepResult> {
    let mut res = SweepResult::new(
        spec,
        &["target", "eps", "l1", "n_samples", "eps_prime", "n_eps2", "fail_self"],
    );
    for (ti, label) in spec.targets.iter().enumerate() {
        let state = StateSpec::parse(label)?;
        let StateKind::Wigner(w) = state.kind() else {
            return Err(Error::Precondition(format!("'{label}' is not an optical state")));
        };
        if !matches!(w.kind(), WignerKind::Coherent(_)) && !matches!(w.kind(), WignerKind::Fock(0)) {
            return Err(Error::Precondition(format!("'{label}' is not a pure Gaussian state")));
        }
        let target = Target::wigner(w)?;
        let mut scaled = Vec::new();
        for (ei, &eps) in spec.eps_list.iter().enumerate() {
            let est = Estimator::prepare(&target, eps, spec.delta, FRAC_2_PI)?;
            let n = est.plan().n_samples;
            scaled.push(n as f64 * eps * eps);
            let mut f = f64::NAN;
            if spec.trials > 0 {
                let own: Arc<dyn MeasuredFunction> = Arc::new(w.clone());
                f = failure_rate(&est, &own, 1.0, 0.0, spec.trials, derive_seed(spec.seed, &[ti as u64, ei as u64]))?;
                rate_check(&mut res, format!("failure_rate_{label}_eps{}", sig12(eps)), f, spec);
            }
            res.push(vec![
                json!(label),
                num(eps),
                num(target.l1() / std::f64::consts::PI),
                json!(n),
                num(est.plan().eps_prime),
                num(n as f64 * eps * eps),
                num(f),
            ]);
        }
        let s = spread(&scaled);
        res.check(
            format!("inverse_square_{label}"),
            s <= 1.5,
            format!("max/min of N*eps^2 = {}", sig12(s)),
        );
    }
    Ok(res)
}

fn worstcase_band(spec: &SweepSpec) -> Result<SweepResult> {
    let mut res = SweepResult::new(
        spec,
        &["t", "n", "l1", "n_samples", "eps_prime", "n_over_t2", "sigma", "truth", "fail"],
    );
    let mut scaled = Vec::new();
    for (row, &t) in spec.t_list.iter().enumerate() {
        let n = t.floor() as u32;
        let w = WignerEvaluator::spike(n)?;
        let target = Target::wigner(&w)?;
        let l1 = target.l1() / std::f64::consts::PI;
        res.check(
            format!("l1_le_t_{}", sig12(t)),
            l1 <= t + 1e-9,
            format!("l1 {} <= t {}", sig12(l1), sig12(t)),
        );
        let est = Estimator::prepare(&target, spec.eps, spec.delta, FRAC_2_PI)?;
        let n_samples = est.plan().n_samples;
        scaled.push(n_samples as f64 / (t * t));
        let other = if n == 8 { 4 } else { 8 };
        let a = 2.0 * spec.eps;
        let sigma = WignerEvaluator::mixture(vec![(a, w.clone()), (1.0 - a, WignerEvaluator::spike(other)?)])?;
        let truth = fidelity_closed_form(&w, &sigma)
            .ok_or_else(|| Error::Contract("spike mixtures have closed-form fidelities".into()))?;
        let label = format!("mix:spike{n}={a},spike{other}={}", 1.0 - a);
        let mut f = f64::NAN;
        if spec.trials > 0 {
            let s: Arc<dyn MeasuredFunction> = Arc::new(sigma);
            f = failure_rate(&est, &s, truth, 0.0, spec.trials, derive_seed(spec.seed, &[row as u64]))?;
            rate_check(&mut res, format!("failure_rate_t{}", sig12(t)), f, spec);
        }
        res.push(vec![
            num(t),
            json!(n),
            num(l1),
            json!(n_samples),
            num(est.plan().eps_prime),
            num(n_samples as f64 / (t * t)),
            json!(label),
            num(truth),
            num(f),
        ]);
    }
    if scaled.len() >= 2 {
        let s = spread(&scaled);
        res.check("budget_t_squared_band", s <= 3.0, format!("max/min of N/t^2 = {}", sig12(s)));
    }
    Ok(res)
}

/// Properties of `g` computed directly from the explicit table of `g`.
fn table_witness_properties(
    table: &CharacteristicTable,
    g_of: impl Fn(f64) -> f64,
) -> (f64, f64, f64) {
    let atom = table.atom();
    let (mut inner, mut sq, mut sup) = (0.0, 0.0, 0.0f64);
    for &v in table.values() {
        let g = g_of(v);
        inner += v * g * atom;
        sq += g * g * atom;
        sup = sup.max(g.abs());
    }
    (inner, sq.sqrt(), sup)
}

fn adversarial_witness(spec: &SweepSpec) -> Result<SweepResult> {
    let mut res = SweepResult::new(
        spec,
        &[
            "target", "eps", "skipped", "branch", "c_star", "t", "inner", "l2", "linf",
            "linf_bound", "l1_tilde", "lower_figure", "upper_budget",
        ],
    );
    let tol = 1e-6;
    let (mut props_ok, mut sandwich_ok) = (true, true);
    let (mut low, mut sign) = (false, false);
    for label in &spec.targets {
        let state = StateSpec::parse(label)?;
        let target = state.target()?;
        let r = target.r();
        let l2 = target.l2();
        for &eps in &spec.eps_list {
            if eps >= l2 {
                res.push(vec![
                    json!(label),
                    num(eps),
                    json!(true),
                    Value::Null,
                    Value::Null,
                    Value::Null,
                    Value::Null,
                    Value::Null,
                    Value::Null,
                    Value::Null,
                    Value::Null,
                    Value::Null,
                    Value::Null,
                ]);
                continue;
            }
            let w = adversarial_g(&target, eps)?;
            let (inner, gl2, ginf) = match target.as_ref() {
                Target::Pauli(t) => table_witness_properties(t, |v| w.g_of(v)),
                Target::Wigner(_) => (w.properties.inner, w.properties.l2, w.properties.linf),
            };
            let bound = eps / w.l1_tilde;
            let ok = inner >= eps - tol && gl2 <= 1.0 + tol && ginf <= bound + tol;
            props_ok &= ok;
            match w.branch {
                crate::smoothing::WitnessBranch::LowPart => low = true,
                crate::smoothing::WitnessBranch::SignOnSupport => sign = true,
            }
            let l1_2eps = truncate(&target, 2.0 * eps)?.l1_tilde;
            let lower = w.lower_bound_figure(r, l1_2eps, spec.delta);
            let upper = budget_optimize(&target, eps, spec.delta, r)?.n_raw;
            sandwich_ok &= lower <= upper;
            res.push(vec![
                json!(label),
                num(eps),
                json!(false),
                json!(w.branch),
                num(w.c_star),
                num(w.t),
                num(inner),
                num(gl2),
                num(ginf),
                num(bound),
                num(w.l1_tilde),
                num(lower),
                num(upper),
            ]);
        }
    }
    res.check("witness_properties", props_ok, "inner >= eps, l2 <= 1, linf <= eps/l1 to 1e-6");
    res.check(
        "both_branches",
        low && sign,
        format!("low-part branch seen: {low}, sign branch seen: {sign}"),
    );
    res.check("lower_le_upper", sandwich_ok, "lower-bound figure <= upper budget in every row");
    Ok(res)
}
