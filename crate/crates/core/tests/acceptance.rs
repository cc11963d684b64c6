//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::{FRAC_2_PI, PI};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use overlapix::cv_states::{overlap_quadrature, WignerEvaluator};
use overlapix::dv_states::{char_table, CharacteristicTable, StateModel};
use overlapix::estimator::{
    estimate_fidelity_wigner, make_blackbox, Estimator, MeasuredFunction,
};
use overlapix::experiments::{
    failure_rate, failure_slack, run_adversarial_witness, run_fock_scaling, run_haar_trend,
    run_spike_bounds, run_stabiliser_budget, SweepFamily, SweepSpec,
};
use overlapix::quadrature::QuadratureGrid;
use overlapix::smoothing::{
    disc_measure, smoothed_l1_lower_bound, tail_decay_certificate, truncate, LevelFunctionals,
    Target,
};

type Outcome = Result<String, String>;

fn list(vals: Vec<serde_json::Value>) -> String {
    let parts: Vec<String> = vals
        .iter()
        .map(|v| match v.as_f64() {
            Some(x) if v.is_f64() => format!("{x:.4}"),
            _ => v.to_string(),
        })
        .collect();
    format!("[{}]", parts.join(", "))
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn c1_wigner_golden() -> Outcome {
    let w0 = WignerEvaluator::fock(0).eval_xp(0.0, 0.0);
    let w1 = WignerEvaluator::fock(1).eval_xp(0.0, 0.0);
    ensure((w0 - FRAC_2_PI).abs() <= 1e-10, format!("W_0(0) = {w0}"))?;
    ensure((w1 + FRAC_2_PI).abs() <= 1e-10, format!("W_1(0) = {w1}"))?;
    let mut worst: f64 = 0.0;
    for n in 0..=32 {
        let w = WignerEvaluator::fock(n);
        let grid = QuadratureGrid::radial(32, w.support_radius());
        // ∫ W dα over the plane, from the radial profile
        let total: f64 = grid
            .radial_nodes()
            .iter()
            .map(|&(s, wt)| wt * w.eval_xp(std::f64::consts::SQRT_2 * s, 0.0))
            .sum::<f64>()
            * 2.0
            * PI;
        let purity = overlap_quadrature(&w, &w, &grid).map_err(|e| e.to_string())?;
        worst = worst.max((total - 1.0).abs()).max((purity - 1.0).abs());
        ensure((total - 1.0).abs() <= 1e-6, format!("∫W_{n} = {total}"))?;
        ensure((purity - 1.0).abs() <= 1e-6, format!("π∫W_{n}² = {purity}"))?;
    }
    Ok(format!("max deviation {worst:.1e} over n <= 32"))
}

fn c2_fidelity_oracles() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 0..=12u32 {
        for k in 0..=12u32 {
            let a = WignerEvaluator::fock(n);
            let b = WignerEvaluator::fock(k);
            let r = a.support_radius().max(b.support_radius());
            let f = overlap_quadrature(&a, &b, &QuadratureGrid::radial(32, r))
                .map_err(|e| e.to_string())?;
            let want = if n == k { 1.0 } else { 0.0 };
            worst = worst.max((f - want).abs());
            ensure((f - want).abs() <= 1e-6, format!("F(|{n}>,|{k}>) = {f}"))?;
        }
    }
    let vac = WignerEvaluator::vacuum();
    let coh = WignerEvaluator::coherent1(1.0, 0.0).map_err(|e| e.to_string())?;
    let coarse = overlap_quadrature(&vac, &coh, &QuadratureGrid::cartesian(16, 9.0))
        .map_err(|e| e.to_string())?;
    let fine = overlap_quadrature(&vac, &coh, &QuadratureGrid::cartesian(32, 9.0))
        .map_err(|e| e.to_string())?;
    let want = (-1f64).exp();
    ensure((fine - coarse).abs() <= 1e-8, format!("resolutions disagree: {coarse} vs {fine}"))?;
    ensure((fine - want).abs() <= 1e-5, format!("F(vacuum, coherent 1) = {fine}"))?;
    Ok(format!("Fock Gram max deviation {worst:.1e}; F(vac, coh) = {fine:.8}"))
}

#[allow(clippy::too_many_arguments)]
fn soundness(
    target: Arc<Target>,
    sigma: Arc<dyn MeasuredFunction>,
    eps: f64,
    delta: f64,
    r: f64,
    offset: f64,
    want_n: u64,
    seed: u64,
) -> Result<(u64, f64, f64), String> {
    let est = Estimator::prepare(&target, eps, delta, r).map_err(|e| e.to_string())?;
    let n = est.plan().n_samples;
    ensure(n == want_n, format!("budget {n}, expected {want_n}"))?;
    let trials = 400;
    let rate = failure_rate(&est, &sigma, 1.0, offset, trials, seed).map_err(|e| e.to_string())?;
    let limit = delta + failure_slack(delta, trials);
    ensure(rate <= limit, format!("failure rate {rate} above {limit:.4}"))?;
    Ok((n, rate, limit))
}

fn c3_estimator_soundness() -> Outcome {
    let ghz = char_table(&StateModel::ghz(3).unwrap()).unwrap();
    let (n1, r1, l1) = soundness(
        Target::pauli(ghz.clone()),
        Arc::new(ghz),
        0.1,
        0.05,
        1.0,
        0.125,
        459,
        31,
    )?;
    let vac = WignerEvaluator::vacuum();
    let (n2, r2, l2) = soundness(
        Target::wigner(&vac).unwrap(),
        Arc::new(vac),
        0.1,
        0.1,
        FRAC_2_PI,
        0.0,
        1843,
        32,
    )?;
    Ok(format!(
        "GHZ3 N={n1} failure {r1:.4} <= {l1:.4}; Fock(0) N={n2} failure {r2:.4} <= {l2:.4}"
    ))
}

fn c4_fock_scaling() -> Outcome {
    let r = run_fock_scaling(&[4, 16, 64], 0.1, 0.1, 0, 4).map_err(|e| e.to_string())?;
    let band = r.assertion("l1_sqrt_n_band").unwrap();
    let lin = r.assertion("budget_linear_in_n").unwrap();
    ensure(band.pass, band.detail.clone())?;
    ensure(lin.pass, lin.detail.clone())?;
    Ok(format!("{}; {}", band.detail, lin.detail))
}

fn c5_spike_bounds() -> Outcome {
    let r = run_spike_bounds(&[2, 4, 8], 5).map_err(|e| e.to_string())?;
    for a in &r.assertions {
        ensure(a.pass, format!("{}: {}", a.name, a.detail))?;
    }
    Ok(format!("{} rows hold", r.rows.len()))
}

fn c6_stabiliser() -> Outcome {
    let r = run_stabiliser_budget(&[2, 4, 6], 0.1, 0.05, 400, 6).map_err(|e| e.to_string())?;
    for n in [2, 4, 6] {
        let a = r.assertion(&format!("l1_exact_n{n}")).unwrap();
        ensure(a.pass, a.detail.clone())?;
    }
    let budgets = list(r.column("n_samples"));
    let spread = r.assertion("budget_spread_15pct").unwrap();
    ensure(
        spread.pass,
        format!("budgets {budgets} not within 15%: {}", spread.detail),
    )?;
    Ok(format!("budgets {budgets}"))
}

fn c7_haar() -> Outcome {
    let r = run_haar_trend(&[4, 5, 6], 20, 0.1, 0.05, 7).map_err(|e| e.to_string())?;
    for n in [4, 5, 6] {
        for name in [format!("median_l1_band_n{n}"), format!("median_linf_n{n}")] {
            let a = r.assertion(&name).unwrap();
            ensure(a.pass, format!("{name}: {}", a.detail))?;
        }
    }
    Ok(format!(
        "median l1/sqrt(d) {}; median linf scaled {}",
        list(r.column("median_l1_over_sqrt_d")),
        list(r.column("median_linf_scaled"))
    ))
}

fn random_table(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let levels = [0.0, 0.1, 0.25, 0.5, -0.5, 0.75, -1.0];
    (0..15)
        .map(|_| {
            if rng.random::<f64>() < 0.5 {
                levels[rng.random_range(0..levels.len())]
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
        .collect()
}

fn c8_smoothed_l1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut strict = 0;
    let mut cases = 0;
    for _ in 0..24 {
        let vals = random_table(&mut rng);
        let table = CharacteristicTable::from_values(2, vals.clone()).unwrap();
        let f = Target::pauli(table);
        for eps in [0.05, 0.15, 0.3] {
            let t = truncate(&f, eps).unwrap();
            ensure(t.l2_residual <= eps + 1e-8, format!("DV residual {} > {eps}", t.l2_residual))?;
            let eps2 = eps * eps;
            // brute force over all drop-subsets
            let mut best_any = f64::INFINITY;
            for mask in 0u32..(1 << 15) {
                let (mut dropped, mut kept) = (0.0, 0.0);
                for (i, v) in vals.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        dropped += v * v / 4.0;
                    } else {
                        kept += v.abs() / 4.0;
                    }
                }
                if dropped <= eps2 {
                    best_any = best_any.min(kept);
                }
            }
            // brute force over threshold-shaped subsets {|f| < c}
            let mut cuts: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
            cuts.push(f64::INFINITY);
            let mut best_thr = f64::INFINITY;
            for c in cuts {
                let dropped: f64 = vals.iter().filter(|v| v.abs() < c).map(|v| v * v / 4.0).sum();
                let kept: f64 = vals.iter().filter(|v| v.abs() >= c).map(|v| v.abs() / 4.0).sum();
                if dropped <= eps2 {
                    best_thr = best_thr.min(kept);
                }
            }
            cases += 1;
            ensure(
                (best_thr - t.l1_tilde).abs() <= 1e-12,
                format!("threshold brute force {best_thr} vs greedy {}", t.l1_tilde),
            )?;
            ensure(best_any <= t.l1_tilde + 1e-12, "subset minimum above greedy".into())?;
            if best_any < t.l1_tilde - 1e-12 {
                strict += 1;
            }
        }
    }
    let grid: Vec<f64> = (1..=14).map(|i| 10f64.powi(-i)).collect();
    for n in [0u32, 4, 16] {
        let f = Target::wigner(&WignerEvaluator::fock(n)).unwrap();
        let full = f.l1();
        let mut prev_l1 = 0.0;
        let mut prev_gap = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05, 0.025] {
            let t = truncate(&f, eps).unwrap();
            ensure(t.l2_residual <= eps + 1e-8, format!("Fock({n}) residual {} > {eps}", t.l2_residual))?;
            ensure(t.l1_tilde >= prev_l1, format!("Fock({n}) l1 decreased at eps {eps}"))?;
            ensure(t.l1_tilde <= full + 1e-12, format!("Fock({n}) l1_tilde above l1"))?;
            let gap = full - t.l1_tilde;
            ensure(gap < prev_gap, format!("Fock({n}) gap did not shrink at eps {eps}"))?;
            prev_l1 = t.l1_tilde;
            prev_gap = gap;
        }
        let r0 = if n == 0 { 3.0 } else { 1.2 * (n as f64).sqrt() };
        let cert = tail_decay_certificate(f.as_ref(), r0, 0.9, &grid).unwrap();
        ensure(cert.pass, format!("Fock({n}) tail certificate failed: {cert:?}"))?;
        for eps in [0.2, 0.1, 0.05, 0.025] {
            let lb = smoothed_l1_lower_bound(full, cert.kappa_hat, 0.9, disc_measure(r0), eps).unwrap();
            let t = truncate(&f, eps).unwrap();
            ensure(lb <= t.l1_tilde, format!("Fock({n}) bound {lb} above l1_tilde {}", t.l1_tilde))?;
        }
    }
    Ok(format!(
        "{cases} DV cases match the threshold brute force ({strict} beaten by unrestricted subsets); Fock 0/4/16 monotone, feasible, bounded below"
    ))
}

fn c9_witness() -> Outcome {
    let spec = SweepSpec::defaults(SweepFamily::AdversarialWitness);
    let r = run_adversarial_witness(&spec.targets, &spec.eps_list, spec.delta, 9)
        .map_err(|e| e.to_string())?;
    for a in &r.assertions {
        ensure(a.pass, format!("{}: {}", a.name, a.detail))?;
    }
    Ok(format!("{} rows, both branches, lower <= upper", r.rows.len()))
}

fn c10_determinism() -> Outcome {
    let sweep = || {
        let mut s = SweepSpec::defaults(SweepFamily::StabiliserBudget);
        s.trials = 100;
        s.seed = 10;
        let r = overlapix::experiments::run_sweep(&s).unwrap();
        (r.to_json(), r.to_csv())
    };
    ensure(sweep() == sweep(), "stabiliser sweep artifacts differ".into())?;
    let fock = || {
        let r = run_fock_scaling(&[2], 0.2, 0.1, 100, 10).unwrap();
        (r.to_json(), r.to_csv())
    };
    ensure(fock() == fock(), "Fock sweep artifacts differ".into())?;
    let report = || {
        let sigma: Arc<dyn MeasuredFunction> =
            Arc::new(WignerEvaluator::coherent1(1.0, 0.0).unwrap());
        let mut bb = make_blackbox(sigma, FRAC_2_PI, 10).unwrap();
        estimate_fidelity_wigner(&WignerEvaluator::vacuum(), &mut bb, 0.1, 0.1, 10)
            .unwrap()
            .to_json()
    };
    ensure(report() == report(), "estimation reports differ".into())?;
    Ok("sweep JSON/CSV and reports byte-identical across runs".into())
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        ("wigner golden values", c1_wigner_golden, Duration::from_secs(10)),
        ("fidelity oracles", c2_fidelity_oracles, Duration::from_secs(30)),
        ("estimator soundness", c3_estimator_soundness, Duration::from_secs(300)),
        ("fock scaling", c4_fock_scaling, Duration::from_secs(120)),
        ("spike bounds", c5_spike_bounds, Duration::from_secs(120)),
        ("stabiliser budgets", c6_stabiliser, Duration::from_secs(180)),
        ("haar trend", c7_haar, Duration::from_secs(180)),
        ("smoothed l1 suite", c8_smoothed_l1, Duration::from_secs(60)),
        ("adversarial witness", c9_witness, Duration::from_secs(60)),
        ("determinism", c10_determinism, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let out = match out {
            Ok(msg) if took > *limit => Err(format!("{msg}; took {took:.1?}, limit {limit:?}")),
            other => other,
        };
        match out {
            Ok(msg) => println!("PASS {:>2} {name} ({took:.1?}): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({took:.1?}): {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
