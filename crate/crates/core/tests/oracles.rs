use std::f64::consts::{FRAC_2_PI, PI, SQRT_2};
use std::sync::Arc;

use overlapix::cv_states::{norms_adaptive, WignerEvaluator};
use overlapix::descriptor::StateSpec;
use overlapix::dv_states::char_table;
use overlapix::estimator::{lambda_rng, Estimator, LambdaSampler, MeasuredFunction};
use overlapix::experiments::{failure_rate, failure_slack};
use overlapix::quadrature::GaussLegendre;
use overlapix::smoothing::{
    adversarial_g, tail_decay_certificate, truncate, Lambda, Target,
    WitnessBranch,
};

#[test]
fn fock_l1_matches_reference_values() {
    // independent high-precision values
    for (n, want) in [(4u32, 2.1913), (16, 3.8591), (64, 7.2742)] {
        let (norms, _) = norms_adaptive(&WignerEvaluator::fock(n)).unwrap();
        assert!((norms.l1 - want).abs() < 1e-4, "n={n}: {}", norms.l1);
    }
}

#[test]
fn vacuum_truncation_closed_form() {
    // residual² = e^{-4ρ²} at cut radius ρ, dropped mass e^{-2ρ²}: both equal ε
    let f = Target::wigner(&WignerEvaluator::vacuum()).unwrap();
    for eps in [0.2, 0.1, 0.05, 0.01] {
        let t = truncate(&f, eps).unwrap();
        assert!((t.c_star - FRAC_2_PI * eps).abs() < 1e-6 * FRAC_2_PI * eps);
        assert!((t.l1_tilde / PI - (1.0 - eps)).abs() < 1e-6, "{}", t.l1_tilde / PI);
        assert!(t.l2_residual <= eps + 1e-8);
    }
}

/// `∫ |f|^k 1{|f| < c} dμ_W` by panels split where `|f|` crosses `c`.
fn brute_radial(w: &WignerEvaluator, c: f64, k: i32, below: bool) -> f64 {
    let gl = GaussLegendre::new(8);
    let abs_at = |s: f64| w.eval_xp(SQRT_2 * s, 0.0).abs();
    let keep = |s: f64| (abs_at(s) < c) == below;
    let piece = |a: f64, b: f64| {
        if keep(0.5 * (a + b)) {
            gl.integrate(a, b, |s| abs_at(s).powi(k) * s)
        } else {
            0.0
        }
    };
    let panels = 40_000;
    let h = w.support_radius() / panels as f64;
    let mut acc = 0.0;
    for i in 0..panels {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        if keep(a) == keep(b) {
            acc += piece(a, b);
            continue;
        }
        let (mut lo, mut hi) = (a, b);
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            if keep(m) == keep(a) {
                lo = m;
            } else {
                hi = m;
            }
        }
        acc += piece(a, lo) + piece(lo, b);
    }
    2.0 * PI * PI * acc
}

#[test]
fn fock_truncation_is_feasible_by_independent_quadrature() {
    for n in [2u32, 4] {
        let w = WignerEvaluator::fock(n);
        let f = Target::wigner(&w).unwrap();
        for eps in [0.2, 0.05] {
            let t = truncate(&f, eps).unwrap();
            let resid = brute_radial(&w, t.c_star, 2, true).sqrt();
            assert!(resid <= eps + 1e-5, "n={n} eps={eps}: {resid}");
            assert!((resid - t.l2_residual).abs() < 1e-5, "n={n} eps={eps}: {resid} vs {}", t.l2_residual);
            let kept = brute_radial(&w, t.c_star, 1, false);
            assert!((kept - t.l1_tilde).abs() < 1e-4 * t.l1_tilde);
        }
    }
}

#[test]
fn fock4_witness_by_independent_quadrature() {
    let w = WignerEvaluator::fock(4);
    let f = Target::wigner(&w).unwrap();
    for eps in [0.1, 0.8] {
        let g = adversarial_g(&f, eps).unwrap();
        let gl = GaussLegendre::new(8);
        let panels = 40_000;
        let h = w.support_radius() / panels as f64;
        let (mut inner, mut sq, mut sup) = (0.0, 0.0, 0.0f64);
        for i in 0..panels {
            let a = i as f64 * h;
            for (s, wt) in gl.mapped(a, a + h) {
                let v = w.eval_xp(SQRT_2 * s, 0.0);
                let gv = g.g_of(v);
                inner += wt * s * v * gv;
                sq += wt * s * gv * gv;
                sup = sup.max(gv.abs());
            }
        }
        let (inner, l2) = (2.0 * PI * PI * inner, (2.0 * PI * PI * sq).sqrt());
        assert!(inner >= eps - 1e-4, "{inner}");
        assert!(l2 <= 1.0 + 1e-4, "{l2}");
        assert!(sup <= eps / g.l1_tilde + 1e-9);
        assert!((inner - g.properties.inner).abs() < 1e-4);
        let want = if eps == 0.8 { WitnessBranch::LowPart } else { WitnessBranch::SignOnSupport };
        assert_eq!(g.branch, want);
    }
}

#[test]
fn fock_tail_constants_are_stable_in_n() {
    let grid: Vec<f64> = (1..=14).map(|i| 10f64.powi(-i)).collect();
    let kappa = |n: u32| {
        let f = Target::wigner(&WignerEvaluator::fock(n)).unwrap();
        let c = tail_decay_certificate(f.as_ref(), 1.2 * (n as f64).sqrt(), 0.9, &grid).unwrap();
        assert!(c.pass, "{c:?}");
        c.kappa_hat
    };
    let (a, b) = (kappa(4), kappa(16));
    assert!(a.max(b) / a.min(b) <= 2.0, "{a} {b}");
    let vac = Target::wigner(&WignerEvaluator::vacuum()).unwrap();
    assert!(tail_decay_certificate(vac.as_ref(), 3.0, 0.9, &grid).unwrap().pass);
}

#[test]
fn radial_draws_follow_the_profile() {
    // chi-squared over radial bins against exact level-set masses
    let w = WignerEvaluator::fock(2);
    let f = Target::wigner(&w).unwrap();
    let t = truncate(&f, 0.05).unwrap();
    let sampler = LambdaSampler::new(&t).unwrap();
    let overlapix::smoothing::Target::Wigner(overlapix::smoothing::CvTarget::Radial { profile, .. }) =
        f.as_ref()
    else {
        panic!()
    };
    let edges: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
    let probs: Vec<f64> = edges
        .windows(2)
        .map(|e| profile.moment(t.c_star, 1, true, e[0], e[1]) / t.l1_tilde)
        .collect();
    let mut counts = vec![0usize; probs.len()];
    let m = 200_000;
    let mut rng = lambda_rng(21, 0);
    for _ in 0..m {
        let d = sampler.draw(&mut rng).unwrap();
        let Lambda::Phase(p) = d.lambda else { panic!() };
        let s = p.alpha()[0].norm();
        let v = w.eval_xp(p.coords()[0], p.coords()[1]);
        assert!(v.abs() >= t.c_star * (1.0 - 1e-6));
        assert_eq!(d.sign, v.signum());
        let last = counts.len() - 1;
        counts[((s / 0.25) as usize).min(last)] += 1;
    }
    let mut chi2 = 0.0;
    let mut dof = 0;
    for (c, p) in counts.iter().zip(&probs) {
        let e = p * m as f64;
        if e > 5.0 {
            chi2 += (*c as f64 - e).powi(2) / e;
            dof += 1;
        }
    }
    // generous: mean dof, sd sqrt(2 dof)
    assert!(chi2 < dof as f64 + 6.0 * (2.0 * dof as f64).sqrt(), "chi2 {chi2} dof {dof}");
}

fn rate(target: &str, sigma: &str, eps: f64, delta: f64, trials: usize, seed: u64) -> (f64, f64) {
    let t = StateSpec::parse(target).unwrap();
    let s = StateSpec::parse(sigma).unwrap();
    let truth = t.fidelity(&s).unwrap();
    let f = t.target().unwrap();
    let offset = match f.as_ref() {
        Target::Pauli(tab) => tab.atom(),
        Target::Wigner(_) => 0.0,
    };
    let est = Estimator::prepare(&f, eps, delta, t.r()).unwrap();
    let m: Arc<dyn MeasuredFunction> = s.measured().unwrap();
    (failure_rate(&est, &m, truth, offset, trials, seed).unwrap(), truth)
}

#[test]
fn fidelity_scenarios_with_known_truth() {
    let cases = [
        ("fock:0", "mix:fock0=0.7,fock1=0.3", 0.7, 0.1),
        ("fock:0", "coherent:1", (-1f64).exp(), 0.1),
        ("ghz:3", "mm:3", 0.125, 0.05),
        ("ghz:3", "mix:ghz3=0.6,mm3=0.4", 0.65, 0.05),
    ];
    for (i, (t, s, want, delta)) in cases.into_iter().enumerate() {
        let trials = 200;
        let (r, truth) = rate(t, s, 0.1, delta, trials, 100 + i as u64);
        assert!((truth - want).abs() < 1e-12, "{t} vs {s}: truth {truth}");
        assert!(r <= delta + failure_slack(delta, trials), "{t} vs {s}: failure rate {r}");
    }
}

#[test]
fn ghz_table_has_seven_unit_entries() {
    let table = char_table(&overlapix::dv_states::StateModel::ghz(3).unwrap()).unwrap();
    assert_eq!(table.nonzero(), 7);
    assert!((table.l1() - 0.875).abs() < 1e-15);
}
