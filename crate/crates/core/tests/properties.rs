use std::sync::Arc;

use proptest::prelude::*;

use overlapix::dv_states::CharacteristicTable;
use overlapix::estimator::{
    blackbox_rng, lambda_rng, BlackBoxSampler, Estimator, FnMeasured, MeasuredFunction,
};
use overlapix::smoothing::{budget_formula, budget_optimize, Lambda, LevelFunctionals, Target};

fn table() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), -1.0f64..1.0, Just(1.0), Just(-0.25)], 15)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plan_reproduces_formula(vals in table(), eps in 0.02f64..0.9, delta in 0.001f64..0.5) {
        let f = Target::pauli(CharacteristicTable::from_values(2, vals).unwrap());
        let p = budget_optimize(&f, eps, delta, 1.0).unwrap();
        prop_assert_eq!(p.n_raw, budget_formula(1.0, p.trunc.l1_tilde, eps, p.eps_prime, delta));
        for c in &p.candidates {
            prop_assert!(p.n_raw <= c.n_samples);
        }
        let first = p.candidates.iter().find(|c| c.n_samples == p.n_raw).unwrap();
        prop_assert_eq!(first.eps_prime, p.eps_prime);
    }

    #[test]
    fn budget_shrinks_with_looser_targets(vals in table(), eps in 0.02f64..0.4, delta in 0.001f64..0.2) {
        let f = Target::pauli(CharacteristicTable::from_values(2, vals).unwrap());
        let n = |e: f64, d: f64| budget_optimize(&f, e, d, 1.0).unwrap().n_raw;
        prop_assert!(n(2.0 * eps, delta) <= n(eps, delta));
        prop_assert!(n(eps, 2.0 * delta) <= n(eps, delta));
    }

    #[test]
    fn samples_are_bounded_and_binary(vals in table(), g in -1.0f64..1.0, seed in any::<u64>()) {
        let f = Target::pauli(CharacteristicTable::from_values(2, vals).unwrap());
        prop_assume!(f.l2() > 0.06);
        let est = Estimator::prepare(&f, 0.05, 0.2, 1.0).unwrap();
        let bound = est.plan().truncation.l1_tilde;
        let m: Arc<dyn MeasuredFunction> = Arc::new(FnMeasured(move |_: &Lambda| g, "const".into()));
        let mut bb = BlackBoxSampler::new(m, 1.0, blackbox_rng(seed, 0)).unwrap();
        let mut rng = lambda_rng(seed, 0);
        for _ in 0..200 {
            let x = est.single(&mut bb, &mut rng).unwrap();
            prop_assert!(x.abs() <= bound);
            prop_assert!(x.abs() == bound || x == 0.0);
        }
    }

    #[test]
    fn runs_are_deterministic(vals in table(), seed in any::<u64>()) {
        let f = Target::pauli(CharacteristicTable::from_values(2, vals.clone()).unwrap());
        prop_assume!(f.l2() > 0.2);
        let est = Estimator::prepare(&f, 0.2, 0.2, 1.0).unwrap();
        let run = || {
            let m: Arc<dyn MeasuredFunction> =
                Arc::new(CharacteristicTable::from_values(2, vals.clone()).unwrap());
            let mut bb = BlackBoxSampler::new(m, 1.0, blackbox_rng(seed, 3)).unwrap();
            est.run(&mut bb, &mut lambda_rng(seed, 3)).unwrap()
        };
        prop_assert_eq!(run().to_bits(), run().to_bits());
    }
}
