use crossover::chain::{
    rotate_x, rotate_y, run_trajectory, sample_gibbs, step, transport_flow, ChainState, ModelParams, NoiseSchedule,
};
use proptest::prelude::*;

fn state(values: Vec<f64>) -> ChainState {
    ChainState::new(values)
}

fn energy(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum()
}

fn volume(w: &[f64]) -> f64 {
    w.iter().sum()
}

fn ring() -> impl Strategy<Value = Vec<f64>> {
    (4usize..16).prop_flat_map(|half| prop::collection::vec(-3.0f64..3.0, 2 * half))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotations_keep_energy_and_x_keeps_volume(w in ring(), site in 0usize..8, angle in -10.0f64..10.0) {
        let mut a = w.clone();
        rotate_x(&mut a, site % w.len(), angle);
        prop_assert!((energy(&a) - energy(&w)).abs() <= 1e-12 * (1.0 + energy(&w)));
        prop_assert!((volume(&a) - volume(&w)).abs() <= 1e-12 * (1.0 + energy(&w)));
        let mut b = w.clone();
        rotate_y(&mut b, site % w.len(), angle);
        prop_assert!((energy(&b) - energy(&w)).abs() <= 1e-12 * (1.0 + energy(&w)));
    }

    #[test]
    fn transport_is_conservative_and_reversible(w in ring(), tau in 0.0f64..5.0) {
        let s = state(w.clone());
        let there = transport_flow(&s, tau).unwrap();
        prop_assert!((energy(&there.omega) - energy(&w)).abs() <= 1e-11 * (1.0 + energy(&w)));
        prop_assert!((volume(&there.omega) - volume(&w)).abs() <= 1e-11 * (1.0 + energy(&w)));
        // the reflection ω_x → ω_{−x} reverses the flow
        let reflect = |v: &[f64]| (0..v.len()).map(|x| v[(v.len() - x) % v.len()]).collect::<Vec<f64>>();
        let back = reflect(&transport_flow(&state(reflect(&there.omega)), tau).unwrap().omega);
        for (x, y) in back.iter().zip(&w) {
            prop_assert!((x - y).abs() <= 1e-11 * (1.0 + energy(&w)));
        }
    }

    #[test]
    fn a_macro_step_conserves_energy(
        half in 4usize..12,
        lambda in 0.2f64..3.0,
        a in 0.1f64..10.0,
        seed in any::<u64>(),
        replica in 0u64..1000,
    ) {
        let params = ModelParams::new(2 * half, lambda, a, 1.0, 0.01);
        let sched = NoiseSchedule::for_params(&params, seed, replica);
        let init = sample_gibbs(&params, &sched).unwrap();
        let next = step(&init, &params, &sched).unwrap();
        let e0 = energy(&init.omega);
        prop_assert!((energy(&next.omega) - e0).abs() <= 1e-10 * e0);

        // without the volume-breaking noise the volume is kept as well
        let quiet = sched.without_y();
        let kept = step(&init, &params, &quiet).unwrap();
        let scale: f64 = init.omega.iter().map(|x| x.abs()).sum();
        prop_assert!((volume(&kept.omega) - volume(&init.omega)).abs() <= 1e-10 * scale);
    }

    #[test]
    fn trajectories_are_reproducible(seed in any::<u64>(), replica in 0u64..100) {
        let params = ModelParams::new(8, 1.0, 1.0, 1.0, 0.02);
        let sched = NoiseSchedule::for_params(&params, seed, replica);
        let run = || run_trajectory(sample_gibbs(&params, &sched).unwrap(), &params, &sched, 0.04, &mut []).unwrap().0;
        prop_assert_eq!(run().omega, run().omega);
        let other = NoiseSchedule::for_params(&params, seed, replica + 1);
        let (b, _) = run_trajectory(sample_gibbs(&params, &other).unwrap(), &params, &other, 0.04, &mut []).unwrap();
        prop_assert_ne!(run().omega, b.omega);
    }
}
