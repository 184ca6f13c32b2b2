use ionchain::chain::{
    build_generator, chain_couplings, dicke_target, ChainModel, ChainState, Pulse, PulseSequence, SystemConfig, C64,
};
use ionchain::optim::{objective_gradient, params_to_sequence, Objective};
use ionchain::oracle::verify_factorization;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn pulse() -> impl Strategy<Value = Pulse> {
    (0.0..2.0f64, 0.0..2.0f64).prop_map(|(a, p)| Pulse::new(a, p).unwrap())
}

fn sequence(max_len: usize) -> impl Strategy<Value = PulseSequence> {
    prop::collection::vec(pulse(), 1..=max_len).prop_map(|v| PulseSequence::new(v).unwrap())
}

fn config() -> impl Strategy<Value = SystemConfig> {
    (1usize..=10, 0.0..0.3f64).prop_map(|(n, eta)| SystemConfig::new(n, eta).unwrap())
}

fn normalized_state(dim: usize) -> impl Strategy<Value = ChainState> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim).prop_filter_map("nonzero", |v| {
        let v = DVector::from_iterator(v.len(), v.into_iter().map(|(re, im)| C64::new(re, im)));
        let n = v.norm();
        (n > 1e-3).then(|| ChainState::from_amplitudes(v / C64::new(n, 0.0)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn propagators_are_unitary(cfg in config(), seq in sequence(10)) {
        let u = ChainModel::new(&cfg).unwrap().sequence_propagator(&seq);
        let defect = ionchain::chain::unitarity_defect(&u);
        prop_assert!(defect < 1e-11, "defect {defect}");
    }

    #[test]
    fn norm_is_conserved(
        (cfg, psi) in config().prop_flat_map(|c| { let d = c.chain_dim(); (Just(c), normalized_state(d)) }),
        seq in sequence(10),
    ) {
        let u = ChainModel::new(&cfg).unwrap().sequence_propagator(&seq);
        let out = &u * psi.amplitudes();
        prop_assert!((out.norm_squared() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn equal_phase_pulses_fuse(cfg in config(), a1 in 0.0..2.0f64, a2 in 0.0..2.0f64, phi in 0.0..2.0f64) {
        let m = ChainModel::new(&cfg).unwrap();
        let two = m.propagator_raw(a2, phi) * m.propagator_raw(a1, phi);
        let one = m.propagator_raw(a1 + a2, phi);
        prop_assert!(max_abs_diff(&two, &one) < 1e-12);
    }

    #[test]
    fn concatenation_composes(cfg in config(), first in sequence(6), second in sequence(6)) {
        let m = ChainModel::new(&cfg).unwrap();
        let whole = m.sequence_propagator(&first.concat(&second));
        let product = m.sequence_propagator(&second) * m.sequence_propagator(&first);
        prop_assert!(max_abs_diff(&whole, &product) < 1e-12);
    }

    #[test]
    fn generators_are_hermitian(cfg in config(), p in pulse()) {
        let g = build_generator(&cfg, p).into_inner();
        prop_assert_eq!(g.adjoint(), g);
    }

    #[test]
    fn common_phase_shift_preserves_basis_fidelity(
        (cfg, n) in config().prop_flat_map(|c| { let k = c.n_ions(); (Just(c), 0..=k) }),
        seq in sequence(10),
        delta in 0.0..2.0f64,
    ) {
        let m = ChainModel::new(&cfg).unwrap();
        let target = dicke_target(cfg.n_ions(), n).unwrap();
        let f0 = m.fidelity(&seq, &target).unwrap();
        let f1 = m.fidelity(&seq.shift_phases(delta), &target).unwrap();
        prop_assert!((f0 - f1).abs() < 1e-12);
    }

    #[test]
    fn common_phase_shift_conjugates_by_diagonal(cfg in config(), seq in sequence(6), delta in 0.0..2.0f64) {
        let m = ChainModel::new(&cfg).unwrap();
        let d = cfg.chain_dim();
        let p = DMatrix::from_diagonal(&DVector::from_iterator(
            d,
            (0..d).map(|k| C64::from_polar(1.0, k as f64 * delta * std::f64::consts::PI)),
        ));
        let shifted = m.sequence_propagator(&seq.shift_phases(delta));
        let conj = &p * m.sequence_propagator(&seq) * p.adjoint();
        prop_assert!(max_abs_diff(&shifted, &conj) < 1e-12);
    }
}

// First-order expansion: L^1_{nu-1}(x) = 1 - x nu (nu - 1) / 2 + O(x^2).
#[test]
fn couplings_approach_lamb_dicke_limit() {
    for n in 1..=10 {
        let ideal = chain_couplings(&SystemConfig::ideal(n).unwrap());
        for k in 1..=50 {
            let eta = 0.05 * k as f64 / 50.0;
            let c = chain_couplings(&SystemConfig::new(n, eta).unwrap());
            for (nu, (a, b)) in (1..=n).zip(c.iter().zip(&ideal)) {
                let diff = (a - b).abs();
                let first_order = eta * eta * (nu * (nu - 1)) as f64 / 2.0 * ((n - nu + 1) as f64).sqrt();
                assert!(diff <= first_order + 1e-15, "N={n} eta={eta} nu={nu}");
                if n <= 5 {
                    assert!(diff <= 2.0 * n as f64 * eta * eta, "N={n} eta={eta} nu={nu}");
                }
            }
        }
    }
}

fn eighth_order_gradient(obj: &Objective, x: &[f64], h: f64) -> Vec<f64> {
    const W: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    (0..x.len())
        .map(|i| {
            let mut acc = 0.0;
            for (k, w) in W.iter().enumerate() {
                let s = (k + 1) as f64 * h;
                let mut up = x.to_vec();
                let mut down = x.to_vec();
                up[i] += s;
                down[i] -= s;
                acc += w * (obj.fidelity(&up) - obj.fidelity(&down));
            }
            acc / h
        })
        .collect()
}

#[test]
fn gradient_matches_eighth_order_differences() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for point in 0..100 {
        let n = 1 + point % 5;
        let cfg = SystemConfig::new(n, rng.random_range(0.0..0.2)).unwrap();
        let target = dicke_target(n, rng.random_range(0..=n)).unwrap();
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.9)).collect();
        x.extend((1..n).map(|_| rng.random_range(0.0..2.0)));
        let (_, grad) = objective_gradient(&cfg, &target, &x, 1e-6).unwrap();
        let oracle = eighth_order_gradient(&Objective::new(&cfg, &target).unwrap(), &x, 1e-2);
        for (g, o) in grad.iter().zip(&oracle) {
            assert!((g - o).abs() < 1e-5, "point {point}: {g} vs {o}");
        }
    }
}

#[test]
fn chain_agrees_with_full_space() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for n in 1..=6 {
        for &eta in &[0.0, 0.05, 0.1, 0.2] {
            let cfg = SystemConfig::new(n, eta).unwrap();
            for _ in 0..3 {
                let params: Vec<f64> = (0..2 * n - 1).map(|_| rng.random_range(0.0..2.0)).collect();
                let seq = params_to_sequence(n, &params).unwrap();
                let r = verify_factorization(&cfg, &seq, n + 4).unwrap();
                assert!(r.max_amplitude_discrepancy < 1e-9, "N={n} eta={eta}: {r:?}");
                assert!(r.max_leakage < 1e-10);
                assert!(r.max_off_sector_population < 1e-12);
                assert!(r.max_norm_error < 1e-10);
            }
        }
    }
}
