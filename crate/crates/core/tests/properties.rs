use num_complex::Complex64;
use proptest::prelude::*;
use qsvd::ansatz::{adjoint_gates, build_circuit, circuit_unitary, AnsatzConfig};
use qsvd::decomposer::CostModel;
use qsvd::state_gen::random_state;
use qsvd::{cost_exact, exact_schmidt, Gate, PureState, QsvdAnsatz};

fn gate_strategy(n: usize) -> impl Strategy<Value = Gate> {
    let angle = -10.0f64..10.0;
    prop_oneof![
        (0..n, angle.clone()).prop_map(|(qubit, angle)| Gate::Rz { qubit, angle }),
        (0..n, angle).prop_map(|(qubit, angle)| Gate::Rx { qubit, angle }),
        (0..n, 1..n).prop_map(move |(a, d)| Gate::Cz { a, b: (a + d) % n }),
        (0..n, 1..n).prop_map(move |(control, d)| Gate::Cnot { control, target: (control + d) % n }),
    ]
}

fn max_dist(x: &PureState, y: &PureState) -> f64 {
    x.amplitudes().iter().zip(y.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_survives_long_circuits(seed in any::<u64>(), gates in prop::collection::vec(gate_strategy(4), 0..60)) {
        let s = random_state(2, 2, seed).unwrap();
        let out = s.apply_gates(&gates).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adjoint_round_trip(seed in any::<u64>(), gates in prop::collection::vec(gate_strategy(5), 1..40)) {
        let s = random_state(2, 3, seed).unwrap();
        let back = s.apply_gates(&gates).unwrap().apply_gates(&adjoint_gates(&gates)).unwrap();
        prop_assert!(max_dist(&s, &back) < 1e-12);
    }

    #[test]
    fn gates_are_unitary(g in gate_strategy(3)) {
        let u = circuit_unitary(3, &[g]);
        let p = u.adjoint().matmul(&u);
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((p[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-13);
            }
        }
        let adj = circuit_unitary(3, &[g.adjoint()]);
        let id = adj.matmul(&u);
        for i in 0..8 {
            prop_assert!((id[(i, i)] - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn disjoint_gates_commute(seed in any::<u64>(), g in gate_strategy(2), h in gate_strategy(2)) {
        // g on qubits {0,1}, h shifted onto {2,3}
        let h = h.shifted(2);
        let s = random_state(2, 2, seed).unwrap();
        let gh = s.apply_gates(&[g, h]).unwrap();
        let hg = s.apply_gates(&[h, g]).unwrap();
        prop_assert!(max_dist(&gh, &hg) < 1e-13);
    }

    #[test]
    fn sampling_within_five_sigma(seed in any::<u64>()) {
        let s = random_state(1, 2, seed).unwrap();
        let shots = 4000;
        let samples = s.sample(shots, seed ^ 0xabc).unwrap();
        let mut counts = vec![0usize; 8];
        for (a, b) in samples {
            counts[a | (b << 1)] += 1;
        }
        for (p, c) in s.probabilities().iter().zip(counts) {
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            prop_assert!((c as f64 / shots as f64 - p).abs() <= 5.0 * sigma + 1e-12);
        }
    }

    #[test]
    fn spectrum_invariant_under_local_circuits(seed in any::<u64>(), layers in 0usize..4, n_a in 1usize..4, n_b in 1usize..4) {
        let s = random_state(n_a, n_b, seed).unwrap();
        let ans = QsvdAnsatz::for_state(&s, layers);
        let out = ans.apply(&s, &ans.random_params(seed.wrapping_add(1))).unwrap();
        let before = exact_schmidt(&s);
        let after = exact_schmidt(&out);
        for (x, y) in before.values.iter().zip(&after.values) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!((before.entropy_bits - after.entropy_bits).abs() < 1e-9);
    }

    #[test]
    fn gate_count_formulas(n in 1usize..=6, l in 0usize..=6) {
        let cfg = AnsatzConfig::new(n, l);
        prop_assert_eq!(cfg.param_count(), 6 * l * n + 3 * n);
        let gates = build_circuit(&cfg, &vec![0.1; cfg.param_count()]).unwrap();
        let two = gates.iter().filter(|g| g.is_two_qubit()).count();
        let want = match n {
            1 => 0,
            n if n % 2 == 0 => l * n,
            n => l * n + 2 * l,
        };
        prop_assert_eq!(two, want);
        prop_assert_eq!(cfg.two_qubit_gate_count(), want);
        prop_assert_eq!(gates.len() - two, cfg.param_count());
        prop_assert_eq!(cfg.single_qubit_gate_count(), cfg.param_count());
        if n >= 2 {
            let per_layer = if n % 2 == 0 { 8 } else { 10 };
            prop_assert_eq!(cfg.depth(), per_layer * l + 3);
        }
    }

    #[test]
    fn cost_nonnegative_and_phase_blind(seed in any::<u64>(), phi in -3.2f64..3.2, layers in 0usize..3) {
        let s = random_state(2, 2, seed).unwrap();
        let ans = QsvdAnsatz::for_state(&s, layers);
        let p = ans.random_params(seed ^ 7);
        let c = cost_exact(&s, &ans, &p).unwrap();
        prop_assert!(c >= 0.0);
        let rot = Complex64::from_polar(1.0, phi);
        let shifted = PureState::from_amplitudes(s.amplitudes().iter().map(|x| x * rot).collect(), 2, false).unwrap();
        prop_assert!((cost_exact(&shifted, &ans, &p).unwrap() - c).abs() < 1e-12);
        let fast = CostModel::new(&s, ans).unwrap().cost(&p).unwrap();
        prop_assert!((fast - c).abs() < 1e-12);
    }
}
