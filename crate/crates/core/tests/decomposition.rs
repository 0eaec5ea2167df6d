use num_complex::Complex64;
use qsvd::decomposer::{fit_phases, CostModel};
use qsvd::state_gen::{bell_state, product_state, random_state};
use qsvd::{
    cost_exact, cost_sampled, exact_schmidt, extract_schmidt, reconstruct_eigenvectors, train, ExtractOptions,
    ParamVector, PureState, QsvdAnsatz, TrainOptions,
};

fn trained(state: &PureState, layers: usize, seed: u64) -> (QsvdAnsatz, ParamVector, f64) {
    let ans = QsvdAnsatz::for_state(state, layers);
    let (p, report) = train(state, &ans, &TrainOptions { seed, ..TrainOptions::default() }).unwrap();
    (ans, p, report.final_cost)
}

#[test]
fn gradient_is_step_stable() {
    for seed in 0..3 {
        let s = random_state(2, 2, seed).unwrap();
        let ans = QsvdAnsatz::for_state(&s, 2);
        let p = ans.random_params(seed + 100);
        let model = CostModel::new(&s, ans).unwrap();
        let g5 = model.gradient_with_step(&p, 1e-5).unwrap();
        let g6 = model.gradient_with_step(&p, 1e-6).unwrap();
        let scale = g5.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for (a, b) in g5.iter().zip(&g6) {
            assert!((a - b).abs() <= 1e-4 * scale.max(1e-3), "{a} vs {b}");
        }
    }
}

#[test]
fn swap_symmetric_state_has_mirrored_gradient() {
    let s = bell_state();
    let ans = QsvdAnsatz::for_state(&s, 2);
    let p = ans.random_params(3);
    let half = ans.a.param_count();
    let mirrored: Vec<f64> = p.as_slice()[half..].iter().chain(&p.as_slice()[..half]).copied().collect();
    let mirrored = ParamVector::new(mirrored);
    let c = cost_exact(&s, &ans, &p).unwrap();
    assert!((c - cost_exact(&s, &ans, &mirrored).unwrap()).abs() < 1e-13);
    let g = qsvd::gradient(&s, &ans, &p).unwrap();
    let gm = qsvd::gradient(&s, &ans, &mirrored).unwrap();
    for k in 0..half {
        assert!((g[k] - gm[half + k]).abs() < 1e-8);
        assert!((g[half + k] - gm[k]).abs() < 1e-8);
    }
}

#[test]
fn sampled_cost_within_five_sigma() {
    let s = random_state(2, 2, 9).unwrap();
    let ans = QsvdAnsatz::for_state(&s, 1);
    let p = ans.random_params(10);
    let out = ans.apply(&s, &p).unwrap();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (k, prob) in out.probabilities().iter().enumerate() {
        let d = ((k & 3) ^ (k >> 2)).count_ones() as f64;
        m1 += prob * d;
        m2 += prob * d * d;
    }
    assert!((m1 - cost_exact(&s, &ans, &p).unwrap()).abs() < 1e-12);
    let shots = 20_000;
    let sigma = ((m2 - m1 * m1) / shots as f64).sqrt();
    for seed in 0..5 {
        let c = cost_sampled(&s, &ans, &p, shots, seed).unwrap();
        assert!((c - m1).abs() < 5.0 * sigma, "{c} vs {m1} (sigma {sigma})");
    }
    assert!(cost_sampled(&s, &ans, &p, 0, 0).is_err());
}

#[test]
fn training_is_deterministic() {
    let s = random_state(2, 2, 4).unwrap();
    let ans = QsvdAnsatz::for_state(&s, 2);
    let opts = TrainOptions { seed: 77, restarts: 2, max_iterations: 200, ..TrainOptions::default() };
    let (p1, r1) = train(&s, &ans, &opts).unwrap();
    let (p2, r2) = train(&s, &ans, &opts).unwrap();
    assert_eq!(p1, p2);
    assert_eq!(r1.cost_trace, r2.cost_trace);
}

#[test]
fn product_state_needs_no_layers() {
    let s = product_state(2, 3, 5).unwrap();
    let (ans, p, cost) = trained(&s, 0, 1);
    assert!(cost < 1e-8);
    let r = extract_schmidt(&s, &ans, &p, &ExtractOptions::default()).unwrap();
    assert!(r.von_neumann_entropy < 1e-4);
    assert_eq!(r.rank_estimate, 1);
}

#[test]
fn sampled_training_reduces_cost() {
    let s = bell_state();
    let ans = QsvdAnsatz::for_state(&s, 1);
    let start = cost_exact(&s, &ans, &ans.random_params(qsvd::seed::derive_seed(3, 1000))).unwrap();
    let opts = TrainOptions { seed: 3, restarts: 1, shots: Some(4000), max_iterations: 60, ..TrainOptions::default() };
    let (p, _) = train(&s, &ans, &opts).unwrap();
    let end = cost_exact(&s, &ans, &p).unwrap();
    assert!(end < start.max(0.05), "{start} -> {end}");
}

#[test]
fn eigenvectors_match_oracle() {
    for seed in 0..4 {
        let s = random_state(2, 2, seed).unwrap();
        let (ans, p, cost) = trained(&s, 3, seed);
        assert!(cost < 1e-8, "seed {seed}: cost {cost}");
        let r = extract_schmidt(&s, &ans, &p, &ExtractOptions::default()).unwrap();
        let ex = exact_schmidt(&s);
        for (i, (&lam, &k)) in r.coefficients.iter().zip(&r.basis_indices).enumerate() {
            if lam * lam < 0.05 {
                continue;
            }
            let (u, v) = reconstruct_eigenvectors(&ans, &p, k).unwrap();
            let ov = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm();
            assert!(ov(&ex.left_vectors[i], &u) > 0.99);
            assert!(ov(&ex.right_vectors[i], &v) > 0.99);
        }
        let fit = fit_phases(&s, &ans, &p, &r).unwrap();
        assert!(fit.fidelity > 0.98, "seed {seed}: fidelity {}", fit.fidelity);
    }
}

#[test]
fn schmidt_result_round_trips_through_json() {
    let s = random_state(2, 2, 1).unwrap();
    let (ans, p, _) = trained(&s, 2, 1);
    let r = extract_schmidt(&s, &ans, &p, &ExtractOptions { eigenvectors: true, ..Default::default() }).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    let back: qsvd::SchmidtResult = serde_json::from_str(&text).unwrap();
    assert_eq!(back.coefficients, r.coefficients);
    assert_eq!(back.eigenvectors_a, r.eigenvectors_a);
    assert!(r.renyi_entropies.contains_key("2") && r.renyi_entropies.contains_key("inf"));
}

#[test]
fn invalid_training_options() {
    let s = bell_state();
    let ans = QsvdAnsatz::for_state(&s, 1);
    assert!(train(&s, &ans, &TrainOptions { restarts: 0, ..Default::default() }).is_err());
    assert!(train(&s, &ans, &TrainOptions { max_iterations: 0, ..Default::default() }).is_err());
    assert!(train(&s, &ans, &TrainOptions { shots: Some(0), ..Default::default() }).is_err());
    let wrong = QsvdAnsatz::for_state(&random_state(2, 2, 0).unwrap(), 1);
    assert!(train(&s, &wrong, &TrainOptions::default()).is_err());
}
