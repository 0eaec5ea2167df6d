//! Variational Schmidt decomposition by exact output coincidence.
//!
//! The circuit pair `U_A ⊗ V_B` is trained until every computational-basis
//! measurement gives the same bitstring on both sides. The cost is the
//! expected Hamming distance between the two outcomes of one shot, with the
//! shorter outcome zero-padded on its most significant side (which for
//! basis indices is simply `popcount(a ^ b)`). At the optimum the output is
//! `sum_i lambda_i e^{i alpha_i} |e_i>|e_i>` and the coincident outcome
//! frequencies are the squared Schmidt coefficients.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_slots, circuit_unitary, ParamVector, QsvdAnsatz, Slot};
use crate::error::{QsvdError, Result};
use crate::linalg::CMatrix;
use crate::optimizer::{self, LbfgsOptions};
use crate::oracle::{coefficient_matrix, renyi_bits, von_neumann_bits};
use crate::seed::derive_seed;
use crate::statevec::{apply_to_slice, PureState};

/// Step of the central finite differences.
pub const FD_STEP: f64 = 1e-5;
/// Default cutoff on `lambda^2` when estimating the Schmidt rank.
pub const DEFAULT_RANK_CUTOFF: f64 = 1e-6;
/// Below this coincidence weight the circuit is considered untrained.
pub const MIN_COINCIDENCE_WEIGHT: f64 = 0.5;

#[inline]
fn hamming(a: usize, b: usize) -> u32 {
    (a ^ b).count_ones()
}

/// Expected Hamming distance of a joint amplitude matrix (row = one side,
/// column = the other side).
fn matrix_cost(m: &CMatrix) -> f64 {
    let mut total = 0.0;
    for b in 0..m.cols() {
        for (a, x) in m.col(b).iter().enumerate() {
            let d = hamming(a, b);
            if d != 0 {
                total += d as f64 * x.norm_sqr();
            }
        }
    }
    total
}

/// `out = t^T z`
fn transpose_mul(t: &CMatrix, z: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(t.cols(), z.cols());
    for b in 0..z.cols() {
        let zc = z.col(b);
        for a in 0..t.cols() {
            let tc = t.col(a);
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, y) in tc.iter().zip(zc) {
                acc += x * y;
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Central-difference gradient for the angles of one side.
///
/// `y0` is the joint matrix before this side's circuit acts (rows are this
/// side's basis index). Every gate in the set is a symmetric matrix, so the
/// transposed suffix products `T_k = g_{k+1} ... g_{N-1}` can be built by
/// left-multiplication, and the output after perturbing gate `k` is
/// `T_k^T R(theta +- h) Y_k`.
fn side_gradient(slots: &[Slot], y0: &CMatrix, h: f64, grad: &mut [f64]) {
    let d = y0.rows();
    let n = slots.len();
    let mut suffix: Vec<Option<CMatrix>> = vec![None; n];
    let mut t = CMatrix::identity(d);
    for k in (0..n).rev() {
        if slots[k].param.is_some() {
            suffix[k] = Some(t.clone());
        }
        t.apply_gate_rows(&slots[k].gate);
    }
    let mut y = y0.clone();
    for (k, slot) in slots.iter().enumerate() {
        if let (Some(idx), Some(t)) = (slot.param, &suffix[k]) {
            let cost_at = |delta: f64| {
                let mut z = y.clone();
                z.apply_gate_rows(&perturbed(&slot.gate, delta));
                matrix_cost(&transpose_mul(t, &z))
            };
            grad[idx] = (cost_at(h) - cost_at(-h)) / (2.0 * h);
        }
        y.apply_gate_rows(&slot.gate);
    }
}

fn perturbed(g: &crate::statevec::Gate, delta: f64) -> crate::statevec::Gate {
    use crate::statevec::Gate;
    match *g {
        Gate::Rz { qubit, angle } => Gate::Rz { qubit, angle: angle + delta },
        Gate::Rx { qubit, angle } => Gate::Rx { qubit, angle: angle + delta },
        other => other,
    }
}

/// The coincidence cost of one target state as a function of the angles.
#[derive(Debug, Clone)]
pub struct CostModel {
    ansatz: QsvdAnsatz,
    coeffs: CMatrix,
}

impl CostModel {
    pub fn new(state: &PureState, ansatz: QsvdAnsatz) -> Result<Self> {
        ansatz.check_state(state)?;
        Ok(Self { ansatz, coeffs: coefficient_matrix(state) })
    }

    pub fn ansatz(&self) -> &QsvdAnsatz {
        &self.ansatz
    }

    /// Joint output matrix `U_A C V_B^T`.
    pub fn output_matrix(&self, params: &ParamVector) -> Result<CMatrix> {
        let (u, v) = self.ansatz.unitaries(params)?;
        Ok(u.matmul(&self.coeffs).matmul(&v.transpose()))
    }

    pub fn cost(&self, params: &ParamVector) -> Result<f64> {
        Ok(matrix_cost(&self.output_matrix(params)?))
    }

    /// Central differences of [`CostModel::cost`] with step `h`.
    pub fn gradient_with_step(&self, params: &ParamVector, h: f64) -> Result<Vec<f64>> {
        self.ansatz.check_params(params)?;
        let (theta, omega) = params.split(&self.ansatz);
        let slots_a = build_slots(&self.ansatz.a, theta)?;
        let slots_b = build_slots(&self.ansatz.b, omega)?;
        let ga: Vec<_> = slots_a.iter().map(|s| s.gate).collect();
        let gb: Vec<_> = slots_b.iter().map(|s| s.gate).collect();
        let u = circuit_unitary(self.ansatz.a.n_sub, &ga);
        let v = circuit_unitary(self.ansatz.b.n_sub, &gb);

        let mut grad = vec![0.0; params.len()];
        let (grad_a, grad_b) = grad.split_at_mut(theta.len());
        let y_a = self.coeffs.matmul(&v.transpose());
        side_gradient(&slots_a, &y_a, h, grad_a);
        let y_b = u.matmul(&self.coeffs).transpose();
        side_gradient(&slots_b, &y_b, h, grad_b);
        Ok(grad)
    }

    pub fn gradient(&self, params: &ParamVector) -> Result<Vec<f64>> {
        self.gradient_with_step(params, FD_STEP)
    }

    /// Mean Hamming distance over `shots` sampled measurements of the
    /// output. Uses the same basis-index sampling as [`PureState::sample`].
    pub fn sampled_cost(&self, params: &ParamVector, shots: usize, seed: u64) -> Result<f64> {
        if shots == 0 {
            return Err(QsvdError::ZeroShots);
        }
        let m = self.output_matrix(params)?;
        let n_a = self.ansatz.a.n_sub;
        let mut probs = vec![0.0; m.rows() * m.cols()];
        for b in 0..m.cols() {
            for a in 0..m.rows() {
                probs[a | (b << n_a)] = m[(a, b)].norm_sqr();
            }
        }
        let dist = WeightedIndex::new(&probs).map_err(|e| QsvdError::Malformed(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = m.rows() - 1;
        let total: u64 = (0..shots)
            .map(|_| {
                let k = dist.sample(&mut rng);
                hamming(k & mask, k >> n_a) as u64
            })
            .sum();
        Ok(total as f64 / shots as f64)
    }
}

/// Expected Hamming distance between the A and B outcomes of one shot of
/// `U_A ⊗ V_B |psi>`, computed from the output amplitudes.
pub fn cost_exact(state: &PureState, ansatz: &QsvdAnsatz, params: &ParamVector) -> Result<f64> {
    let out = ansatz.apply(state, params)?;
    let mask = out.dim_a() - 1;
    let n_a = out.n_a();
    Ok(out
        .probabilities()
        .iter()
        .enumerate()
        .map(|(k, p)| hamming(k & mask, k >> n_a) as f64 * p)
        .sum())
}

/// Mean Hamming distance over `shots` sampled measurements.
pub fn cost_sampled(
    state: &PureState,
    ansatz: &QsvdAnsatz,
    params: &ParamVector,
    shots: usize,
    seed: u64,
) -> Result<f64> {
    let out = ansatz.apply(state, params)?;
    let samples = out.sample(shots, seed)?;
    let total: u64 = samples.iter().map(|&(a, b)| hamming(a, b) as u64).sum();
    Ok(total as f64 / shots as f64)
}

/// Central finite-difference gradient of [`cost_exact`], step [`FD_STEP`].
pub fn gradient(state: &PureState, ansatz: &QsvdAnsatz, params: &ParamVector) -> Result<Vec<f64>> {
    CostModel::new(state, *ansatz)?.gradient(params)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOptions {
    pub max_iterations: usize,
    /// A run counts as converged when its final cost is below this.
    pub tolerance: f64,
    /// Total number of independent runs (minimum 1).
    pub restarts: usize,
    pub seed: u64,
    /// Train on the sampled cost with this many shots instead of the exact
    /// expectation.
    pub shots: Option<usize>,
    /// Finite-difference step used with sampled costs.
    pub sampled_fd_step: f64,
    /// A run stops early once its cost reaches this value.
    pub cost_floor: f64,
    /// Keep starting new runs after one has converged.
    pub exhaust_restarts: bool,
    /// Run restarts on the rayon pool.
    pub parallel: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            max_iterations: 3000,
            tolerance: 1e-8,
            restarts: 5,
            seed: 0,
            shots: None,
            sampled_fd_step: 0.05,
            cost_floor: 1e-14,
            exhaust_restarts: false,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingReport {
    pub final_cost: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub cost_trace: Vec<f64>,
    pub converged: bool,
    pub restarts_used: usize,
    /// Index of the run that produced the returned parameters.
    pub best_restart: usize,
    pub seed: u64,
    pub wall_time: f64,
}

struct RunOutcome {
    params: Vec<f64>,
    cost: f64,
    iterations: usize,
    evaluations: usize,
    trace: Vec<f64>,
}

fn single_run(model: &CostModel, opts: &TrainOptions, run_seed: u64) -> Result<RunOutcome> {
    let x0 = model.ansatz.random_params(run_seed);
    let lbfgs = LbfgsOptions {
        max_iterations: opts.max_iterations,
        target: opts.cost_floor,
        ..LbfgsOptions::default()
    };
    let mut failure: Option<QsvdError> = None;
    let shot_seed = derive_seed(run_seed, 1);
    let mut objective = |x: &[f64], g: &mut [f64]| -> f64 {
        let p = ParamVector::new(x.to_vec());
        let res = match opts.shots {
            None => model.cost(&p).and_then(|c| {
                g.copy_from_slice(&model.gradient(&p)?);
                Ok(c)
            }),
            Some(shots) => sampled_value_and_gradient(model, &p, shots, shot_seed, opts.sampled_fd_step, g),
        };
        match res {
            Ok(c) => c,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let r = optimizer::minimize(&mut objective, x0.as_slice(), &lbfgs);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(RunOutcome {
        params: r.x,
        cost: r.value,
        iterations: r.iterations,
        evaluations: r.evaluations,
        trace: r.trace,
    })
}

fn sampled_value_and_gradient(
    model: &CostModel,
    p: &ParamVector,
    shots: usize,
    seed: u64,
    h: f64,
    g: &mut [f64],
) -> Result<f64> {
    let value = model.sampled_cost(p, shots, seed)?;
    let mut probe = p.clone();
    for (i, gi) in g.iter_mut().enumerate() {
        let x = p.as_slice()[i];
        probe.as_mut_slice()[i] = x + h;
        let up = model.sampled_cost(&probe, shots, seed)?;
        probe.as_mut_slice()[i] = x - h;
        let down = model.sampled_cost(&probe, shots, seed)?;
        probe.as_mut_slice()[i] = x;
        *gi = (up - down) / (2.0 * h);
    }
    Ok(value)
}

/// Multi-start quasi-Newton minimization of the coincidence cost.
///
/// Run `r` starts from uniform angles drawn with a seed derived from
/// `options.seed` and `r`. The best run (lowest final cost, ties to the
/// lowest index) is returned.
pub fn train(state: &PureState, ansatz: &QsvdAnsatz, options: &TrainOptions) -> Result<(ParamVector, TrainingReport)> {
    if options.max_iterations == 0 {
        return Err(QsvdError::InvalidOption("max_iterations must be positive".into()));
    }
    if options.restarts == 0 {
        return Err(QsvdError::InvalidOption("restarts counts total runs and must be at least 1".into()));
    }
    if options.shots == Some(0) {
        return Err(QsvdError::ZeroShots);
    }
    let start = Instant::now();
    let model = CostModel::new(state, *ansatz)?;
    let run_seed = |r: usize| derive_seed(options.seed, 1000 + r as u64);

    let runs: Vec<(usize, RunOutcome)> = if options.parallel {
        let all: Vec<Result<RunOutcome>> = (0..options.restarts)
            .into_par_iter()
            .map(|r| single_run(&model, options, run_seed(r)))
            .collect();
        let mut out = Vec::new();
        for (r, res) in all.into_iter().enumerate() {
            let res = res?;
            let done = res.cost < options.tolerance && !options.exhaust_restarts;
            out.push((r, res));
            if done {
                break;
            }
        }
        out
    } else {
        let mut out = Vec::new();
        for r in 0..options.restarts {
            let res = single_run(&model, options, run_seed(r))?;
            let done = res.cost < options.tolerance && !options.exhaust_restarts;
            out.push((r, res));
            if done {
                break;
            }
        }
        out
    };

    let restarts_used = runs.len();
    let (best_restart, best) = runs
        .into_iter()
        .min_by(|x, y| x.1.cost.total_cmp(&y.1.cost).then(x.0.cmp(&y.0)))
        .expect("at least one run");
    let report = TrainingReport {
        final_cost: best.cost,
        iterations: best.iterations,
        evaluations: best.evaluations,
        converged: best.cost < options.tolerance,
        cost_trace: best.trace,
        restarts_used,
        best_restart,
        seed: options.seed,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((ParamVector::new(best.params), report))
}

/// Rényi order; serialized as its number or `"inf"`.
pub fn renyi_key(q: f64) -> String {
    if q.is_infinite() {
        "inf".to_string()
    } else if q.fract() == 0.0 {
        format!("{}", q as i64)
    } else {
        format!("{q}")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchmidtResult {
    /// Descending Schmidt coefficients `lambda_i`.
    pub coefficients: Vec<f64>,
    /// Coincident basis index that produced each coefficient.
    pub basis_indices: Vec<usize>,
    pub rank_estimate: usize,
    pub von_neumann_entropy: f64,
    pub renyi_entropies: BTreeMap<String, f64>,
    /// Probability mass on coincident outcomes before renormalization.
    pub coincidence_weight: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eigenvectors_a: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eigenvectors_b: Option<Vec<Vec<[f64; 2]>>>,
}

impl SchmidtResult {
    pub fn squared(&self) -> Vec<f64> {
        self.coefficients.iter().map(|l| l * l).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub cutoff: f64,
    pub renyi_orders: Vec<f64>,
    pub eigenvectors: bool,
    /// Smallest acceptable total coincidence probability.
    pub min_weight: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            cutoff: DEFAULT_RANK_CUTOFF,
            renyi_orders: vec![2.0, f64::INFINITY],
            eigenvectors: false,
            min_weight: MIN_COINCIDENCE_WEIGHT,
        }
    }
}

/// Reads the Schmidt spectrum off the coincident outcome probabilities of
/// the trained circuit.
pub fn extract_schmidt(
    state: &PureState,
    ansatz: &QsvdAnsatz,
    params: &ParamVector,
    options: &ExtractOptions,
) -> Result<SchmidtResult> {
    let out = ansatz.apply(state, params)?;
    let chi_max = out.dim_a().min(out.dim_b());
    let q: Vec<f64> = (0..chi_max).map(|i| out.coefficient(i, i).norm_sqr()).collect();
    let weight: f64 = q.iter().sum();
    if weight < options.min_weight || weight <= 0.0 {
        return Err(QsvdError::Untrained { weight, cost: cost_exact(state, ansatz, params)? });
    }
    let mut order: Vec<usize> = (0..chi_max).collect();
    order.sort_by(|&x, &y| q[y].total_cmp(&q[x]).then(x.cmp(&y)));
    let squared: Vec<f64> = order.iter().map(|&i| q[i] / weight).collect();
    let rank_estimate = squared.iter().filter(|&&p| p >= options.cutoff).count();
    let renyi_entropies = options
        .renyi_orders
        .iter()
        .map(|&o| (renyi_key(o), renyi_bits(&squared, o)))
        .collect();

    let (eigenvectors_a, eigenvectors_b) = if options.eigenvectors {
        let mut va = Vec::with_capacity(chi_max);
        let mut vb = Vec::with_capacity(chi_max);
        for &i in &order {
            let (a, b) = reconstruct_eigenvectors(ansatz, params, i)?;
            va.push(a.iter().map(|c| [c.re, c.im]).collect());
            vb.push(b.iter().map(|c| [c.re, c.im]).collect());
        }
        (Some(va), Some(vb))
    } else {
        (None, None)
    };

    Ok(SchmidtResult {
        coefficients: squared.iter().map(|p| p.sqrt()).collect(),
        basis_indices: order,
        rank_estimate,
        von_neumann_entropy: von_neumann_bits(&squared),
        renyi_entropies,
        coincidence_weight: weight,
        eigenvectors_a,
        eigenvectors_b,
    })
}

/// `(U_A^† |e_k>, V_B^† |e_k>)`, the Schmidt vectors up to a phase each.
pub fn reconstruct_eigenvectors(
    ansatz: &QsvdAnsatz,
    params: &ParamVector,
    k: usize,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let limit = ansatz.a.dim().min(ansatz.b.dim());
    if k >= limit {
        return Err(QsvdError::IndexOutOfRange { index: k, limit });
    }
    let (ga, gb) = ansatz.local_circuits(params)?;
    let local = |dim: usize, gates: &[crate::statevec::Gate]| {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[k] = Complex64::new(1.0, 0.0);
        for g in gates.iter().rev() {
            apply_to_slice(&mut v, &g.adjoint());
        }
        v
    };
    Ok((local(ansatz.a.dim(), &ga), local(ansatz.b.dim(), &gb)))
}

/// Least-squares fit of the phases `alpha_k` in
/// `|psi> ≈ sum_k lambda_k e^{i alpha_k} U^†|e_k> ⊗ V^†|e_k>`.
#[derive(Debug, Clone)]
pub struct PhaseFit {
    pub phases: Vec<f64>,
    pub fidelity: f64,
    pub reconstruction: PureState,
}

/// Fits one phase per coincident index of `result` against `state`.
pub fn fit_phases(
    state: &PureState,
    ansatz: &QsvdAnsatz,
    params: &ParamVector,
    result: &SchmidtResult,
) -> Result<PhaseFit> {
    let n_a = state.n_a();
    let mut amps = vec![Complex64::new(0.0, 0.0); state.amplitudes().len()];
    let mut phases = Vec::with_capacity(result.coefficients.len());
    for (&lam, &k) in result.coefficients.iter().zip(&result.basis_indices) {
        let (va, vb) = reconstruct_eigenvectors(ansatz, params, k)?;
        let mut overlap = Complex64::new(0.0, 0.0);
        for (b, y) in vb.iter().enumerate() {
            for (a, x) in va.iter().enumerate() {
                overlap += (x * y).conj() * state.coefficient(a, b);
            }
        }
        let phase = overlap.arg();
        phases.push(phase);
        let w = Complex64::from_polar(lam, phase);
        for (b, y) in vb.iter().enumerate() {
            for (a, x) in va.iter().enumerate() {
                amps[a | (b << n_a)] += w * x * y;
            }
        }
    }
    let reconstruction = PureState::from_amplitudes(amps, n_a, true)?;
    let fidelity = reconstruction.fidelity(state)?;
    Ok(PhaseFit { phases, fidelity, reconstruction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::AnsatzConfig;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn state(v: &[f64], n_a: usize) -> PureState {
        PureState::from_amplitudes(v.iter().map(|&r| Complex64::new(r, 0.0)).collect(), n_a, true).unwrap()
    }

    fn bell() -> PureState {
        state(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2], 1)
    }

    fn pair(n_a: usize, n_b: usize, l: usize) -> QsvdAnsatz {
        QsvdAnsatz::new(AnsatzConfig::new(n_a, l), AnsatzConfig::new(n_b, l))
    }

    #[test]
    fn identity_cost_values() {
        let ans = pair(1, 1, 0);
        let zero = ans.zero_params();
        assert!(cost_exact(&bell(), &ans, &zero).unwrap().abs() < 1e-15);
        // |a=1, b=0>: outcomes differ in one bit
        let s = state(&[0.0, 1.0, 0.0, 0.0], 1);
        assert!((cost_exact(&s, &ans, &zero).unwrap() - 1.0).abs() < 1e-15);
        assert!((cost_sampled(&s, &ans, &zero, 100, 3).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cost_sampled(&bell(), &ans, &zero, 100, 3).unwrap(), 0.0);
        assert!(cost_sampled(&bell(), &ans, &zero, 0, 3).is_err());

        // diagonal two-qubit-per-side state at identity
        let ans2 = pair(2, 2, 0);
        let mut amps = vec![0.0; 16];
        amps[0] = 0.6;
        amps[5] = 0.48;
        amps[10] = 0.64;
        let diag = state(&amps, 2);
        assert!(cost_exact(&diag, &ans2, &ans2.zero_params()).unwrap() < 1e-15);
    }

    #[test]
    fn unequal_partition_pads_high_bits() {
        // n_a = 1, n_b = 2; |a=1, b=3> differs only in B's padded high bit
        let mut amps = vec![0.0; 8];
        amps[1 | (3 << 1)] = 1.0;
        let s = state(&amps, 1);
        let ans = pair(1, 2, 0);
        assert!((cost_exact(&s, &ans, &ans.zero_params()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matrix_route_matches_statevector_route() {
        let amps: Vec<f64> = (0..32).map(|k| ((k * 7 % 11) as f64 - 5.0) / 7.0).collect();
        let s = state(&amps, 2);
        let ans = pair(2, 3, 1);
        let p = ans.random_params(4);
        let model = CostModel::new(&s, ans).unwrap();
        let fast = model.cost(&p).unwrap();
        let slow = cost_exact(&s, &ans, &p).unwrap();
        assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
    }

    #[test]
    fn fast_gradient_matches_naive_differences() {
        let amps: Vec<f64> = (0..16).map(|k| ((k * 5 % 13) as f64 - 6.0) / 5.0).collect();
        let s = state(&amps, 2);
        let ans = pair(2, 2, 1);
        let p = ans.random_params(11);
        let g = gradient(&s, &ans, &p).unwrap();
        for (i, gi) in g.iter().enumerate() {
            let mut up = p.clone();
            up.as_mut_slice()[i] += FD_STEP;
            let mut dn = p.clone();
            dn.as_mut_slice()[i] -= FD_STEP;
            let naive = (cost_exact(&s, &ans, &up).unwrap() - cost_exact(&s, &ans, &dn).unwrap()) / (2.0 * FD_STEP);
            assert!((gi - naive).abs() < 1e-8, "coordinate {i}: {gi} vs {naive}");
        }
    }

    #[test]
    fn train_rejects_bad_options() {
        let ans = pair(1, 1, 1);
        let o = TrainOptions { restarts: 0, ..Default::default() };
        assert!(train(&bell(), &ans, &o).is_err());
        let o = TrainOptions { max_iterations: 0, ..Default::default() };
        assert!(train(&bell(), &ans, &o).is_err());
    }

    #[test]
    fn bell_trains_and_extracts() {
        let ans = pair(1, 1, 1);
        let (p, rep) = train(&bell(), &ans, &TrainOptions::default()).unwrap();
        assert!(rep.converged && rep.final_cost < 1e-8, "{rep:?}");
        assert_eq!(rep.final_cost, *rep.cost_trace.last().unwrap());
        let r = extract_schmidt(&bell(), &ans, &p, &ExtractOptions::default()).unwrap();
        assert!((r.coefficients[0] - FRAC_1_SQRT_2).abs() < 1e-6);
        assert!((r.coefficients[1] - FRAC_1_SQRT_2).abs() < 1e-6);
        assert!((r.von_neumann_entropy - 1.0).abs() < 1e-6);
        assert_eq!(r.rank_estimate, 2);
        assert!(r.renyi_entropies.contains_key("2") && r.renyi_entropies.contains_key("inf"));
        let (a0, _) = reconstruct_eigenvectors(&ans, &p, 0).unwrap();
        let (a1, _) = reconstruct_eigenvectors(&ans, &p, 1).unwrap();
        assert!(crate::linalg::vdot(&a0, &a1).norm() < 1e-8);
    }

    #[test]
    fn untrained_circuit_is_refused() {
        // |a=1, b=0> at identity has zero coincident mass
        let s = state(&[0.0, 1.0, 0.0, 0.0], 1);
        let ans = pair(1, 1, 0);
        assert!(matches!(
            extract_schmidt(&s, &ans, &ans.zero_params(), &ExtractOptions::default()),
            Err(QsvdError::Untrained { .. })
        ));
    }

    #[test]
    fn eigenvector_bounds_and_identity() {
        let ans = pair(2, 2, 0);
        let (a, b) = reconstruct_eigenvectors(&ans, &ans.zero_params(), 2).unwrap();
        let mut e2 = vec![Complex64::new(0.0, 0.0); 4];
        e2[2] = Complex64::new(1.0, 0.0);
        assert_eq!(a, e2);
        assert_eq!(b, e2);
        assert!(reconstruct_eigenvectors(&ans, &ans.zero_params(), 4).is_err());
    }

    #[test]
    fn renyi_keys() {
        assert_eq!(renyi_key(2.0), "2");
        assert_eq!(renyi_key(f64::INFINITY), "inf");
        assert_eq!(renyi_key(0.5), "0.5");
    }
}
