//! Protocols built on a trained coincidence circuit.
//!
//! * [`swap_without_connection`] exchanges the contents of A and B using only
//!   local gates: the forward pass `U_A ⊗ V_B` followed by `V^† ⊗ U^†` with
//!   the roles of the two registers exchanged.
//! * [`encode`] / [`decode`] append a CNOT ladder that clears register A,
//!   leaving `|0...0>_A ⊗ sum_i lambda_i e^{i alpha_i} |e_i>_B`.
//! * [`synthesize_state`] runs the construction backwards to prepare a
//!   random state with a prescribed Schmidt spectrum.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ansatz::{adjoint_gates, AnsatzConfig, ParamVector, QsvdAnsatz};
use crate::error::{QsvdError, Result};
use crate::decomposer::cost_exact;
use crate::statevec::{Gate, PureState};

/// Cost below which a circuit is accepted by the protocols by default.
pub const DEFAULT_PROTOCOL_TOLERANCE: f64 = 1e-6;

/// True when `gate` acts on both sides of a cut after qubit `n_a - 1`.
pub fn crosses_bipartition(gate: &Gate, n_a: usize) -> bool {
    match gate.qubits() {
        (q0, Some(q1)) => (q0 < n_a) != (q1 < n_a),
        _ => false,
    }
}

fn require_trained(state: &PureState, ansatz: &QsvdAnsatz, params: &ParamVector, tolerance: f64) -> Result<()> {
    let cost = cost_exact(state, ansatz, params)?;
    if cost.is_nan() || cost > tolerance {
        return Err(QsvdError::CostAboveTolerance { cost, tolerance });
    }
    Ok(())
}

/// Full gate list of the connection-free SWAP.
pub fn swap_circuit(ansatz: &QsvdAnsatz, params: &ParamVector) -> Result<Vec<Gate>> {
    if ansatz.a.n_sub != ansatz.b.n_sub {
        return Err(QsvdError::DimensionMismatch(format!(
            "swap needs equal registers, got {} and {} qubits",
            ansatz.a.n_sub, ansatz.b.n_sub
        )));
    }
    let n_a = ansatz.a.n_sub;
    let (u, v) = ansatz.local_circuits(params)?;
    let mut gates = ansatz.gates(params)?;
    // V^† on A's qubits and U^† on B's qubits
    gates.extend(adjoint_gates(&v));
    gates.extend(adjoint_gates(&u).into_iter().map(|g| g.shifted(n_a)));
    Ok(gates)
}

/// `(V^†_A ⊗ U^†_B)(U_A ⊗ V_B)|psi>_AB`, which equals `|psi>_BA` when the
/// circuit achieves exact coincidence. Refuses circuits whose cost exceeds
/// `tolerance`.
pub fn swap_without_connection(
    state: &PureState,
    ansatz: &QsvdAnsatz,
    params: &ParamVector,
    tolerance: f64,
) -> Result<PureState> {
    if state.n_a() != state.n_b() {
        return Err(QsvdError::DimensionMismatch(format!(
            "swap needs n_a = n_b, got {} and {}",
            state.n_a(),
            state.n_b()
        )));
    }
    ansatz.check_state(state)?;
    require_trained(state, ansatz, params, tolerance)?;
    state.apply_gates(&swap_circuit(ansatz, params)?)
}

/// CNOTs controlled by B-qubit `k`, targeting A-qubit `k`, for every qubit
/// of A.
pub fn cnot_ladder(n_a: usize) -> Vec<Gate> {
    (0..n_a).map(|k| Gate::Cnot { control: n_a + k, target: k }).collect()
}

/// Circuit pair followed by the CNOT ladder.
pub fn encoder_circuit(ansatz: &QsvdAnsatz, params: &ParamVector) -> Result<Vec<Gate>> {
    if ansatz.a.n_sub > ansatz.b.n_sub {
        return Err(QsvdError::DimensionMismatch(format!(
            "encoder compresses onto B and needs n_a <= n_b, got {} > {}",
            ansatz.a.n_sub, ansatz.b.n_sub
        )));
    }
    let mut gates = ansatz.gates(params)?;
    gates.extend(cnot_ladder(ansatz.a.n_sub));
    Ok(gates)
}

/// Compresses `state` onto register B. Refuses circuits whose cost exceeds
/// `tolerance`; pass `f64::INFINITY` to run the encoder unconditionally.
pub fn encode(state: &PureState, ansatz: &QsvdAnsatz, params: &ParamVector, tolerance: f64) -> Result<PureState> {
    ansatz.check_state(state)?;
    let gates = encoder_circuit(ansatz, params)?;
    require_trained(state, ansatz, params, tolerance)?;
    state.apply_gates(&gates)
}

/// Inverse of [`encode`] for the same parameters.
pub fn decode(encoded: &PureState, ansatz: &QsvdAnsatz, params: &ParamVector) -> Result<PureState> {
    ansatz.check_state(encoded)?;
    encoded.apply_gates(&adjoint_gates(&encoder_circuit(ansatz, params)?))
}

/// Probability that register A reads all zeros.
pub fn prob_a_zero(state: &PureState) -> f64 {
    (0..state.dim_b()).map(|b| state.coefficient(0, b).norm_sqr()).sum()
}

/// Measurement distribution of register B, sorted descending. After a
/// perfect encoding these are the squared Schmidt coefficients.
pub fn b_register_weights(state: &PureState) -> Vec<f64> {
    let mut w: Vec<f64> = (0..state.dim_b())
        .map(|b| (0..state.dim_a()).map(|a| state.coefficient(a, b).norm_sqr()).sum())
        .collect();
    w.sort_by(|x, y| y.total_cmp(x));
    w
}

/// Target Schmidt structure: squared coefficients and optional phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub squared_weights: Vec<f64>,
    #[serde(default)]
    pub phases: Option<Vec<f64>>,
}

impl SpectrumSpec {
    pub fn new(squared_weights: Vec<f64>) -> Self {
        Self { squared_weights, phases: None }
    }

    pub fn with_phases(mut self, phases: Vec<f64>) -> Self {
        self.phases = Some(phases);
        self
    }

    pub fn validate(&self, n_a: usize, n_b: usize) -> Result<()> {
        let w = &self.squared_weights;
        let limit = 1usize << n_a.min(n_b);
        if w.is_empty() {
            return Err(QsvdError::InvalidSpectrum("no weights".into()));
        }
        if w.len() > limit {
            return Err(QsvdError::InvalidSpectrum(format!(
                "{} weights do not fit a Schmidt rank of at most {limit}",
                w.len()
            )));
        }
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(QsvdError::InvalidSpectrum("weights must be non-negative".into()));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(QsvdError::InvalidSpectrum(format!("weights sum to {sum}, not 1")));
        }
        if let Some(p) = &self.phases {
            if p.len() != w.len() {
                return Err(QsvdError::InvalidSpectrum(format!(
                    "{} phases for {} weights",
                    p.len(),
                    w.len()
                )));
            }
        }
        Ok(())
    }
}

/// Copy ladder used by the synthesizer: CNOT from A-qubit `k` to B-qubit `k`.
fn copy_ladder(n_a: usize, n_b: usize) -> Vec<Gate> {
    (0..n_a.min(n_b)).map(|k| Gate::Cnot { control: k, target: n_a + k }).collect()
}

/// Gates applied after the amplitude preparation: the copy ladder, then a
/// random ansatz on each register.
pub fn synthesis_circuit(n_a: usize, n_b: usize, randomizer_layers: usize, seed: u64) -> Result<Vec<Gate>> {
    let ansatz = QsvdAnsatz::new(AnsatzConfig::new(n_a, randomizer_layers), AnsatzConfig::new(n_b, randomizer_layers));
    let params = ansatz.random_params(seed);
    let mut gates = copy_ladder(n_a, n_b);
    gates.extend(ansatz.gates(&params)?);
    Ok(gates)
}

/// Random state whose Schmidt weights are exactly `spec.squared_weights`.
///
/// Prepares `sum_i lambda_i e^{i alpha_i} |e_i>_A |0>_B`, copies the index
/// to B with a CNOT ladder and scrambles both registers with seeded local
/// circuits of `randomizer_layers` layers.
pub fn synthesize_state(
    spec: &SpectrumSpec,
    n_a: usize,
    n_b: usize,
    randomizer_layers: usize,
    seed: u64,
) -> Result<PureState> {
    spec.validate(n_a, n_b)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (n_a + n_b)];
    for (i, &w) in spec.squared_weights.iter().enumerate() {
        let phase = spec.phases.as_ref().map_or(0.0, |p| p[i]);
        amps[i] = Complex64::from_polar(w.sqrt(), phase);
    }
    let prepared = PureState::from_amplitudes(amps, n_a, true)?;
    prepared.apply_gates(&synthesis_circuit(n_a, n_b, randomizer_layers, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::exact_schmidt;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn basis(n_a: usize, a: usize, b: usize, n: usize) -> PureState {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[a | (b << n_a)] = Complex64::new(1.0, 0.0);
        PureState::from_amplitudes(amps, n_a, false).unwrap()
    }

    #[test]
    fn crossing_detection() {
        assert!(crosses_bipartition(&Gate::Cz { a: 0, b: 2 }, 2));
        assert!(!crosses_bipartition(&Gate::Cz { a: 0, b: 1 }, 2));
        assert!(!crosses_bipartition(&Gate::Rx { qubit: 3, angle: 1.0 }, 2));
    }

    #[test]
    fn swap_refuses_unequal_and_untrained() {
        let s = basis(1, 1, 0, 3);
        let ans = QsvdAnsatz::for_state(&s, 0);
        assert!(swap_without_connection(&s, &ans, &ans.zero_params(), 1e-8).is_err());
        // |a=1, b=0> at identity has cost 1
        let s = basis(1, 1, 0, 2);
        let ans = QsvdAnsatz::for_state(&s, 0);
        assert!(matches!(
            swap_without_connection(&s, &ans, &ans.zero_params(), 1e-8),
            Err(QsvdError::CostAboveTolerance { .. })
        ));
    }

    #[test]
    fn swap_at_identity_on_diagonal_state() {
        let h = FRAC_1_SQRT_2;
        let s = PureState::from_amplitudes(
            vec![Complex64::new(h, 0.0), 0.0.into(), 0.0.into(), Complex64::new(0.0, h)],
            1,
            false,
        )
        .unwrap();
        let ans = QsvdAnsatz::for_state(&s, 1);
        let out = swap_without_connection(&s, &ans, &ans.zero_params(), 1e-12).unwrap();
        assert!((out.fidelity(&s.swapped_halves().unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn encoder_clears_a_on_coincident_state() {
        // 0.6|00> + 0.8|11> (per side index) is already coincident
        let mut amps = vec![Complex64::new(0.0, 0.0); 4];
        amps[0] = Complex64::new(0.6, 0.0);
        amps[3] = Complex64::new(0.8, 0.0);
        let s = PureState::from_amplitudes(amps, 1, false).unwrap();
        let ans = QsvdAnsatz::for_state(&s, 0);
        let enc = encode(&s, &ans, &ans.zero_params(), 1e-12).unwrap();
        assert!((prob_a_zero(&enc) - 1.0).abs() < 1e-12);
        let w = b_register_weights(&enc);
        assert!((w[0] - 0.64).abs() < 1e-12 && (w[1] - 0.36).abs() < 1e-12);
        let back = decode(&enc, &ans, &ans.zero_params()).unwrap();
        assert!((back.fidelity(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn encoder_requires_small_a() {
        let s = basis(2, 0, 0, 3);
        let ans = QsvdAnsatz::for_state(&s, 0);
        assert!(encode(&s, &ans, &ans.zero_params(), f64::INFINITY).is_err());
    }

    #[test]
    fn synthesizer_examples() {
        let s = synthesize_state(&SpectrumSpec::new(vec![1.0]), 2, 2, 2, 5).unwrap();
        assert!(exact_schmidt(&s).entropy_bits < 1e-10);

        let s = synthesize_state(&SpectrumSpec::new(vec![0.5, 0.5]), 1, 1, 0, 5).unwrap();
        assert!((exact_schmidt(&s).entropy_bits - 1.0).abs() < 1e-10);

        let s = synthesize_state(&SpectrumSpec::new(vec![0.64, 0.36]), 2, 2, 3, 9).unwrap();
        let sq = exact_schmidt(&s).squared();
        assert!((sq[0] - 0.64).abs() < 1e-9 && (sq[1] - 0.36).abs() < 1e-9 && sq[2] < 1e-9);
    }

    #[test]
    fn synthesizer_validation() {
        assert!(synthesize_state(&SpectrumSpec::new(vec![0.2, 0.2, 0.2, 0.2, 0.2]), 2, 2, 1, 0).is_err());
        assert!(synthesize_state(&SpectrumSpec::new(vec![0.5, 0.4]), 2, 2, 1, 0).is_err());
        assert!(synthesize_state(&SpectrumSpec::new(vec![1.5, -0.5]), 2, 2, 1, 0).is_err());
        let bad = SpectrumSpec::new(vec![0.5, 0.5]).with_phases(vec![0.0]);
        assert!(synthesize_state(&bad, 2, 2, 1, 0).is_err());
    }

    #[test]
    fn only_ladders_cross_the_cut() {
        let ans = QsvdAnsatz::new(AnsatzConfig::new(3, 2), AnsatzConfig::new(3, 2));
        let p = ans.random_params(1);
        assert!(swap_circuit(&ans, &p).unwrap().iter().all(|g| !crosses_bipartition(g, 3)));
        let enc = encoder_circuit(&ans, &p).unwrap();
        let crossing: Vec<_> = enc.iter().filter(|g| crosses_bipartition(g, 3)).collect();
        assert_eq!(crossing.len(), 3);
        assert!(crossing.iter().all(|g| matches!(g, Gate::Cnot { .. })));
        let syn = synthesis_circuit(3, 3, 2, 4).unwrap();
        assert_eq!(syn.iter().filter(|g| crosses_bipartition(g, 3)).count(), 3);
    }
}
