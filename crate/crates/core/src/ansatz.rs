//! Layered hardware-efficient ansatz applied independently to each side of
//! the bipartition.
//!
//! One layer on `n` qubits is:
//!
//! 1. a rotation round `R = Rz(a) Rx(b) Rz(c)` on every qubit,
//! 2. for odd `n`, a ring CZ between qubit 0 and qubit `n - 1`,
//! 3. CZ on the even-aligned neighbours `(0,1), (2,3), ...`,
//! 4. a second rotation round,
//! 5. for odd `n`, the ring CZ again,
//! 6. CZ on the odd-aligned neighbours `(1,2), (3,4), ...` closed by the
//!    wrap-around pair `(n-1, 0)`.
//!
//! The circuit ends with one more rotation round. This gives `n` CZs per
//! layer for even `n`, `n + 2` for odd `n`, and `6 l n + 3 n` angles.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QsvdError, Result};
use crate::linalg::CMatrix;
use crate::statevec::{Gate, PureState};

/// Shape of the circuit on one subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzConfig {
    pub n_sub: usize,
    pub layers: usize,
}

impl AnsatzConfig {
    pub fn new(n_sub: usize, layers: usize) -> Self {
        Self { n_sub, layers }
    }

    pub fn param_count(&self) -> usize {
        6 * self.layers * self.n_sub + 3 * self.n_sub
    }

    pub fn single_qubit_gate_count(&self) -> usize {
        self.param_count()
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        match self.n_sub {
            0 | 1 => 0,
            n if n % 2 == 0 => self.layers * n,
            n => self.layers * n + 2 * self.layers,
        }
    }

    /// Number of time steps in the layer template: three per rotation round
    /// and one per non-empty CZ stage.
    pub fn depth(&self) -> usize {
        let cz_steps = match self.n_sub {
            0 | 1 => 0,
            n if n % 2 == 0 => 2,
            _ => 4,
        };
        self.layers * (6 + cz_steps) + 3
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sub
    }
}

/// A gate of the template together with the index of the angle it consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Slot {
    pub gate: Gate,
    pub param: Option<usize>,
}

fn rotation_round(n: usize, offset: usize, params: &[f64], out: &mut Vec<Slot>) {
    for q in 0..n {
        let base = offset + 3 * q;
        out.push(Slot { gate: Gate::Rz { qubit: q, angle: params[base] }, param: Some(base) });
        out.push(Slot { gate: Gate::Rx { qubit: q, angle: params[base + 1] }, param: Some(base + 1) });
        out.push(Slot { gate: Gate::Rz { qubit: q, angle: params[base + 2] }, param: Some(base + 2) });
    }
}

fn cz(a: usize, b: usize, out: &mut Vec<Slot>) {
    out.push(Slot { gate: Gate::Cz { a, b }, param: None });
}

pub(crate) fn build_slots(config: &AnsatzConfig, params: &[f64]) -> Result<Vec<Slot>> {
    let expected = config.param_count();
    if params.len() != expected {
        return Err(QsvdError::ParamLength { expected, got: params.len() });
    }
    let n = config.n_sub;
    let odd = n % 2 == 1 && n > 1;
    let mut out = Vec::with_capacity(expected + config.two_qubit_gate_count());
    let mut offset = 0;
    for _ in 0..config.layers {
        rotation_round(n, offset, params, &mut out);
        offset += 3 * n;
        if odd {
            cz(0, n - 1, &mut out);
        }
        for q in (0..n.saturating_sub(1)).step_by(2) {
            cz(q, q + 1, &mut out);
        }
        rotation_round(n, offset, params, &mut out);
        offset += 3 * n;
        if odd {
            cz(0, n - 1, &mut out);
        }
        for q in (1..n.saturating_sub(1)).step_by(2) {
            cz(q, q + 1, &mut out);
        }
        if n > 1 {
            cz(n - 1, 0, &mut out);
        }
    }
    rotation_round(n, offset, params, &mut out);
    Ok(out)
}

/// Gate list of the ansatz on local qubit indices `0..n_sub`.
pub fn build_circuit(config: &AnsatzConfig, params: &[f64]) -> Result<Vec<Gate>> {
    Ok(build_slots(config, params)?.into_iter().map(|s| s.gate).collect())
}

/// The inverse circuit: reversed order with negated angles.
pub fn adjoint_circuit(config: &AnsatzConfig, params: &[f64]) -> Result<Vec<Gate>> {
    Ok(adjoint_gates(&build_circuit(config, params)?))
}

pub fn adjoint_gates(gates: &[Gate]) -> Vec<Gate> {
    gates.iter().rev().map(Gate::adjoint).collect()
}

/// Dense `2^n x 2^n` unitary of a local gate list.
pub fn circuit_unitary(n_sub: usize, gates: &[Gate]) -> CMatrix {
    let mut m = CMatrix::identity(1 << n_sub);
    for g in gates {
        m.apply_gate_rows(g);
    }
    m
}

/// One gate per line, e.g. `RZ q3 1.5708` or `CZ q0 q1`.
pub fn dump_circuit(gates: &[Gate]) -> String {
    let mut s = String::new();
    for g in gates {
        s.push_str(&g.to_string());
        s.push('\n');
    }
    s
}

/// The pair of circuits `U_A(theta) ⊗ V_B(omega)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QsvdAnsatz {
    pub a: AnsatzConfig,
    pub b: AnsatzConfig,
}

impl QsvdAnsatz {
    pub fn new(a: AnsatzConfig, b: AnsatzConfig) -> Self {
        Self { a, b }
    }

    /// Same layer count on both sides of `state`'s bipartition.
    pub fn for_state(state: &PureState, layers: usize) -> Self {
        Self::new(AnsatzConfig::new(state.n_a(), layers), AnsatzConfig::new(state.n_b(), layers))
    }

    pub fn param_count(&self) -> usize {
        self.a.param_count() + self.b.param_count()
    }

    pub fn check_state(&self, state: &PureState) -> Result<()> {
        if self.a.n_sub != state.n_a() || self.b.n_sub != state.n_b() {
            return Err(QsvdError::DimensionMismatch(format!(
                "ansatz is {}|{} qubits, state is {}|{}",
                self.a.n_sub,
                self.b.n_sub,
                state.n_a(),
                state.n_b()
            )));
        }
        Ok(())
    }

    pub fn check_params(&self, params: &ParamVector) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(QsvdError::ParamLength { expected: self.param_count(), got: params.len() });
        }
        Ok(())
    }

    /// Uniform angles in `[0, 2pi)`.
    pub fn random_params(&self, seed: u64) -> ParamVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ParamVector::new(
            (0..self.param_count()).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect(),
        )
    }

    pub fn zero_params(&self) -> ParamVector {
        ParamVector::new(vec![0.0; self.param_count()])
    }

    /// Gate lists `(U_A, V_B)` on local indices.
    pub fn local_circuits(&self, params: &ParamVector) -> Result<(Vec<Gate>, Vec<Gate>)> {
        self.check_params(params)?;
        let (theta, omega) = params.split(self);
        Ok((build_circuit(&self.a, theta)?, build_circuit(&self.b, omega)?))
    }

    /// Local unitaries `(U_A, V_B)` as dense matrices.
    pub fn unitaries(&self, params: &ParamVector) -> Result<(CMatrix, CMatrix)> {
        let (ga, gb) = self.local_circuits(params)?;
        Ok((circuit_unitary(self.a.n_sub, &ga), circuit_unitary(self.b.n_sub, &gb)))
    }

    /// Full-register gate list: U_A on qubits `0..n_a`, then V_B on
    /// `n_a..n`.
    pub fn gates(&self, params: &ParamVector) -> Result<Vec<Gate>> {
        let (ga, gb) = self.local_circuits(params)?;
        let offset = self.a.n_sub;
        Ok(ga.into_iter().chain(gb.into_iter().map(|g| g.shifted(offset))).collect())
    }

    /// `U_A(theta) ⊗ V_B(omega) |psi>`.
    pub fn apply(&self, state: &PureState, params: &ParamVector) -> Result<PureState> {
        self.check_state(state)?;
        state.apply_gates(&self.gates(params)?)
    }

    /// `U_A^† ⊗ V_B^† |psi>`.
    pub fn apply_adjoint(&self, state: &PureState, params: &ParamVector) -> Result<PureState> {
        self.check_state(state)?;
        state.apply_gates(&adjoint_gates(&self.gates(params)?))
    }
}

/// Applies the circuit pair to `state`.
pub fn apply_qsvd_circuit(state: &PureState, ansatz: &QsvdAnsatz, params: &ParamVector) -> Result<PureState> {
    ansatz.apply(state, params)
}

/// Angles for `(U_A, V_B)` in one flat vector: all of theta, then all of
/// omega. Within a side the order is layer, rotation round, qubit, then the
/// three angles of `Rz Rx Rz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn split(&self, ansatz: &QsvdAnsatz) -> (&[f64], &[f64]) {
        self.values.split_at(ansatz.a.param_count())
    }
}
