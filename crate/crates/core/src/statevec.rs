//! Dense state vectors over `n` qubits with an A|B bipartition.
//!
//! Basis convention: qubit 0 is the least significant bit of the basis
//! index. Subsystem A holds qubits `0..n_a` (low bits) and subsystem B holds
//! qubits `n_a..n` (high bits), so basis index `k` splits as
//! `a = k & (d_a - 1)`, `b = k >> n_a`.

use std::fmt;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QsvdError, Result};

const NORM_ACCEPT: f64 = 1e-6;

/// One gate from the simulator's gate set.
///
/// Matrix conventions: `Rz(t) = diag(e^{-it/2}, e^{it/2})`,
/// `Rx(t) = cos(t/2) I - i sin(t/2) X`, `CZ = diag(1, 1, 1, -1)` and CNOT
/// flips `target` when `control` is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rz { qubit: usize, angle: f64 },
    Rx { qubit: usize, angle: f64 },
    Cz { a: usize, b: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::Rz { qubit, .. } | Gate::Rx { qubit, .. } => (qubit, None),
            Gate::Cz { a, b } => (a, Some(b)),
            Gate::Cnot { control, target } => (control, Some(target)),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits().1.is_some()
    }

    pub fn adjoint(&self) -> Gate {
        match *self {
            Gate::Rz { qubit, angle } => Gate::Rz { qubit, angle: -angle },
            Gate::Rx { qubit, angle } => Gate::Rx { qubit, angle: -angle },
            g => g,
        }
    }

    /// Same gate with every qubit index shifted by `offset`.
    pub fn shifted(&self, offset: usize) -> Gate {
        match *self {
            Gate::Rz { qubit, angle } => Gate::Rz { qubit: qubit + offset, angle },
            Gate::Rx { qubit, angle } => Gate::Rx { qubit: qubit + offset, angle },
            Gate::Cz { a, b } => Gate::Cz { a: a + offset, b: b + offset },
            Gate::Cnot { control, target } => Gate::Cnot {
                control: control + offset,
                target: target + offset,
            },
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let (q0, q1) = self.qubits();
        for q in std::iter::once(q0).chain(q1) {
            if q >= n_qubits {
                return Err(QsvdError::QubitOutOfRange { qubit: q, n_qubits });
            }
        }
        if q1 == Some(q0) {
            return Err(QsvdError::RepeatedQubit(q0));
        }
        Ok(())
    }

    /// 2x2 matrix of a single-qubit gate, row-major.
    pub(crate) fn single_qubit_matrix(&self) -> Option<[Complex64; 4]> {
        match *self {
            Gate::Rz { angle, .. } => {
                let h = angle / 2.0;
                Some([
                    Complex64::from_polar(1.0, -h),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::from_polar(1.0, h),
                ])
            }
            Gate::Rx { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let off = Complex64::new(0.0, -s);
                Some([Complex64::new(c, 0.0), off, off, Complex64::new(c, 0.0)])
            }
            _ => None,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Rz { qubit, angle } => write!(f, "RZ q{qubit} {angle:.4}"),
            Gate::Rx { qubit, angle } => write!(f, "RX q{qubit} {angle:.4}"),
            Gate::Cz { a, b } => write!(f, "CZ q{a} q{b}"),
            Gate::Cnot { control, target } => write!(f, "CNOT q{control} q{target}"),
        }
    }
}

#[inline]
fn apply_matrix(amps: &mut [Complex64], qubit: usize, m: &[Complex64; 4]) {
    let stride = 1usize << qubit;
    for base in (0..amps.len()).step_by(stride << 1) {
        for i in base..base + stride {
            let x0 = amps[i];
            let x1 = amps[i + stride];
            amps[i] = m[0] * x0 + m[1] * x1;
            amps[i + stride] = m[2] * x0 + m[3] * x1;
        }
    }
}

/// Applies `gate` to a raw amplitude slice whose length is `2^k` with all
/// gate qubits `< k`. No validation.
pub(crate) fn apply_to_slice(amps: &mut [Complex64], gate: &Gate) {
    match *gate {
        Gate::Rz { qubit, angle } => {
            let bit = 1usize << qubit;
            let lo = Complex64::from_polar(1.0, -angle / 2.0);
            let hi = lo.conj();
            for (k, x) in amps.iter_mut().enumerate() {
                *x *= if k & bit == 0 { lo } else { hi };
            }
        }
        Gate::Rx { qubit, .. } => {
            let m = gate.single_qubit_matrix().expect("rx is single-qubit");
            apply_matrix(amps, qubit, &m);
        }
        Gate::Cz { a, b } => {
            let mask = (1usize << a) | (1usize << b);
            for (k, x) in amps.iter_mut().enumerate() {
                if k & mask == mask {
                    *x = -*x;
                }
            }
        }
        Gate::Cnot { control, target } => {
            let c = 1usize << control;
            let t = 1usize << target;
            for k in 0..amps.len() {
                if k & c != 0 && k & t == 0 {
                    amps.swap(k, k | t);
                }
            }
        }
    }
}

/// A normalized pure state with a declared bipartition.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    n_a: usize,
    amplitudes: Vec<Complex64>,
}

fn check_bipartition(n_qubits: usize, n_a: usize) -> Result<()> {
    if n_a == 0 || n_a >= n_qubits {
        return Err(QsvdError::InvalidBipartition { n_qubits, n_a });
    }
    Ok(())
}

impl PureState {
    /// `|0...0>` on `n_qubits` qubits, split as `n_a | n_qubits - n_a`.
    pub fn zero(n_qubits: usize, n_a: usize) -> Result<Self> {
        check_bipartition(n_qubits, n_a)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, n_a, amplitudes })
    }

    /// Builds a state from raw amplitudes. Vectors whose norm is within 1e-6
    /// of one are accepted and renormalized exactly; anything further off is
    /// rejected unless `renormalize` is set.
    pub fn from_amplitudes(values: Vec<Complex64>, n_a: usize, renormalize: bool) -> Result<Self> {
        let len = values.len();
        if len < 4 || !len.is_power_of_two() {
            return Err(QsvdError::BadLength(len));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_bipartition(n_qubits, n_a)?;
        let norm = values.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QsvdError::ZeroVector);
        }
        if !renormalize && (norm - 1.0).abs() > NORM_ACCEPT {
            return Err(QsvdError::NotNormalized(norm));
        }
        let amplitudes = values.into_iter().map(|c| c / norm).collect();
        Ok(Self { n_qubits, n_a, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_qubits - self.n_a
    }

    pub fn dim_a(&self) -> usize {
        1 << self.n_a
    }

    pub fn dim_b(&self) -> usize {
        1 << self.n_b()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Coefficient `c_ab` of `|e_a>_A |e_b>_B`.
    pub fn coefficient(&self, a: usize, b: usize) -> Complex64 {
        self.amplitudes[a | (b << self.n_a)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Same amplitudes, different split point.
    pub fn with_bipartition(&self, n_a: usize) -> Result<Self> {
        check_bipartition(self.n_qubits, n_a)?;
        Ok(Self { n_a, ..self.clone() })
    }

    pub fn apply_gate(&self, gate: &Gate) -> Result<Self> {
        let mut out = self.clone();
        out.apply_gate_mut(gate)?;
        Ok(out)
    }

    /// In-place variant of [`PureState::apply_gate`].
    pub fn apply_gate_mut(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        apply_to_slice(&mut self.amplitudes, gate);
        Ok(())
    }

    pub fn apply_gates<'a, I>(&self, gates: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Gate>,
    {
        let mut out = self.clone();
        for g in gates {
            out.apply_gate_mut(g)?;
        }
        Ok(out)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Joint probability table `p[a][b]` over the two subsystems.
    pub fn joint_probabilities(&self) -> Vec<Vec<f64>> {
        let (da, db) = (self.dim_a(), self.dim_b());
        (0..da)
            .map(|a| (0..db).map(|b| self.coefficient(a, b).norm_sqr()).collect())
            .collect()
    }

    /// Draws `shots` computational-basis measurements and splits each into
    /// `(outcome_a, outcome_b)` basis indices. Deterministic given `seed`.
    pub fn sample(&self, shots: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
        if shots == 0 {
            return Err(QsvdError::ZeroShots);
        }
        let dist = WeightedIndex::new(self.probabilities())
            .map_err(|e| QsvdError::Malformed(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = self.dim_a() - 1;
        Ok((0..shots)
            .map(|_| {
                let k = dist.sample(&mut rng);
                (k & mask, k >> self.n_a)
            })
            .collect())
    }

    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(QsvdError::DimensionMismatch(format!(
                "{} vs {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(x, y)| x.conj() * y)
            .sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    /// The state with the contents of A and B exchanged: `|psi>_AB -> |psi>_BA`.
    /// Requires `n_a == n_b`.
    pub fn swapped_halves(&self) -> Result<Self> {
        if self.n_a != self.n_b() {
            return Err(QsvdError::DimensionMismatch(format!(
                "cannot exchange {} and {} qubit registers",
                self.n_a,
                self.n_b()
            )));
        }
        let d = self.dim_a();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for a in 0..d {
            for b in 0..d {
                amplitudes[b | (a << self.n_a)] = self.coefficient(a, b);
            }
        }
        Ok(Self { amplitudes, ..self.clone() })
    }

    /// Tensor product `|a>_A ⊗ |b>_B` from two local amplitude vectors.
    pub fn product(a: &[Complex64], b: &[Complex64]) -> Result<Self> {
        if !a.len().is_power_of_two() || !b.len().is_power_of_two() || a.len() < 2 || b.len() < 2 {
            return Err(QsvdError::BadLength(a.len() * b.len()));
        }
        let n_a = a.len().trailing_zeros() as usize;
        let mut amps = Vec::with_capacity(a.len() * b.len());
        for y in b {
            for x in a {
                amps.push(x * y);
            }
        }
        Self::from_amplitudes(amps, n_a, true)
    }

    pub fn to_file(&self) -> StateFile {
        StateFile {
            n_qubits: self.n_qubits,
            n_a: self.n_a,
            amplitudes: self.amplitudes.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    /// Canonical JSON text of the state file format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("state file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(QsvdError::Malformed("empty input".into()));
        }
        let file: StateFile = serde_json::from_str(text)?;
        file.into_state()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

/// On-disk state format: `{"n_qubits", "n_a", "amplitudes": [[re, im], ...]}`
/// in basis-index order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub n_qubits: usize,
    pub n_a: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn into_state(self) -> Result<PureState> {
        let len = self.amplitudes.len();
        if len != 1usize.checked_shl(self.n_qubits as u32).unwrap_or(0) {
            if !len.is_power_of_two() {
                return Err(QsvdError::BadLength(len));
            }
            return Err(QsvdError::Malformed(format!(
                "n_qubits = {} but {} amplitudes",
                self.n_qubits, len
            )));
        }
        let values = self
            .amplitudes
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        PureState::from_amplitudes(values, self.n_a, true)
    }
}

/// Bitstring of `value` over `width` bits, most significant qubit first.
pub fn bitstring(value: usize, width: usize) -> String {
    (0..width)
        .rev()
        .map(|q| if value >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}
